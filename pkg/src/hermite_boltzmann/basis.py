"""Multi-index bookkeeping and the polynomial/combinatorial building blocks.

Multi-indices ``(k1, k2, k3)`` are ordered graded-lexicographically: by total
degree first, and inside one degree by decreasing ``k1`` then decreasing
``k2``, so that ``(0,0,0), (1,0,0), (0,1,0), (0,0,1), (2,0,0), ...``. The
ordering of ``I_M`` is a prefix of the ordering of ``I_{M+1}``, which lets a
state over ``I_M`` be restricted to ``I_{M0}`` by slicing.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
import math

import numpy as np

from .errors import ContractError, DomainError


def n_indices(M):
    """Number of triples with total degree at most ``M``."""
    if M < 0:
        return 0
    return (M + 1) * (M + 2) * (M + 3) // 6


def n_degree(d):
    """Number of triples with total degree exactly ``d``."""
    return (d + 1) * (d + 2) // 2


def rank(idx):
    k1, k2, k3 = (int(c) for c in idx)
    if min(k1, k2, k3) < 0:
        raise DomainError(f"negative component in {idx!r}")
    d = k1 + k2 + k3
    p = k2 + k3
    return n_indices(d - 1) + p * (p + 1) // 2 + k3


def rank_array(idx):
    """Vectorised :func:`rank` for an integer array of shape ``(..., 3)``."""
    idx = np.asarray(idx, dtype=np.int64)
    d = idx[..., 0] + idx[..., 1] + idx[..., 2]
    p = idx[..., 1] + idx[..., 2]
    return d * (d + 1) * (d + 2) // 6 + p * (p + 1) // 2 + idx[..., 2]


def unrank(r, M):
    r = int(r)
    if r < 0 or r >= n_indices(M):
        raise IndexError(f"rank {r} outside I_{M} (size {n_indices(M)})")
    d = 0
    while n_indices(d) <= r:
        d += 1
    o = r - n_indices(d - 1)
    p = 0
    while (p + 1) * (p + 2) // 2 <= o:
        p += 1
    k3 = o - p * (p + 1) // 2
    return (d - p, p - k3, k3)


@lru_cache(maxsize=None)
def _index_set(M):
    out = []
    for d in range(M + 1):
        for k1 in range(d, -1, -1):
            for k2 in range(d - k1, -1, -1):
                out.append((k1, k2, d - k1 - k2))
    arr = np.array(out, dtype=np.int64).reshape(-1, 3)
    arr.setflags(write=False)
    return arr


def index_set(M):
    """All triples of ``I_M`` as an ``(N_M, 3)`` array in rank order."""
    return _index_set(int(M))


def degree_block(d):
    """Triples of total degree exactly ``d`` (rows of :func:`index_set`)."""
    return index_set(d)[n_indices(d - 1):]


# -- univariate families -------------------------------------------------

def hermite_1d(nmax, x):
    """Probabilists' Hermite polynomials ``He_0..He_nmax`` at ``x``.

    Returns an array of shape ``(nmax + 1,) + x.shape``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = x
    for n in range(1, nmax):
        out[n + 1] = x * out[n] - n * out[n - 1]
    return out


def hermite_eval(idx, v):
    """``H^{k1 k2 k3}(v)`` as the product of univariate ``He_{ki}(v_i)``.

    ``v`` may carry extra leading dimensions; its last axis has length 3.
    """
    v = np.asarray(v, dtype=float)
    val = 1.0
    for i, k in enumerate(idx):
        val = val * hermite_1d(int(k), v[..., i])[int(k)]
    return val


def hermite_table(M, v):
    """Evaluate every ``H^k`` with ``k`` in ``I_M`` at points ``v``.

    ``v`` has shape ``(..., 3)``; the result has shape ``(N_M,) + v.shape[:-1]``.
    """
    v = np.asarray(v, dtype=float)
    idx = index_set(M)
    h = [hermite_1d(M, v[..., i]) for i in range(3)]
    return h[0][idx[:, 0]] * h[1][idx[:, 1]] * h[2][idx[:, 2]]


def laguerre_eval(n, alpha, x):
    """Generalised Laguerre polynomial ``L_n^{(alpha)}(x)`` by recurrence."""
    if alpha <= -1:
        raise DomainError(f"Laguerre parameter alpha={alpha} must exceed -1")
    if n < 0:
        raise DomainError("Laguerre degree must be non-negative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur if np.ndim(cur) else float(cur)


def legendre_eval(k, x):
    """Legendre polynomial ``P_k(x)`` by Bonnet's recurrence."""
    if k < 0:
        raise DomainError("Legendre degree must be non-negative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return prev if prev.ndim else float(prev)
    cur = x.copy()
    for n in range(1, k):
        prev, cur = cur, ((2 * n + 1) * x * cur - n * prev) / (n + 1)
    return cur if np.ndim(cur) else float(cur)


def legendre_minus_one(kmax, one_minus_cos):
    """``P_k(cos chi) - 1`` for ``k = 0..kmax`` given ``1 - cos chi``.

    Runs the Bonnet recurrence on the shifted values ``D_k = P_k - 1`` so no
    cancellation occurs for small angles.
    """
    x = np.asarray(one_minus_cos, dtype=float)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = 0.0
    if kmax >= 1:
        out[1] = -x
    for n in range(1, kmax):
        out[n + 1] = ((2 * n + 1) * (1.0 - x) * out[n] - n * out[n - 1]
                      - (2 * n + 1) * x) / (n + 1)
    return out


# -- S_k(v, w) expansion -------------------------------------------------

@dataclass(frozen=True)
class SkTable:
    """Monomial coefficients of ``S_k(v, w) = (|v||w|)^k P_k(v.w / |v||w|)``.

    ``coeffs`` maps ``(k1, k2, k3, l1, l2, l3)`` to the coefficient of
    ``v^k w^l``; only nonzero entries are present.
    """

    degree: int
    coeffs: dict = field(repr=False)

    def __getitem__(self, key):
        return self.coeffs.get(tuple(key), 0.0)

    def matrix(self):
        """Dense matrix over the degree block, rows ``v``-triples, cols ``w``."""
        return _sk_matrix(self.degree)


def _mul_dot(poly):
    out = {}
    for key, c in poly.items():
        for i in range(3):
            k = list(key)
            k[i] += 1
            k[i + 3] += 1
            k = tuple(k)
            out[k] = out.get(k, 0) + c
    return out


def _mul_norms(poly):
    out = {}
    for key, c in poly.items():
        for i in range(3):
            for j in range(3):
                k = list(key)
                k[i] += 2
                k[j + 3] += 2
                k = tuple(k)
                out[k] = out.get(k, 0) + c
    return out


@lru_cache(maxsize=None)
def _sk_exact(k):
    if k == 0:
        return {(0, 0, 0, 0, 0, 0): Fraction(1)}
    if k == 1:
        return {(1, 0, 0, 1, 0, 0): Fraction(1), (0, 1, 0, 0, 1, 0): Fraction(1),
                (0, 0, 1, 0, 0, 1): Fraction(1)}
    n = k - 1
    a = _mul_dot(_sk_exact(n))
    b = _mul_norms(_sk_exact(n - 1))
    out = {}
    for key in set(a) | set(b):
        c = Fraction(2 * n + 1, n + 1) * a.get(key, 0) - Fraction(n, n + 1) * b.get(key, 0)
        if c:
            out[key] = c
    return out


@lru_cache(maxsize=None)
def sk_table(k):
    """Coefficient table of ``S_k``, built with exact rational arithmetic."""
    if k < 0:
        raise DomainError("S_k degree must be non-negative")
    return SkTable(k, {key: float(c) for key, c in _sk_exact(k).items()})


@lru_cache(maxsize=None)
def _sk_matrix(k):
    block = degree_block(k)
    pos = {tuple(t): i for i, t in enumerate(block.tolist())}
    mat = np.zeros((len(block), len(block)))
    for key, c in _sk_exact(k).items():
        mat[pos[key[:3]], pos[key[3:]]] = float(c)
    mat.setflags(write=False)
    return mat


# -- a and C coefficient families ----------------------------------------

@lru_cache(maxsize=None)
def _a_exact(i, j, ip, jp):
    total = Fraction(0)
    for s in range(max(0, ip - j), min(ip, i) + 1):
        sign = -1 if (jp - i + s) % 2 else 1
        total += Fraction(sign, math.factorial(s) * math.factorial(i - s)
                          * math.factorial(ip - s) * math.factorial(jp - i + s))
    return total * math.factorial(i) * math.factorial(j)


def a_coeff(i, j, ip, jp):
    """Coefficient ``a_{i'j'}^{ij}`` of the Hermite change of variables.

    ``He_i(h + g/2) He_j(h - g/2) = sum a_{i'j'}^{ij} He_{i'}(sqrt2 h) He_{j'}(g/sqrt2)``
    with ``i' + j' = i + j``.
    """
    if min(i, j, ip, jp) < 0 or ip + jp != i + j:
        raise ContractError(f"a_coeff needs i'+j' = i+j, got ({i},{j},{ip},{jp})")
    return float(_a_exact(i, j, ip, jp)) * 2.0 ** (-(ip + jp) / 2)


@lru_cache(maxsize=None)
def a_table(nmax):
    """Array ``a[i, j, i']`` for ``i, j <= nmax``, ``i' <= i + j``; zero elsewhere."""
    out = np.zeros((nmax + 1, nmax + 1, 2 * nmax + 1))
    for i in range(nmax + 1):
        for j in range(nmax + 1):
            for ip in range(i + j + 1):
                out[i, j, ip] = a_coeff(i, j, ip, i + j - ip)
    out.setflags(write=False)
    return out


def _log_double_factorial_odd(n):
    # log((2n+1)!!)
    return math.lgamma(2 * n + 2) - n * math.log(2.0) - math.lgamma(n + 1)


def c_coeff(k_idx, m_idx):
    """``C_{m1m2m3}^{k1k2k3}`` evaluated in log-Gamma space."""
    k = sum(k_idx)
    m = sum(m_idx)
    logv = (math.log(4 * math.pi) + math.lgamma(m + 1) - _log_double_factorial_odd(k - m)
            + sum(math.lgamma(ki + 1) - math.lgamma(mi + 1) for ki, mi in zip(k_idx, m_idx)))
    return (-1.0) ** m * math.exp(logv)
