"""Galerkin collision tensor ``A_k^{i,j}`` for IPL gases.

Pipeline: C, S, K -> gamma -> (a, gamma) -> A. The tensor is symmetrised in
``(i, j)`` and stored as a sparse upper triangle.
"""
from dataclasses import dataclass
import hashlib
import math
import os
import struct

import numpy as np
from scipy import integrate
from scipy.special import roots_genlaguerre

from . import basis
from .basis import index_set, n_indices
from .errors import (ChecksumError, CostGuardError, MemoryRefusal, StaleCacheError,
                     TensorFormatError, TruncatedFileError)
from .ipl_kernel import KernelModel, QuadratureSpec, k_coeff, k_table, kernel_model
from .kernels import assemble_entries

GIB = 2 ** 30
DEFAULT_MEMORY_CAP = 16 * GIB
DEFAULT_DROP_FLOOR = 1e-14


# -- gamma coefficients --------------------------------------------------

def _m_triples(k_idx):
    k1, k2, k3 = k_idx
    for m1 in range(k1 // 2 + 1):
        for m2 in range(k2 // 2 + 1):
            for m3 in range(k3 // 2 + 1):
                yield (m1, m2, m3)


def gamma_coeff(j_idx, l_idx, model):
    """``gamma_j^l`` from the explicit six-fold sum (one coefficient)."""
    j_idx = tuple(int(c) for c in j_idx)
    l_idx = tuple(int(c) for c in l_idx)
    jd, ld = sum(j_idx), sum(l_idx)
    total = 0.0
    for m in _m_triples(j_idx):
        ms = sum(m)
        r = jd - 2 * ms
        a = tuple(jj - 2 * mm for jj, mm in zip(j_idx, m))
        cm = basis.c_coeff(j_idx, m)
        for n in _m_triples(l_idx):
            ns = sum(n)
            if ld - 2 * ns != r:
                continue
            b = tuple(ll - 2 * nn for ll, nn in zip(l_idx, n))
            s = basis.sk_table(r)[a + b]
            if s == 0.0:
                continue
            total += ((2 * r + 1) * cm * basis.c_coeff(l_idx, n) * s
                      * k_coeff(jd, ld, ms, ns, model))
    return total


def _harmonic_factors(M, rmax):
    """``U[r][row, col]``: coefficient ``C_m^k`` linking triple ``k`` to ``k - 2m``."""
    idx = index_set(M)
    blocks = {r: {tuple(t): c for c, t in enumerate(basis.degree_block(r).tolist())}
              for r in range(rmax + 1)}
    U = [np.zeros((len(idx), basis.n_degree(r))) for r in range(rmax + 1)]
    for row, k in enumerate(idx.tolist()):
        for m in _m_triples(k):
            a = (k[0] - 2 * m[0], k[1] - 2 * m[1], k[2] - 2 * m[2])
            r = sum(a)
            if r <= rmax:
                U[r][row, blocks[r][a]] = basis.c_coeff(k, m)
    return U


def gamma_table(model, M0, jmax=None):
    """All ``gamma_j^l`` with ``j`` in ``I_jmax`` (default ``2 M0``) and ``l`` in ``I_M0``.

    Uses the factorisation ``gamma = sum_r (2r+1) K_r * (U_r S_r V_r^T)``,
    where ``U_r``/``V_r`` hold the C coefficients and ``K_r`` depends only on
    the total degrees of ``j`` and ``l``.
    """
    jmax = 2 * M0 if jmax is None else jmax
    U = _harmonic_factors(jmax, M0)
    V = _harmonic_factors(M0, M0)
    K = k_table(model, max(M0, (jmax + 1) // 2))
    jdeg = index_set(jmax).sum(axis=1)
    ldeg = index_set(M0).sum(axis=1)
    out = np.zeros((len(jdeg), len(ldeg)))
    for r in range(M0 + 1):
        dj = jdeg - r
        dl = ldeg - r
        okj = (dj >= 0) & (dj % 2 == 0)
        okl = (dl >= 0) & (dl % 2 == 0)
        if not okj.any() or not okl.any():
            continue
        mj = np.where(okj, dj // 2, 0)
        nl = np.where(okl, dl // 2, 0)
        fac = (2 * r + 1) * K[r][mj[:, None], nl[None, :]]
        fac *= okj[:, None] & okl[None, :]
        out += fac * (U[r] @ basis._sk_matrix(r) @ V[r].T)
    return out


# -- direct quadrature oracle --------------------------------------------

def _chi_reference(eta, y):
    """Deflection angle straight from its defining integral (oracle use only)."""
    if y >= 1.0:
        return math.pi

    def h(x):
        if x >= 1.0:
            return (2 * (1 - y) + (eta - 1) * y) ** -0.5
        q = 1.0 - x * x * (1.0 - y) - x ** (eta - 1) * y
        return (q / (1.0 - x)) ** -0.5

    val = integrate.quad(h, 0.0, 1.0, weight="alg", wvar=(0.0, -0.5),
                         epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    return math.pi - 2.0 * math.sqrt(1.0 - y) * val


def _oracle_nodes(eta, n_radial, n_polar, n_azimuth, rotation):
    p = (eta - 5) / (eta - 1)
    xr, wr = roots_genlaguerre(n_radial, (1 + p) / 2)
    g = 2.0 * np.sqrt(xr)
    wr = wr * 2.0 ** (2 + p)
    ct, wt = np.polynomial.legendre.leggauss(n_polar)
    st = np.sqrt(1 - ct * ct)
    ph = 2 * np.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
    wp = np.full(n_azimuth, 2 * np.pi / n_azimuth)
    om = np.stack([np.outer(st, np.cos(ph)), np.outer(st, np.sin(ph)),
                   np.outer(ct, np.ones_like(ph))], axis=-1).reshape(-1, 3)
    wo = np.outer(wt, wp).ravel()
    # orthonormal frame perpendicular to each direction
    ref = np.where(np.abs(om[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]])
    e1 = np.cross(om, ref)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(om, e1)
    if rotation is not None:
        R = np.asarray(rotation, dtype=float)
        om, e1, e2 = om @ R.T, e1 @ R.T, e2 @ R.T
    gvec = g[:, None, None] * om[None, :, :]
    w = wr[:, None] * wo[None, :]
    return g, gvec, e1, e2, w


def gamma_direct_table(model, degree, *, n_radial=8, n_polar=12, n_azimuth=24,
                       n_psi=24, rotation=None, rel_tol=1e-10):
    """Direct quadrature of the defining integral of ``gamma`` over ``I_degree``.

    The relative velocity ``g`` uses a generalised Gauss-Laguerre rule in
    ``|g|^2/4`` times a Gauss product rule on the sphere, the unit vector
    ``n`` perpendicular to ``g`` a trapezoid rule, and the deflection angle an
    adaptive rule over the impact parameter. Returns ``(table, error)``.
    """
    if degree > 4:
        raise CostGuardError(f"direct gamma quadrature limited to degree <= 4, got {degree}")
    eta = model.eta
    g, gvec, e1, e2, w = _oracle_nodes(eta, n_radial, n_polar, n_azimuth, rotation)
    psi = 2 * np.pi * np.arange(n_psi) / n_psi
    nvec = (np.cos(psi)[:, None, None] * e1[None] + np.sin(psi)[:, None, None] * e2[None])
    hl = basis.hermite_table(degree, gvec / math.sqrt(2.0))
    hlw = hl * w
    pref = 2.0 ** (-(eta - 3) / (eta - 1)) * (2 * np.pi / n_psi)
    expo = -(eta + 1) / (eta - 1)

    def bracket(chi):
        gp = (np.cos(chi) * gvec[None, :, :, :]
              - math.sin(chi) * g[None, :, None, None] * nvec[:, None, :, :])
        hj = basis.hermite_table(degree, gp / math.sqrt(2.0)).sum(axis=1)
        diff = hj - n_psi * basis.hermite_table(degree, gvec / math.sqrt(2.0))
        return np.einsum("jab,lab->jl", diff, hlw)

    def integrand(t):
        y = t * t
        if y <= 0.0:
            return np.zeros((hl.shape[0], hl.shape[0]))
        meas = (2 * (1 - y) + (eta - 1) * y) * ((eta - 1) * y) ** expo * 2 * t
        return pref * meas * bracket(_chi_reference(eta, y))

    val, err = integrate.quad_vec(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=rel_tol,
                                  limit=2000)
    return val, err


def gamma_direct_oracle(j_idx, l_idx, model, **kwargs):
    """Independent estimate of one ``gamma_j^l`` by direct quadrature."""
    deg = max(sum(j_idx), sum(l_idx))
    if deg > 4:
        raise CostGuardError(f"direct gamma quadrature limited to degree <= 4, got {deg}")
    table, _ = gamma_direct_table(model, deg, **kwargs)
    return float(table[basis.rank(j_idx), basis.rank(l_idx)])


# -- the tensor ----------------------------------------------------------

def memory_estimate(M0):
    """Bytes for a dense double-precision ``N_M0^3`` coefficient array."""
    return 8 * n_indices(M0) ** 3


@dataclass(frozen=True)
class CollisionTensor:
    """Symmetrised ``A_k^{i,j}`` stored for ``i <= j`` (ranks in ``I_M0``)."""

    eta: float
    M0: int
    k: np.ndarray
    i: np.ndarray
    j: np.ndarray
    values: np.ndarray
    drop_floor: float = DEFAULT_DROP_FLOOR

    @property
    def size(self):
        return n_indices(self.M0)

    @property
    def n_entries(self):
        return int(self.values.size)

    @property
    def pair_weights(self):
        return np.where(self.i == self.j, 1.0, 2.0)

    def dense(self):
        """Full symmetric array ``A[k, i, j]``."""
        n = self.size
        out = np.zeros((n, n, n))
        out[self.k, self.i, self.j] = self.values
        out[self.k, self.j, self.i] = self.values
        return out

    def __getitem__(self, kij):
        k, i, j = kij
        if i > j:
            i, j = j, i
        hit = np.nonzero((self.k == k) & (self.i == i) & (self.j == j))[0]
        return float(self.values[hit[0]]) if hit.size else 0.0


def assemble(eta, M0, model=None, *, drop_floor=DEFAULT_DROP_FLOOR,
             memory_cap=DEFAULT_MEMORY_CAP, numba=None, gamma=None):
    """Compute every symmetrised ``A_k^{i,j}`` with ``k, i, j`` in ``I_M0``."""
    if M0 < 2:
        raise ValueError("M0 must be at least 2 so the conserved moments are resolved")
    est = memory_estimate(M0)
    if est > memory_cap:
        raise MemoryRefusal(est, memory_cap)
    model = model or kernel_model(float(eta))
    if float(model.eta) != float(eta):
        raise ValueError(f"kernel model eta={model.eta} does not match eta={eta}")
    if gamma is None:
        gamma = gamma_table(model, M0)
    idx = index_set(M0)
    a = basis.a_table(M0)
    inv_fact = np.array([1.0 / math.factorial(n) for n in range(M0 + 1)])
    pref = np.array([2.0 ** (-d / 2) / (8.0 * math.pi ** 1.5) for d in range(M0 + 1)])
    ks, is_, js, vs = assemble_entries(idx, gamma, a, inv_fact, pref, drop_floor, numba)
    return CollisionTensor(float(eta), int(M0), ks.astype(np.uint32), is_.astype(np.uint32),
                           js.astype(np.uint32), vs.astype(np.float64), float(drop_floor))


# -- binary cache format -------------------------------------------------

MAGIC = b"HBLTZA01"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIdIdQ")
_ENTRY = np.dtype([("k", "<u4"), ("i", "<u4"), ("j", "<u4"), ("v", "<f8")])
_CHECKSUM = struct.Struct("<Q")


def _checksum(payload):
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def to_bytes(tensor):
    rec = np.empty(tensor.n_entries, dtype=_ENTRY)
    rec["k"], rec["i"], rec["j"], rec["v"] = tensor.k, tensor.i, tensor.j, tensor.values
    payload = _HEADER.pack(MAGIC, FORMAT_VERSION, tensor.eta, tensor.M0, tensor.drop_floor,
                           tensor.n_entries) + rec.tobytes()
    return payload + _CHECKSUM.pack(_checksum(payload))


def from_bytes(buf, eta=None, M0=None):
    if len(buf) < _HEADER.size:
        if not MAGIC.startswith(bytes(buf[:8])[: len(MAGIC)]) or len(buf) == 0:
            raise TensorFormatError("not a collision tensor file (bad magic)")
        raise TruncatedFileError("file shorter than the header")
    magic, version, f_eta, f_M0, floor, count = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise TensorFormatError(f"not a collision tensor file (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise TensorFormatError(f"unsupported format version {version}")
    end = _HEADER.size + count * _ENTRY.itemsize
    if len(buf) < end + _CHECKSUM.size:
        raise TruncatedFileError(f"expected {end + _CHECKSUM.size} bytes, found {len(buf)}")
    (stored,) = _CHECKSUM.unpack_from(buf, end)
    if stored != _checksum(bytes(buf[:end])):
        raise ChecksumError("payload checksum mismatch")
    if eta is not None and float(eta) != f_eta:
        raise StaleCacheError(f"cache built for eta={f_eta}, run requests eta={eta}; "
                              "re-run `assemble`")
    if M0 is not None and int(M0) != f_M0:
        raise StaleCacheError(f"cache built for M0={f_M0}, run requests M0={M0}; "
                              "re-run `assemble`")
    rec = np.frombuffer(buf, dtype=_ENTRY, count=count, offset=_HEADER.size)
    return CollisionTensor(f_eta, f_M0, rec["k"].copy(), rec["i"].copy(), rec["j"].copy(),
                           rec["v"].copy(), floor)


def save(tensor, destination):
    data = to_bytes(tensor)
    if hasattr(destination, "write"):
        destination.write(data)
        return
    tmp = f"{destination}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, destination)


def load(source, eta=None, M0=None):
    if hasattr(source, "read"):
        return from_bytes(source.read(), eta, M0)
    with open(source, "rb") as fh:
        return from_bytes(fh.read(), eta, M0)


def format_eta(eta):
    return format(float(eta), "g")


def cache_path(cache_dir, eta, M0):
    return os.path.join(cache_dir, f"A_eta{format_eta(eta)}_M{int(M0)}.bin")


__all__ = [
    "CollisionTensor", "KernelModel", "QuadratureSpec", "assemble", "cache_path",
    "gamma_coeff", "gamma_direct_oracle", "gamma_direct_table", "gamma_table", "load",
    "memory_estimate", "save",
]
