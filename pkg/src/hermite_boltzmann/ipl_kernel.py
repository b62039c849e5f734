"""Inverse-power-law kernel: deflection angle, angular and radial integrals.

For a repulsive force ``~ r^{-eta}`` the deflection angle is parametrised by
``y in (0, 1]`` (``y = 1 - W1^2`` with ``W1`` the turning point), which turns
the angular part of the kernel into the one-dimensional integrals

    I(k, eta) = int_0^1 [P_k(cos chi(y)) - 1] [2(1-y) + (eta-1) y]
                        [(eta-1) y]^{-(eta+1)/(eta-1)} dy.

Everything downstream of the collision kernel only needs these numbers.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import math
import threading

import numpy as np
from scipy import integrate

from .basis import legendre_minus_one
from .errors import ContractError, ConvergenceError, DomainError

_GL_ORDER = 20
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be at least 1")

    def halved(self):
        return QuadratureSpec(self.abs_tol / 2, self.rel_tol / 2, self.max_subdivisions)


def _check_eta(eta):
    if not eta > 3:
        raise DomainError(f"IPL exponent eta={eta} must exceed 3")


# -- deflection angle ----------------------------------------------------

@lru_cache(maxsize=None)
def _chi_nodes(level):
    """Composite Gauss-Legendre nodes for the x-integral of chi(y).

    Returns (x, one_minus_x, weights) where the panels on [1/2, 1] are in the
    variable u = sqrt(1 - x) (removes the inverse-square-root endpoint
    singularity) and the panels on [0, 1/2] are graded towards x = 0, where
    x^(eta-1) is only finitely smooth.
    """
    pieces = 2 ** level
    xs, omxs, ws = [], [], []
    xbreaks = [0.0, 1 / 64, 1 / 16, 1 / 4, 1 / 2]
    for a, b in zip(xbreaks[:-1], xbreaks[1:]):
        edges = np.linspace(a, b, pieces + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            x = 0.5 * (hi - lo) * _GL_X + 0.5 * (hi + lo)
            xs.append(x)
            omxs.append(1.0 - x)
            ws.append(0.5 * (hi - lo) * _GL_W)
    ubreaks = [0.0, 0.35, math.sqrt(0.5)]
    for a, b in zip(ubreaks[:-1], ubreaks[1:]):
        edges = np.linspace(a, b, pieces + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            u = 0.5 * (hi - lo) * _GL_X + 0.5 * (hi + lo)
            xs.append(1.0 - u * u)
            omxs.append(u * u)
            ws.append(0.5 * (hi - lo) * _GL_W * 2 * u)
    return np.concatenate(xs), np.concatenate(omxs), np.concatenate(ws)


def _chi_over_y_rule(eta, y, level):
    x, omx, w = _chi_nodes(level)
    y = np.asarray(y, dtype=float)[..., None]
    logx = np.log1p(-omx)
    b = omx * (1.0 + x)
    p1 = -np.expm1((eta - 1) * logx)
    p3 = -np.expm1((eta - 3) * logx)
    q = b + y * x * x * p3
    sq = np.sqrt(q)
    f = p1 / (np.sqrt(b) * sq * (sq + np.sqrt((1.0 - y) * b)))
    return 2.0 * (f @ w)


def chi_over_y(eta, y, tol=1e-14, max_level=6):
    """``chi(y) / y``, finite and well defined down to ``y = 0``."""
    prev = _chi_over_y_rule(eta, y, 0)
    for level in range(1, max_level + 1):
        cur = _chi_over_y_rule(eta, y, level)
        if np.max(np.abs(cur - prev)) <= tol * max(1.0, float(np.max(np.abs(cur)))):
            return cur
        prev = cur
    raise ConvergenceError("chi(y) quadrature did not converge",
                           float(np.max(np.abs(cur - prev))))


def chi_of_y(eta, y):
    """Deflection angle for the IPL potential at impact parameter ``y``.

    Uses the cancellation-free rearrangement

        chi = 2 y int_0^1 (1 - x^{eta-1}) / (sqrt(b) sqrt(q) (sqrt(q) + sqrt((1-y) b))) dx

    with ``b = 1 - x^2`` and ``q = b + y (x^2 - x^{eta-1})``, which equals
    ``pi - 2 sqrt(1-y) int_0^1 q^{-1/2} dx`` but keeps full relative
    accuracy for grazing collisions.
    """
    _check_eta(eta)
    yarr = np.asarray(y, dtype=float)
    if np.any(yarr <= 0) or np.any(yarr > 1):
        raise DomainError("chi_of_y requires 0 < y <= 1")
    out = yarr * chi_over_y(eta, yarr)
    return float(out) if out.ndim == 0 else out


# -- angular integrals I(k, eta) -----------------------------------------

def _measure_factor(eta, y):
    # [2(1-y) + (eta-1) y] (eta-1)^{-(eta+1)/(eta-1)}; the y-power lives in the QAWS weight
    return (2.0 * (1.0 - y) + (eta - 1) * y) * (eta - 1) ** (-(eta + 1) / (eta - 1))


def i_integral(k, eta, quad=None):
    """Return ``(I(k, eta), error_estimate)``.

    The integrand is written as ``y^a F_k(y)`` with ``a = (eta-3)/(eta-1)``
    and ``F_k`` smooth on ``[0, 1]``; QUADPACK's QAWS rule handles the
    algebraic weight.
    """
    _check_eta(eta)
    if k < 0:
        raise DomainError("I(k, eta) needs k >= 0")
    if k == 0:
        return 0.0, 0.0
    quad = quad or QuadratureSpec()
    a = (eta - 3) / (eta - 1)
    c0 = float(chi_over_y(eta, 0.0))
    chi_cache = {}

    def integrand(y):
        if y == 0.0:
            return -k * (k + 1) / 4 * c0 * c0 * _measure_factor(eta, 0.0)
        c = chi_cache.get(y)
        if c is None:
            c = chi_cache[y] = float(chi_over_y(eta, y))
        chi = y * c
        d = legendre_minus_one(k, 2.0 * math.sin(0.5 * chi) ** 2)[k]
        return float(d) * (c * c) / (chi * chi) * _measure_factor(eta, y)

    val, err, info = integrate.quad(
        integrand, 0.0, 1.0, weight="alg", wvar=(a, 0.0),
        epsabs=quad.abs_tol, epsrel=quad.rel_tol, limit=quad.max_subdivisions,
        full_output=1)[:3]
    ier = info.get("ier", 0) if isinstance(info, dict) else 0
    if ier not in (0,):
        raise ConvergenceError(f"I({k}, {eta}) quadrature failed (ier={ier})", err)
    return val, err


@dataclass
class KernelModel:
    """IPL kernel with a monotone cache of the angular integrals ``I(k, eta)``."""

    eta: float
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    i_table: dict = field(default_factory=dict, repr=False)
    i_errors: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        _check_eta(self.eta)
        self.eta = float(self.eta)
        self._lock = threading.Lock()

    @property
    def maxwell(self):
        # exact comparison on purpose: eta near but not equal to 5 takes the general path
        return self.eta == 5.0

    def I(self, k):
        if k not in self.i_table:
            with self._lock:
                for kk in range(k + 1):
                    if kk not in self.i_table:
                        val, err = i_integral(kk, self.eta, self.quad)
                        self.i_table[kk] = val
                        self.i_errors[kk] = err
        return self.i_table[k]

    def i_values(self, kmax):
        self.I(kmax)
        return np.array([self.i_table[k] for k in range(kmax + 1)])


@lru_cache(maxsize=None)
def kernel_model(eta, quad=None):
    """Shared, memoised :class:`KernelModel` per ``(eta, quad)``."""
    return KernelModel(float(eta), quad or QuadratureSpec())


# -- radial integrals ----------------------------------------------------

def gbinom(x, r):
    """Generalised binomial coefficient ``C(x, r)`` for real ``x``, integer ``r >= 0``."""
    out = 1.0
    for t in range(r):
        out *= (x - t) / (t + 1)
    return out


def laguerre_moment(m, n, alpha, mu):
    """Closed form of ``int_0^inf L_m^a(s) L_n^a(s) s^mu e^{-s} ds``."""
    d = mu - alpha
    total = 0.0
    for i in range(min(m, n) + 1):
        total += gbinom(d, m - i) * gbinom(d, n - i) * gbinom(i + mu, i)
    return (-1) ** (m + n) * math.gamma(mu + 1) * total


def k_coeff(k, l, m, n, model):
    """Radial-angular coefficient ``K_{mn}^{kl}`` for the IPL kernel.

    ``k`` and ``l`` are total degrees. Terms with ``k - 2m != l - 2n`` do not
    enter any sum and are returned as zero.
    """
    if min(k, l, m, n) < 0 or 2 * m > k or 2 * n > l:
        raise ContractError(f"k_coeff index out of range: k={k} l={l} m={m} n={n}")
    r = k - 2 * m
    if r != l - 2 * n:
        return 0.0
    eta = model.eta
    if model.maxwell:
        if m != n:
            return 0.0
        return (2.0 ** (r + 0.5) * model.I(r) * gbinom(r + m + 0.5, m)
                * math.gamma(r + 1.5))
    c = (eta - 3) / (eta - 1) + r
    return 2.0 ** c * model.I(r) * laguerre_moment(m, n, r + 0.5, c)


def k_table(model, M0):
    """``K[r, m, n]`` for ``r <= M0``, ``r + 2m <= 2 M0``, ``r + 2n <= M0``."""
    out = np.zeros((M0 + 1, M0 + 1, M0 // 2 + 1))
    for r in range(M0 + 1):
        for m in range((2 * M0 - r) // 2 + 1):
            for n in range((M0 - r) // 2 + 1):
                out[r, m, n] = k_coeff(r + 2 * m, r + 2 * n, m, n, model)
    return out


# -- relaxation time and time scaling ------------------------------------

def b_tilde2(model):
    """g-independent factor of the angular kernel at k = 2."""
    eta = model.eta
    return 2.0 ** (-(eta - 3) / (eta - 1)) * model.I(2)


def bgk_tau(eta, model=None):
    """Mean relaxation time of the BGK approximation of the IPL gas."""
    _check_eta(eta)
    model = model or kernel_model(float(eta))
    a2 = -(2.0 / 3.0) * b_tilde2(model)
    return 5.0 / (2.0 ** ((3 * eta - 7) / (eta - 1)) * math.sqrt(math.pi) * a2
                  * math.gamma(4 - 2 / (eta - 1)))


def scaled_time_constant(eta, model=None):
    """Time unit that matches the near-equilibrium relaxation of ``eta`` to ``eta = 5``."""
    _check_eta(eta)
    model = model or kernel_model(float(eta))
    maxwell = model if model.eta == 5.0 else kernel_model(5.0, model.quad)
    return (4.0 ** (2 / (eta - 1) - 0.5) * b_tilde2(maxwell) * math.gamma(3.5)
            / (b_tilde2(model) * math.gamma(4 - 2 / (eta - 1))))
