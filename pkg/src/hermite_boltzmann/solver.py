"""Time integration, moments, initial data and the BKW reference solution."""
import csv
from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate

from .basis import hermite_1d, index_set, n_indices, rank
from .errors import ContractError, DomainError, NonFiniteStateError, NumericalError
from .ipl_kernel import kernel_model

TRAJECTORY_COLUMNS = ("t", "rho", "u1", "u2", "u3", "theta",
                      "sigma11", "sigma12", "sigma13", "sigma22", "sigma23", "sigma33",
                      "q1", "q2", "q3", "f400", "f220")

_E = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


def _unit(*pairs):
    k = [0, 0, 0]
    for axis, power in pairs:
        k[axis] += power
    return tuple(k)


# -- states and moments --------------------------------------------------

@dataclass
class SpectralState:
    """Hermite coefficients ``f_k`` over ``I_M`` in rank order."""

    M: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (n_indices(self.M),):
            raise ContractError(f"state over I_{self.M} needs {n_indices(self.M)} coefficients, "
                                f"got shape {self.coeffs.shape}")

    @classmethod
    def maxwellian(cls, M):
        c = np.zeros(n_indices(M))
        c[0] = 1.0
        return cls(M, c)

    def __getitem__(self, idx):
        if sum(idx) > self.M:
            return 0.0
        return float(self.coeffs[rank(idx)])

    def restrict(self, M):
        if M > self.M:
            raise ContractError(f"cannot restrict a state over I_{self.M} to I_{M}")
        return SpectralState(M, self.coeffs[:n_indices(M)].copy())

    def extend(self, M):
        if M < self.M:
            return self.restrict(M)
        c = np.zeros(n_indices(M))
        c[:self.coeffs.size] = self.coeffs
        return SpectralState(M, c)


@dataclass(frozen=True)
class Moments:
    rho: float
    u: np.ndarray
    theta: float
    sigma: np.ndarray
    q: np.ndarray  # NaN when the state has no degree-3 coefficients

    def row(self):
        s = self.sigma
        return [self.rho, *self.u, self.theta, s[0, 0], s[0, 1], s[0, 2], s[1, 1], s[1, 2],
                s[2, 2], *self.q]


def moments(state):
    """Density, velocity, temperature, stress and heat flux of a state.

    Stress and heat flux use the linear coefficient relations
    ``sigma_ij = (1 + delta_ij) f_{e_i+e_j}`` and
    ``q_i = 3 f_{3e_i} + sum_{j != i} f_{e_i+2e_j}``, which presume the
    normalisation ``rho = theta = 1``, ``u = 0``.
    """
    f = state.__getitem__
    rho = f((0, 0, 0))
    mom = np.array([f(e) for e in _E])
    u = mom / rho
    trace = sum(f(_unit((a, 2))) for a in range(3))
    theta = (2.0 * trace + 3.0 * rho - rho * float(u @ u)) / (3.0 * rho)
    sigma = np.empty((3, 3))
    for a in range(3):
        for b in range(3):
            sigma[a, b] = 2.0 * f(_unit((a, 2))) if a == b else f(_unit((a, 1), (b, 1)))
    if state.M >= 3:
        q = np.array([3.0 * f(_unit((a, 3))) + sum(f(_unit((a, 1), (b, 2)))
                                                    for b in range(3) if b != a)
                      for a in range(3)])
    else:
        q = np.full(3, np.nan)
    return Moments(rho, u, theta, sigma, q)


def trajectory_row(t, state):
    return [t, *moments(state).row(), state[(4, 0, 0)], state[(2, 2, 0)]]


# -- time stepping -------------------------------------------------------

@dataclass
class Trajectory:
    times: list
    rows: list
    final: SpectralState
    marginals: list  # (t, g, h) tuples


def rk4_step(rhs, f, dt):
    k1 = rhs(f)
    k2 = rhs(f + 0.5 * dt * k1)
    k3 = rhs(f + 0.5 * dt * k2)
    k4 = rhs(f + dt * k3)
    return f + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_integrate(rhs, state, dt, t_end, observers=()):
    """Classical fixed-step RK4 from ``t = 0`` to ``t_end``.

    ``observers`` is a sequence of ``(callback, every)`` pairs; each
    ``callback(step, t, state)`` runs at step 0 and then every ``every``
    steps (and at the final step). Returns the final state.
    """
    if not dt > 0:
        raise DomainError(f"time step must be positive, got {dt}")
    if t_end < 0:
        raise DomainError(f"end time must be non-negative, got {t_end}")
    nsteps = int(round(t_end / dt))
    if abs(nsteps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise DomainError(f"t_end={t_end} is not a multiple of dt={dt}")
    is_state = isinstance(state, SpectralState)
    M = state.M if is_state else None
    f = np.array(state.coeffs if is_state else state, dtype=float)

    def emit(step):
        cur = SpectralState(M, f) if is_state else f
        for cb, every in observers:
            if step % every == 0 or step == nsteps:
                cb(step, step * dt, cur)

    emit(0)
    for step in range(1, nsteps + 1):
        new = rk4_step(rhs, f, dt)
        if not np.all(np.isfinite(new)):
            raise NonFiniteStateError((step - 1) * dt)
        f = new
        emit(step)
    return SpectralState(M, f) if is_state else f


def integrate_trajectory(rhs, state, dt, t_end, marginal_every=None, grid1d=None,
                         grid2d=None):
    """Run RK4 recording moments every step and marginals every ``marginal_every`` steps."""
    rows, times, margs = [], [], []

    def record(step, t, s):
        times.append(t)
        rows.append(trajectory_row(t, s))

    observers = [(record, 1)]
    if marginal_every:
        def sample(step, t, s):
            margs.append((t, *marginals(s, grid1d, grid2d)))
        observers.append((sample, marginal_every))
    final = rk4_integrate(rhs, state, dt, t_end, observers)
    return Trajectory(times, rows, final, margs)


# -- BKW reference -------------------------------------------------------

@dataclass(frozen=True)
class BkwReference:
    """Exact BKW solution for Maxwell molecules.

    ``b2`` is the angular constant ``2^{-1/2} I(2, 5)`` (negative), ``t0``
    the time offset fixed by ``-(pi/3) b2 t0 = offset``.
    """

    b2: float
    t0: float

    @classmethod
    def from_kernel(cls, model=None, offset=0.92):
        model = model or kernel_model(5.0)
        if not model.maxwell:
            raise DomainError("the BKW solution exists only for eta = 5")
        b2 = 2.0 ** -0.5 * model.I(2)
        if not b2 < 0:
            raise NumericalError(f"expected a negative angular constant, got {b2}")
        ref = cls(b2, -offset * 3.0 / (math.pi * b2))
        ref.check()
        return ref

    def check(self):
        if not (self.b2 < 0 and -(math.pi / 3) * self.b2 * self.t0 >= math.log(2.5)):
            raise DomainError("BKW offset violates the positivity constraint "
                              "-(pi/3) b2 t0 >= log(5/2)")

    def rate(self):
        return (math.pi / 3.0) * self.b2

    def E(self, t):
        return math.exp(self.rate() * (t + self.t0))

    def tau(self, t):
        return 1.0 - self.E(t)


def bkw_coeffs(t, ref, M):
    """Exact Hermite coefficients of the BKW solution at time ``t``."""
    ref.check()
    E = ref.E(t)
    idx = index_set(M)
    c = np.zeros(len(idx))
    for r, k in enumerate(idx.tolist()):
        if any(x % 2 for x in k):
            continue
        d = sum(k)
        c[r] = ((-0.5 * E) ** (d // 2) * (1.0 - d / 2.0)
                / math.prod(math.factorial(x // 2) for x in k))
    return SpectralState(M, c)


def bkw_rates(t, ref, M):
    """Time derivative of :func:`bkw_coeffs`."""
    c = bkw_coeffs(t, ref, M).coeffs
    deg = index_set(M).sum(axis=1)
    return 0.5 * deg * ref.rate() * c


def bkw_marginal(v1, t, ref):
    """Exact one-dimensional marginal of the BKW distribution."""
    tau = ref.tau(t)
    v1 = np.asarray(v1, dtype=float)
    gauss = np.exp(-v1 * v1 / (2 * tau)) / math.sqrt(2 * math.pi * tau)
    return gauss * (1.0 + (1.0 - tau) / tau * (v1 * v1 / (2 * tau) - 0.5))


# -- initial data --------------------------------------------------------

def gaussian_hermite_coeffs(nmax, mean, var):
    """``(1/n!) E[He_n(X)]`` for ``X ~ N(mean, var)``, ``n = 0..nmax``."""
    out = np.zeros(nmax + 1)
    h = 0.5 * (var - 1.0)
    for n in range(nmax + 1):
        out[n] = sum(mean ** (n - 2 * j) * h ** j
                     / (math.factorial(n - 2 * j) * math.factorial(j))
                     for j in range(n // 2 + 1))
    return out


def _gaussian_hermite_quadrature(nmax, mean, var, order):
    z, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / math.sqrt(2 * math.pi)
    he = hermite_1d(nmax, mean + math.sqrt(var) * z)
    fact = np.array([math.factorial(n) for n in range(nmax + 1)], dtype=float)
    return (he @ w) / fact


def _tensor_state(M, c1, c2, c3):
    idx = index_set(M)
    return c1[idx[:, 0]] * c2[idx[:, 1]] * c3[idx[:, 2]]


BIGAUSSIAN_SHIFT = math.sqrt(1.5)
BIGAUSSIAN_VAR = 0.5


def project_bigaussian(M, check=True):
    """Even mixture of two Gaussians displaced by ``+-sqrt(3/2)`` along ``v1``.

    Each component has variance ``1/2`` per direction, so the mixture has
    unit density and temperature, zero velocity and ``sigma_11 = 1``.
    """
    a, s2 = BIGAUSSIAN_SHIFT, BIGAUSSIAN_VAR
    plus = gaussian_hermite_coeffs(M, a, s2)
    minus = gaussian_hermite_coeffs(M, -a, s2)
    perp = gaussian_hermite_coeffs(M, 0.0, s2)
    c = 0.5 * (_tensor_state(M, plus, perp, perp) + _tensor_state(M, minus, perp, perp))
    if check:
        order = 2 * M + 2
        q = 0.5 * (_tensor_state(M, _gaussian_hermite_quadrature(M, a, s2, order),
                                 *[_gaussian_hermite_quadrature(M, 0.0, s2, order)] * 2)
                   + _tensor_state(M, _gaussian_hermite_quadrature(M, -a, s2, order),
                                   *[_gaussian_hermite_quadrature(M, 0.0, s2, order)] * 2))
        err = float(np.max(np.abs(q - c)))
        if err > 1e-10:
            raise NumericalError(f"bi-Gaussian projection: closed form and quadrature "
                                 f"differ by {err:.3e}")
    return SpectralState(M, c)


# discontinuous data: Gaussian halves with variance 2^{-1/2} (v1 > 0) and 2^{1/2} (v1 < 0)
_DISC_HALVES = ((2.0 - math.sqrt(2.0), 2.0 ** -0.5, 1.0),
                (math.sqrt(2.0) - 1.0, 2.0 ** 0.5, -1.0))


def _half_line_coeffs(nmax, var, side):
    """``(1/n!) int_{side * x > 0} He_n(x) N(x; 0, var) dx`` by adaptive quadrature."""
    sd = math.sqrt(var)
    out = np.zeros(nmax + 1)
    for n in range(nmax + 1):
        def integrand(z, n=n):
            return hermite_1d(n, side * sd * z)[n] * math.exp(-0.5 * z * z)
        # the Gaussian tail beyond this cut-off is far below double precision
        upper = 14.0 + 2.0 * math.sqrt(n)
        scale = math.sqrt(math.factorial(n)) * max(1.0, sd) ** n
        val, err = integrate.quad(integrand, 0.0, upper, epsabs=1e-14 * scale,
                                  epsrel=1e-12, limit=400)
        if not np.isfinite(val) or err > 1e-10 * scale:
            raise NumericalError(f"half-line projection failed at degree {n} (error {err:.2e})")
        out[n] = val / (math.sqrt(2 * math.pi) * math.factorial(n))
    return out


def project_discontinuous(M):
    """Hermite coefficients of the two-temperature half-space initial datum."""
    c = np.zeros(n_indices(M))
    for mass, var, side in _DISC_HALVES:
        along = 2.0 * mass * _half_line_coeffs(M, var, side)
        perp = gaussian_hermite_coeffs(M, 0.0, var)
        c += _tensor_state(M, along, perp, perp)
    return SpectralState(M, c)


def load_coefficients(path, M=None):
    """Read a state from a text file with one coefficient per line (rank order)."""
    c = np.atleast_1d(np.loadtxt(path, dtype=float, comments="#"))
    if M is None:
        M = 0
        while n_indices(M) < c.size:
            M += 1
        if n_indices(M) != c.size:
            raise ContractError(f"{c.size} coefficients do not fill any I_M; pass M to zero-pad")
    if c.size > n_indices(M):
        raise ContractError(f"{c.size} coefficients exceed I_{M}")
    out = np.zeros(n_indices(M))
    out[:c.size] = c
    return SpectralState(M, out)


# -- marginals -----------------------------------------------------------

def marginals(state, grid1d=None, grid2d=None):
    """Marginals ``g(v1)`` and ``h(v1, v2)`` of the expanded distribution.

    Integrating ``H^k`` against the Maxwellian over one component keeps only
    terms whose index vanishes in that component.
    """
    g = h = None
    M = state.M
    if grid1d is not None:
        x = np.asarray(grid1d, dtype=float)
        c = np.array([state[(n, 0, 0)] for n in range(M + 1)])
        g = (c @ hermite_1d(M, x)) * np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    if grid2d is not None:
        x, y = (np.asarray(a, dtype=float) for a in grid2d)
        C = np.zeros((M + 1, M + 1))
        for a in range(M + 1):
            for b in range(M + 1 - a):
                C[a, b] = state[(a, b, 0)]
        hx = hermite_1d(M, x) * np.exp(-0.5 * x * x)
        hy = hermite_1d(M, y) * np.exp(-0.5 * y * y)
        h = (hx.T @ C @ hy) / (2 * math.pi)
    return g, h


# -- CSV output ----------------------------------------------------------

def write_trajectory_csv(path, rows, scaled_time=None):
    """Write moment rows; ``scaled_time`` adds a ``t_scaled = t / scaled_time`` column."""
    header = list(TRAJECTORY_COLUMNS)
    if scaled_time is not None:
        header.append("t_scaled")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            out = [repr(float(x)) for x in row]
            if scaled_time is not None:
                out.append(repr(float(row[0]) / scaled_time))
            w.writerow(out)


def write_marginal_csv(path_g, path_h, t, grid1d, g, grid2d, h):
    if path_g is not None and g is not None:
        with open(path_g, "a", newline="") as fh:
            w = csv.writer(fh)
            if fh.tell() == 0:
                w.writerow(["t", "v1", "g"])
            for x, val in zip(grid1d, g):
                w.writerow([repr(float(t)), repr(float(x)), repr(float(val))])
    if path_h is not None and h is not None:
        with open(path_h, "a", newline="") as fh:
            w = csv.writer(fh)
            if fh.tell() == 0:
                w.writerow(["t", "v1", "v2", "h"])
            for a, x in enumerate(grid2d[0]):
                for b, y in enumerate(grid2d[1]):
                    w.writerow([repr(float(t)), repr(float(x)), repr(float(y)),
                                repr(float(h[a, b]))])
