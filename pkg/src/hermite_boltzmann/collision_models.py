"""Right-hand sides of the coefficient ODE: quadratic, BGK and hybrid models."""
from dataclasses import dataclass, field

import numpy as np

from .basis import n_indices, rank
from .errors import ContractError, ConvergenceError, DomainError
from .kernels import quadratic_form

DENSE_EIG_LIMIT = 500
_TRACE = (rank((2, 0, 0)), rank((0, 2, 0)), rank((0, 0, 2)))


def _as_vector(f, n, what):
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or f.size != n:
        raise ContractError(f"{what} expects a coefficient vector of length {n}, got shape {f.shape}")
    return f


def quadratic_rhs(tensor, f, numba=None):
    """``Q_k = sum_{i,j} A_k^{ij} f_i f_j`` using the stored upper triangle."""
    n = tensor.size
    f = _as_vector(f, n, "quadratic_rhs")
    return quadratic_form(n, tensor.k, tensor.i, tensor.j, tensor.values,
                          tensor.pair_weights, f, numba)


def bgk_rhs(tau, f):
    """BGK relaxation towards the unit Maxwellian for a normalised state."""
    if not tau > 0:
        raise DomainError(f"relaxation time must be positive, got {tau}")
    out = -np.asarray(f, dtype=float) / tau
    out[0] = 0.0
    return out


def linearized_operator(tensor):
    """Matrix ``L[k, j] = A_k^{000,j} + A_k^{j,000}`` over ``I_M0``."""
    n = tensor.size
    L = np.zeros((n, n))
    sel = tensor.i == 0
    # stored entries have i <= j, so every pair involving index 0 has i == 0
    np.add.at(L, (tensor.k[sel], tensor.j[sel]), 2.0 * tensor.values[sel])
    return L


def spectral_radius(L, tol=1e-10, max_iter=100_000, dense_limit=DENSE_EIG_LIMIT, seed=0):
    """Largest eigenvalue modulus of ``L``."""
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if n == 0 or not np.any(L):
        return 0.0
    if n <= dense_limit:
        return float(np.max(np.abs(np.linalg.eigvals(L))))
    return _power_radius(L, tol, max_iter, seed)


def _power_radius(L, tol, max_iter, seed):
    # fixed seed keeps runs reproducible
    x = np.random.default_rng(seed).standard_normal(L.shape[0])
    x /= np.linalg.norm(x)
    lam = 0.0
    resid = np.inf
    for _ in range(max_iter):
        y = L @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        new = float(x @ y)
        resid = np.linalg.norm(y - new * x) / max(abs(new), 1e-300)
        x = y / norm
        if resid < tol and abs(new - lam) <= tol * abs(new):
            return abs(new)
        lam = new
    raise ConvergenceError("power iteration for the spectral radius did not converge", resid)


@dataclass(frozen=True)
class HybridModel:
    """Quadratic operator on ``I_M0`` plus uniform decay ``-nu f`` on ``I_M \\ I_M0``."""

    tensor: object
    M: int
    nu: float
    numba: object = field(default=None, compare=False)

    def __post_init__(self):
        if self.M < self.tensor.M0:
            raise ContractError(f"M={self.M} must be at least M0={self.tensor.M0}")
        if not self.nu >= 0:
            raise DomainError(f"decay rate must be non-negative, got {self.nu}")

    @property
    def M0(self):
        return self.tensor.M0

    @classmethod
    def from_tensor(cls, tensor, M, nu=None, numba=None):
        if nu is None:
            nu = spectral_radius(linearized_operator(tensor))
        return cls(tensor, int(M), float(nu), numba)

    def __call__(self, f):
        return hybrid_rhs(self, f)


def hybrid_rhs(model, f):
    f = _as_vector(f, n_indices(model.M), "hybrid_rhs")
    n0 = model.tensor.size
    out = np.empty_like(f)
    out[:n0] = quadratic_rhs(model.tensor, f[:n0], model.numba)
    out[n0:] = -model.nu * f[n0:]
    return out


def conserved_residual(rhs):
    """Max magnitude of the mass, momentum and energy-trace components."""
    rhs = np.asarray(rhs)
    return float(max(np.max(np.abs(rhs[:4])), abs(rhs[list(_TRACE)].sum())))
