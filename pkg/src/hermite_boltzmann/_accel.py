"""Optional numba acceleration.

Kernels are written once as plain Python loops and compiled with
``numba.njit`` when available. Setting ``HERMITE_BOLTZMANN_NUMBA=0`` (or
running without numba installed) selects the vectorised numpy fallbacks
instead; both paths are kept in sync by the test-suite.
"""
import os

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None
    _HAVE_NUMBA = False


def _env_enabled():
    flag = os.environ.get("HERMITE_BOLTZMANN_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


NUMBA_ENABLED = _HAVE_NUMBA and _env_enabled()


def njit(*args, **kwargs):
    """``numba.njit`` if numba is usable, otherwise the identity decorator."""
    if _HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)

    def wrap(fn):
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap


def use_numba(flag=None):
    """Return whether the numba kernels should be used for this call."""
    if flag is None:
        return NUMBA_ENABLED
    return bool(flag) and _HAVE_NUMBA
