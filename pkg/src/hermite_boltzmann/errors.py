"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class HermiteBoltzmannError(Exception):
    exit_code = 1


class DomainError(HermiteBoltzmannError, ValueError):
    """Argument outside the mathematical domain of an operation."""

    exit_code = 2


class ContractError(HermiteBoltzmannError, ValueError):
    """Caller violated an index or shape precondition."""

    exit_code = 2


class ConfigError(HermiteBoltzmannError, ValueError):
    exit_code = 2


class CacheMissError(HermiteBoltzmannError, FileNotFoundError):
    exit_code = 3


class MemoryRefusal(HermiteBoltzmannError):
    """Requested tensor would exceed the configured memory cap."""

    exit_code = 4

    def __init__(self, estimate, cap):
        self.estimate = estimate
        self.cap = cap
        super().__init__(
            f"dense collision tensor needs {estimate / 2**30:.3f} GiB ({estimate} bytes), "
            f"cap is {cap / 2**30:.4g} GiB"
        )


class NumericalError(HermiteBoltzmannError, ArithmeticError):
    exit_code = 5


class ConvergenceError(NumericalError):
    """Quadrature or iteration stopped before meeting its tolerance."""

    def __init__(self, message, error_estimate=None):
        self.error_estimate = error_estimate
        super().__init__(message)


class NonFiniteStateError(NumericalError):
    def __init__(self, t_last_good):
        self.t_last_good = t_last_good
        super().__init__(f"state became non-finite after t = {t_last_good:g}")


class CostGuardError(HermiteBoltzmannError, ValueError):
    exit_code = 2


class TensorFormatError(HermiteBoltzmannError):
    """Cache file is not a collision tensor file (magic/version)."""

    exit_code = 3


class TruncatedFileError(TensorFormatError):
    pass


class ChecksumError(TensorFormatError):
    pass


class StaleCacheError(TensorFormatError):
    """Cache header does not match the requested run parameters."""
