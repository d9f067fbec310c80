"""Exception hierarchy shared across the package."""


class SmgofError(Exception):
    """Base class for all package errors."""


class NonFiniteError(SmgofError, ValueError):
    """An input or an intermediate quantity is NaN or infinite."""


class NonPositiveVarianceError(SmgofError, ValueError):
    """The model variance function is not strictly positive somewhere."""


class BlockMisalignedError(SmgofError, ValueError):
    """A fine-grid path does not have n**2 + 1 observations."""


class LevelTooFineError(SmgofError, ValueError):
    """Resolution level J with 2**J > n."""


class NotPowerOfTwoError(SmgofError, ValueError):
    pass


class SingularDesignError(SmgofError, ValueError):
    """Rank-deficient design matrix in a linear least-squares fit."""


class NoConvergenceError(SmgofError, RuntimeError):
    pass


class BootstrapDegenerateError(SmgofError, RuntimeError):
    """Too many bootstrap replications failed to produce a statistic."""
