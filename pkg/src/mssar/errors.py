"""Exception hierarchy shared across the package."""


class MssarError(Exception):
    """Base class for all package-specific errors."""


class NumericalDegeneracyError(MssarError):
    """A factorization or determinant violated a positivity invariant.

    Raised when det(I - rho*W) is reported nonpositive or a posterior
    precision matrix is not positive definite; both indicate an invariant
    violation upstream rather than a recoverable condition.
    """


class UnderflowCollapseError(MssarError):
    """All states were assigned zero probability at some filtering step."""


class DataError(MssarError):
    """Malformed input data (CSV schema, missing cells, non-finite values)."""


class ConfigError(MssarError):
    """Invalid or unrecognized configuration."""


class SamplerError(MssarError):
    """A Gibbs step failed; carries the sweep index and step name."""

    def __init__(self, sweep: int, step: str, cause: Exception):
        super().__init__(f"sweep {sweep}, step '{step}': {cause}")
        self.sweep = sweep
        self.step = step
