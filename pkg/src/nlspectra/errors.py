"""Exception types raised by the numerical pipeline."""


class NonConvergenceError(RuntimeError):
    """An iteration hit its cap; ``residual`` is the last measured residual."""

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class SimplicityError(RuntimeError):
    """The principal eigenvalue is numerically degenerate."""


class HypothesisError(ValueError):
    """An assumption behind an estimate does not hold for the given data."""


class VerificationError(AssertionError):
    """A verified inequality failed; carries the diagnostics dict."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(ValueError):
    """Malformed scan configuration."""
