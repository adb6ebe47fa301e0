"""Exception hierarchy shared by the library and the CLI."""


class ValidationError(ValueError):
    """Bad input data or configuration. Maps to CLI exit code 2."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ArchiveError(ValidationError):
    """Malformed, truncated or version-mismatched archive."""


class NumericalError(RuntimeError):
    """A numerical self-check failed. Maps to CLI exit code 3."""


class IllConditionedError(NumericalError):
    """A matrix that must be inverted is too close to singular.

    Attributes
    ----------
    what : str
        Which matrix failed (e.g. ``"K(T1)"`` or ``"B"``).
    cond : float
        Condition-number estimate (``inf`` for an exactly singular matrix).
    threshold : float
        The cap that was exceeded.
    """

    def __init__(self, what, cond, threshold):
        self.what = what
        self.cond = float(cond)
        self.threshold = float(threshold)
        super().__init__(
            f"{what} is ill-conditioned: condition estimate {self.cond:.3e} "
            f"exceeds threshold {self.threshold:.3e}"
        )


class CoarseGrainingWarning(UserWarning):
    """Propagation time beyond the range where coarse-grained bins are reliable."""
