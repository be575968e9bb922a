"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: argument/domain problems exit 2,
numeric failures exit 3, missing artifacts (e.g. a CDF table that was
never built) exit 4.
"""


class DomainError(ValueError):
    """An input violates an operation's mathematical domain."""


class NumericError(RuntimeError):
    """A numerical procedure failed to reach its accuracy target.

    Carries the achieved residual/bound in ``detail`` when available.
    """

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail


class InversionDisagreementError(NumericError):
    """The two Laplace-inversion algorithms disagree beyond the gate.

    ``detail`` is a dict with both values and their difference.
    """


class ConfigurationError(RuntimeError):
    """A required artifact (seed, table, ...) is missing or inconsistent."""
