"""Exception types shared across the package."""


class CoverplanError(Exception):
    """Base class for all package-specific errors."""


class InputError(CoverplanError):
    """Caller passed arguments that violate a documented precondition."""


class StructuralError(CoverplanError):
    """Data references something that does not exist (cell, district, region)."""


class ContractViolation(CoverplanError):
    """An operation was invoked in a state its contract forbids."""


class ConfigurationError(CoverplanError):
    """Missing or inconsistent runtime configuration."""


class LoadError(CoverplanError):
    """A file failed schema validation.

    ``fields`` lists the offending entries so callers can report all of them
    at once instead of fixing one at a time.
    """

    def __init__(self, message: str, fields: list[str] | None = None):
        super().__init__(message)
        self.fields = list(fields or [])

    def __str__(self) -> str:  # pragma: no cover - formatting only
        base = super().__str__()
        if self.fields:
            return f"{base}: " + "; ".join(self.fields)
        return base


class FormatError(CoverplanError):
    """An export was requested in a format the data cannot satisfy."""


class EvaluatorError(CoverplanError):
    """External evaluator misbehaved; carries the raw payload for debugging."""

    def __init__(self, message: str, payload: object = None):
        super().__init__(message)
        self.payload = payload


class EnumerationCapError(CoverplanError):
    """Brute-force enumeration would exceed the configured cap."""


class ProposalError(CoverplanError):
    """Base class for advisor proposal validation failures."""


class ProposalParseError(ProposalError):
    """Advisor output could not be parsed into a district->count mapping."""


class ProposalFormatError(ProposalError):
    """Parsed mapping has wrong keys or non-integer counts."""


class ProposalBudgetError(ProposalError):
    """Proposal counts do not sum to the required budget."""


class ProposalFloorError(ProposalError):
    """Proposal drops a district below its minimum allocation."""


class ProposalMoveError(ProposalError):
    """Proposal moves more than two units relative to the previous one."""


class AdvisorTransportError(CoverplanError):
    """Live advisor endpoint unreachable or returned an unusable response."""


class AdvisorFailure(CoverplanError):
    """All proposal retries were exhausted.

    ``last_error`` keeps the final validation/transport error for reporting.
    """

    def __init__(self, message: str, last_error: Exception | None = None):
        super().__init__(message)
        self.last_error = last_error
