"""Exception taxonomy shared by all modules.

CLI exit codes: usage errors map to 2, data-integrity errors to 3 and
numeric failures to 4 (see cli.main).
"""


class MorphdetError(Exception):
    """Base class for all package errors."""


class DomainError(MorphdetError, ValueError):
    """An argument is outside the documented domain of an operation."""


class DegenerateInputError(DomainError):
    """Geometric input has no usable spread (collinear / collapsed points)."""


class ContractError(MorphdetError, ValueError):
    """Inconsistent shapes or out-of-range internal state."""


class DataIntegrityError(MorphdetError):
    """A manifest, protocol or score file references data that is missing
    or inconsistent."""

    def __init__(self, message: str, missing: list | None = None):
        super().__init__(message)
        self.missing = missing or []


class CapabilityError(MorphdetError):
    """A model does not expose a capability an operation requires."""


class NumericFailureError(MorphdetError):
    """Training or evaluation produced a non-finite value."""

    def __init__(self, message: str, step: int | None = None, batch_ids: list | None = None):
        super().__init__(message)
        self.step = step
        self.batch_ids = batch_ids or []
