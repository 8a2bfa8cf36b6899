"""Exception types shared across the package."""


class HvmError(Exception):
    """Base class for all package-specific errors."""


class InvalidReferenceError(HvmError):
    """A chunk or variable id does not resolve in the owning inventory."""


class DuplicateChunkError(HvmError):
    """A chunk with an identical term sequence already exists."""


class CycleError(HvmError):
    """Variable resolution does not terminate (variable -> denotee -> variable cycle)."""


class DegenerateDistributionError(HvmError):
    """All counts are zero; no probability distribution can be formed."""


class InvalidDistributionError(HvmError):
    """A supplied probability table does not sum to one."""


class CompletenessError(HvmError):
    """No chunk in the inventory explains the upcoming sequence content."""


class SchemaVersionError(HvmError):
    """A serialized model was written with an unsupported schema version."""


class InsufficientDataError(HvmError):
    """An input file is too short for the requested operation."""
