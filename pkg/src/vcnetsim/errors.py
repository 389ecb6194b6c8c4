"""Exception types shared across the package."""


class VcnetsimError(Exception):
    """Base class for all package errors."""


class InvalidSpec(VcnetsimError):
    """A topology/experiment specification is internally inconsistent."""


class TerminalPort(VcnetsimError):
    """A server-facing port was used where a network port is required."""


class PatternTopologyMismatch(VcnetsimError):
    """Traffic pattern is not defined on the given topology."""


class StepOverflow(VcnetsimError):
    """A packet's hop count exceeded the ladder's step count (routing bug)."""


class TooShort(VcnetsimError):
    """A binned series has too few post-warmup bins to classify."""


class BudgetExceeded(VcnetsimError):
    """Exhaustive dependency-graph enumeration exceeds the configured budget."""
