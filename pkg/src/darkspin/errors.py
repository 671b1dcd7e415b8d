"""Exception types shared across the package.

The CLI maps these onto exit codes, so modules should raise the most
specific one that applies rather than bare ValueError.
"""


class ValidationError(ValueError):
    """Invalid physical parameter, malformed input, or broken invariant."""


class CapacityError(ValidationError):
    """Request exceeds a documented size bound (e.g. 2^N enumeration)."""


class SequenceError(ValidationError):
    """Pulse sequence is structurally unusable (e.g. missing readout)."""


class FitError(RuntimeError):
    """A fit could not produce a usable result."""


class CheckpointError(RuntimeError):
    """Checkpoint file does not match the run it is resumed into."""
