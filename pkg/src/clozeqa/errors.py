"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 2, TransportError -> 3,
DataValidationError (and subclasses) -> 4.
"""


class ClozeError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ClozeError):
    """Bad configuration or usage (unknown translator, malformed config file)."""


class DataValidationError(ClozeError):
    """Input data violates the expected format or an invariant."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class PtbParseError(DataValidationError):
    """Malformed bracketed tree; ``offset`` is the byte offset of the failure."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UntranslatableError(ClozeError):
    """The question cannot be turned into a cloze by this translator."""


class TagApplicationError(ClozeError):
    """An edit tag sequence cannot be applied to the given tokens."""


class ConvergenceError(ClozeError):
    """Iterative tag encoding did not reach the target within the pass budget."""

    def __init__(self, message, residual):
        super().__init__(f"{message}; residual: {residual}")
        self.residual = residual


class StructuralError(ClozeError):
    """Mismatched shapes between values that must agree (candidate counts, ids)."""


class TransportError(ClozeError):
    """A remote backend failed or is unreachable."""

    def __init__(self, message, instance_id=None, batch_index=None):
        parts = [message]
        if instance_id is not None:
            parts.append(f"instance={instance_id}")
        if batch_index is not None:
            parts.append(f"batch={batch_index}")
        super().__init__(" ".join(parts))
        self.instance_id = instance_id
        self.batch_index = batch_index
