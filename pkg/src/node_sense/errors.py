"""Exception hierarchy with machine-readable error codes."""
from typing import Any, Dict, Optional


class NodeSenseError(Exception):
    """Base class for domain errors.

    Every subclass carries a snake_case ``code`` that the CLI reports on
    stderr, so callers can branch on it without parsing messages.
    """

    code = "node_sense_error"

    def __init__(self, message: str, code: Optional[str] = None):
        super().__init__(message)
        if code is not None:
            self.code = code

    def to_dict(self) -> Dict[str, Any]:
        return {"error": self.code, "message": str(self)}


class InvalidInputError(NodeSenseError, ValueError):
    code = "invalid_input"


class InvalidHeightBoundError(InvalidInputError):
    """The sampled function left the [0, height] band."""
    code = "invalid_height_bound"


class DegenerateFitError(NodeSenseError, ValueError):
    """Point configuration admits no unique fitted line or statistic."""
    code = "degenerate_fit"


class ModelOverflowError(NodeSenseError, OverflowError):
    code = "overflow"


class ZeroRateError(NodeSenseError, ValueError):
    """Fitted exponential rate is zero: neither growth nor decay."""
    code = "zero_rate"

    def __init__(self, message: str, scale: float):
        super().__init__(message)
        self.scale = scale

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), "scale": self.scale}


class DuplicateJoinError(NodeSenseError, ValueError):
    code = "duplicate_join"


class PoolExhaustedError(NodeSenseError):
    """The cell has no free IP address left."""
    code = "pool_exhausted"


class NotAMemberError(NodeSenseError, KeyError):
    code = "not_a_member"

    def __str__(self) -> str:
        return self.args[0]


class InvariantViolation(NodeSenseError, AssertionError):
    code = "invariant_violation"


class ScriptError(NodeSenseError):
    """An event in a simulation script failed; ``index`` is zero-based."""
    code = "script_error"

    def __init__(self, index: int, cause: NodeSenseError):
        super().__init__(f"event {index}: {cause}")
        self.index = index
        self.cause = cause
        self.code = cause.code

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), "event_index": self.index}


class CsvFormatError(NodeSenseError, ValueError):
    code = "csv_format"

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
