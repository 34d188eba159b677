"""Exception hierarchy for the multi-task annealing manager."""

from typing import Optional


class MTQAError(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(MTQAError, ValueError):
    """Invalid argument (unknown ids, empty inputs, domain violations)."""


class ParameterError(ArgumentError):
    """Objective penalty parameters violate their constraints."""


class ShapeError(ArgumentError):
    """Assignment or read does not match the expected variables."""


class CapacityError(MTQAError):
    """Exhaustive computation requested beyond the supported size."""


class ValidationError(MTQAError):
    """Structural invariant violated (e.g. coupler on an unknown qubit)."""


class EmbeddingInvalidError(MTQAError):
    """Embedding cannot realise a logical interaction."""


class ConfigError(MTQAError):
    """Configuration is invalid or refers to something not implemented."""


class ParseError(MTQAError, ValueError):
    """Malformed artifact file."""

    def __init__(self, message: str, path: Optional[str] = None, lineno: Optional[int] = None):
        self.path = path
        self.lineno = lineno
        location = ""
        if path is not None:
            location = f"{path}"
        if lineno is not None:
            location = f"{location}:{lineno}" if location else f"line {lineno}"
        super().__init__(f"{location}: {message}" if location else message)


class StageError(MTQAError):
    """Failure inside the experiment pipeline, tagged with where it happened."""

    def __init__(
        self,
        stage: str,
        cause: BaseException,
        instance_id: Optional[str] = None,
        seed: Optional[int] = None,
    ):
        self.stage = stage
        self.instance_id = instance_id
        self.seed = seed
        self.cause = cause
        super().__init__(
            f"stage={stage} instance={instance_id} seed={seed}: {type(cause).__name__}: {cause}"
        )
