"""Exception types for hin-embed."""

from pathlib import Path
from typing import Optional, Union


class HinError(Exception):
    """Base exception for all hin-embed errors."""

    pass


class GraphFormatError(HinError):
    """Raised when an input file line cannot be parsed.

    Attributes:
        path: File being read
        line_number: 1-based line number of the offending line
    """

    def __init__(
        self,
        message: str,
        path: Optional[Union[str, Path]] = None,
        line_number: Optional[int] = None,
    ) -> None:
        location = ""
        if path is not None:
            location = f"{path}"
            if line_number is not None:
                location += f":{line_number}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line_number = line_number


class SchemaError(HinError):
    """Raised when the graph violates its declared schema."""

    pass


class UnknownTypeError(HinError, KeyError):
    """Raised when a node type, edge type or meta-path name is not declared."""

    def __str__(self) -> str:
        # KeyError quotes its argument; keep the plain message
        return str(self.args[0]) if self.args else ""


class DanglingEndpointError(HinError):
    """Raised when an edge or triple references a node that does not exist."""

    pass


class UnknownNodeError(HinError, KeyError):
    """Raised when a node id is not present in the graph."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class RelationError(HinError):
    """Raised for invalid relations or relations whose measures are undefined.

    Attributes:
        relation: Name of the relation, when known
    """

    def __init__(self, message: str, relation: Optional[str] = None) -> None:
        super().__init__(message)
        self.relation = relation


class SamplingError(HinError):
    """Raised when positive or negative sampling is impossible."""

    pass


class DivergenceError(HinError):
    """Raised when training produces non-finite or exploding losses.

    Attributes:
        epoch: Epoch index during which divergence was detected, if known
    """

    def __init__(self, message: str, epoch: Optional[int] = None) -> None:
        if epoch is not None:
            message = f"epoch {epoch}: {message}"
        super().__init__(message)
        self.epoch = epoch


class CheckpointError(HinError):
    """Raised when a checkpoint cannot be written, read or resumed."""

    pass


class ConfigError(HinError):
    """Raised for invalid configuration values or unknown keys.

    Attributes:
        key: Offending configuration key, when known
    """

    def __init__(self, message: str, key: Optional[str] = None) -> None:
        super().__init__(message)
        self.key = key


class EvaluationError(HinError):
    """Raised when a downstream evaluation cannot be carried out."""

    pass


class StageError(HinError):
    """Raised when a pipeline stage fails.

    Attributes:
        stage: Name of the failing stage
    """

    def __init__(self, message: str, stage: str) -> None:
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
