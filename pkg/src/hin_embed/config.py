"""Configuration models and run-config file handling."""

import json
import os
from collections.abc import Mapping
from dataclasses import dataclass, field, fields
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Optional, Union

import jsonschema

from .exceptions import ConfigError
from .models.relation import CategorizationPolicy

THREADS_ENV = "HIN_EMBED_THREADS"
STAGES = ("analyze", "extract", "train", "eval", "export")
SCHEMA_PATH = Path(__file__).parent / "schemas" / "config.json"


class Norm(str, Enum):
    L1 = "l1"
    L2 = "l2"


class LossFamily(str, Enum):
    """Score function a relation is trained under."""

    EUCLIDEAN = "euclidean"
    TRANSLATION = "translation"


class Variant(str, Enum):
    """
    Loss assignment per relation category.

    RHINE trains ARs with the Euclidean loss and IRs with the translation
    loss; EU and TR use one family everywhere; REVERSED swaps RHINE's choice.
    """

    RHINE = "rhine"
    EU = "eu"
    TR = "tr"
    REVERSED = "reversed"

    @classmethod
    def parse(cls, value: Union[str, "Variant"]) -> "Variant":
        try:
            if isinstance(value, Variant):
                return value
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(f"Unknown variant '{value}'", key="variant") from None


@dataclass(frozen=True)
class LossConfig:
    """
    Hinge loss settings.

    Attributes:
        gamma: Margin, > 0
        ir_norm: Norm of the translation score
    """

    gamma: float = 1.0
    ir_norm: Norm = Norm.L2

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}", key="gamma")
        object.__setattr__(self, "ir_norm", Norm(self.ir_norm))


@dataclass
class TrainConfig:
    """
    Training settings.

    Attributes:
        dim: Embedding dimension d
        negatives: Corruptions drawn per positive (k)
        gamma: Hinge margin
        lr: Constant SGD learning rate
        epochs: Number of epochs; 0 returns the initialization
        samples_per_epoch: Positives per epoch (default: number of triples)
        seed: Seed for initialization and sampling
        variant: Loss assignment per relation category
        ir_norm: Norm of the translation score
        lr_decay: Decay lr linearly towards zero over the run
        max_row_norm: Clip updated rows to this L2 norm (off when None)
        workers: Threads used when not deterministic
        deterministic: Single-threaded, bit-reproducible mode
        filtered_negatives: Redraw corruptions that are known positives
        divergence_factor: Abort when an epoch's mean loss exceeds this
            multiple of the first epoch's
        policy: AR/IR categorization policy
    """

    dim: int = 100
    negatives: int = 3
    gamma: float = 1.0
    lr: float = 0.005
    epochs: int = 20
    samples_per_epoch: Optional[int] = None
    seed: int = 0
    variant: Variant = Variant.RHINE
    ir_norm: Norm = Norm.L2
    lr_decay: bool = False
    max_row_norm: Optional[float] = None
    workers: int = field(default_factory=lambda: default_workers())
    deterministic: bool = True
    filtered_negatives: bool = False
    divergence_factor: float = 10.0
    policy: CategorizationPolicy = field(default_factory=CategorizationPolicy)

    def __post_init__(self) -> None:
        self.variant = Variant.parse(self.variant)
        self.ir_norm = Norm(self.ir_norm)
        self.validate()

    def validate(self) -> None:
        """Raise ConfigError naming the first invalid field."""
        checks = (
            ("dim", self.dim >= 1),
            ("negatives", self.negatives >= 1),
            ("gamma", self.gamma > 0),
            ("lr", self.lr > 0),
            ("epochs", self.epochs >= 0),
            (
                "samples_per_epoch",
                self.samples_per_epoch is None or self.samples_per_epoch >= 1,
            ),
            ("workers", self.workers >= 1),
            ("max_row_norm", self.max_row_norm is None or self.max_row_norm > 0),
            ("divergence_factor", self.divergence_factor > 1),
        )
        for key, ok in checks:
            if not ok:
                raise ConfigError(f"Invalid {key}: {getattr(self, key)!r}", key=key)

    @property
    def loss(self) -> LossConfig:
        return LossConfig(gamma=self.gamma, ir_norm=self.ir_norm)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TrainConfig":
        """Create a config from flat keys; keys it does not own are ignored."""
        names = {f.name for f in fields(cls)} - {"policy"}
        kwargs = {k: v for k, v in data.items() if k in names}
        return cls(policy=CategorizationPolicy.from_dict(data), **kwargs)

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {}
        for f in fields(self):
            if f.name == "policy":
                continue
            value = getattr(self, f.name)
            data[f.name] = value.value if isinstance(value, Enum) else value
        data["measure"] = self.policy.measure.value
        data["d_threshold"] = self.policy.d_threshold
        data["s_threshold"] = self.policy.s_threshold
        data["overrides"] = ",".join(
            f"{name}:{category.value}"
            for name, category in sorted(self.policy.manual_overrides.items())
        )
        return data


@dataclass
class RunConfig:
    """
    Everything one pipeline run needs.

    Attributes:
        nodes, edges, schema: Graph input files
        output_dir: Directory receiving artifacts and the run manifest
        labels: Optional labels file for clustering/classification
        triples: Optional precomputed triples file (skips extraction)
        relations: Relations to use; empty means every declared relation
        stages: Stages to run, in pipeline order
        train: Training settings
        link_relation: Edge type held out for link prediction, if any
        link_feature: "hadamard" or "score"
        test_fraction: Held-out share for link prediction and classification
    """

    nodes: Path
    edges: Path
    schema: Path
    output_dir: Path
    labels: Optional[Path] = None
    triples: Optional[Path] = None
    relations: tuple[str, ...] = ()
    stages: tuple[str, ...] = STAGES
    train: TrainConfig = field(default_factory=TrainConfig)
    link_relation: Optional[str] = None
    link_feature: str = "hadamard"
    test_fraction: float = 0.2

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        """Create a run config from validated flat keys."""
        for key in ("nodes", "edges", "schema", "output_dir"):
            if not data.get(key):
                raise ConfigError(f"Missing required key '{key}'", key=key)
        stages = tuple(data.get("stages") or STAGES)
        return cls(
            nodes=Path(data["nodes"]),
            edges=Path(data["edges"]),
            schema=Path(data["schema"]),
            output_dir=Path(data["output_dir"]),
            labels=Path(data["labels"]) if data.get("labels") else None,
            triples=Path(data["triples"]) if data.get("triples") else None,
            relations=tuple(data.get("relations") or ()),
            stages=tuple(s for s in STAGES if s in stages),
            train=TrainConfig.from_dict(data),
            link_relation=data.get("link_relation") or None,
            link_feature=data.get("link_feature", "hadamard"),
            test_fraction=float(data.get("test_fraction", 0.2)),
        )

    def to_dict(self) -> dict[str, Any]:
        """Flat snapshot with every key the config file accepts."""
        data: dict[str, Any] = {
            "nodes": str(self.nodes),
            "edges": str(self.edges),
            "schema": str(self.schema),
            "output_dir": str(self.output_dir),
            "labels": str(self.labels) if self.labels else None,
            "triples": str(self.triples) if self.triples else None,
            "relations": list(self.relations),
            "stages": list(self.stages),
            "link_relation": self.link_relation,
            "link_feature": self.link_feature,
            "test_fraction": self.test_fraction,
        }
        data.update(self.train.to_dict())
        return dict(sorted(data.items()))


def default_workers() -> int:
    """Worker count from HIN_EMBED_THREADS, or 1."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(
            f"{THREADS_ENV} must be an integer, got '{raw}'", key=THREADS_ENV
        ) from None


@lru_cache(maxsize=1)
def load_schema() -> dict[str, Any]:
    with open(SCHEMA_PATH, encoding="utf-8") as f:
        schema: dict[str, Any] = json.load(f)
    return schema


def config_keys() -> dict[str, dict[str, Any]]:
    """Every accepted config key with its schema entry."""
    properties: dict[str, dict[str, Any]] = load_schema()["properties"]
    return properties


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """
    Parse a flat ``key = value`` file into raw strings.

    Blank lines and ``#`` comments are ignored; later keys win.

    Raises:
        ConfigError: If a line has no ``=``
    """
    raw: dict[str, str] = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{source}:{line_number}: expected 'key = value'")
        raw[key.strip()] = value.strip()
    return raw


def coerce_config(raw: Mapping[str, Any]) -> dict[str, Any]:
    """
    Convert raw string values to the types the schema declares.

    Raises:
        ConfigError: On unknown keys or unparseable values
    """
    properties = config_keys()
    data: dict[str, Any] = {}
    for key, value in raw.items():
        if key not in properties:
            raise ConfigError(f"Unknown config key '{key}'", key=key)
        if isinstance(value, str):
            value = _coerce(key, value, properties[key])
        data[key] = value
    return data


def _coerce(key: str, value: str, spec: Mapping[str, Any]) -> Any:
    types = spec.get("type", "string")
    types = [types] if isinstance(types, str) else list(types)
    if "null" in types and value.lower() in ("", "none", "null"):
        return None
    try:
        if "array" in types:
            return [item.strip() for item in value.split(",") if item.strip()]
        if "boolean" in types:
            lowered = value.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(value)
        if "integer" in types:
            return int(value)
        if "number" in types:
            return float(value)
    except ValueError:
        raise ConfigError(
            f"Invalid value for '{key}': {value!r} (expected {'/'.join(types)})",
            key=key,
        ) from None
    return value


def validate_config(data: Mapping[str, Any]) -> None:
    """
    Validate coerced config values against the bundled JSON schema.

    Raises:
        ConfigError: Naming the offending key
    """
    for key in data:
        if key not in config_keys():
            raise ConfigError(f"Unknown config key '{key}'", key=key)
    try:
        jsonschema.validate(instance=dict(data), schema=load_schema())
    except jsonschema.ValidationError as e:
        key = str(e.path[0]) if e.path else None
        raise ConfigError(
            f"Invalid config value for '{key}': {e.message}", key=key
        ) from e
    except jsonschema.SchemaError as e:
        raise ConfigError(f"Invalid config schema: {e}") from e


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """
    Read a flat config file, apply overrides, validate, and build a RunConfig.

    Args:
        path: Config file; may be None when overrides carry every required key
        overrides: Values (raw strings or typed) that win over the file

    Raises:
        ConfigError: On unknown keys, bad values or missing required keys
        FileNotFoundError: If the config file does not exist
    """
    raw: dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.exists():
            raise FileNotFoundError(f"Config file not found: {config_path}")
        text = config_path.read_text(encoding="utf-8")
        raw.update(parse_config_text(text, str(config_path)))

    data = coerce_config(raw)
    given = {k: v for k, v in (overrides or {}).items() if v is not None}
    data.update(coerce_config(given))
    validate_config(data)
    return RunConfig.from_dict(data)


def write_config(config: RunConfig, path: Union[str, Path]) -> None:
    """Write a RunConfig back to the flat ``key = value`` format."""
    lines = []
    for key, value in config.to_dict().items():
        if value is None:
            continue
        if isinstance(value, list):
            value = ",".join(value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
