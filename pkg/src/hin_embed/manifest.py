"""Run manifest: what a pipeline run read, how it was configured, what it wrote."""

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional, Union

from .exceptions import ConfigError
from .utils import file_digest

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
SOURCE_DATE_ENV = "SOURCE_DATE_EPOCH"


@dataclass
class StageRecord:
    """
    One completed stage.

    Attributes:
        key: Digest of the stage's config values and input file digests
        outputs: Output file name -> SHA-256 of its bytes
    """

    key: str
    outputs: dict[str, str] = field(default_factory=dict)

    def is_current(self, key: str, directory: Path) -> bool:
        """True when ``key`` matches and every output still has its recorded digest."""
        if key != self.key or not self.outputs:
            return False
        for name, digest in self.outputs.items():
            path = directory / name
            if not path.is_file() or file_digest(path) != digest:
                return False
        return True

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "StageRecord":
        return cls(key=data.get("key", ""), outputs=dict(data.get("outputs", {})))

    def to_dict(self) -> dict[str, Any]:
        return {"key": self.key, "outputs": dict(sorted(self.outputs.items()))}


@dataclass
class RunManifest:
    """
    Reproduction record of one pipeline run.

    Attributes:
        version: hin-embed version that produced the run
        seed: Training and evaluation seed
        config: Flat config snapshot (every accepted key)
        inputs: Input name -> SHA-256 of the file read
        stages: Stage name -> record of its key and outputs
        timestamps: "created"; taken from SOURCE_DATE_EPOCH when set, None
            in deterministic runs without it
    """

    version: str
    seed: int
    config: dict[str, Any] = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)
    stages: dict[str, StageRecord] = field(default_factory=dict)
    timestamps: dict[str, Optional[str]] = field(default_factory=dict)

    @property
    def outputs(self) -> dict[str, str]:
        """Every recorded output file with its digest."""
        merged: dict[str, str] = {}
        for record in self.stages.values():
            merged.update(record.outputs)
        return dict(sorted(merged.items()))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunManifest":
        return cls(
            version=data.get("version", ""),
            seed=int(data.get("seed", 0)),
            config=dict(data.get("config", {})),
            inputs=dict(data.get("inputs", {})),
            stages={
                name: StageRecord.from_dict(record)
                for name, record in data.get("stages", {}).items()
            },
            timestamps=dict(data.get("timestamps", {})),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
            "inputs": dict(sorted(self.inputs.items())),
            "stages": {name: record.to_dict() for name, record in self.stages.items()},
            "outputs": self.outputs,
            "timestamps": self.timestamps,
        }

    def write(self, directory: Union[str, Path]) -> Path:
        path = Path(directory) / MANIFEST_NAME
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        path.write_text(text + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, directory: Union[str, Path]) -> Optional["RunManifest"]:
        """Read the manifest in ``directory``; None when absent or unreadable."""
        path = Path(directory) / MANIFEST_NAME
        if not path.is_file():
            return None
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            logger.warning("Ignoring unreadable manifest %s: %s", path, e)
            return None
        if not isinstance(data, dict):
            logger.warning("Ignoring malformed manifest %s", path)
            return None
        return cls.from_dict(data)


def run_timestamp(deterministic: bool) -> Optional[str]:
    """
    ISO-8601 UTC creation time.

    Raises:
        ConfigError: If SOURCE_DATE_EPOCH is set but not an integer
    """
    raw = os.environ.get(SOURCE_DATE_ENV, "").strip()
    if raw:
        try:
            moment = datetime.fromtimestamp(int(raw), tz=timezone.utc)
        except (ValueError, OverflowError, OSError):
            raise ConfigError(
                f"{SOURCE_DATE_ENV} must be an integer, got '{raw}'",
                key=SOURCE_DATE_ENV,
            ) from None
        return moment.isoformat()
    if deterministic:
        return None
    return datetime.now(timezone.utc).isoformat()


def stage_key(stage: str, config: dict[str, Any], inputs: dict[str, str]) -> str:
    """Digest of everything a stage's output depends on."""
    payload = json.dumps(
        {"stage": stage, "config": config, "inputs": inputs},
        sort_keys=True,
        default=str,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def digest_inputs(paths: dict[str, Path]) -> dict[str, str]:
    """
    SHA-256 per named input file.

    Raises:
        ConfigError: If an input file does not exist (the key is the input name)
    """
    digests = {}
    for name, path in paths.items():
        if not path.is_file():
            raise ConfigError(f"Input file for '{name}' not found: {path}", key=name)
        digests[name] = file_digest(path)
    return digests
