"""Training progress models."""

from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, TextIO, Union

METRICS_COLUMNS = ("epoch", "L_EuAR", "L_TrIR", "total")


@dataclass(frozen=True)
class EpochStats:
    """
    Mean per-pair loss of one epoch.

    Attributes:
        epoch: 0-based epoch index
        ar_loss: Mean contribution of AR pairs (L_EuAR under RHINE)
        ir_loss: Mean contribution of IR pairs (L_TrIR under RHINE)
        total: Mean loss over every pair of the epoch
    """

    epoch: int
    ar_loss: float
    ir_loss: float
    total: float

    def to_row(self) -> str:
        losses = (self.ar_loss, self.ir_loss, self.total)
        return "\t".join([str(self.epoch), *(f"{x:.10g}" for x in losses)])

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EpochStats":
        return cls(
            epoch=int(data["epoch"]),
            ar_loss=float(data["ar_loss"]),
            ir_loss=float(data["ir_loss"]),
            total=float(data["total"]),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "epoch": self.epoch,
            "ar_loss": self.ar_loss,
            "ir_loss": self.ir_loss,
            "total": self.total,
        }


@dataclass
class TrainReport:
    """
    What a training run did.

    Attributes:
        epochs: Per-epoch loss statistics, in order
        wall_time: Seconds spent in ``fit`` since the run (or its resume) started
        samples_per_relation: Positive triples drawn per relation
        mode: "deterministic" or "parallel"
        workers: Threads used
        pairs_per_epoch: (positive, negative) pairs per epoch
    """

    epochs: list[EpochStats] = field(default_factory=list)
    wall_time: float = 0.0
    samples_per_relation: dict[str, int] = field(default_factory=dict)
    mode: str = "deterministic"
    workers: int = 1
    pairs_per_epoch: int = 0

    @property
    def total_samples(self) -> int:
        return sum(self.samples_per_relation.values())

    @property
    def final_loss(self) -> Optional[float]:
        return self.epochs[-1].total if self.epochs else None

    def metrics_tsv(self) -> str:
        lines = ["\t".join(METRICS_COLUMNS)]
        lines.extend(stats.to_row() for stats in self.epochs)
        return "\n".join(lines) + "\n"

    def write_metrics(self, destination: Union[str, Path, TextIO]) -> None:
        """Write ``epoch L_EuAR L_TrIR total`` rows to a path or stream."""
        text = self.metrics_tsv()
        if isinstance(destination, (str, Path)):
            Path(destination).write_text(text, encoding="utf-8")
        else:
            destination.write(text)

    def to_dict(self, include_timing: bool = True) -> dict[str, Any]:
        """Plain-data form; drop timing to keep the result reproducible."""
        data: dict[str, Any] = {
            "epochs": [stats.to_dict() for stats in self.epochs],
            "samples_per_relation": dict(self.samples_per_relation),
            "mode": self.mode,
            "workers": self.workers,
            "pairs_per_epoch": self.pairs_per_epoch,
        }
        if include_timing:
            data["wall_time"] = self.wall_time
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TrainReport":
        return cls(
            epochs=[EpochStats.from_dict(e) for e in data.get("epochs", [])],
            wall_time=float(data.get("wall_time", 0.0)),
            samples_per_relation={
                k: int(v) for k, v in data.get("samples_per_relation", {}).items()
            },
            mode=data.get("mode", "deterministic"),
            workers=int(data.get("workers", 1)),
            pairs_per_epoch=int(data.get("pairs_per_epoch", 0)),
        )
