"""Evaluation input and result models."""

from collections.abc import Mapping
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from ..exceptions import GraphFormatError
from ..utils import iter_tsv


@dataclass
class LabeledNodes:
    """Ground-truth class label per node id."""

    labels: dict[str, str] = field(default_factory=dict)

    @property
    def node_ids(self) -> list[str]:
        return list(self.labels)

    @property
    def classes(self) -> list[str]:
        return sorted(set(self.labels.values()))

    @property
    def num_classes(self) -> int:
        return len(set(self.labels.values()))

    def __len__(self) -> int:
        return len(self.labels)

    def encoded(self) -> np.ndarray:
        """Labels as integer class codes, in ``node_ids`` order."""
        codes = {c: i for i, c in enumerate(self.classes)}
        return np.array([codes[self.labels[n]] for n in self.labels], dtype=np.int64)

    @classmethod
    def read_tsv(cls, path: Union[str, Path]) -> "LabeledNodes":
        """Read ``node_id<TAB>label`` lines."""
        labels: dict[str, str] = {}
        for line_number, fields in iter_tsv(path):
            if len(fields) != 2:
                raise GraphFormatError(
                    "Expected node_id<TAB>label", path=path, line_number=line_number
                )
            labels[fields[0]] = fields[1]
        return cls(labels=labels)

    def write_tsv(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for node_id, label in self.labels.items():
                f.write(f"{node_id}\t{label}\n")


@dataclass
class LinkSplit:
    """
    Held-out link prediction split for one atomic relation.

    Every pair is (source id, target id) using original node ids.

    Attributes:
        relation: Edge type under test
        train_positives: Pairs kept in the training network (80%)
        train_negatives: Type-correct non-edges paired with the training set
        test_positives: Held-out pairs (20%)
        test_negatives: Type-correct non-edges, one per held-out pair
        seed: Seed the split was drawn with
    """

    relation: str
    train_positives: list[tuple[str, str]]
    train_negatives: list[tuple[str, str]]
    test_positives: list[tuple[str, str]]
    test_negatives: list[tuple[str, str]]
    seed: int = 0

    def write_tsv(self, path: Union[str, Path]) -> None:
        """Write ``u<TAB>v<TAB>label<TAB>fold`` lines, relation in a header comment."""
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(f"# relation={self.relation}\tseed={self.seed}\n")
            for fold, pairs, label in (
                ("train", self.train_positives, 1),
                ("train", self.train_negatives, 0),
                ("test", self.test_positives, 1),
                ("test", self.test_negatives, 0),
            ):
                for u, v in pairs:
                    f.write(f"{u}\t{v}\t{label}\t{fold}\n")

    @classmethod
    def read_tsv(cls, path: Union[str, Path]) -> "LinkSplit":
        relation, seed = "", 0
        with open(path, encoding="utf-8") as f:
            header = f.readline().lstrip("#").strip()
        for item in header.split("\t"):
            key, _, value = item.partition("=")
            if key.strip() == "relation":
                relation = value.strip()
            elif key.strip() == "seed":
                seed = int(value)
        buckets: dict[tuple[str, int], list[tuple[str, str]]] = {
            (fold, label): [] for fold in ("train", "test") for label in (0, 1)
        }
        for line_number, fields in iter_tsv(path):
            if len(fields) != 4 or fields[3] not in ("train", "test"):
                raise GraphFormatError(
                    "Expected u<TAB>v<TAB>label<TAB>fold",
                    path=path,
                    line_number=line_number,
                )
            buckets[(fields[3], int(fields[2]))].append((fields[0], fields[1]))
        return cls(
            relation=relation,
            train_positives=buckets[("train", 1)],
            train_negatives=buckets[("train", 0)],
            test_positives=buckets[("test", 1)],
            test_negatives=buckets[("test", 0)],
            seed=seed,
        )


@dataclass(frozen=True)
class LinkScores:
    auc: float
    f1: float


@dataclass(frozen=True)
class ClassificationScores:
    macro_f1: float
    micro_f1: float


@dataclass
class VariantResult:
    """Metrics of one trained variant; tasks that did not run stay None."""

    variant: str
    nmi: Optional[float] = None
    auc: Optional[float] = None
    f1: Optional[float] = None
    macro_f1: Optional[float] = None
    micro_f1: Optional[float] = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


METRIC_COLUMNS = ("nmi", "auc", "f1", "macro_f1", "micro_f1")


@dataclass
class VariantTable:
    """Metrics per variant, one row each, in training order."""

    rows: list[VariantResult] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def by_variant(self) -> Mapping[str, VariantResult]:
        return {row.variant: row for row in self.rows}

    def to_tsv(self) -> str:
        lines = ["\t".join(("variant",) + METRIC_COLUMNS)]
        for row in self.rows:
            values = [getattr(row, c) for c in METRIC_COLUMNS]
            lines.append(
                "\t".join(
                    [row.variant]
                    + ["" if v is None else f"{v:.4f}" for v in values]
                )
            )
        return "\n".join(lines) + "\n"
