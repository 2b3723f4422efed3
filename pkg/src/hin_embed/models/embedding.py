"""Embedding storage model."""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..exceptions import EvaluationError, GraphFormatError, RelationError
from ..utils import format_vector, iter_tsv


@dataclass
class EmbeddingStore:
    """
    Node and relation embeddings.

    Attributes:
        node_ids: Original node id per row of ``node_vectors``
        node_vectors: X, shape (|V|, d)
        relation_vectors: Y, shape (number of translation relations, d)
        relation_index: Relation name -> row of ``relation_vectors``
    """

    node_ids: tuple[str, ...]
    node_vectors: np.ndarray
    relation_vectors: np.ndarray
    relation_index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.node_ids = tuple(self.node_ids)
        if self.node_vectors.ndim != 2 or self.node_vectors.shape[1] < 1:
            raise ValueError("node_vectors must be a (|V|, d) matrix with d >= 1")
        if self.node_vectors.shape[0] != len(self.node_ids):
            raise ValueError("node_vectors needs one row per node id")
        if self.relation_vectors.shape != (len(self.relation_index), self.dim):
            raise ValueError("relation_vectors needs one row per indexed relation")
        self._rows = {node_id: i for i, node_id in enumerate(self.node_ids)}

    @classmethod
    def initialize(
        cls,
        node_ids: Sequence[str],
        relation_names: Sequence[str],
        dim: int,
        rng: np.random.Generator,
    ) -> "EmbeddingStore":
        """Draw every entry uniformly from [-6/sqrt(d), 6/sqrt(d)]."""
        bound = 6.0 / math.sqrt(dim)
        nodes = rng.uniform(-bound, bound, size=(len(node_ids), dim))
        relations = rng.uniform(-bound, bound, size=(len(relation_names), dim))
        return cls(
            node_ids=tuple(node_ids),
            node_vectors=nodes,
            relation_vectors=relations,
            relation_index={name: i for i, name in enumerate(relation_names)},
        )

    @property
    def dim(self) -> int:
        return int(self.node_vectors.shape[1])

    @property
    def num_nodes(self) -> int:
        return int(self.node_vectors.shape[0])

    def relation_row(self, name: str) -> int:
        try:
            return self.relation_index[name]
        except KeyError:
            raise RelationError(
                f"Relation '{name}' has no translation vector", relation=name
            ) from None

    def has_relation(self, name: str) -> bool:
        return name in self.relation_index

    def rows_for(self, node_ids: Sequence[str]) -> np.ndarray:
        try:
            return np.array([self._rows[n] for n in node_ids], dtype=np.int64)
        except KeyError as e:
            raise EvaluationError(f"Node {e} has no embedding") from None

    def vectors_for(self, node_ids: Sequence[str]) -> np.ndarray:
        return self.node_vectors[self.rows_for(node_ids)]

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.node_vectors).all()
            and np.isfinite(self.relation_vectors).all()
        )

    def copy(self) -> "EmbeddingStore":
        return EmbeddingStore(
            node_ids=self.node_ids,
            node_vectors=self.node_vectors.copy(),
            relation_vectors=self.relation_vectors.copy(),
            relation_index=dict(self.relation_index),
        )

    def export_tsv(
        self, nodes_path: Union[str, Path], relations_path: Optional[Union[str, Path]]
    ) -> None:
        """Write ``node_id<TAB>v1...vd`` lines, and relation vectors likewise."""
        with open(nodes_path, "w", encoding="utf-8", newline="\n") as f:
            for node_id, vector in zip(self.node_ids, self.node_vectors):
                f.write(f"{node_id}\t{format_vector(vector)}\n")
        if relations_path is not None:
            by_row = sorted(self.relation_index.items(), key=lambda item: item[1])
            with open(relations_path, "w", encoding="utf-8", newline="\n") as f:
                for name, row in by_row:
                    f.write(f"{name}\t{format_vector(self.relation_vectors[row])}\n")

    @classmethod
    def read_tsv(
        cls,
        nodes_path: Union[str, Path],
        relations_path: Optional[Union[str, Path]] = None,
    ) -> "EmbeddingStore":
        """Read embeddings written by ``export_tsv``.

        Raises:
            GraphFormatError: On ragged or non-numeric rows
        """
        node_ids, node_rows = _read_vectors(nodes_path)
        names: list[str] = []
        relation_rows: list[list[float]] = []
        if relations_path is not None and Path(relations_path).exists():
            names, relation_rows = _read_vectors(relations_path)
        dim = len(node_rows[0]) if node_rows else 1
        relations = (
            np.asarray(relation_rows, dtype=np.float64)
            if relation_rows
            else np.zeros((0, dim))
        )
        if relation_rows and relations.shape[1] != dim:
            raise GraphFormatError(
                "Relation vectors do not match the node dimension", path=relations_path
            )
        return cls(
            node_ids=tuple(node_ids),
            node_vectors=np.asarray(node_rows, dtype=np.float64).reshape(-1, dim),
            relation_vectors=relations,
            relation_index={name: i for i, name in enumerate(names)},
        )


def _read_vectors(path: Union[str, Path]) -> tuple[list[str], list[list[float]]]:
    ids: list[str] = []
    rows: list[list[float]] = []
    for line_number, fields in iter_tsv(path):
        try:
            vector = [float(x) for x in fields[1:]]
        except ValueError:
            raise GraphFormatError(
                "Non-numeric embedding value", path=path, line_number=line_number
            ) from None
        if not vector or (rows and len(vector) != len(rows[0])):
            raise GraphFormatError(
                "Embedding rows must share one dimension",
                path=path,
                line_number=line_number,
            )
        ids.append(fields[0])
        rows.append(vector)
    return ids, rows
