"""Node-relation triple models."""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from ..exceptions import RelationError, SamplingError
from .relation import RelationCategory


@dataclass(frozen=True)
class NodeRelationTriple:
    """
    A triple <u, r, v> with its instance-count weight.

    Attributes:
        u: Dense index of the head node
        relation: Relation name
        v: Dense index of the tail node
        weight: Positive weight (instance count between u and v)
    """

    u: int
    relation: str
    v: int
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not self.weight > 0:
            raise ValueError(f"Triple weight must be positive, got {self.weight}")


@dataclass(frozen=True)
class TriplePair:
    """A positive triple and one of its corruptions."""

    positive: NodeRelationTriple
    negative: NodeRelationTriple

    def __post_init__(self) -> None:
        if self.positive.relation != self.negative.relation:
            raise RelationError(
                "Positive and negative triples must share their relation",
                relation=self.positive.relation,
            )


class TriplePartition:
    """
    Triples of one category as parallel arrays plus a cumulative weight table.

    Attributes:
        category: AR or IR
        heads, relations, tails: Dense node indices and relation ids
        weights: Triple weights
        cumulative: Running sum of ``weights``; the last entry is the total
    """

    def __init__(
        self,
        category: RelationCategory,
        heads: np.ndarray,
        relations: np.ndarray,
        tails: np.ndarray,
        weights: np.ndarray,
    ) -> None:
        self.category = category
        self.heads = np.asarray(heads, dtype=np.int64)
        self.relations = np.asarray(relations, dtype=np.int64)
        self.tails = np.asarray(tails, dtype=np.int64)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.cumulative = np.cumsum(self.weights)
        for array in (
            self.heads,
            self.relations,
            self.tails,
            self.weights,
            self.cumulative,
        ):
            array.flags.writeable = False

    def __len__(self) -> int:
        return int(self.heads.size)

    @property
    def total_weight(self) -> float:
        return float(self.cumulative[-1]) if self.cumulative.size else 0.0


class TripleStore:
    """
    Triples partitioned into AR and IR sets, ready for weighted sampling.

    Immutable after construction. Each relation's triples live in exactly
    one partition, and a per-relation index gives their positions there.
    """

    def __init__(
        self,
        relation_names: Sequence[str],
        categories: Mapping[str, RelationCategory],
        partitions: Mapping[RelationCategory, TriplePartition],
    ) -> None:
        self.relation_names: tuple[str, ...] = tuple(relation_names)
        self.categories: dict[str, RelationCategory] = {
            name: RelationCategory(categories[name]) for name in self.relation_names
        }
        self._relation_ids = {name: i for i, name in enumerate(self.relation_names)}
        self.partitions: dict[RelationCategory, TriplePartition] = {
            category: partitions[category] for category in RelationCategory
        }

    def __len__(self) -> int:
        return sum(len(p) for p in self.partitions.values())

    def relation_id(self, name: str) -> int:
        try:
            return self._relation_ids[name]
        except KeyError:
            raise RelationError(f"Unknown relation '{name}'", relation=name) from None

    def partition(self, category: RelationCategory) -> TriplePartition:
        return self.partitions[RelationCategory(category)]

    def relation_index(self, name: str) -> np.ndarray:
        """Positions of one relation's triples inside its partition."""
        rel = self.relation_id(name)
        part = self.partitions[self.categories[name]]
        return np.flatnonzero(part.relations == rel)

    def triple(self, category: RelationCategory, index: int) -> NodeRelationTriple:
        part = self.partition(category)
        return NodeRelationTriple(
            u=int(part.heads[index]),
            relation=self.relation_names[int(part.relations[index])],
            v=int(part.tails[index]),
            weight=float(part.weights[index]),
        )

    def triples(
        self, category: Optional[RelationCategory] = None
    ) -> list[NodeRelationTriple]:
        categories = list(RelationCategory) if category is None else [category]
        return [
            self.triple(c, i) for c in categories for i in range(len(self.partition(c)))
        ]

    def triples_by_relation(self) -> dict[str, list[NodeRelationTriple]]:
        grouped: dict[str, list[NodeRelationTriple]] = {
            name: [] for name in self.relation_names
        }
        for t in self.triples():
            grouped[t.relation].append(t)
        return grouped

    def weight_share(self, name: str) -> float:
        """Share of a relation's weight within its partition."""
        part = self.partitions[self.categories[name]]
        if part.total_weight == 0:
            return 0.0
        return float(part.weights[self.relation_index(name)].sum()) / part.total_weight

    @cached_property
    def _keys(self) -> frozenset[tuple[int, int, int]]:
        return frozenset(
            (int(h), int(r), int(t))
            for part in self.partitions.values()
            for h, r, t in zip(part.heads, part.relations, part.tails)
        )

    def contains(self, u: int, relation_id: int, v: int) -> bool:
        """Whether <u, r, v> is a positive triple."""
        return (int(u), int(relation_id), int(v)) in self._keys

    def require(self, category: RelationCategory) -> TriplePartition:
        part = self.partition(category)
        if len(part) == 0:
            name = RelationCategory(category).value
            raise SamplingError(f"The {name} partition is empty")
        return part
