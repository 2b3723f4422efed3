"""Heterogeneous graph domain models."""

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy import sparse

from ..exceptions import (
    DanglingEndpointError,
    RelationError,
    SchemaError,
    UnknownNodeError,
    UnknownTypeError,
)


@dataclass(frozen=True)
class NodeType:
    """Node type with a small integer handle."""

    id: int
    name: str


@dataclass(frozen=True)
class EdgeType:
    """
    Edge type with its declared endpoint node types.

    Attributes:
        id: Small integer handle
        name: Label used in edge files (e.g. "writes")
        source_type: Node type of every edge source
        target_type: Node type of every edge target
        directed: False when the schema declares the type undirected; such
            edges can be traversed target -> source inside meta-paths
    """

    id: int
    name: str
    source_type: NodeType
    target_type: NodeType
    directed: bool = True


class Endpoint(str, Enum):
    """Which end of a relation a degree query refers to."""

    SOURCE = "source"
    TARGET = "target"


@dataclass(frozen=True)
class MetaPath:
    """
    Sequence of edge types describing a composite relation.

    Attributes:
        name: Abbreviation such as "APC"
        node_types: The l+1 node types visited along the path
        edge_types: The l edge types traversed
        reversed_steps: Per step, True when the edge is walked target -> source
    """

    name: str
    node_types: tuple[NodeType, ...]
    edge_types: tuple[EdgeType, ...]
    reversed_steps: tuple[bool, ...]

    def __post_init__(self) -> None:
        if len(self.edge_types) < 1:
            raise SchemaError(f"Meta-path '{self.name}' must have length >= 1")
        if len(self.node_types) != len(self.edge_types) + 1:
            raise SchemaError(
                f"Meta-path '{self.name}' needs {len(self.edge_types) + 1} node types"
            )
        if len(self.reversed_steps) != len(self.edge_types):
            raise SchemaError(f"Meta-path '{self.name}' has no orientation per step")
        for i, (edge_type, rev) in enumerate(
            zip(self.edge_types, self.reversed_steps)
        ):
            start, end = edge_type.source_type, edge_type.target_type
            if rev:
                start, end = end, start
            if self.node_types[i] != start or self.node_types[i + 1] != end:
                raise SchemaError(
                    f"Meta-path '{self.name}': edge type '{edge_type.name}' does "
                    f"not connect {self.node_types[i].name} to "
                    f"{self.node_types[i + 1].name}"
                )

    @classmethod
    def from_edge_types(cls, name: str, edge_types: Sequence[EdgeType]) -> "MetaPath":
        """Build a meta-path, orienting every step from the previous node type.

        A step is walked forward when the current node type is the edge
        type's source. Undirected edge types may also be walked backward.

        Raises:
            SchemaError: If consecutive edge types do not chain
        """
        if not edge_types:
            raise SchemaError(f"Meta-path '{name}' must have length >= 1")

        node_types = [edge_types[0].source_type]
        reversed_steps = []
        for edge_type in edge_types:
            current = node_types[-1]
            if edge_type.source_type == current:
                reversed_steps.append(False)
                node_types.append(edge_type.target_type)
            elif not edge_type.directed and edge_type.target_type == current:
                reversed_steps.append(True)
                node_types.append(edge_type.source_type)
            else:
                raise SchemaError(
                    f"Meta-path '{name}': edge type '{edge_type.name}' cannot "
                    f"follow node type '{current.name}'"
                )

        return cls(
            name=name,
            node_types=tuple(node_types),
            edge_types=tuple(edge_types),
            reversed_steps=tuple(reversed_steps),
        )

    @property
    def length(self) -> int:
        return len(self.edge_types)


@dataclass(frozen=True)
class RelationSpec:
    """
    A relation: either an atomic edge type or a composite meta-path.

    Use ``RelationSpec.atomic`` / ``RelationSpec.composite`` to build one;
    the endpoint types are derived from the underlying edge type or path.
    """

    name: str
    source_type: NodeType
    target_type: NodeType
    edge_type: Optional[EdgeType] = None
    metapath: Optional[MetaPath] = None

    def __post_init__(self) -> None:
        if (self.edge_type is None) == (self.metapath is None):
            raise RelationError(
                "A relation wraps exactly one edge type or meta-path",
                relation=self.name,
            )
        if self.edge_type is not None:
            ends = (self.edge_type.source_type, self.edge_type.target_type)
        else:
            assert self.metapath is not None
            ends = (self.metapath.node_types[0], self.metapath.node_types[-1])
        if ends != (self.source_type, self.target_type):
            raise RelationError(
                "Endpoint types do not match the underlying relation",
                relation=self.name,
            )

    @classmethod
    def atomic(cls, edge_type: EdgeType) -> "RelationSpec":
        return cls(
            name=edge_type.name,
            source_type=edge_type.source_type,
            target_type=edge_type.target_type,
            edge_type=edge_type,
        )

    @classmethod
    def composite(cls, metapath: MetaPath) -> "RelationSpec":
        return cls(
            name=metapath.name,
            source_type=metapath.node_types[0],
            target_type=metapath.node_types[-1],
            metapath=metapath,
        )

    @property
    def is_atomic(self) -> bool:
        return self.edge_type is not None

    def endpoint_type(self, endpoint: Union[Endpoint, str]) -> NodeType:
        endpoint = Endpoint(endpoint)
        return self.source_type if endpoint is Endpoint.SOURCE else self.target_type


class HeteroGraph:
    """
    Immutable heterogeneous information network.

    Nodes are addressed by dense integer indices grouped by node type: the
    nodes of type ``t`` occupy the contiguous range
    ``[type_offset(t), type_offset(t) + count_of_type(t))``, in the order
    they were supplied. Original string ids are kept in ``node_ids``.

    Edges are stored directed as declared by their edge type. Parallel edges
    are kept and counted with multiplicity.

    Example:
        >>> author = NodeType(0, "Author")
        >>> paper = NodeType(1, "Paper")
        >>> writes = EdgeType(0, "writes", author, paper)
        >>> g = HeteroGraph(
        ...     nodes=[("a1", "Author"), ("p1", "Paper")],
        ...     edges=[("a1", "p1", "writes", 1.0)],
        ...     node_types=[author, paper],
        ...     edge_types=[writes],
        ... )
        >>> g.num_nodes, g.num_edges
        (2, 1)
    """

    def __init__(
        self,
        nodes: Iterable[tuple[str, str]],
        edges: Iterable[tuple[str, str, str, float]],
        node_types: Sequence[NodeType],
        edge_types: Sequence[EdgeType],
        metapaths: Sequence[MetaPath] = (),
    ) -> None:
        """
        Build and validate a graph.

        Args:
            nodes: (node id, node type name) pairs
            edges: (source id, target id, edge type name, weight) tuples
            node_types: Declared node types
            edge_types: Declared edge types
            metapaths: Declared meta-paths

        Raises:
            SchemaError: Duplicate type names, too few types, or an edge whose
                endpoint types do not match its edge type
            UnknownTypeError: A node or edge references an undeclared type
            DanglingEndpointError: An edge endpoint id is not a node
        """
        self._node_types = tuple(node_types)
        self._edge_types = tuple(edge_types)
        self._node_types_by_name = _index_by_name(self._node_types, "node type")
        self._edge_types_by_name = _index_by_name(self._edge_types, "edge type")
        self._metapaths_by_name = _index_by_name(tuple(metapaths), "meta-path")
        self._metapaths = tuple(metapaths)

        if len(self._node_types) + len(self._edge_types) <= 2:
            raise SchemaError(
                "A heterogeneous graph needs more than two node and edge types "
                "in total"
            )
        for i, node_type in enumerate(self._node_types):
            if node_type.id != i:
                raise SchemaError(f"Node type '{node_type.name}' must have id {i}")
        for i, edge_type in enumerate(self._edge_types):
            if edge_type.id != i:
                raise SchemaError(f"Edge type '{edge_type.name}' must have id {i}")

        # Group nodes by type, keeping input order inside each type
        buckets: list[list[str]] = [[] for _ in self._node_types]
        for node_id, type_name in nodes:
            buckets[self.node_type(type_name).id].append(node_id)
        counts = np.array([len(b) for b in buckets], dtype=np.int64)
        self._type_offsets = np.concatenate(([0], np.cumsum(counts)[:-1])).astype(
            np.int64
        )
        self._type_counts = counts
        self._node_ids: tuple[str, ...] = tuple(
            node_id for bucket in buckets for node_id in bucket
        )
        self._node_type_ids = np.repeat(
            np.arange(len(self._node_types), dtype=np.int64), counts
        )
        self._index: dict[str, int] = {}
        for i, node_id in enumerate(self._node_ids):
            if node_id in self._index:
                raise SchemaError(f"Duplicate node id '{node_id}'")
            self._index[node_id] = i

        src, dst, etype, weight = [], [], [], []
        for source_id, target_id, type_name, w in edges:
            edge_type = self.edge_type(type_name)
            for node_id in (source_id, target_id):
                if node_id not in self._index:
                    raise DanglingEndpointError(
                        f"Edge endpoint '{node_id}' is not a node"
                    )
            s, t = self._index[source_id], self._index[target_id]
            if (
                self._node_type_ids[s] != edge_type.source_type.id
                or self._node_type_ids[t] != edge_type.target_type.id
            ):
                raise SchemaError(
                    f"Edge {source_id} -> {target_id} of type '{edge_type.name}' "
                    f"must connect {edge_type.source_type.name} to "
                    f"{edge_type.target_type.name}"
                )
            if not np.isfinite(w) or w <= 0:
                raise SchemaError(
                    f"Edge {source_id} -> {target_id} has non-positive weight {w}"
                )
            src.append(s)
            dst.append(t)
            etype.append(edge_type.id)
            weight.append(float(w))

        self._edge_src = np.asarray(src, dtype=np.int64)
        self._edge_dst = np.asarray(dst, dtype=np.int64)
        self._edge_type_ids = np.asarray(etype, dtype=np.int64)
        self._edge_weights = np.asarray(weight, dtype=np.float64)
        for array in (
            self._edge_src,
            self._edge_dst,
            self._edge_type_ids,
            self._edge_weights,
            self._node_type_ids,
            self._type_offsets,
            self._type_counts,
        ):
            array.flags.writeable = False

        self._counts: dict[int, sparse.csr_matrix] = {}
        self._weights: dict[int, sparse.csr_matrix] = {}
        for edge_type in self._edge_types:
            self._counts[edge_type.id] = self._build_adjacency(edge_type, None)
            self._weights[edge_type.id] = self._build_adjacency(
                edge_type, self._edge_weights
            )

    def _build_adjacency(
        self, edge_type: EdgeType, values: Optional[np.ndarray]
    ) -> sparse.csr_matrix:
        mask = self._edge_type_ids == edge_type.id
        rows = self._edge_src[mask] - self.type_offset(edge_type.source_type)
        cols = self._edge_dst[mask] - self.type_offset(edge_type.target_type)
        data = np.ones(rows.size) if values is None else values[mask]
        shape = (
            self.count_of_type(edge_type.source_type),
            self.count_of_type(edge_type.target_type),
        )
        # Duplicate coordinates are summed: parallel edges keep multiplicity
        matrix = sparse.csr_matrix((data, (rows, cols)), shape=shape)
        matrix.sum_duplicates()
        matrix.sort_indices()
        return matrix

    # Schema lookups

    @property
    def node_types(self) -> tuple[NodeType, ...]:
        return self._node_types

    @property
    def edge_types(self) -> tuple[EdgeType, ...]:
        return self._edge_types

    @property
    def metapaths(self) -> tuple[MetaPath, ...]:
        return self._metapaths

    def node_type(self, name: str) -> NodeType:
        try:
            return self._node_types[self._node_types_by_name[name]]
        except KeyError:
            raise UnknownTypeError(f"Unknown node type '{name}'") from None

    def edge_type(self, name: str) -> EdgeType:
        try:
            return self._edge_types[self._edge_types_by_name[name]]
        except KeyError:
            raise UnknownTypeError(f"Unknown edge type '{name}'") from None

    def metapath(self, name: str) -> MetaPath:
        try:
            return self._metapaths[self._metapaths_by_name[name]]
        except KeyError:
            raise UnknownTypeError(f"Unknown meta-path '{name}'") from None

    def relation(self, name: str) -> RelationSpec:
        """Resolve a relation name to an edge type or, failing that, a meta-path."""
        if name in self._edge_types_by_name:
            return RelationSpec.atomic(self.edge_type(name))
        if name in self._metapaths_by_name:
            return RelationSpec.composite(self.metapath(name))
        raise RelationError(f"Unknown relation '{name}'", relation=name)

    def relations(self) -> list[RelationSpec]:
        """All declared relations: edge types first, then meta-paths."""
        return [RelationSpec.atomic(e) for e in self._edge_types] + [
            RelationSpec.composite(m) for m in self._metapaths
        ]

    # Nodes

    @property
    def num_nodes(self) -> int:
        return len(self._node_ids)

    @property
    def node_ids(self) -> tuple[str, ...]:
        return self._node_ids

    @property
    def node_type_ids(self) -> np.ndarray:
        """Node type id per dense node index (read-only)."""
        return self._node_type_ids

    def node_index(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise UnknownNodeError(f"Unknown node '{node_id}'") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._index

    def node_type_of(self, index: int) -> NodeType:
        """Type of a node by dense index (the total map phi)."""
        return self._node_types[int(self._node_type_ids[index])]

    def type_offset(self, node_type: NodeType) -> int:
        return int(self._type_offsets[node_type.id])

    def count_of_type(self, node_type: NodeType) -> int:
        return int(self._type_counts[node_type.id])

    @property
    def type_offsets(self) -> np.ndarray:
        return self._type_offsets

    @property
    def type_counts(self) -> np.ndarray:
        return self._type_counts

    def nodes_of_type(self, node_type: NodeType) -> np.ndarray:
        start = self.type_offset(node_type)
        return np.arange(start, start + self.count_of_type(node_type), dtype=np.int64)

    def nodes(self) -> list[tuple[str, NodeType]]:
        return [
            (node_id, self.node_type_of(i)) for i, node_id in enumerate(self._node_ids)
        ]

    # Edges

    @property
    def num_edges(self) -> int:
        return int(self._edge_src.size)

    @property
    def edge_type_ids(self) -> np.ndarray:
        """Edge type id per edge position (read-only)."""
        return self._edge_type_ids

    def edge_type_of(self, edge_index: int) -> EdgeType:
        """Type of an edge by position in the edge list (the total map varphi)."""
        return self._edge_types[int(self._edge_type_ids[edge_index])]

    def edges_of_type(
        self, edge_type: EdgeType
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (sources, targets, weights) of one edge type, global indices."""
        mask = self._edge_type_ids == edge_type.id
        return self._edge_src[mask], self._edge_dst[mask], self._edge_weights[mask]

    def edges(self) -> list[tuple[str, str, str, float]]:
        """Edge list as (source id, target id, edge type name, weight)."""
        return [
            (
                self._node_ids[int(s)],
                self._node_ids[int(t)],
                self._edge_types[int(e)].name,
                float(w),
            )
            for s, t, e, w in zip(
                self._edge_src, self._edge_dst, self._edge_type_ids, self._edge_weights
            )
        ]

    def adjacency(
        self, edge_type: EdgeType, weighted: bool = False
    ) -> sparse.csr_matrix:
        """
        Adjacency of one edge type in per-type local indices.

        Args:
            edge_type: Edge type to look up
            weighted: Sum edge weights instead of counting edges

        Returns:
            CSR matrix of shape (count(source type), count(target type))
        """
        if edge_type.id >= len(self._edge_types) or (
            self._edge_types[edge_type.id] != edge_type
        ):
            raise UnknownTypeError(f"Unknown edge type '{edge_type.name}'")
        matrix = self._weights if weighted else self._counts
        return matrix[edge_type.id]

    def path_count_matrix(self, metapath: MetaPath) -> sparse.csr_matrix:
        """
        Number of path instances between every endpoint pair of a meta-path.

        Computed as a product of per-step count matrices, so parallel edges
        multiply through. An undirected edge type whose endpoints share a
        node type is walked in both orientations.
        """
        result: Optional[sparse.csr_matrix] = None
        for edge_type, rev in zip(metapath.edge_types, metapath.reversed_steps):
            step = self.adjacency(edge_type)
            if rev:
                step = step.T.tocsr()
            elif (
                not edge_type.directed
                and edge_type.source_type == edge_type.target_type
            ):
                step = (step + step.T).tocsr()
            result = step if result is None else (result @ step).tocsr()
        assert result is not None
        result.sum_duplicates()
        result.sort_indices()
        return result

    def relation_matrix(
        self, relation: RelationSpec, weighted: bool = False
    ) -> sparse.csr_matrix:
        """Instance matrix of a relation in per-type local indices.

        Atomic relations return the adjacency (weighted on request); composite
        relations always return path-instance counts.
        """
        if relation.edge_type is not None:
            self._check_declared(relation)
            return self.adjacency(relation.edge_type, weighted=weighted)
        assert relation.metapath is not None
        self._check_declared(relation)
        return self.path_count_matrix(relation.metapath)

    def _check_declared(self, relation: RelationSpec) -> None:
        if relation.edge_type is not None:
            used = [relation.edge_type]
        else:
            assert relation.metapath is not None
            used = list(relation.metapath.edge_types)
        for edge_type in used:
            known = self._edge_types_by_name.get(edge_type.name)
            if known is None or self._edge_types[known] != edge_type:
                raise RelationError(
                    f"Unknown relation '{relation.name}'", relation=relation.name
                )

    def relation_instances(self, relation: RelationSpec) -> int:
        """N_r: number of instances of a relation, counted with multiplicity."""
        return int(round(self.relation_matrix(relation).sum()))

    def relation_degrees(
        self, relation: RelationSpec, endpoint: Union[Endpoint, str]
    ) -> np.ndarray:
        """Per-node instance count for every node of the endpoint's type."""
        matrix = self.relation_matrix(relation)
        axis = 1 if Endpoint(endpoint) is Endpoint.SOURCE else 0
        return np.asarray(matrix.sum(axis=axis)).ravel()

    def avg_degree(
        self, relation: RelationSpec, endpoint: Union[Endpoint, str]
    ) -> float:
        return avg_degree(self, relation, endpoint)

    def without_edges(self, drop: np.ndarray) -> "HeteroGraph":
        """New graph with the edges at the masked positions removed."""
        drop = np.asarray(drop, dtype=bool)
        if drop.shape != self._edge_src.shape:
            raise ValueError("Edge mask must have one entry per edge")
        kept = [edge for edge, gone in zip(self.edges(), drop) if not gone]
        return HeteroGraph(
            nodes=[(node_id, t.name) for node_id, t in self.nodes()],
            edges=kept,
            node_types=self._node_types,
            edge_types=self._edge_types,
            metapaths=self._metapaths,
        )

    def __repr__(self) -> str:
        return (
            f"HeteroGraph(nodes={self.num_nodes}, edges={self.num_edges}, "
            f"node_types={[t.name for t in self._node_types]}, "
            f"edge_types={[t.name for t in self._edge_types]})"
        )


def avg_degree(
    g: HeteroGraph, relation: RelationSpec, endpoint: Union[Endpoint, str]
) -> float:
    """
    Average number of relation instances per node of an endpoint type.

    The denominator is every node of the type present in the graph, not
    only nodes with at least one instance.

    Raises:
        RelationError: If the relation is unknown or the endpoint type has
            no nodes
    """
    node_type = relation.endpoint_type(endpoint)
    population = g.count_of_type(node_type)
    if population == 0:
        raise RelationError(
            f"Endpoint type '{node_type.name}' has no nodes", relation=relation.name
        )
    return g.relation_instances(relation) / population


def _index_by_name(
    items: Sequence[Union[NodeType, EdgeType, MetaPath]], kind: str
) -> Mapping[str, int]:
    index: dict[str, int] = {}
    for i, item in enumerate(items):
        if item.name in index:
            raise SchemaError(f"Duplicate {kind} name '{item.name}'")
        index[item.name] = i
    return index
