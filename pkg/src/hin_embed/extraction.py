"""Node-relation triple extraction, weighted positive sampling and corruption."""

import logging
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import sparse

from .exceptions import (
    DanglingEndpointError,
    GraphFormatError,
    RelationError,
    SamplingError,
    SchemaError,
)
from .models.graph import HeteroGraph, MetaPath, RelationSpec
from .models.relation import RelationCategory
from .models.triples import NodeRelationTriple, TriplePartition, TripleStore
from .utils import iter_tsv

logger = logging.getLogger(__name__)

TRIPLE_COLUMNS = ("u", "relation", "v", "w")
MAX_FILTER_REDRAWS = 50


def _triples_from_matrix(
    g: HeteroGraph, r: RelationSpec, matrix: sparse.csr_matrix
) -> list[NodeRelationTriple]:
    coo = matrix.tocoo()
    keep = coo.data > 0
    heads = coo.row[keep] + g.type_offset(r.source_type)
    tails = coo.col[keep] + g.type_offset(r.target_type)
    return [
        NodeRelationTriple(u=int(u), relation=r.name, v=int(v), weight=float(w))
        for u, v, w in zip(heads, tails, coo.data[keep])
    ]


def extract_atomic(g: HeteroGraph, r: RelationSpec) -> list[NodeRelationTriple]:
    """
    One triple per distinct (u, v) pair joined by an edge of r's type.

    The weight is the sum of the pair's edge weights, so parallel unit
    edges add up to their multiplicity. Triples come out in row-major
    (head, tail) order.

    Raises:
        RelationError: If r is not atomic or its edge type is not in g
    """
    if not r.is_atomic:
        raise RelationError(f"Relation '{r.name}' is not atomic", relation=r.name)
    return _triples_from_matrix(g, r, g.relation_matrix(r, weighted=True))


def extract_metapath(g: HeteroGraph, m: MetaPath) -> list[NodeRelationTriple]:
    """
    One triple per connected endpoint pair, weighted by its path-instance count.

    Raises:
        RelationError: If the meta-path uses an edge type unknown to g
    """
    r = RelationSpec.composite(m)
    return _triples_from_matrix(g, r, g.relation_matrix(r))


def extract_relation(g: HeteroGraph, r: RelationSpec) -> list[NodeRelationTriple]:
    if r.metapath is not None:
        return extract_metapath(g, r.metapath)
    return extract_atomic(g, r)


def extract_all(
    g: HeteroGraph, relations: Sequence[RelationSpec]
) -> dict[str, list[NodeRelationTriple]]:
    """Extract every relation's triples, keyed by relation name in input order."""
    extracted: dict[str, list[NodeRelationTriple]] = {}
    for r in relations:
        triples = extract_relation(g, r)
        logger.info(
            "Extracted %d triples for %s (%s)",
            len(triples),
            r.name,
            "atomic" if r.is_atomic else "meta-path",
        )
        extracted[r.name] = triples
    return extracted


def build_store(
    triples_by_relation: Mapping[str, Sequence[NodeRelationTriple]],
    categories: Mapping[str, RelationCategory],
) -> TripleStore:
    """
    Partition triples into AR and IR sets with weight-proportional sampling tables.

    Relation ids follow the order of ``triples_by_relation``. An empty
    partition is allowed but logged as a warning.

    Raises:
        RelationError: If a relation has no category or a triple is filed
            under the wrong relation
    """
    names = list(triples_by_relation)
    missing = [name for name in names if name not in categories]
    if missing:
        raise RelationError(
            f"No category for relation '{missing[0]}'", relation=missing[0]
        )

    columns: dict[RelationCategory, list[tuple[int, int, int, float]]] = {
        category: [] for category in RelationCategory
    }
    for rel_id, name in enumerate(names):
        bucket = columns[RelationCategory(categories[name])]
        for t in triples_by_relation[name]:
            if t.relation != name:
                raise RelationError(
                    f"Triple of relation '{t.relation}' listed under '{name}'",
                    relation=name,
                )
            bucket.append((t.u, rel_id, t.v, t.weight))

    partitions = {}
    for category, rows in columns.items():
        table = np.array(rows, dtype=np.float64).reshape(-1, 4)
        partitions[category] = TriplePartition(
            category=category,
            heads=table[:, 0].astype(np.int64),
            relations=table[:, 1].astype(np.int64),
            tails=table[:, 2].astype(np.int64),
            weights=table[:, 3],
        )
        if not rows:
            logger.warning("The %s partition is empty", category.value)

    store = TripleStore(names, categories, partitions)
    logger.info(
        "Built triple store: %d AR triples, %d IR triples",
        len(store.partition(RelationCategory.AR)),
        len(store.partition(RelationCategory.IR)),
    )
    return store


def sample_positive_indices(
    store: TripleStore,
    category: RelationCategory,
    rng: np.random.Generator,
    size: int,
) -> np.ndarray:
    """
    Draw ``size`` positions from one partition, proportionally to triple weight.

    Raises:
        SamplingError: If the partition is empty
    """
    part = store.require(category)
    draws = rng.random(size) * part.total_weight
    positions = np.searchsorted(part.cumulative, draws, side="right")
    return np.minimum(positions, len(part) - 1)


def sample_positive(
    store: TripleStore, category: RelationCategory, rng: np.random.Generator
) -> NodeRelationTriple:
    """Draw one triple from a partition with probability w / sum(w)."""
    position = sample_positive_indices(store, category, rng, 1)[0]
    return store.triple(category, int(position))


def corrupt_indices(
    g: HeteroGraph,
    heads: np.ndarray,
    relation_ids: np.ndarray,
    tails: np.ndarray,
    rng: np.random.Generator,
    store: Optional[TripleStore] = None,
    filtered: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Replace the head or the tail (fair coin) of every triple.

    The replacement is uniform over the other nodes of the replaced
    endpoint's type, so the result never equals its input. With
    ``filtered`` set, corruptions that are positives in ``store`` are
    redrawn a bounded number of times.

    Returns:
        (new heads, new tails, mask of rows whose head was replaced)

    Raises:
        SamplingError: If a replacement pool has fewer than two nodes
    """
    heads = np.asarray(heads, dtype=np.int64)
    tails = np.asarray(tails, dtype=np.int64)
    head_side = rng.random(heads.size) < 0.5
    new_heads, new_tails = heads.copy(), tails.copy()
    everything = np.arange(heads.size)
    _redraw(g, heads, tails, head_side, new_heads, new_tails, rng, everything)

    if filtered and store is not None:
        relation_ids = np.asarray(relation_ids, dtype=np.int64)
        for _ in range(MAX_FILTER_REDRAWS):
            clash = np.array(
                [
                    store.contains(h, r, t)
                    for h, r, t in zip(new_heads, relation_ids, new_tails)
                ],
                dtype=bool,
            )
            if not clash.any():
                break
            _redraw(
                g,
                heads,
                tails,
                head_side,
                new_heads,
                new_tails,
                rng,
                np.flatnonzero(clash),
            )
        else:
            logger.debug("Kept corruptions that are still known positives")

    return new_heads, new_tails, head_side


def _redraw(
    g: HeteroGraph,
    heads: np.ndarray,
    tails: np.ndarray,
    head_side: np.ndarray,
    new_heads: np.ndarray,
    new_tails: np.ndarray,
    rng: np.random.Generator,
    rows: np.ndarray,
) -> None:
    if rows.size == 0:
        return
    side = head_side[rows]
    original = np.where(side, heads[rows], tails[rows])
    node_types = g.node_type_ids[original]
    offsets = g.type_offsets[node_types]
    counts = g.type_counts[node_types]
    if (counts < 2).any():
        small = g.node_types[int(node_types[np.argmin(counts)])]
        raise SamplingError(
            f"Cannot corrupt: node type '{small.name}' has fewer than two nodes"
        )
    # Draw from count - 1 slots and step over the original node
    local = rng.integers(0, counts - 1)
    local = local + (local >= original - offsets)
    replacement = offsets + local
    new_heads[rows] = np.where(side, replacement, heads[rows])
    new_tails[rows] = np.where(side, tails[rows], replacement)


def corrupt(
    t: NodeRelationTriple,
    g: HeteroGraph,
    rng: np.random.Generator,
    store: Optional[TripleStore] = None,
    filtered: bool = False,
) -> NodeRelationTriple:
    """
    Negative triple for ``t``: exactly one endpoint replaced by a same-type node.

    The negative keeps the positive's weight.

    Raises:
        SamplingError: If the replaced endpoint's type has fewer than two nodes
    """
    relation_id = store.relation_id(t.relation) if store is not None else -1
    new_heads, new_tails, _ = corrupt_indices(
        g,
        np.array([t.u]),
        np.array([relation_id]),
        np.array([t.v]),
        rng,
        store=store,
        filtered=filtered,
    )
    return NodeRelationTriple(
        u=int(new_heads[0]), relation=t.relation, v=int(new_tails[0]), weight=t.weight
    )


def write_triples(
    triples_by_relation: Mapping[str, Sequence[NodeRelationTriple]],
    g: HeteroGraph,
    path: Union[str, Path],
) -> None:
    """Write ``u<TAB>relation<TAB>v<TAB>w`` lines using original node ids."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("# " + "\t".join(TRIPLE_COLUMNS) + "\n")
        for name, triples in triples_by_relation.items():
            for t in triples:
                f.write(
                    f"{g.node_ids[t.u]}\t{name}\t{g.node_ids[t.v]}\t{t.weight:.17g}\n"
                )


def read_triples(
    path: Union[str, Path], g: HeteroGraph
) -> dict[str, list[NodeRelationTriple]]:
    """
    Read a triples file written by ``write_triples`` (or by an external tool).

    Repeated (u, relation, v) lines are merged by summing their weights.
    Relations keep the order of their first appearance.

    Raises:
        GraphFormatError: On malformed lines or weights
        RelationError: If a relation is not declared in g's schema
        DanglingEndpointError: If a node id is not in g
        SchemaError: If endpoint types do not match the relation
    """
    weights: dict[str, dict[tuple[int, int], float]] = {}
    relations: dict[str, RelationSpec] = {}
    for line_number, fields in iter_tsv(path):
        if len(fields) != 4:
            raise GraphFormatError(
                "Expected u<TAB>relation<TAB>v<TAB>w",
                path=path,
                line_number=line_number,
            )
        u_id, name, v_id, raw_weight = fields
        try:
            weight = float(raw_weight)
        except ValueError:
            raise GraphFormatError(
                f"Invalid weight '{raw_weight}'", path=path, line_number=line_number
            ) from None
        if not np.isfinite(weight) or weight <= 0:
            raise GraphFormatError(
                f"Weight must be positive and finite, got {raw_weight}",
                path=path,
                line_number=line_number,
            )
        if name not in relations:
            relations[name] = g.relation(name)
        r = relations[name]
        for node_id in (u_id, v_id):
            if not g.has_node(node_id):
                raise DanglingEndpointError(
                    f"{path}:{line_number}: node '{node_id}' is not in the graph"
                )
        u, v = g.node_index(u_id), g.node_index(v_id)
        if g.node_type_of(u) != r.source_type or g.node_type_of(v) != r.target_type:
            raise SchemaError(
                f"{path}:{line_number}: relation '{name}' connects "
                f"{r.source_type.name} to {r.target_type.name}"
            )
        pairs = weights.setdefault(name, {})
        pairs[(u, v)] = pairs.get((u, v), 0.0) + weight

    return {
        name: [
            NodeRelationTriple(u=u, relation=name, v=v, weight=w)
            for (u, v), w in pairs.items()
        ]
        for name, pairs in weights.items()
    }
