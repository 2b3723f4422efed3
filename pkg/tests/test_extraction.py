"""Tests for triple extraction, the triple store, sampling and corruption."""

import logging
from collections import Counter
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import binomtest, chisquare

from hin_embed.exceptions import (
    DanglingEndpointError,
    GraphFormatError,
    RelationError,
    SamplingError,
    SchemaError,
)
from hin_embed.extraction import (
    build_store,
    corrupt,
    corrupt_indices,
    extract_all,
    extract_atomic,
    extract_metapath,
    read_triples,
    sample_positive,
    sample_positive_indices,
    write_triples,
)
from hin_embed.models.graph import EdgeType, HeteroGraph, MetaPath, NodeType
from hin_embed.models.relation import RelationCategory
from hin_embed.models.triples import NodeRelationTriple, TripleStore

AR, IR = RelationCategory.AR, RelationCategory.IR
TOY_CATEGORIES = {"AP": IR, "PC": AR, "APC": AR, "APA": IR}


def named(
    g: HeteroGraph, triples: list[NodeRelationTriple]
) -> dict[tuple[str, str], float]:
    return {(g.node_ids[t.u], g.node_ids[t.v]): t.weight for t in triples}


def toy_store(g: HeteroGraph) -> TripleStore:
    return build_store(extract_all(g, g.relations()), TOY_CATEGORIES)


def test_extract_atomic(toy_graph: HeteroGraph) -> None:
    triples = extract_atomic(toy_graph, toy_graph.relation("PC"))
    assert named(toy_graph, triples) == {
        ("p1", "c1"): 1,
        ("p2", "c1"): 1,
        ("p3", "c2"): 1,
    }
    assert all(t.relation == "PC" for t in triples)


def test_extract_atomic_rejects_metapath(toy_graph: HeteroGraph) -> None:
    with pytest.raises(RelationError):
        extract_atomic(toy_graph, toy_graph.relation("APC"))


def test_parallel_edges_merge_into_one_triple() -> None:
    a, b = NodeType(0, "A"), NodeType(1, "B")
    ab = EdgeType(0, "AB", a, b)
    g = HeteroGraph(
        nodes=[("u", "A"), ("v", "B")],
        edges=[("u", "v", "AB", 1.0), ("u", "v", "AB", 1.0)],
        node_types=[a, b],
        edge_types=[ab],
    )
    triples = extract_atomic(g, g.relation("AB"))
    assert len(triples) == 1
    assert triples[0].weight == 2.0


def test_extract_metapath(toy_graph: HeteroGraph) -> None:
    triples = extract_metapath(toy_graph, toy_graph.metapath("APC"))
    assert named(toy_graph, triples) == {
        ("a1", "c1"): 1,
        ("a2", "c1"): 2,
        ("a3", "c1"): 1,
        ("a3", "c2"): 1,
        ("a4", "c2"): 1,
    }
    assert sum(t.weight for t in triples) == toy_graph.relation_instances(
        toy_graph.relation("APC")
    )


def test_extract_all_keeps_order(toy_graph: HeteroGraph) -> None:
    extracted = extract_all(toy_graph, toy_graph.relations())
    assert list(extracted) == ["AP", "PC", "APC", "APA"]
    assert len(extracted["APA"]) == 10
    assert sum(t.weight for t in extracted["APA"]) == 12


# Brute-force oracle for meta-path weights

A, B, C = NodeType(0, "A"), NodeType(1, "B"), NodeType(2, "C")
AB = EdgeType(0, "AB", A, B, directed=False)
BC = EdgeType(1, "BC", B, C, directed=True)
BB = EdgeType(2, "BB", B, B, directed=False)
ORACLE_PATHS = {
    "ABC": [AB, BC],
    "ABA": [AB, AB],
    "ABBC": [AB, BB, BC],
}


def random_hin(seed: int) -> tuple[HeteroGraph, list[tuple[str, str, str]]]:
    """At most 90 nodes; edges drawn with replacement so parallel edges occur."""
    rng = np.random.default_rng(seed)
    sizes = {t.name: int(rng.integers(2, 31)) for t in (A, B, C)}
    ids = {name: [f"{name}{i}" for i in range(n)] for name, n in sizes.items()}
    edges = []
    for et in (AB, BC, BB):
        for _ in range(int(rng.integers(1, 60))):
            u = ids[et.source_type.name][int(rng.integers(sizes[et.source_type.name]))]
            v = ids[et.target_type.name][int(rng.integers(sizes[et.target_type.name]))]
            if u != v:
                edges.append((u, v, et.name))
    g = HeteroGraph(
        nodes=[(n, t) for t, names in ids.items() for n in names],
        edges=[(u, v, name, 1.0) for u, v, name in edges],
        node_types=[A, B, C],
        edge_types=[AB, BC, BB],
        metapaths=[MetaPath.from_edge_types(n, p) for n, p in ORACLE_PATHS.items()],
    )
    return g, edges


def enumerate_paths(
    edges: list[tuple[str, str, str]], start: str, metapath: MetaPath
) -> Counter[str]:
    """Count every walk from ``start`` that follows the meta-path, by end node."""
    frontier: Counter[str] = Counter({start: 1})
    for edge_type, reverse in zip(metapath.edge_types, metapath.reversed_steps):
        walks_both_ways = (
            not edge_type.directed and edge_type.source_type == edge_type.target_type
        )
        following: Counter[str] = Counter()
        for node, count in frontier.items():
            for u, v, name in edges:
                if name != edge_type.name:
                    continue
                if not reverse and u == node:
                    following[v] += count
                if (reverse or walks_both_ways) and v == node:
                    following[u] += count
        frontier = following
    return frontier


@pytest.mark.parametrize("seed", range(100))
def test_metapath_weights_match_brute_force(seed: int) -> None:
    g, edges = random_hin(seed)
    assert g.num_nodes <= 100
    for metapath in g.metapaths:
        extracted = named(g, extract_metapath(g, metapath))
        expected = {}
        for start in g.node_ids:
            if g.node_type_of(g.node_index(start)) != metapath.node_types[0]:
                continue
            for end, count in enumerate_paths(edges, start, metapath).items():
                expected[(start, end)] = float(count)
        assert extracted == expected, f"seed {seed}: {metapath.name} weights differ"


# Triple store


def test_build_store_partitions(toy_graph: HeteroGraph) -> None:
    store = toy_store(toy_graph)
    ar, ir = store.partition(AR), store.partition(IR)
    assert len(ar) == 3 + 5, "PC and APC triples"
    assert len(ir) == 6 + 10, "AP and APA triples"
    assert len(store) == len(ar) + len(ir)
    assert ar.total_weight == pytest.approx(3 + 6)
    assert ir.total_weight == pytest.approx(6 + 12)

    ar_relations = {store.relation_names[r] for r in ar.relations}
    ir_relations = {store.relation_names[r] for r in ir.relations}
    assert ar_relations == {"PC", "APC"}
    assert ir_relations == {"AP", "APA"}
    assert len(store.relation_index("APC")) == 5
    assert store.weight_share("APC") == pytest.approx(6 / 9)


def test_build_store_needs_every_category(toy_graph: HeteroGraph) -> None:
    extracted = extract_all(toy_graph, toy_graph.relations())
    with pytest.raises(RelationError, match="APA"):
        build_store(extracted, {"AP": IR, "PC": AR, "APC": AR})


def test_empty_partition_is_flagged(
    toy_graph: HeteroGraph, caplog: pytest.LogCaptureFixture
) -> None:
    extracted = extract_all(toy_graph, [toy_graph.relation("AP")])
    with caplog.at_level(logging.WARNING, logger="hin_embed.extraction"):
        store = build_store(extracted, {"AP": IR})
    assert "AR partition is empty" in caplog.text
    with pytest.raises(SamplingError):
        sample_positive(store, AR, np.random.default_rng(0))


def two_triple_store() -> TripleStore:
    triples = {
        "R": [
            NodeRelationTriple(0, "R", 2, 1.0),
            NodeRelationTriple(1, "R", 3, 3.0),
        ]
    }
    return build_store(triples, {"R": AR})


def test_sampling_follows_weights() -> None:
    store = two_triple_store()
    draws = sample_positive_indices(store, AR, np.random.default_rng(7), 100_000)
    observed = np.bincount(draws, minlength=2)
    result = chisquare(observed, f_exp=[25_000, 75_000])
    assert result.pvalue > 0.01, f"Sample counts {observed} do not follow 1:3"


def test_uniform_weights_sample_uniformly(toy_graph: HeteroGraph) -> None:
    extracted = extract_all(toy_graph, [toy_graph.relation("AP")])
    store = build_store(extracted, {"AP": IR})
    draws = sample_positive_indices(store, IR, np.random.default_rng(3), 60_000)
    result = chisquare(np.bincount(draws, minlength=6))
    assert result.pvalue > 0.01


def test_relation_frequencies_follow_weight_mass(toy_graph: HeteroGraph) -> None:
    store = toy_store(toy_graph)
    part = store.partition(AR)
    draws = sample_positive_indices(store, AR, np.random.default_rng(11), 90_000)
    counts = np.bincount(part.relations[draws], minlength=len(store.relation_names))
    pc, apc = store.relation_id("PC"), store.relation_id("APC")
    result = chisquare([counts[pc], counts[apc]], f_exp=[30_000, 60_000])
    assert result.pvalue > 0.01


def test_single_triple_store_always_samples_it() -> None:
    store = build_store({"R": [NodeRelationTriple(0, "R", 1, 2.0)]}, {"R": IR})
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert sample_positive(store, IR, rng) == NodeRelationTriple(0, "R", 1, 2.0)


def test_sampling_is_reproducible(toy_graph: HeteroGraph) -> None:
    store = toy_store(toy_graph)
    first = sample_positive_indices(store, IR, np.random.default_rng(5), 100)
    second = sample_positive_indices(store, IR, np.random.default_rng(5), 100)
    assert np.array_equal(first, second)


# Corruption


def test_corrupt_changes_one_endpoint_within_its_type(toy_graph: HeteroGraph) -> None:
    rng = np.random.default_rng(0)
    store = toy_store(toy_graph)
    for t in store.triples():
        for _ in range(20):
            negative = corrupt(t, toy_graph, rng)
            assert negative.relation == t.relation
            assert negative.weight == t.weight
            head_changed, tail_changed = negative.u != t.u, negative.v != t.v
            assert head_changed != tail_changed, f"{t} -> {negative}"
            assert toy_graph.node_type_of(negative.u) == toy_graph.node_type_of(t.u)
            assert toy_graph.node_type_of(negative.v) == toy_graph.node_type_of(t.v)


def test_corruption_sides_are_balanced(toy_graph: HeteroGraph) -> None:
    a1, p1 = toy_graph.node_index("a1"), toy_graph.node_index("p1")
    n = 10_000
    heads, tails, head_side = corrupt_indices(
        toy_graph,
        np.full(n, a1),
        np.zeros(n, dtype=np.int64),
        np.full(n, p1),
        np.random.default_rng(21),
    )
    assert np.array_equal(head_side, heads != a1)
    assert np.array_equal(~head_side, tails != p1)
    result = binomtest(int(head_side.sum()), n, 0.5)
    assert result.pvalue > 0.01, f"{int(head_side.sum())} head corruptions of {n}"


def test_corrupt_replacement_is_uniform(toy_graph: HeteroGraph) -> None:
    a1, p1 = toy_graph.node_index("a1"), toy_graph.node_index("p1")
    n = 30_000
    heads, _, head_side = corrupt_indices(
        toy_graph,
        np.full(n, a1),
        np.zeros(n, dtype=np.int64),
        np.full(n, p1),
        np.random.default_rng(8),
    )
    replaced = Counter(toy_graph.node_ids[h] for h in heads[head_side])
    assert set(replaced) == {"a2", "a3", "a4"}
    result = chisquare([replaced[a] for a in ("a2", "a3", "a4")])
    assert result.pvalue > 0.01


def test_corrupt_needs_two_nodes_of_a_type() -> None:
    a, b = NodeType(0, "A"), NodeType(1, "B")
    ab = EdgeType(0, "AB", a, b)
    g = HeteroGraph(
        nodes=[("u", "A"), ("v", "B")],
        edges=[("u", "v", "AB", 1.0)],
        node_types=[a, b],
        edge_types=[ab],
    )
    with pytest.raises(SamplingError, match="fewer than two"):
        corrupt(NodeRelationTriple(0, "AB", 1), g, np.random.default_rng(0))


def test_filtered_corruption_avoids_positives(toy_graph: HeteroGraph) -> None:
    store = toy_store(toy_graph)
    part = store.partition(IR)
    k = 50
    heads, tails, _ = corrupt_indices(
        toy_graph,
        np.repeat(part.heads, k),
        np.repeat(part.relations, k),
        np.repeat(part.tails, k),
        np.random.default_rng(2),
        store=store,
        filtered=True,
    )
    relations = np.repeat(part.relations, k)
    clashes = [
        (h, r, t) for h, r, t in zip(heads, relations, tails) if store.contains(h, r, t)
    ]
    assert not clashes, f"Corruptions that are known positives: {clashes[:5]}"


def test_corruption_is_reproducible(toy_graph: HeteroGraph) -> None:
    t = NodeRelationTriple(0, "AP", 4)
    first = [corrupt(t, toy_graph, np.random.default_rng(9)) for _ in range(3)]
    second = [corrupt(t, toy_graph, np.random.default_rng(9)) for _ in range(3)]
    assert first == second


# Triples files


def test_triples_file_round_trip(toy_graph: HeteroGraph, tmp_path: Path) -> None:
    extracted = extract_all(toy_graph, toy_graph.relations())
    path = tmp_path / "triples.tsv"
    write_triples(extracted, toy_graph, path)
    assert path.read_text(encoding="utf-8").startswith("# u\trelation\tv\tw\n")
    assert read_triples(path, toy_graph) == extracted


def test_read_triples_merges_repeated_pairs(
    toy_graph: HeteroGraph, tmp_path: Path
) -> None:
    path = tmp_path / "triples.tsv"
    path.write_text(
        "a1\tAPC\tc1\t1\na1\tAPC\tc1\t2.5\na2\tAP\tp1\t1\n", encoding="utf-8"
    )
    triples = read_triples(path, toy_graph)
    assert list(triples) == ["APC", "AP"]
    assert named(toy_graph, triples["APC"]) == {("a1", "c1"): 3.5}


@pytest.mark.parametrize(
    "line,error",
    [
        ("a1\tAPC\tc1\n", GraphFormatError),
        ("a1\tAPC\tc1\tx\n", GraphFormatError),
        ("a1\tAPC\tc1\t-2\n", GraphFormatError),
        ("a1\tACA\tc1\t1\n", RelationError),
        ("a9\tAPC\tc1\t1\n", DanglingEndpointError),
        ("c1\tAPC\ta1\t1\n", SchemaError),
    ],
)
def test_read_triples_errors(
    toy_graph: HeteroGraph, tmp_path: Path, line: str, error: type[Exception]
) -> None:
    path = tmp_path / "triples.tsv"
    path.write_text(line, encoding="utf-8")
    with pytest.raises(error):
        read_triples(path, toy_graph)
