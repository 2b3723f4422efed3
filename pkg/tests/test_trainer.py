"""Tests for the trainers, variants and checkpoints."""

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import chisquare

from hin_embed.config import LossFamily, TrainConfig, Variant
from hin_embed.exceptions import (
    CheckpointError,
    ConfigError,
    DivergenceError,
    SamplingError,
)
from hin_embed.extraction import build_store, extract_all
from hin_embed.models.embedding import EmbeddingStore
from hin_embed.models.graph import EdgeType, HeteroGraph, NodeType
from hin_embed.models.relation import RelationCategory
from hin_embed.models.triples import NodeRelationTriple, TripleStore
from hin_embed.scoring import euclidean_score, grad_step
from hin_embed.trainer import (
    CheckpointState,
    ParallelTrainer,
    Trainer,
    load_checkpoint,
    make_trainer,
    save_checkpoint,
    select_variant,
    train,
    translation_relations,
)
from hin_embed.trainer.sync import interleave, split_draws

AR, IR = RelationCategory.AR, RelationCategory.IR
EU, TR = LossFamily.EUCLIDEAN, LossFamily.TRANSLATION
TOY_CATEGORIES = {"AP": IR, "PC": AR, "APC": AR, "APA": IR}

# Small enough to run quickly, large enough to exercise both partitions
FAST = dict(dim=8, epochs=4, lr=0.01, samples_per_epoch=90, workers=1)


def toy_store(g: HeteroGraph) -> TripleStore:
    return build_store(extract_all(g, g.relations()), TOY_CATEGORIES)


def two_by_two() -> tuple[HeteroGraph, TripleStore]:
    """Types A and B with two nodes each and one AR triple <a1, AB, b1>."""
    a, b = NodeType(0, "A"), NodeType(1, "B")
    ab = EdgeType(0, "AB", a, b, directed=False)
    g = HeteroGraph(
        nodes=[("a1", "A"), ("a2", "A"), ("b1", "B"), ("b2", "B")],
        edges=[("a1", "b1", "AB", 1.0)],
        node_types=[a, b],
        edge_types=[ab],
    )
    store = build_store({"AB": [NodeRelationTriple(0, "AB", 2, 1.0)]}, {"AB": AR})
    return g, store


def test_variant_assignments() -> None:
    assert select_variant(Variant.RHINE) == {AR: EU, IR: TR}
    assert select_variant("eu") == {AR: EU, IR: EU}
    assert select_variant("TR") == {AR: TR, IR: TR}
    assert select_variant(TrainConfig(variant="reversed")) == {AR: TR, IR: EU}
    with pytest.raises(ConfigError):
        select_variant("hybrid")


def test_translation_relations_follow_the_variant(toy_graph: HeteroGraph) -> None:
    store = toy_store(toy_graph)
    expected = {
        "rhine": ["AP", "APA"],
        "eu": [],
        "tr": ["AP", "PC", "APC", "APA"],
        "reversed": ["PC", "APC"],
    }
    for variant, names in expected.items():
        assert translation_relations(store, select_variant(variant)) == names, variant


def test_zero_epochs_returns_the_initialization(toy_graph: HeteroGraph) -> None:
    store = toy_store(toy_graph)
    cfg = TrainConfig(dim=6, epochs=0, seed=11)
    embeddings, report = Trainer(toy_graph, store, cfg).fit()

    expected = EmbeddingStore.initialize(
        toy_graph.node_ids, ["AP", "APA"], 6, np.random.default_rng(11)
    )
    assert np.array_equal(embeddings.node_vectors, expected.node_vectors)
    assert np.array_equal(embeddings.relation_vectors, expected.relation_vectors)
    assert report.epochs == [] and report.final_loss is None


def test_initialization_range(toy_graph: HeteroGraph) -> None:
    cfg = TrainConfig(dim=9, epochs=0)
    embeddings, _ = train(toy_graph, toy_store(toy_graph), cfg)
    bound = 6.0 / 3.0
    assert np.abs(embeddings.node_vectors).max() <= bound
    assert embeddings.relation_vectors.shape == (2, 9)


def test_invalid_config_is_rejected() -> None:
    with pytest.raises(ConfigError) as excinfo:
        TrainConfig(dim=0)
    assert excinfo.value.key == "dim"
    for bad in ({"negatives": 0}, {"lr": -0.1}, {"epochs": -1}, {"gamma": 0}):
        with pytest.raises(ConfigError):
            TrainConfig(**bad)


def test_empty_store_cannot_be_trained(toy_graph: HeteroGraph) -> None:
    with pytest.raises(SamplingError):
        Trainer(toy_graph, build_store({}, {}), TrainConfig(dim=4))


def test_single_ar_triple_converges() -> None:
    g, store = two_by_two()
    cfg = TrainConfig(
        dim=4, lr=0.05, epochs=300, negatives=3, seed=3, divergence_factor=1e9
    )
    embeddings, _ = Trainer(g, store, cfg).fit()

    positive = euclidean_score(embeddings, 1.0, 0, 2)
    for neg_u, neg_v in ((1, 2), (0, 3)):
        margin = euclidean_score(embeddings, 1.0, neg_u, neg_v) - positive
        assert margin >= cfg.gamma, f"corruption ({neg_u}, {neg_v}): {margin}"


def test_loss_goes_down(toy_graph: HeteroGraph) -> None:
    cfg = TrainConfig(dim=16, epochs=30, lr=0.01, samples_per_epoch=300, seed=2)
    _, report = Trainer(toy_graph, toy_store(toy_graph), cfg).fit()
    totals = [stats.total for stats in report.epochs]
    assert len(totals) == 30
    assert np.mean(totals[-5:]) < np.mean(totals[:5]), totals


def test_single_relation_loss_never_rises() -> None:
    g, store = two_by_two()
    # Both corruptions start inside the margin: a2 next to b1, b2 next to a1
    start = EmbeddingStore(
        node_ids=g.node_ids,
        node_vectors=np.array(
            [
                [2.0, 0.0, 0.0, 0.0],
                [-1.5, 0.5, 0.0, 0.0],
                [-2.0, 0.0, 0.0, 0.0],
                [1.5, -0.5, 0.0, 0.0],
            ]
        ),
        relation_vectors=np.zeros((0, 4)),
    )
    cfg = TrainConfig(dim=4, lr=0.001, epochs=30, samples_per_epoch=200, seed=3)
    _, report = Trainer(g, store, cfg, embeddings=start).fit()
    totals = [stats.total for stats in report.epochs]
    assert totals[0] > 0
    for epoch, (before, after) in enumerate(zip(totals, totals[1:]), start=1):
        assert after <= 1.05 * before, f"epoch {epoch}: {before} -> {after}"


def test_epoch_stats_are_per_pair_means(toy_graph: HeteroGraph) -> None:
    cfg = replace(TrainConfig(negatives=2, **FAST), epochs=2)
    _, report = Trainer(toy_graph, toy_store(toy_graph), cfg).fit()
    assert report.pairs_per_epoch == 180
    for stats in report.epochs:
        assert stats.total == pytest.approx(stats.ar_loss + stats.ir_loss)
        assert stats.ar_loss >= 0 and stats.ir_loss >= 0


def test_split_and_interleave(toy_graph: HeteroGraph) -> None:
    # AR mass 9 (PC 3 + APC 6), IR mass 18 (AP 6 + APA 12)
    assert split_draws(toy_store(toy_graph), 900) == (300, 600)
    assert interleave(2, 4).tolist() == [1, 0, 1, 1, 0, 1]
    assert interleave(0, 3).tolist() == [1, 1, 1]


def test_sample_counts(toy_graph: HeteroGraph) -> None:
    cfg = TrainConfig(dim=4, epochs=3, samples_per_epoch=900, lr=0.001)
    _, report = Trainer(toy_graph, toy_store(toy_graph), cfg).fit()
    counts = report.samples_per_relation
    assert report.total_samples == 2700
    assert counts["PC"] + counts["APC"] == 900
    assert counts["AP"] + counts["APA"] == 1800


def test_draws_follow_the_weight_share(toy_graph: HeteroGraph) -> None:
    store = toy_store(toy_graph)
    trainer = Trainer(toy_graph, store, TrainConfig(dim=4, negatives=1))
    n_ar, n_ir = split_draws(store, 100_000)
    draws = trainer.draw(np.random.default_rng(12), n_ar, n_ir)
    partitions = ((AR, n_ar, ("PC", "APC")), (IR, n_ir, ("AP", "APA")))
    for category, total, names in partitions:
        width = len(store.relation_names)
        drawn = np.bincount(draws[category].relations, minlength=width)
        observed = [drawn[store.relation_id(name)] for name in names]
        expected = [total * store.weight_share(name) for name in names]
        assert sum(observed) == total
        result = chisquare(observed, f_exp=expected)
        assert result.pvalue > 0.01, (category, observed, expected)


def test_same_seed_same_result(toy_graph: HeteroGraph) -> None:
    store = toy_store(toy_graph)
    cfg = TrainConfig(seed=5, **FAST)
    first, first_report = Trainer(toy_graph, store, cfg).fit()
    second, second_report = Trainer(toy_graph, store, cfg).fit()
    assert np.array_equal(first.node_vectors, second.node_vectors)
    assert first_report.to_dict(False) == second_report.to_dict(False)

    other, _ = Trainer(toy_graph, store, replace(cfg, seed=6)).fit()
    assert not np.array_equal(first.node_vectors, other.node_vectors)


def test_pair_log_replays_exactly(toy_graph: HeteroGraph) -> None:
    store = toy_store(toy_graph)
    cfg = TrainConfig(seed=8, max_row_norm=2.0, **FAST)
    initial = EmbeddingStore.initialize(
        toy_graph.node_ids, ["AP", "APA"], cfg.dim, np.random.default_rng(0)
    )
    log: list = []
    trained, _ = Trainer(
        toy_graph,
        store,
        cfg,
        embeddings=initial.copy(),
        rng=np.random.default_rng(1),
        pair_log=log,
    ).fit()
    assert len(log) == cfg.epochs * 90 * cfg.negatives

    replay = initial.copy()
    for pair, family in log:
        grad_step(replay, pair, family, cfg.loss, cfg.lr, cfg.max_row_norm)
    assert np.array_equal(replay.node_vectors, trained.node_vectors)
    assert np.array_equal(replay.relation_vectors, trained.relation_vectors)


@pytest.mark.parametrize("variant", list(Variant))
def test_pair_log_uses_the_variant_families(
    toy_graph: HeteroGraph, variant: Variant
) -> None:
    store = toy_store(toy_graph)
    log: list = []
    Trainer(
        toy_graph, store, TrainConfig(variant=variant, **FAST), pair_log=log
    ).fit()
    assignment = select_variant(variant)
    for pair, family in log:
        assert family is assignment[TOY_CATEGORIES[pair.positive.relation]]
        # Corruption keeps the relation and changes exactly one endpoint
        assert (pair.positive.u == pair.negative.u) != (
            pair.positive.v == pair.negative.v
        )


def test_linear_lr_decay(toy_graph: HeteroGraph) -> None:
    cfg = TrainConfig(lr_decay=True, lr=0.1, epochs=10, dim=4)
    trainer = Trainer(toy_graph, toy_store(toy_graph), cfg)
    assert trainer.learning_rate(0) == pytest.approx(0.1)
    assert trainer.learning_rate(5) == pytest.approx(0.05)
    assert trainer.learning_rate(9) == pytest.approx(0.01)
    constant = Trainer(toy_graph, toy_store(toy_graph), replace(cfg, lr_decay=False))
    assert constant.learning_rate(9) == pytest.approx(0.1)


def test_divergence_names_the_epoch(toy_graph: HeteroGraph) -> None:
    cfg = TrainConfig(dim=4, lr=100.0, epochs=50, variant="eu", seed=1)
    with pytest.raises(DivergenceError) as excinfo:
        Trainer(toy_graph, toy_store(toy_graph), cfg).fit()
    assert excinfo.value.epoch is not None


def test_resume_matches_an_uninterrupted_run(
    toy_graph: HeteroGraph, tmp_path: Path
) -> None:
    store = toy_store(toy_graph)
    cfg = replace(TrainConfig(seed=4, **FAST), epochs=6)
    full, full_report = Trainer(toy_graph, store, cfg).fit()

    first = Trainer(toy_graph, store, cfg)
    _, partial = first.fit(stop_after=3)
    assert len(partial.epochs) == 3
    path = first.checkpoint(tmp_path / "run" / "checkpoint.npz")

    resumed, resumed_report = Trainer.resume(path, toy_graph, store, cfg).fit()
    assert np.array_equal(resumed.node_vectors, full.node_vectors)
    assert np.array_equal(resumed.relation_vectors, full.relation_vectors)
    assert resumed_report.to_dict(False) == full_report.to_dict(False)


def test_resume_rejects_a_mismatched_config(
    toy_graph: HeteroGraph, tmp_path: Path
) -> None:
    store = toy_store(toy_graph)
    cfg = TrainConfig(seed=4, **FAST)
    trainer = Trainer(toy_graph, store, cfg)
    trainer.fit(stop_after=1)
    path = trainer.checkpoint(tmp_path / "checkpoint.npz")

    with pytest.raises(CheckpointError, match="dimension"):
        Trainer.resume(path, toy_graph, store, replace(cfg, dim=4))
    with pytest.raises(CheckpointError, match="variant"):
        Trainer.resume(path, toy_graph, store, replace(cfg, variant=Variant.TR))


def test_checkpoint_round_trip_is_byte_stable(
    toy_graph: HeteroGraph, tmp_path: Path
) -> None:
    trainer = Trainer(toy_graph, toy_store(toy_graph), TrainConfig(**FAST))
    trainer.fit(stop_after=2)
    a = trainer.checkpoint(tmp_path / "a.npz")
    b = trainer.checkpoint(tmp_path / "b.npz")
    assert a.read_bytes() == b.read_bytes()

    state = load_checkpoint(a)
    assert state.next_epoch == 2
    assert state.embeddings.node_ids == toy_graph.node_ids
    assert state.config["dim"] == 8
    vectors = trainer.embeddings.node_vectors
    assert np.array_equal(state.embeddings.node_vectors, vectors)


def test_checkpoint_path_errors(tmp_path: Path) -> None:
    with pytest.raises(CheckpointError, match="empty"):
        load_checkpoint("  ")
    with pytest.raises(CheckpointError, match="not found"):
        load_checkpoint(tmp_path / "absent.npz")
    (tmp_path / "garbage.npz").write_bytes(b"not a zip archive")
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "garbage.npz")

    g, store = two_by_two()
    trainer = Trainer(g, store, TrainConfig(dim=2, epochs=0))
    state = CheckpointState(
        embeddings=trainer.embeddings,
        next_epoch=0,
        rng_state=dict(trainer.rng.bit_generator.state),
        report=trainer.report,
        config={},
    )
    with pytest.raises(CheckpointError, match="empty"):
        save_checkpoint(state, "")


def test_make_trainer_picks_the_mode(toy_graph: HeteroGraph) -> None:
    store = toy_store(toy_graph)
    serial = make_trainer(toy_graph, store, TrainConfig(dim=4, workers=4))
    assert type(serial) is Trainer, "deterministic mode stays single-threaded"

    cfg = TrainConfig(dim=4, workers=3, deterministic=False)
    assert isinstance(make_trainer(toy_graph, store, cfg), ParallelTrainer)


def test_parallel_trainer_runs(toy_graph: HeteroGraph) -> None:
    cfg = TrainConfig(
        dim=8, epochs=3, lr=0.01, samples_per_epoch=91, workers=3, deterministic=False
    )
    embeddings, report = train(toy_graph, toy_store(toy_graph), cfg)
    assert report.mode == "parallel" and report.workers == 3
    assert report.total_samples == 3 * 91
    assert len(report.epochs) == 3
    assert embeddings.is_finite()
