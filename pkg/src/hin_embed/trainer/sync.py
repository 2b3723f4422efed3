"""Deterministic single-threaded trainer."""

import logging
import time
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..config import LossFamily, TrainConfig
from ..exceptions import CheckpointError, DivergenceError, SamplingError
from ..extraction import corrupt_indices, sample_positive_indices
from ..models.embedding import EmbeddingStore
from ..models.graph import HeteroGraph
from ..models.relation import RelationCategory
from ..models.training import EpochStats, TrainReport
from ..models.triples import NodeRelationTriple, TriplePair, TripleStore
from ..scoring import step_rows
from .checkpoint import CheckpointState, load_checkpoint, save_checkpoint
from .variants import select_variant, translation_relations

try:
    from tqdm import tqdm

    TQDM_AVAILABLE = True
except ImportError:
    TQDM_AVAILABLE = False

logger = logging.getLogger(__name__)

CATEGORIES = (RelationCategory.AR, RelationCategory.IR)
PairLog = list[tuple[TriplePair, LossFamily]]


def interleave(n_ar: int, n_ir: int) -> np.ndarray:
    """
    Fixed alternation of AR (0) and IR (1) draws.

    Draw j of a partition with n draws sits at (j + 0.5) / n; merging both
    partitions by position spreads each one evenly over the epoch.
    """
    keys = np.concatenate(
        (
            (np.arange(n_ar) + 0.5) / max(n_ar, 1),
            (np.arange(n_ir) + 0.5) / max(n_ir, 1),
        )
    )
    codes = np.repeat(np.array([0, 1], dtype=np.int8), (n_ar, n_ir))
    return codes[np.argsort(keys, kind="stable")]


def split_draws(store: TripleStore, total: int) -> tuple[int, int]:
    """Split an epoch's positives between AR and IR by partition weight mass."""
    ar_mass = store.partition(RelationCategory.AR).total_weight
    ir_mass = store.partition(RelationCategory.IR).total_weight
    if ar_mass + ir_mass == 0:
        raise SamplingError("Cannot train on an empty triple store")
    n_ar = int(round(total * ar_mass / (ar_mass + ir_mass)))
    return n_ar, total - n_ar


@dataclass
class _Draws:
    """Positives of one partition and their k corruptions each."""

    heads: list[int]
    relations: list[int]
    tails: list[int]
    weights: list[float]
    neg_heads: list[list[int]]
    neg_tails: list[list[int]]


class Trainer:
    """
    SGD over (positive, corrupted) pairs, one pair at a time.

    With a fixed seed the result is bit-reproducible, including across a
    checkpoint and resume.

    Example:
        >>> trainer = Trainer(graph, store, TrainConfig(epochs=5))
        >>> embeddings, report = trainer.fit()
    """

    mode = "deterministic"

    def __init__(
        self,
        graph: HeteroGraph,
        store: TripleStore,
        cfg: TrainConfig,
        embeddings: Optional[EmbeddingStore] = None,
        rng: Optional[np.random.Generator] = None,
        start_epoch: int = 0,
        report: Optional[TrainReport] = None,
        progress: bool = False,
        pair_log: Optional[PairLog] = None,
    ) -> None:
        """
        Prepare a training run.

        Args:
            graph: Graph the triples were extracted from
            store: Partitioned positive triples
            cfg: Training settings
            embeddings: Starting embeddings; drawn from ``cfg.seed`` when None
            rng: Sampling generator; seeded from ``cfg.seed`` when None
            start_epoch: First epoch to run (for resumed runs)
            report: Report to extend (for resumed runs)
            progress: Show a tqdm progress bar when tqdm is installed
            pair_log: When given, every trained pair is appended with its family

        Raises:
            SamplingError: If the store holds no triples
        """
        cfg.validate()
        if len(store) == 0:
            raise SamplingError("Cannot train on an empty triple store")
        self.graph = graph
        self.store = store
        self.cfg = cfg
        self.assignment = select_variant(cfg)
        self.rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        relations = translation_relations(store, self.assignment)
        if embeddings is None:
            embeddings = EmbeddingStore.initialize(
                graph.node_ids, relations, cfg.dim, self.rng
            )
        elif embeddings.num_nodes != graph.num_nodes:
            raise CheckpointError(
                f"Embeddings cover {embeddings.num_nodes} nodes, graph has "
                f"{graph.num_nodes}"
            )
        self.embeddings = embeddings
        self.next_epoch = start_epoch
        self.report = report or TrainReport(
            samples_per_relation={name: 0 for name in store.relation_names}
        )
        self.report.mode = self.mode
        self.report.workers = 1 if self.mode == "deterministic" else cfg.workers
        self.progress = progress
        self.pair_log = pair_log

        self.samples_per_epoch = cfg.samples_per_epoch or len(store)
        self.draws_per_partition = split_draws(store, self.samples_per_epoch)
        self.schedule = interleave(*self.draws_per_partition)
        self.report.pairs_per_epoch = self.samples_per_epoch * cfg.negatives
        # Relation id -> row of Y, or -1 when the relation has no vector
        self.relation_rows = [
            embeddings.relation_index.get(name, -1) for name in store.relation_names
        ]

    def learning_rate(self, epoch: int) -> float:
        if not self.cfg.lr_decay or self.cfg.epochs == 0:
            return self.cfg.lr
        return self.cfg.lr * (1.0 - epoch / self.cfg.epochs)

    def fit(
        self, stop_after: Optional[int] = None
    ) -> tuple[EmbeddingStore, TrainReport]:
        """
        Run the remaining epochs.

        Args:
            stop_after: Stop once this many epochs are complete (the run can
                be checkpointed and resumed later)

        Returns:
            (embeddings, report)

        Raises:
            DivergenceError: On a non-finite loss or an epoch mean above
                ``divergence_factor`` times the first epoch's
        """
        last = self.cfg.epochs
        if stop_after is not None:
            last = min(stop_after, last)
        epochs: Iterable[int] = range(self.next_epoch, last)
        if self.progress and TQDM_AVAILABLE:
            epochs = tqdm(epochs, desc="Training", unit="epoch")

        started = time.perf_counter()
        for epoch in epochs:
            try:
                stats = self.run_epoch(epoch)
            except DivergenceError as e:
                raise DivergenceError(str(e), epoch=epoch) from e
            self._check_divergence(stats)
            self.report.epochs.append(stats)
            self.next_epoch = epoch + 1
            logger.info(
                "Epoch %d: L_EuAR=%.6g L_TrIR=%.6g total=%.6g",
                epoch,
                stats.ar_loss,
                stats.ir_loss,
                stats.total,
            )
        self.report.wall_time += time.perf_counter() - started
        return self.embeddings, self.report

    def _check_divergence(self, stats: EpochStats) -> None:
        if not np.isfinite(stats.total):
            raise DivergenceError("Non-finite epoch loss", epoch=stats.epoch)
        if self.report.epochs:
            first = self.report.epochs[0].total
            if first > 0 and stats.total > self.cfg.divergence_factor * first:
                raise DivergenceError(
                    f"Mean loss {stats.total:.6g} exceeds "
                    f"{self.cfg.divergence_factor}x the first epoch's {first:.6g}",
                    epoch=stats.epoch,
                )

    def draw(
        self, rng: np.random.Generator, n_ar: int, n_ir: int
    ) -> dict[RelationCategory, _Draws]:
        """Sample positives, then k corruptions of each, for both partitions."""
        k = self.cfg.negatives
        draws = {}
        for category, count in zip(CATEGORIES, (n_ar, n_ir)):
            if count == 0:
                continue
            part = self.store.partition(category)
            positions = sample_positive_indices(self.store, category, rng, count)
            heads = part.heads[positions]
            relations = part.relations[positions]
            tails = part.tails[positions]
            neg_heads, neg_tails, _ = corrupt_indices(
                self.graph,
                np.repeat(heads, k),
                np.repeat(relations, k),
                np.repeat(tails, k),
                rng,
                store=self.store,
                filtered=self.cfg.filtered_negatives,
            )
            draws[category] = _Draws(
                heads=heads.tolist(),
                relations=relations.tolist(),
                tails=tails.tolist(),
                weights=part.weights[positions].tolist(),
                neg_heads=neg_heads.reshape(count, k).tolist(),
                neg_tails=neg_tails.reshape(count, k).tolist(),
            )
        return draws

    def apply(
        self,
        draws: dict[RelationCategory, _Draws],
        schedule: np.ndarray,
        lr: float,
        counts: dict[str, int],
    ) -> tuple[float, float]:
        """Run SGD over the drawn pairs in schedule order.

        Positives are tallied per relation into ``counts``.

        Returns:
            Summed AR and IR pair losses
        """
        X = self.embeddings.node_vectors
        Y = self.embeddings.relation_vectors
        gamma, norm = self.cfg.gamma, self.cfg.ir_norm
        max_row_norm = self.cfg.max_row_norm
        totals = [0.0, 0.0]
        cursors = [0, 0]
        names = self.store.relation_names
        for code in schedule.tolist():
            category = CATEGORIES[code]
            batch = draws[category]
            family = self.assignment[category]
            i = cursors[code]
            cursors[code] += 1
            head, tail, rel = batch.heads[i], batch.tails[i], batch.relations[i]
            w = batch.weights[i]
            counts[names[rel]] += 1
            for neg_head, neg_tail in zip(batch.neg_heads[i], batch.neg_tails[i]):
                if self.pair_log is not None:
                    pair = self._pair(rel, w, head, tail, neg_head, neg_tail)
                    self.pair_log.append((pair, family))
                totals[code] += step_rows(
                    X,
                    Y,
                    family,
                    w,
                    head,
                    tail,
                    neg_head,
                    neg_tail,
                    self.relation_rows[rel],
                    gamma,
                    norm,
                    lr,
                    max_row_norm,
                )
        return totals[0], totals[1]

    def _pair(
        self, rel: int, w: float, head: int, tail: int, neg_head: int, neg_tail: int
    ) -> TriplePair:
        name = self.store.relation_names[rel]
        return TriplePair(
            positive=NodeRelationTriple(head, name, tail, w),
            negative=NodeRelationTriple(neg_head, name, neg_tail, w),
        )

    def run_epoch(self, epoch: int) -> EpochStats:
        draws = self.draw(self.rng, *self.draws_per_partition)
        ar_total, ir_total = self.apply(
            draws,
            self.schedule,
            self.learning_rate(epoch),
            self.report.samples_per_relation,
        )
        pairs = self.report.pairs_per_epoch
        return EpochStats(
            epoch=epoch,
            ar_loss=ar_total / pairs,
            ir_loss=ir_total / pairs,
            total=(ar_total + ir_total) / pairs,
        )

    def checkpoint(self, path: Union[str, Path]) -> Path:
        """Persist embeddings, rng state and progress for ``resume``."""
        return save_checkpoint(
            CheckpointState(
                embeddings=self.embeddings,
                next_epoch=self.next_epoch,
                rng_state=dict(self.rng.bit_generator.state),
                report=self.report,
                config=self.cfg.to_dict(),
            ),
            path,
        )

    @classmethod
    def resume(
        cls,
        path: Union[str, Path],
        graph: HeteroGraph,
        store: TripleStore,
        cfg: TrainConfig,
        progress: bool = False,
        pair_log: Optional[PairLog] = None,
    ) -> "Trainer":
        """
        Rebuild a trainer from a checkpoint so ``fit`` continues where it stopped.

        Raises:
            CheckpointError: On an empty path, a format version mismatch, or a
                dimension, node count or relation set that differs from the
                current graph and config
        """
        state = load_checkpoint(path)
        emb = state.embeddings
        if emb.dim != cfg.dim:
            raise CheckpointError(
                f"Checkpoint dimension {emb.dim} does not match configured {cfg.dim}"
            )
        if emb.num_nodes != graph.num_nodes:
            raise CheckpointError(
                f"Checkpoint has {emb.num_nodes} nodes, graph has {graph.num_nodes}"
            )
        expected = translation_relations(store, select_variant(cfg))
        if sorted(emb.relation_index) != sorted(expected):
            raise CheckpointError(
                "Checkpoint relation vectors do not match the variant"
            )

        rng = np.random.default_rng()
        rng.bit_generator.state = state.rng_state
        logger.info("Resuming from %s at epoch %d", path, state.next_epoch)
        return cls(
            graph,
            store,
            cfg,
            embeddings=emb,
            rng=rng,
            start_epoch=state.next_epoch,
            report=state.report,
            progress=progress,
            pair_log=pair_log,
        )
