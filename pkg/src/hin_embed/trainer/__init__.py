"""Training loop implementations.

``Trainer`` is the deterministic single-threaded baseline;
``ParallelTrainer`` splits epochs across lock-free worker threads.
"""

from typing import Optional

from ..config import TrainConfig
from ..models.embedding import EmbeddingStore
from ..models.graph import HeteroGraph
from ..models.training import TrainReport
from ..models.triples import TripleStore
from .checkpoint import CheckpointState, load_checkpoint, save_checkpoint
from .parallel import ParallelTrainer
from .sync import TQDM_AVAILABLE, Trainer
from .variants import select_variant, translation_relations


def make_trainer(
    graph: HeteroGraph,
    store: TripleStore,
    cfg: TrainConfig,
    progress: bool = False,
) -> Trainer:
    """Deterministic trainer, or the parallel one when allowed and configured."""
    if not cfg.deterministic and cfg.workers > 1:
        return ParallelTrainer(graph, store, cfg, progress=progress)
    return Trainer(graph, store, cfg, progress=progress)


def train(
    graph: HeteroGraph,
    store: TripleStore,
    cfg: Optional[TrainConfig] = None,
    progress: bool = False,
) -> tuple[EmbeddingStore, TrainReport]:
    """
    Train node and relation embeddings on a triple store.

    Runs the deterministic trainer unless ``cfg.deterministic`` is off and
    more than one worker is configured.

    Example:
        >>> embeddings, report = train(graph, store, TrainConfig(epochs=10))
        >>> report.final_loss

    Raises:
        SamplingError: If the store is empty
        DivergenceError: If training diverges (the message names the epoch)
    """
    return make_trainer(graph, store, cfg or TrainConfig(), progress).fit()


__all__ = [
    "train",
    "make_trainer",
    "Trainer",
    "ParallelTrainer",
    "TrainReport",
    "CheckpointState",
    "save_checkpoint",
    "load_checkpoint",
    "select_variant",
    "translation_relations",
    "TQDM_AVAILABLE",
]
