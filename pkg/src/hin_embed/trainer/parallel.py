"""Multi-worker trainer with lock-free updates to shared embeddings."""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..models.training import EpochStats
from .sync import Trainer, interleave

logger = logging.getLogger(__name__)


def _shares(total: int, workers: int) -> list[int]:
    return [
        (total * (i + 1)) // workers - (total * i) // workers for i in range(workers)
    ]


class ParallelTrainer(Trainer):
    """
    Trainer that splits every epoch across ``cfg.workers`` threads.

    Each worker draws its own positives and corruptions from a generator
    seeded with (seed, epoch, worker) and writes straight into the shared
    embedding matrices without locking. Concurrent writes to the same row
    may overwrite each other, so results are not bit-reproducible; use
    ``Trainer`` for that.
    """

    mode = "parallel"

    def run_epoch(self, epoch: int) -> EpochStats:
        workers = self.cfg.workers
        n_ar, n_ir = self.draws_per_partition
        ar_shares, ir_shares = _shares(n_ar, workers), _shares(n_ir, workers)
        lr = self.learning_rate(epoch)

        def work(worker: int) -> tuple[float, float, dict[str, int]]:
            rng = np.random.default_rng([self.cfg.seed, epoch, worker])
            a, i = ar_shares[worker], ir_shares[worker]
            counts = dict.fromkeys(self.store.relation_names, 0)
            ar_total, ir_total = self.apply(
                self.draw(rng, a, i), interleave(a, i), lr, counts
            )
            return ar_total, ir_total, counts

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, range(workers)))

        ar_total = sum(r[0] for r in results)
        ir_total = sum(r[1] for r in results)
        for _, _, counts in results:
            for name, count in counts.items():
                self.report.samples_per_relation[name] += count
        logger.debug("Epoch %d ran on %d workers", epoch, workers)

        pairs = self.report.pairs_per_epoch
        return EpochStats(
            epoch=epoch,
            ar_loss=ar_total / pairs,
            ir_loss=ir_total / pairs,
            total=(ar_total + ir_total) / pairs,
        )
