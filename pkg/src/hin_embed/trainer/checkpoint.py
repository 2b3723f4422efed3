"""Binary trainer checkpoints: an ``.npz`` archive with a JSON header."""

import io
import json
import logging
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Union

import numpy as np

from ..exceptions import CheckpointError
from ..models.embedding import EmbeddingStore
from ..models.training import TrainReport

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
# Fixed member timestamps keep identical state byte-identical on disk
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


@dataclass
class CheckpointState:
    """
    Everything needed to continue a run.

    Attributes:
        embeddings: Node and relation embeddings after ``next_epoch`` epochs
        next_epoch: Index of the first epoch still to run
        rng_state: ``bit_generator.state`` of the sampling generator
        report: Progress so far
        config: Training config snapshot the state was produced with
    """

    embeddings: EmbeddingStore
    next_epoch: int
    rng_state: dict[str, Any]
    report: TrainReport
    config: dict[str, Any]


def save_checkpoint(state: CheckpointState, path: Union[str, Path]) -> Path:
    """
    Write a checkpoint.

    Raises:
        CheckpointError: If the path is empty or cannot be written
    """
    if not str(path).strip():
        raise CheckpointError("Checkpoint path is empty")
    target = Path(path)
    emb = state.embeddings
    header = {
        "format_version": FORMAT_VERSION,
        "dim": emb.dim,
        "num_nodes": emb.num_nodes,
        "num_relations": len(emb.relation_index),
        "relations": sorted(emb.relation_index, key=emb.relation_index.__getitem__),
        "next_epoch": state.next_epoch,
        "rng_state": state.rng_state,
        "report": state.report.to_dict(include_timing=False),
        "config": state.config,
    }
    arrays = {
        "header": np.array(json.dumps(header, sort_keys=True)),
        "node_ids": np.array(emb.node_ids, dtype=str),
        "node_vectors": emb.node_vectors,
        "relation_vectors": emb.relation_vectors,
    }
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with zipfile.ZipFile(target, "w", compression=zipfile.ZIP_STORED) as archive:
            for name, array in arrays.items():
                buffer = io.BytesIO()
                np.lib.format.write_array(
                    buffer, np.asanyarray(array), allow_pickle=False
                )
                info = zipfile.ZipInfo(f"{name}.npy", _ZIP_DATE)
                archive.writestr(info, buffer.getvalue())
    except OSError as e:
        raise CheckpointError(f"Cannot write checkpoint {target}: {e}") from e
    logger.info("Wrote checkpoint %s (next epoch %d)", target, state.next_epoch)
    return target


def load_checkpoint(path: Union[str, Path]) -> CheckpointState:
    """
    Read a checkpoint written by ``save_checkpoint``.

    Raises:
        CheckpointError: If the path is empty, missing, unreadable or of an
            unsupported format version
    """
    if not str(path).strip():
        raise CheckpointError("Checkpoint path is empty")
    source = Path(path)
    if not source.is_file():
        raise CheckpointError(f"Checkpoint not found: {source}")
    try:
        with np.load(source, allow_pickle=False) as archive:
            header = json.loads(archive["header"].item())
            node_ids = tuple(str(n) for n in archive["node_ids"])
            node_vectors = np.array(archive["node_vectors"], dtype=np.float64)
            relation_vectors = np.array(archive["relation_vectors"], dtype=np.float64)
    except (OSError, KeyError, ValueError, zipfile.BadZipFile) as e:
        raise CheckpointError(f"Cannot read checkpoint {source}: {e}") from e

    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"Unsupported checkpoint version {header.get('format_version')} "
            f"(expected {FORMAT_VERSION})"
        )
    if node_vectors.shape != (header["num_nodes"], header["dim"]):
        raise CheckpointError("Checkpoint node matrix does not match its header")

    relation_vectors = relation_vectors.reshape(-1, header["dim"])
    embeddings = EmbeddingStore(
        node_ids=node_ids,
        node_vectors=node_vectors,
        relation_vectors=relation_vectors,
        relation_index={name: i for i, name in enumerate(header["relations"])},
    )
    return CheckpointState(
        embeddings=embeddings,
        next_epoch=int(header["next_epoch"]),
        rng_state=header["rng_state"],
        report=TrainReport.from_dict(header["report"]),
        config=header["config"],
    )
