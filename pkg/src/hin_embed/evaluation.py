"""Downstream evaluation: clustering, link prediction, classification, variants."""

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from sklearn.cluster import KMeans
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import f1_score, normalized_mutual_info_score, roc_auc_score
from sklearn.model_selection import train_test_split
from sklearn.multiclass import OneVsRestClassifier

from .config import Norm, TrainConfig
from .exceptions import EvaluationError
from .extraction import build_store, extract_all
from .models.embedding import EmbeddingStore
from .models.evaluation import (
    ClassificationScores,
    LabeledNodes,
    LinkScores,
    LinkSplit,
    VariantResult,
    VariantTable,
)
from .models.graph import HeteroGraph
from .models.relation import RelationCategory
from .models.triples import TripleStore
from .trainer import train

logger = logging.getLogger(__name__)

LINK_FEATURES = ("hadamard", "score")


def nmi_score(labels_true: Sequence[int], labels_pred: Sequence[int]) -> float:
    """NMI normalized by the arithmetic mean of the two entropies."""
    return float(
        normalized_mutual_info_score(
            labels_true, labels_pred, average_method="arithmetic"
        )
    )


def auc_score(y_true: Sequence[int], scores: Sequence[float]) -> float:
    y = np.asarray(y_true)
    if np.unique(y).size < 2:
        raise EvaluationError("AUC needs both positive and negative pairs")
    return float(roc_auc_score(y, scores))


def f1_scores(y_true: Sequence[int], y_pred: Sequence[int]) -> ClassificationScores:
    """Macro- and Micro-averaged F1."""
    return ClassificationScores(
        macro_f1=float(f1_score(y_true, y_pred, average="macro", zero_division=0)),
        micro_f1=float(f1_score(y_true, y_pred, average="micro", zero_division=0)),
    )


def _logistic() -> LogisticRegression:
    return LogisticRegression(C=1.0, tol=1e-6, max_iter=1000)


def cluster_nmi(
    store: EmbeddingStore,
    labels: LabeledNodes,
    k: Optional[int] = None,
    seed: int = 0,
) -> float:
    """
    K-means the labeled nodes' embeddings and score the clusters by NMI.

    K-means uses k-means++ seeding, keeps the best of 10 restarts by
    inertia, and stops at relative tolerance 1e-4.

    Args:
        store: Embeddings covering every labeled node
        labels: Ground-truth classes
        k: Cluster count (default: number of classes)
        seed: K-means seed

    Raises:
        EvaluationError: With fewer than two classes, fewer labeled nodes
            than clusters, or a labeled node without an embedding
    """
    if labels.num_classes < 2:
        raise EvaluationError("Clustering needs at least two classes")
    k = k or labels.num_classes
    if len(labels) < k:
        raise EvaluationError(f"{len(labels)} labeled nodes cannot form {k} clusters")
    features = store.vectors_for(labels.node_ids)
    kmeans = KMeans(
        n_clusters=k, init="k-means++", n_init=10, tol=1e-4, random_state=seed
    )
    assignment = kmeans.fit_predict(features)
    score = nmi_score(labels.encoded(), assignment)
    logger.info("Clustering NMI %.4f (k=%d, %d nodes)", score, k, len(labels))
    return score


def make_link_split(
    g: HeteroGraph,
    edge_type: str,
    test_fraction: float = 0.2,
    seed: int = 0,
) -> tuple[LinkSplit, HeteroGraph]:
    """
    Hold out a share of one edge type's connected pairs.

    Negatives are distinct type-correct pairs that are not connected in
    ``g`` at all, one per positive in each fold. For an undirected edge type
    between nodes of one type, a pair and its reverse count as one link.

    Returns:
        (split, training graph without the held-out edges)

    Raises:
        UnknownTypeError: If the edge type is not declared
        EvaluationError: If the relation has fewer than two pairs or there
            are not enough non-edges to sample negatives
    """
    if not 0 < test_fraction < 1:
        raise EvaluationError(f"test_fraction must be in (0, 1), got {test_fraction}")
    et = g.edge_type(edge_type)
    symmetric = not et.directed and et.source_type == et.target_type
    src_offset = g.type_offset(et.source_type)
    dst_offset = g.type_offset(et.target_type)
    n_src, n_dst = g.count_of_type(et.source_type), g.count_of_type(et.target_type)

    coo = g.adjacency(et).tocoo()
    connected = set(zip(coo.row.tolist(), coo.col.tolist()))
    if symmetric:
        connected |= {(v, u) for u, v in connected}
        pairs = sorted({(min(u, v), max(u, v)) for u, v in connected})
    else:
        pairs = sorted(connected)
    if len(pairs) < 2:
        raise EvaluationError(f"Edge type '{edge_type}' has fewer than two links")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pairs))
    n_test = min(len(pairs) - 1, max(1, int(round(test_fraction * len(pairs)))))
    test = [pairs[i] for i in sorted(order[:n_test].tolist())]
    kept = [pairs[i] for i in sorted(order[n_test:].tolist())]

    capacity = n_src * n_dst - (n_src if symmetric else 0) - len(connected)
    if symmetric:
        capacity //= 2
    if capacity < len(pairs):
        raise EvaluationError(
            f"Edge type '{edge_type}' is too dense to sample {len(pairs)} negatives"
        )
    negatives: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    while len(negatives) < len(pairs):
        u, v = int(rng.integers(n_src)), int(rng.integers(n_dst))
        if symmetric:
            u, v = min(u, v), max(u, v)
            if u == v:
                continue
        if (u, v) in connected or (u, v) in seen:
            continue
        seen.add((u, v))
        negatives.append((u, v))

    def ids(local: Sequence[tuple[int, int]]) -> list[tuple[str, str]]:
        return [
            (g.node_ids[src_offset + u], g.node_ids[dst_offset + v]) for u, v in local
        ]

    held_out = set(test)
    if symmetric:
        held_out |= {(v, u) for u, v in test}
    src, dst, _ = g.edges_of_type(et)
    drop = np.zeros(g.num_edges, dtype=bool)
    positions = np.flatnonzero(g.edge_type_ids == et.id)
    for position, u, v in zip(positions, src.tolist(), dst.tolist()):
        drop[position] = (u - src_offset, v - dst_offset) in held_out
    train_graph = g.without_edges(drop)

    split = LinkSplit(
        relation=edge_type,
        train_positives=ids(kept),
        train_negatives=ids(negatives[: len(kept)]),
        test_positives=ids(test),
        test_negatives=ids(negatives[len(kept) :]),
        seed=seed,
    )
    logger.info(
        "Link split on %s: %d train / %d test links, %d edges dropped",
        edge_type,
        len(kept),
        len(test),
        int(drop.sum()),
    )
    return split, train_graph


def pair_features(
    store: EmbeddingStore,
    pairs: Sequence[tuple[str, str]],
    relation: str,
    feature: str = "hadamard",
    norm: Norm = Norm.L2,
) -> np.ndarray:
    """
    Features of (u, v) pairs for the link classifier.

    ``hadamard`` is the elementwise product of the two embeddings. ``score``
    is the negated model score: the translation distance when the relation
    has a vector, the squared Euclidean distance otherwise.
    """
    if feature not in LINK_FEATURES:
        raise EvaluationError(f"Unknown link feature '{feature}'")
    if not pairs:
        return np.zeros((0, store.dim if feature == "hadamard" else 1))
    X_u = store.vectors_for([u for u, _ in pairs])
    X_v = store.vectors_for([v for _, v in pairs])
    if feature == "hadamard":
        return X_u * X_v
    if store.has_relation(relation):
        z = X_u + store.relation_vectors[store.relation_row(relation)] - X_v
        if norm is Norm.L1:
            distance = np.abs(z).sum(axis=1)
        else:
            distance = np.linalg.norm(z, axis=1)
    else:
        distance = ((X_u - X_v) ** 2).sum(axis=1)
    return -distance.reshape(-1, 1)


def link_predict(
    store: EmbeddingStore,
    split: LinkSplit,
    feature: str = "hadamard",
    norm: Norm = Norm.L2,
) -> LinkScores:
    """
    Fit a logistic classifier on training pairs and score the held-out pairs.

    F1 uses the fixed 0.5 probability threshold.

    Raises:
        EvaluationError: If the test set is empty or the training labels
            have a single class
    """
    if not split.test_positives and not split.test_negatives:
        raise EvaluationError("Link prediction test set is empty")
    if not split.train_positives or not split.train_negatives:
        raise EvaluationError("Link prediction training pairs have a single class")

    def stack(
        positives: Sequence[tuple[str, str]], negatives: Sequence[tuple[str, str]]
    ) -> tuple[np.ndarray, np.ndarray]:
        features = np.vstack(
            (
                pair_features(store, positives, split.relation, feature, norm),
                pair_features(store, negatives, split.relation, feature, norm),
            )
        )
        y = np.concatenate((np.ones(len(positives)), np.zeros(len(negatives))))
        return features, y.astype(np.int64)

    X_train, y_train = stack(split.train_positives, split.train_negatives)
    X_test, y_test = stack(split.test_positives, split.test_negatives)
    classifier = _logistic().fit(X_train, y_train)
    probabilities = classifier.predict_proba(X_test)[:, 1]
    scores = LinkScores(
        auc=auc_score(y_test, probabilities),
        f1=float(f1_score(y_test, (probabilities >= 0.5).astype(np.int64))),
    )
    logger.info(
        "Link prediction on %s: AUC %.4f F1 %.4f",
        split.relation,
        scores.auc,
        scores.f1,
    )
    return scores


def classify(
    store: EmbeddingStore,
    labels: LabeledNodes,
    train_fraction: float = 0.8,
    seed: int = 0,
) -> ClassificationScores:
    """
    One-vs-rest logistic regression on a stratified split of the labeled nodes.

    Raises:
        EvaluationError: If a class has fewer than two nodes, the split
            cannot be stratified, or a class is missing from the training fold
    """
    counts: dict[str, int] = {}
    for label in labels.labels.values():
        counts[label] = counts.get(label, 0) + 1
    too_small = sorted(c for c, n in counts.items() if n < 2)
    if len(counts) < 2 or too_small:
        raise EvaluationError(
            "Classification needs at least two classes with two nodes each"
            + (f" (class '{too_small[0]}' is too small)" if too_small else "")
        )

    features = store.vectors_for(labels.node_ids)
    y = labels.encoded()
    try:
        X_train, X_test, y_train, y_test = train_test_split(
            features, y, train_size=train_fraction, stratify=y, random_state=seed
        )
    except ValueError as e:
        raise EvaluationError(f"Cannot split labeled nodes: {e}") from e
    if np.unique(y_train).size != len(counts):
        raise EvaluationError("A class is absent from the training fold")

    classifier = OneVsRestClassifier(_logistic()).fit(X_train, y_train)
    scores = f1_scores(y_test, classifier.predict(X_test))
    logger.info(
        "Classification: Macro-F1 %.4f Micro-F1 %.4f", scores.macro_f1, scores.micro_f1
    )
    return scores


@dataclass
class LinkTask:
    """A held-out split plus the triples of its training network."""

    split: LinkSplit
    graph: HeteroGraph
    store: TripleStore
    feature: str = "hadamard"


@dataclass
class EvaluationTasks:
    """
    Which evaluations ``compare_variants`` runs.

    Attributes:
        labels: Enables clustering and classification
        link: Enables link prediction
        train_fraction: Classification training share
        seed: Seed for K-means and the classification split
    """

    labels: Optional[LabeledNodes] = None
    link: Optional[LinkTask] = None
    train_fraction: float = 0.8
    seed: int = 0


def link_task(
    g: HeteroGraph,
    relations: Sequence[str],
    categories: Mapping[str, RelationCategory],
    edge_type: str,
    test_fraction: float = 0.2,
    seed: int = 0,
    feature: str = "hadamard",
) -> LinkTask:
    """Split ``edge_type`` and extract the training network's triples."""
    split, train_graph = make_link_split(g, edge_type, test_fraction, seed)
    specs = [train_graph.relation(name) for name in relations]
    store = build_store(extract_all(train_graph, specs), categories)
    return LinkTask(split=split, graph=train_graph, store=store, feature=feature)


def evaluate(
    embeddings: EmbeddingStore,
    tasks: EvaluationTasks,
    variant: str,
    link_embeddings: Optional[EmbeddingStore] = None,
    norm: Norm = Norm.L2,
) -> VariantResult:
    """Run every requested task on already-trained embeddings."""
    result = VariantResult(variant=variant)
    if tasks.labels is not None:
        result.nmi = cluster_nmi(embeddings, tasks.labels, seed=tasks.seed)
        scores = classify(embeddings, tasks.labels, tasks.train_fraction, tasks.seed)
        result.macro_f1, result.micro_f1 = scores.macro_f1, scores.micro_f1
    if tasks.link is not None and link_embeddings is not None:
        link = link_predict(link_embeddings, tasks.link.split, tasks.link.feature, norm)
        result.auc, result.f1 = link.auc, link.f1
    return result


def compare_variants(
    g: HeteroGraph,
    store: TripleStore,
    configs: Sequence[TrainConfig],
    tasks: EvaluationTasks,
) -> VariantTable:
    """
    Train each config and evaluate it on the same tasks.

    Clustering and classification use embeddings trained on ``g``; link
    prediction uses embeddings trained on the task's training network.
    One table row per config, in order.
    """
    table = VariantTable()
    for cfg in configs:
        logger.info("Training variant %s", cfg.variant.value)
        embeddings, _ = train(g, store, cfg)
        link_embeddings = None
        if tasks.link is not None:
            link_embeddings, _ = train(tasks.link.graph, tasks.link.store, cfg)
        table.rows.append(
            evaluate(embeddings, tasks, cfg.variant.value, link_embeddings, cfg.ir_norm)
        )
    return table


SWEEPABLE = {"d": "dim", "dim": "dim", "k": "negatives", "negatives": "negatives"}


def sweep_parameter(
    g: HeteroGraph,
    store: TripleStore,
    base: TrainConfig,
    parameter: str,
    values: Sequence[int],
    labels: LabeledNodes,
) -> list[tuple[int, float]]:
    """
    Clustering NMI as one training parameter varies.

    Args:
        parameter: "d"/"dim" (embedding dimension) or "k"/"negatives"
        values: Values to try, in order

    Raises:
        EvaluationError: If the parameter cannot be swept
    """
    name = SWEEPABLE.get(parameter)
    if name is None:
        raise EvaluationError(
            f"Cannot sweep '{parameter}' (choose from {', '.join(sorted(SWEEPABLE))})"
        )
    results = []
    for value in values:
        cfg = replace(base, **{name: int(value)})
        embeddings, _ = train(g, store, cfg)
        results.append((int(value), cluster_nmi(embeddings, labels, seed=base.seed)))
        logger.info("Sweep %s=%s: NMI %.4f", name, value, results[-1][1])
    return results

