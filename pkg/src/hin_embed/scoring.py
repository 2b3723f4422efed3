"""Score functions, hinge losses and their analytic subgradients."""

from collections.abc import Mapping, Sequence
from typing import Optional

import numpy as np

from .config import LossConfig, LossFamily, Norm
from .exceptions import ConfigError, DivergenceError, RelationError, SamplingError
from .models.embedding import EmbeddingStore
from .models.relation import RelationCategory
from .models.triples import NodeRelationTriple, TriplePair

RHINE_ASSIGNMENT: Mapping[RelationCategory, LossFamily] = {
    RelationCategory.AR: LossFamily.EUCLIDEAN,
    RelationCategory.IR: LossFamily.TRANSLATION,
}


def euclidean_score(store: EmbeddingStore, w: float, p: int, q: int) -> float:
    """w * ||X_p - X_q||_2^2."""
    diff = store.node_vectors[p] - store.node_vectors[q]
    return float(w * np.dot(diff, diff))


def translation_score(
    store: EmbeddingStore,
    w: float,
    u: int,
    relation: str,
    v: int,
    norm: Norm = Norm.L2,
) -> float:
    """
    w * ||X_u + Y_r - X_v|| under the L1 or L2 norm.

    Raises:
        RelationError: If the relation has no translation vector
    """
    row = store.relation_row(relation)
    z = store.node_vectors[u] + store.relation_vectors[row] - store.node_vectors[v]
    return float(w * _norm(z, norm))


def _norm(z: np.ndarray, norm: Norm) -> float:
    if norm is Norm.L1:
        return float(np.abs(z).sum())
    return float(np.sqrt(np.dot(z, z)))


def hinge(gamma: float, pos_score: float, neg_score: float) -> float:
    """max(0, gamma + pos - neg)."""
    if not gamma > 0:
        raise ConfigError(f"gamma must be > 0, got {gamma}", key="gamma")
    return max(0.0, gamma + pos_score - neg_score)


def triple_score(
    store: EmbeddingStore,
    t: NodeRelationTriple,
    family: LossFamily,
    norm: Norm = Norm.L2,
) -> float:
    if family is LossFamily.EUCLIDEAN:
        return euclidean_score(store, t.weight, t.u, t.v)
    return translation_score(store, t.weight, t.u, t.relation, t.v, norm)


def pair_loss(
    store: EmbeddingStore, pair: TriplePair, family: LossFamily, cfg: LossConfig
) -> float:
    """Hinge loss of one (positive, negative) pair under one score family."""
    return hinge(
        cfg.gamma,
        triple_score(store, pair.positive, family, cfg.ir_norm),
        triple_score(store, pair.negative, family, cfg.ir_norm),
    )


def batch_loss_parts(
    store: EmbeddingStore,
    ar_pairs: Sequence[TriplePair],
    ir_pairs: Sequence[TriplePair],
    cfg: LossConfig,
    categories: Optional[Mapping[str, RelationCategory]] = None,
    assignment: Optional[Mapping[RelationCategory, LossFamily]] = None,
) -> tuple[float, float]:
    """
    Summed hinge losses of the AR pairs and of the IR pairs, separately.

    Args:
        store: Embeddings to score
        ar_pairs: Pairs of affiliation relations
        ir_pairs: Pairs of interaction relations
        cfg: Margin and translation norm
        categories: Relation categories; when given, every pair must sit in
            the list of its category
        assignment: Score family per category (default: Euclidean for AR,
            translation for IR)

    Raises:
        RelationError: If a pair is listed under the wrong category
    """
    assignment = assignment or RHINE_ASSIGNMENT
    totals = []
    for category, pairs in (
        (RelationCategory.AR, ar_pairs),
        (RelationCategory.IR, ir_pairs),
    ):
        total = 0.0
        for pair in pairs:
            name = pair.positive.relation
            if categories is not None and categories.get(name) is not category:
                raise RelationError(
                    f"Relation '{name}' is not an {category.value}", relation=name
                )
            total += pair_loss(store, pair, assignment[category], cfg)
        totals.append(total)
    return totals[0], totals[1]


def batch_loss(
    store: EmbeddingStore,
    ar_pairs: Sequence[TriplePair],
    ir_pairs: Sequence[TriplePair],
    cfg: LossConfig,
    categories: Optional[Mapping[str, RelationCategory]] = None,
    assignment: Optional[Mapping[RelationCategory, LossFamily]] = None,
) -> float:
    """L = L_EuAR + L_TrIR over the given pairs (see ``batch_loss_parts``)."""
    ar_loss, ir_loss = batch_loss_parts(
        store, ar_pairs, ir_pairs, cfg, categories, assignment
    )
    return ar_loss + ir_loss


def _translation_gradient(z: np.ndarray, w: float, norm: Norm) -> np.ndarray:
    if norm is Norm.L1:
        return w * np.sign(z)
    length = np.sqrt(np.dot(z, z))
    if length == 0:
        return np.zeros_like(z)
    return w * z / length


def step_rows(
    X: np.ndarray,
    Y: np.ndarray,
    family: LossFamily,
    w: float,
    head: int,
    tail: int,
    neg_head: int,
    neg_tail: int,
    relation_row: int,
    gamma: float,
    norm: Norm,
    lr: float,
    max_row_norm: Optional[float] = None,
) -> float:
    """
    One SGD step on a pair given as raw row indices; returns the pre-update loss.

    Both triples carry the same weight ``w``. Every gradient is computed
    before any row is written, so rows shared by the two triples receive
    the summed gradient. ``relation_row`` is ignored for the Euclidean family.
    """
    if family is LossFamily.EUCLIDEAN:
        pos_diff = X[head] - X[tail]
        neg_diff = X[neg_head] - X[neg_tail]
        pos_score = w * np.dot(pos_diff, pos_diff)
        loss = gamma + pos_score - w * np.dot(neg_diff, neg_diff)
        if not np.isfinite(loss):
            raise DivergenceError(f"Non-finite loss {loss}")
        if loss <= 0:
            return 0.0
        g_pos = 2.0 * w * pos_diff
        g_neg = 2.0 * w * neg_diff
        relation_update = None
    else:
        y = Y[relation_row]
        z_pos = X[head] + y - X[tail]
        z_neg = X[neg_head] + y - X[neg_tail]
        loss = gamma + w * _norm(z_pos, norm) - w * _norm(z_neg, norm)
        if not np.isfinite(loss):
            raise DivergenceError(f"Non-finite loss {loss}")
        if loss <= 0:
            return 0.0
        g_pos = _translation_gradient(z_pos, w, norm)
        g_neg = _translation_gradient(z_neg, w, norm)
        relation_update = g_pos - g_neg

    if not (np.isfinite(g_pos).all() and np.isfinite(g_neg).all()):
        raise DivergenceError("Non-finite gradient")

    updates = ((head, g_pos), (tail, -g_pos), (neg_head, -g_neg), (neg_tail, g_neg))
    for row, grad in updates:
        X[row] -= lr * grad
    if relation_update is not None:
        Y[relation_row] -= lr * relation_update

    if max_row_norm is not None:
        for row in {head, tail, neg_head, neg_tail}:
            _clip(X, row, max_row_norm)
        if relation_update is not None:
            _clip(Y, relation_row, max_row_norm)
    return float(loss)


def _clip(matrix: np.ndarray, row: int, max_norm: float) -> None:
    length = np.sqrt(np.dot(matrix[row], matrix[row]))
    if length > max_norm:
        matrix[row] *= max_norm / length


def grad_step(
    store: EmbeddingStore,
    pair: TriplePair,
    family: LossFamily,
    cfg: LossConfig,
    lr: float,
    max_row_norm: Optional[float] = None,
) -> float:
    """
    Apply -lr times the hinge subgradient of one pair to the rows it touches.

    An inactive hinge (loss <= 0) leaves the store unchanged. Under the
    translation family only the pair's relation row of Y is written.

    Returns:
        The pair's loss before the update (equal to ``pair_loss``)

    Raises:
        ConfigError: If lr is not positive
        DivergenceError: On a non-finite loss or gradient
        RelationError: If a translation pair's relation has no vector
        SamplingError: If the negative does not carry the positive's weight
    """
    if not lr > 0:
        raise ConfigError(f"lr must be > 0, got {lr}", key="lr")
    if pair.positive.weight != pair.negative.weight:
        raise SamplingError(
            f"Corrupted triple has weight {pair.negative.weight}, its positive "
            f"{pair.positive.weight}"
        )
    relation_row = -1
    if family is LossFamily.TRANSLATION:
        relation_row = store.relation_row(pair.positive.relation)
    return step_rows(
        store.node_vectors,
        store.relation_vectors,
        family,
        pair.positive.weight,
        pair.positive.u,
        pair.positive.v,
        pair.negative.u,
        pair.negative.v,
        relation_row,
        cfg.gamma,
        cfg.ir_norm,
        lr,
        max_row_norm,
    )
