"""Structural measures of relations and their AR/IR categorization."""

import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Optional, TextIO, Union

from .exceptions import GraphFormatError, RelationError
from .models.graph import Endpoint, HeteroGraph, RelationSpec, avg_degree
from .models.relation import (
    REPORT_COLUMNS,
    CategorizationPolicy,
    Measure,
    RelationCategory,
    RelationStats,
)
from .utils import iter_tsv

logger = logging.getLogger(__name__)


def degree_ratio_from_averages(avg_u: float, avg_v: float) -> float:
    """max(avg_u, avg_v) / min(avg_u, avg_v).

    Raises:
        RelationError: If either average is zero (the ratio is undefined)
    """
    low, high = sorted((avg_u, avg_v))
    if low <= 0:
        raise RelationError(
            "Degree ratio is undefined for a relation with no instances"
        )
    return high / low


def sparsity_from_counts(n_instances: int, n_u: int, n_v: int) -> float:
    """N_r / (N_tu * N_tv)."""
    if n_u <= 0 or n_v <= 0:
        raise RelationError("Sparsity is undefined for an endpoint type with no nodes")
    return n_instances / (n_u * n_v)


def degree_ratio(g: HeteroGraph, r: RelationSpec) -> float:
    """
    D(r): ratio of the larger to the smaller average endpoint-type degree.

    Raises:
        RelationError: If r has no instances or an endpoint type has no nodes
    """
    if g.relation_instances(r) == 0:
        raise RelationError(f"Relation '{r.name}' has no instances", relation=r.name)
    return degree_ratio_from_averages(
        avg_degree(g, r, Endpoint.SOURCE), avg_degree(g, r, Endpoint.TARGET)
    )


def sparsity(g: HeteroGraph, r: RelationSpec) -> float:
    """
    S(r): instances divided by the product of endpoint-type populations.

    Raises:
        RelationError: If an endpoint type has no nodes
    """
    n_u, n_v = g.count_of_type(r.source_type), g.count_of_type(r.target_type)
    if n_u == 0 or n_v == 0:
        raise RelationError(
            f"Relation '{r.name}' has an endpoint type with no nodes", relation=r.name
        )
    return sparsity_from_counts(g.relation_instances(r), n_u, n_v)


def categorize(
    stats: RelationStats, policy: Optional[CategorizationPolicy] = None
) -> RelationCategory:
    """
    AR when the policy's measure strictly exceeds its threshold, else IR.

    A value exactly at the threshold is IR. Manual overrides win.
    """
    policy = policy or CategorizationPolicy()
    if stats.name in policy.manual_overrides:
        return policy.manual_overrides[stats.name]

    by_degree = stats.degree_ratio > policy.d_threshold
    by_sparsity = stats.sparsity > policy.s_threshold
    if policy.measure is Measure.DEGREE_RATIO:
        affiliated = by_degree
    elif policy.measure is Measure.SPARSITY:
        affiliated = by_sparsity
    else:
        affiliated = by_degree and by_sparsity
    return RelationCategory.AR if affiliated else RelationCategory.IR


def measure(g: HeteroGraph, r: RelationSpec) -> RelationStats:
    """Compute every measure of one relation, uncategorized."""
    n_u, n_v = g.count_of_type(r.source_type), g.count_of_type(r.target_type)
    if n_u == 0 or n_v == 0:
        raise RelationError(
            f"Relation '{r.name}' has an endpoint type with no nodes", relation=r.name
        )
    # One instance count shared by every measure
    n_instances = g.relation_instances(r)
    if n_instances == 0:
        raise RelationError(f"Relation '{r.name}' has no instances", relation=r.name)
    avg_u, avg_v = n_instances / n_u, n_instances / n_v
    return RelationStats(
        relation=r,
        n_instances=n_instances,
        avg_degree_u=avg_u,
        avg_degree_v=avg_v,
        degree_ratio=degree_ratio_from_averages(avg_u, avg_v),
        sparsity=sparsity_from_counts(n_instances, n_u, n_v),
    )


def analyze_all(
    g: HeteroGraph,
    relations: Sequence[RelationSpec],
    policy: Optional[CategorizationPolicy] = None,
) -> list[RelationStats]:
    """
    Measure and categorize every relation, in input order.

    Raises:
        RelationError: If the list is empty, an override names an unknown
            relation, or a relation's measures are undefined (the message
            carries the relation name)
    """
    if not relations:
        raise RelationError("No relations to analyze")
    policy = policy or CategorizationPolicy()
    names = {r.name for r in relations}
    for name in policy.manual_overrides:
        if name not in names:
            raise RelationError(
                f"Override names unknown relation '{name}'", relation=name
            )

    results = []
    for r in relations:
        try:
            stats = measure(g, r)
        except RelationError as e:
            raise RelationError(f"{r.name}: {e}", relation=r.name) from e
        stats = stats.with_category(categorize(stats, policy))
        logger.info(
            "Relation %s: N_r=%d D=%.1f S=%.5g -> %s",
            r.name,
            stats.n_instances,
            stats.degree_ratio,
            stats.sparsity,
            stats.category.value if stats.category else "",
        )
        results.append(stats)
    return results


def format_report(stats: Sequence[RelationStats]) -> str:
    lines = ["\t".join(REPORT_COLUMNS)]
    lines.extend("\t".join(s.to_row()) for s in stats)
    return "\n".join(lines) + "\n"


def write_report(
    stats: Sequence[RelationStats], destination: Union[str, Path, TextIO]
) -> None:
    """Write the TSV report (relation, N_r, avg_deg_u, avg_deg_v, D, S, category)."""
    text = format_report(stats)
    if isinstance(destination, (str, Path)):
        Path(destination).write_text(text, encoding="utf-8")
    else:
        destination.write(text)


def read_report(path: Union[str, Path]) -> dict[str, RelationCategory]:
    """Read relation categories back from a report file."""
    categories: dict[str, RelationCategory] = {}
    for line_number, fields in iter_tsv(path):
        if fields[0] == REPORT_COLUMNS[0]:
            continue
        if len(fields) != len(REPORT_COLUMNS):
            raise GraphFormatError(
                "Report rows need 7 columns", path=path, line_number=line_number
            )
        try:
            categories[fields[0]] = RelationCategory(fields[-1])
        except ValueError:
            raise GraphFormatError(
                f"Unknown category '{fields[-1]}'", path=path, line_number=line_number
            ) from None
    return categories
