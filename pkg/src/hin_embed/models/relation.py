"""Relation measurement and categorization models."""

from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Optional

from ..exceptions import ConfigError
from .graph import RelationSpec


class RelationCategory(str, Enum):
    """Affiliation (one-centered-by-another) or interaction (peer-to-peer)."""

    AR = "AR"
    IR = "IR"


class Measure(str, Enum):
    """Structural measure a categorization policy reads."""

    DEGREE_RATIO = "degree_ratio"
    SPARSITY = "sparsity"
    BOTH = "both"


@dataclass(frozen=True)
class CategorizationPolicy:
    """
    Rule turning relation measures into AR/IR categories.

    A relation is AR when the selected measure strictly exceeds its
    threshold (with ``both``, both must). Manual overrides win.

    Attributes:
        measure: Which measure to threshold
        d_threshold: Degree-ratio threshold, > 1
        s_threshold: Sparsity threshold, in (0, 1)
        manual_overrides: Relation name -> forced category
    """

    measure: Measure = Measure.DEGREE_RATIO
    d_threshold: float = 10.0
    s_threshold: float = 0.005
    manual_overrides: Mapping[str, RelationCategory] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "measure", Measure(self.measure))
        if not self.d_threshold > 1:
            raise ConfigError(
                f"d_threshold must be > 1, got {self.d_threshold}", key="d_threshold"
            )
        if not 0 < self.s_threshold < 1:
            raise ConfigError(
                f"s_threshold must be in (0, 1), got {self.s_threshold}",
                key="s_threshold",
            )
        object.__setattr__(
            self,
            "manual_overrides",
            {
                name: RelationCategory(category)
                for name, category in self.manual_overrides.items()
            },
        )

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CategorizationPolicy":
        """Create a policy from a flat configuration dictionary."""
        overrides = data.get("overrides", {})
        if isinstance(overrides, str):
            overrides = parse_overrides(overrides)
        return cls(
            measure=Measure(data.get("measure", Measure.DEGREE_RATIO.value)),
            d_threshold=float(data.get("d_threshold", 10.0)),
            s_threshold=float(data.get("s_threshold", 0.005)),
            manual_overrides=overrides,
        )


def parse_overrides(text: str) -> dict[str, RelationCategory]:
    """Parse ``"AP:AR,PT:IR"`` into an override map."""
    overrides: dict[str, RelationCategory] = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        name, sep, category = item.partition(":")
        if not sep:
            raise ConfigError(
                f"Override '{item}' must look like NAME:AR", key="overrides"
            )
        try:
            overrides[name.strip()] = RelationCategory(category.strip().upper())
        except ValueError:
            raise ConfigError(
                f"Override '{item}' names unknown category '{category}'",
                key="overrides",
            ) from None
    return overrides


@dataclass(frozen=True)
class RelationStats:
    """
    Structural measures of one relation.

    Attributes:
        relation: The measured relation
        n_instances: N_r, instances counted with multiplicity
        avg_degree_u: Average degree of the source node type
        avg_degree_v: Average degree of the target node type
        degree_ratio: D(r) = max(avg degrees) / min(avg degrees), >= 1
        sparsity: S(r) = N_r / (N_tu * N_tv), > 0
        category: AR or IR once categorized
    """

    relation: RelationSpec
    n_instances: int
    avg_degree_u: float
    avg_degree_v: float
    degree_ratio: float
    sparsity: float
    category: Optional[RelationCategory] = None

    @property
    def name(self) -> str:
        return self.relation.name

    def with_category(self, category: RelationCategory) -> "RelationStats":
        return replace(self, category=category)

    def to_row(self) -> list[str]:
        """Report row with degrees and D at 1 decimal, S at 5 significant digits."""
        return [
            self.name,
            str(self.n_instances),
            f"{self.avg_degree_u:.1f}",
            f"{self.avg_degree_v:.1f}",
            f"{self.degree_ratio:.1f}",
            f"{self.sparsity:.5g}",
            self.category.value if self.category is not None else "",
        ]


REPORT_COLUMNS = ("relation", "N_r", "avg_deg_u", "avg_deg_v", "D", "S", "category")
