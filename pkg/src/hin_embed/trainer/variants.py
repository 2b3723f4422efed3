"""Loss assignment per relation category for each model variant."""

from typing import Union

from ..config import LossFamily, TrainConfig, Variant
from ..models.relation import RelationCategory
from ..models.triples import TripleStore

Assignment = dict[RelationCategory, LossFamily]

_ASSIGNMENTS: dict[Variant, Assignment] = {
    Variant.RHINE: {
        RelationCategory.AR: LossFamily.EUCLIDEAN,
        RelationCategory.IR: LossFamily.TRANSLATION,
    },
    Variant.EU: {
        RelationCategory.AR: LossFamily.EUCLIDEAN,
        RelationCategory.IR: LossFamily.EUCLIDEAN,
    },
    Variant.TR: {
        RelationCategory.AR: LossFamily.TRANSLATION,
        RelationCategory.IR: LossFamily.TRANSLATION,
    },
    Variant.REVERSED: {
        RelationCategory.AR: LossFamily.TRANSLATION,
        RelationCategory.IR: LossFamily.EUCLIDEAN,
    },
}


def select_variant(cfg: Union[TrainConfig, Variant, str]) -> Assignment:
    """
    Score family used for AR and IR triples under a variant.

    Raises:
        ConfigError: On an unknown variant tag
    """
    variant = cfg.variant if isinstance(cfg, TrainConfig) else Variant.parse(cfg)
    return dict(_ASSIGNMENTS[variant])


def translation_relations(store: TripleStore, assignment: Assignment) -> list[str]:
    """Relations that need a translation vector, in store order."""
    return [
        name
        for name in store.relation_names
        if assignment[store.categories[name]] is LossFamily.TRANSLATION
    ]
