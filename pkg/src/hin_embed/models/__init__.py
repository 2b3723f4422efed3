"""Models package for hin-embed."""

from .embedding import EmbeddingStore
from .evaluation import (
    ClassificationScores,
    LabeledNodes,
    LinkScores,
    LinkSplit,
    VariantResult,
    VariantTable,
)
from .graph import (
    EdgeType,
    Endpoint,
    HeteroGraph,
    MetaPath,
    NodeType,
    RelationSpec,
    avg_degree,
)
from .relation import (
    CategorizationPolicy,
    Measure,
    RelationCategory,
    RelationStats,
)
from .training import EpochStats, TrainReport
from .triples import NodeRelationTriple, TriplePair, TriplePartition, TripleStore

__all__ = [
    # Graph
    "NodeType",
    "EdgeType",
    "Endpoint",
    "MetaPath",
    "RelationSpec",
    "HeteroGraph",
    "avg_degree",
    # Relations
    "RelationCategory",
    "Measure",
    "CategorizationPolicy",
    "RelationStats",
    # Triples
    "NodeRelationTriple",
    "TriplePair",
    "TriplePartition",
    "TripleStore",
    # Embeddings
    "EmbeddingStore",
    # Training
    "EpochStats",
    "TrainReport",
    # Evaluation
    "LabeledNodes",
    "LinkSplit",
    "LinkScores",
    "ClassificationScores",
    "VariantResult",
    "VariantTable",
]
