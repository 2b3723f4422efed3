"""
hin-embed - relation structure-aware embedding of heterogeneous networks.

Relations are split into affiliation relations (AR), embedded by weighted
Euclidean distance, and interaction relations (IR), embedded as
translations, according to their degree ratio D(r) and sparsity S(r).

Example:
    >>> from hin_embed import load_graph, analyze_all, extract_all, build_store, train
    >>> g = load_graph("nodes.tsv", "edges.tsv", "schema.tsv")
    >>> stats = analyze_all(g, g.relations())
    >>> store = build_store(
    ...     extract_all(g, g.relations()), {s.name: s.category for s in stats}
    ... )
    >>> embeddings, report = train(g, store)
"""

__version__ = "1.0.0"

# Relation analysis
from .analysis import (
    analyze_all,
    categorize,
    degree_ratio,
    measure,
    read_report,
    sparsity,
    write_report,
)

# Configuration
from .config import (
    LossConfig,
    LossFamily,
    Norm,
    RunConfig,
    TrainConfig,
    Variant,
    load_run_config,
)

# Evaluation
from .evaluation import (
    classify,
    cluster_nmi,
    compare_variants,
    link_predict,
    make_link_split,
    sweep_parameter,
)

# Exceptions
from .exceptions import (
    CheckpointError,
    ConfigError,
    DanglingEndpointError,
    DivergenceError,
    EvaluationError,
    GraphFormatError,
    HinError,
    RelationError,
    SamplingError,
    SchemaError,
    StageError,
    UnknownNodeError,
    UnknownTypeError,
)

# Triple extraction and sampling
from .extraction import (
    build_store,
    corrupt,
    extract_all,
    extract_atomic,
    extract_metapath,
    read_triples,
    sample_positive,
    write_triples,
)

# Graph loading
from .graph_loader import GraphLoader, TsvGraphLoader, load_graph, save_graph
from .manifest import RunManifest

# Domain models
from .models import (
    CategorizationPolicy,
    EdgeType,
    EmbeddingStore,
    EpochStats,
    HeteroGraph,
    LabeledNodes,
    MetaPath,
    NodeRelationTriple,
    NodeType,
    RelationCategory,
    RelationSpec,
    RelationStats,
    TrainReport,
    TriplePair,
    TripleStore,
    VariantTable,
    avg_degree,
)

# Pipeline
from .pipeline import run_pipeline, run_variants

# Scoring
from .scoring import (
    batch_loss,
    euclidean_score,
    grad_step,
    hinge,
    translation_score,
)
from .synthetic import SyntheticSpec, generate, write_synthetic

# Training
from .trainer import (
    ParallelTrainer,
    Trainer,
    load_checkpoint,
    save_checkpoint,
    select_variant,
    train,
)

__all__ = [
    "__version__",
    # Graph
    "GraphLoader",
    "TsvGraphLoader",
    "load_graph",
    "save_graph",
    "NodeType",
    "EdgeType",
    "MetaPath",
    "RelationSpec",
    "HeteroGraph",
    "avg_degree",
    # Relation analysis
    "RelationCategory",
    "CategorizationPolicy",
    "RelationStats",
    "degree_ratio",
    "sparsity",
    "measure",
    "categorize",
    "analyze_all",
    "write_report",
    "read_report",
    # Triples
    "NodeRelationTriple",
    "TriplePair",
    "TripleStore",
    "extract_atomic",
    "extract_metapath",
    "extract_all",
    "build_store",
    "sample_positive",
    "corrupt",
    "read_triples",
    "write_triples",
    # Scoring
    "EmbeddingStore",
    "euclidean_score",
    "translation_score",
    "hinge",
    "batch_loss",
    "grad_step",
    # Training
    "TrainConfig",
    "LossConfig",
    "LossFamily",
    "Norm",
    "Variant",
    "Trainer",
    "ParallelTrainer",
    "train",
    "select_variant",
    "save_checkpoint",
    "load_checkpoint",
    "EpochStats",
    "TrainReport",
    # Evaluation
    "LabeledNodes",
    "VariantTable",
    "cluster_nmi",
    "make_link_split",
    "link_predict",
    "classify",
    "compare_variants",
    "sweep_parameter",
    # Pipeline
    "RunConfig",
    "RunManifest",
    "load_run_config",
    "run_pipeline",
    "run_variants",
    "SyntheticSpec",
    "generate",
    "write_synthetic",
    # Exceptions
    "HinError",
    "GraphFormatError",
    "SchemaError",
    "UnknownTypeError",
    "UnknownNodeError",
    "DanglingEndpointError",
    "RelationError",
    "SamplingError",
    "DivergenceError",
    "CheckpointError",
    "ConfigError",
    "EvaluationError",
    "StageError",
]
