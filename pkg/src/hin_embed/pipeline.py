"""Pipeline orchestration: analyze, extract, train, eval and export.

Every stage reads its inputs from the files earlier stages left in the
output directory, so stages can run in separate invocations. A stage whose
config values, input digests and output digests all match the previous
manifest is skipped.
"""

import json
import logging
from collections.abc import Mapping, Sequence
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Optional, Union

from . import __version__
from .analysis import analyze_all, read_report, write_report
from .config import RunConfig, Variant, load_run_config
from .evaluation import (
    SWEEPABLE,
    EvaluationTasks,
    compare_variants,
    evaluate,
    link_task,
    sweep_parameter,
)
from .exceptions import ConfigError, HinError, StageError
from .extraction import build_store, extract_all, read_triples, write_triples
from .graph_loader import load_graph
from .manifest import (
    RunManifest,
    StageRecord,
    digest_inputs,
    run_timestamp,
    stage_key,
)
from .models.evaluation import LabeledNodes, VariantTable
from .models.graph import HeteroGraph, RelationSpec
from .models.triples import TripleStore
from .trainer import ParallelTrainer, Trainer, load_checkpoint, make_trainer, train
from .utils import file_digest, safe_create_directory

logger = logging.getLogger(__name__)

RELATIONS_FILE = "relations.tsv"
TRIPLES_FILE = "triples.tsv"
CHECKPOINT_FILE = "checkpoint.npz"
METRICS_FILE = "metrics.tsv"
EVAL_TSV_FILE = "eval.tsv"
EVAL_JSON_FILE = "eval.json"
LINK_SPLIT_FILE = "link_split.tsv"
EMBEDDINGS_FILE = "embeddings.tsv"
RELATION_EMBEDDINGS_FILE = "relation_embeddings.tsv"
NODE_INDEX_FILE = "node_index.tsv"

# Artifact -> stage that writes it
PRODUCERS = {
    RELATIONS_FILE: "analyze",
    TRIPLES_FILE: "extract",
    CHECKPOINT_FILE: "train",
}
STAGE_ARTIFACTS = {
    "analyze": (),
    "extract": (RELATIONS_FILE,),
    "train": (RELATIONS_FILE, TRIPLES_FILE),
    "eval": (RELATIONS_FILE, TRIPLES_FILE, CHECKPOINT_FILE),
    "export": (CHECKPOINT_FILE,),
}
ANALYZE_KEYS = ("relations", "measure", "d_threshold", "s_threshold", "overrides")
EVAL_KEYS = ("labels", "link_relation", "link_feature", "test_fraction")


class Pipeline:
    """
    One run over a RunConfig.

    Example:
        >>> manifest = Pipeline(load_run_config("run.conf")).run()
        >>> sorted(manifest.outputs)
    """

    def __init__(
        self,
        config: RunConfig,
        progress: bool = False,
        resume: Optional[Union[str, Path]] = None,
        stop_after: Optional[int] = None,
    ) -> None:
        self.config = config
        self.progress = progress
        self.resume = Path(resume) if resume is not None else None
        self.stop_after = stop_after
        self.out = safe_create_directory(config.output_dir)
        self.snapshot = config.to_dict()
        self._graph: Optional[HeteroGraph] = None
        self._store: Optional[TripleStore] = None

        previous = RunManifest.load(self.out)
        self.manifest = RunManifest(
            version=__version__,
            seed=config.train.seed,
            config=self.snapshot,
            stages=dict(previous.stages) if previous else {},
            timestamps={"created": run_timestamp(config.train.deterministic)},
        )
        self.runners: dict[str, Callable[[], list[str]]] = {
            "analyze": self.analyze,
            "extract": self.extract,
            "train": self.train,
            "eval": self.evaluate,
            "export": self.export,
        }

    # Inputs

    def _external_inputs(self) -> dict[str, Path]:
        paths = {
            "nodes": self.config.nodes,
            "edges": self.config.edges,
            "schema": self.config.schema,
        }
        if self.config.labels is not None:
            paths["labels"] = self.config.labels
        if self.config.triples is not None:
            paths["triples"] = self.config.triples
        return paths

    def _stage_inputs(self, stage: str) -> dict[str, str]:
        digests = digest_inputs(self._external_inputs())
        for name in STAGE_ARTIFACTS[stage]:
            path = self.out / name
            if not path.is_file():
                raise StageError(
                    f"Missing {name}; run the '{PRODUCERS[name]}' stage first",
                    stage=stage,
                )
            digests[name] = file_digest(path)
        return digests

    def _stage_config(self, stage: str) -> dict[str, Any]:
        train_keys = tuple(self.config.train.to_dict())
        keys: tuple[str, ...] = {
            "analyze": ANALYZE_KEYS,
            "extract": ANALYZE_KEYS + ("triples",),
            "train": train_keys,
            "eval": train_keys + EVAL_KEYS,
            "export": (),
        }[stage]
        return {key: self.snapshot.get(key) for key in sorted(set(keys))}

    @property
    def graph(self) -> HeteroGraph:
        if self._graph is None:
            self._graph = load_graph(
                self.config.nodes, self.config.edges, self.config.schema
            )
        return self._graph

    def relations(self) -> list[RelationSpec]:
        if self.config.relations:
            return [self.graph.relation(name) for name in self.config.relations]
        return self.graph.relations()

    def store(self) -> TripleStore:
        if self._store is None:
            categories = read_report(self.out / RELATIONS_FILE)
            triples = read_triples(self.out / TRIPLES_FILE, self.graph)
            self._store = build_store(triples, categories)
        return self._store

    # Stages

    def analyze(self) -> list[str]:
        stats = analyze_all(self.graph, self.relations(), self.config.train.policy)
        write_report(stats, self.out / RELATIONS_FILE)
        return [RELATIONS_FILE]

    def extract(self) -> list[str]:
        categories = read_report(self.out / RELATIONS_FILE)
        if self.config.triples is not None:
            logger.info("Reading precomputed triples from %s", self.config.triples)
            triples = read_triples(self.config.triples, self.graph)
        else:
            triples = extract_all(self.graph, self.relations())
        self._store = build_store(triples, categories)
        write_triples(triples, self.graph, self.out / TRIPLES_FILE)
        return [TRIPLES_FILE]

    def train(self) -> list[str]:
        """Train and checkpoint; returns no outputs when stopped early."""
        cfg = self.config.train
        trainer: Trainer
        if self.resume is not None:
            trainer_cls = Trainer
            if not cfg.deterministic and cfg.workers > 1:
                trainer_cls = ParallelTrainer
            trainer = trainer_cls.resume(
                self.resume, self.graph, self.store(), cfg, progress=self.progress
            )
        else:
            trainer = make_trainer(self.graph, self.store(), cfg, self.progress)
        _, report = trainer.fit(stop_after=self.stop_after)
        trainer.checkpoint(self.out / CHECKPOINT_FILE)
        report.write_metrics(self.out / METRICS_FILE)
        if trainer.next_epoch < cfg.epochs:
            logger.warning(
                "Stopped after epoch %d of %d; continue with the checkpoint",
                trainer.next_epoch,
                cfg.epochs,
            )
            return []
        return [CHECKPOINT_FILE, METRICS_FILE]

    def evaluate(self) -> list[str]:
        cfg = self.config
        seed = cfg.train.seed
        embeddings = load_checkpoint(self.out / CHECKPOINT_FILE).embeddings
        labels = LabeledNodes.read_tsv(cfg.labels) if cfg.labels else None
        outputs = [EVAL_TSV_FILE, EVAL_JSON_FILE]

        link = None
        link_embeddings = None
        if cfg.link_relation:
            store = self.store()
            link = link_task(
                self.graph,
                store.relation_names,
                store.categories,
                cfg.link_relation,
                cfg.test_fraction,
                seed,
                cfg.link_feature,
            )
            link.split.write_tsv(self.out / LINK_SPLIT_FILE)
            outputs.append(LINK_SPLIT_FILE)
            link_embeddings, _ = train(link.graph, link.store, cfg.train)
        if labels is None and link is None:
            logger.warning(
                "No labels and no link relation configured; nothing to score"
            )

        tasks = EvaluationTasks(
            labels=labels, link=link, train_fraction=1.0 - cfg.test_fraction, seed=seed
        )
        result = evaluate(
            embeddings,
            tasks,
            cfg.train.variant.value,
            link_embeddings,
            cfg.train.ir_norm,
        )
        table = VariantTable(rows=[result])
        (self.out / EVAL_TSV_FILE).write_text(table.to_tsv(), encoding="utf-8")
        (self.out / EVAL_JSON_FILE).write_text(
            json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        return outputs

    def export(self) -> list[str]:
        embeddings = load_checkpoint(self.out / CHECKPOINT_FILE).embeddings
        embeddings.export_tsv(
            self.out / EMBEDDINGS_FILE, self.out / RELATION_EMBEDDINGS_FILE
        )
        with open(self.out / NODE_INDEX_FILE, "w", encoding="utf-8", newline="\n") as f:
            for index, (node_id, node_type) in enumerate(self.graph.nodes()):
                f.write(f"{node_id}\t{index}\t{node_type.name}\n")
        return [EMBEDDINGS_FILE, RELATION_EMBEDDINGS_FILE, NODE_INDEX_FILE]

    # Driver

    def run(self) -> RunManifest:
        """
        Run the configured stages in order and write the manifest.

        Raises:
            StageError: When a stage fails or its upstream artifacts are missing
        """
        self.manifest.inputs = digest_inputs(self._external_inputs())
        for stage in self.config.stages:
            inputs = self._stage_inputs(stage)
            key = stage_key(stage, self._stage_config(stage), inputs)
            record = self.manifest.stages.get(stage)
            if record is not None and record.is_current(key, self.out):
                logger.info("Stage %s is up to date, skipping", stage)
                continue

            logger.info("Running stage %s", stage)
            try:
                outputs = self.runners[stage]()
            except StageError:
                raise
            except (HinError, OSError) as e:
                raise StageError(str(e), stage=stage) from e

            if not outputs:
                self.manifest.stages.pop(stage, None)
                self.manifest.write(self.out)
                logger.warning("Stage %s incomplete; later stages not run", stage)
                break
            self.manifest.stages[stage] = StageRecord(
                key=key,
                outputs={name: file_digest(self.out / name) for name in outputs},
            )
            self.manifest.write(self.out)
        else:
            self.manifest.write(self.out)
        return self.manifest


def resolve_config(
    config: Union[str, Path, RunConfig, None],
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Load a config file (or take a RunConfig) and apply overrides."""
    if not isinstance(config, RunConfig):
        return load_run_config(config, overrides)
    if overrides:
        return load_run_config(None, {**config.to_dict(), **overrides})
    return config


def run_pipeline(
    config: Union[str, Path, RunConfig, None],
    overrides: Optional[Mapping[str, Any]] = None,
    progress: bool = False,
    resume: Optional[Union[str, Path]] = None,
    stop_after: Optional[int] = None,
) -> RunManifest:
    """
    Run the pipeline from a config file (or RunConfig) plus overrides.

    Args:
        config: Flat ``key = value`` config file, a RunConfig, or None when
            ``overrides`` carries every required key
        overrides: Values that win over the config
        progress: Show training progress bars (tqdm)
        resume: Checkpoint to continue training from
        stop_after: Stop training after this many epochs

    Returns:
        The manifest written to the output directory

    Raises:
        ConfigError: On unknown keys, bad values or missing required keys
        StageError: When a stage fails (the message names the stage)

    Example:
        >>> from hin_embed import run_pipeline
        >>> manifest = run_pipeline("run.conf", {"seed": "7"})
    """
    config = resolve_config(config, overrides)
    logger.info(
        "Running stages %s into %s", ", ".join(config.stages), config.output_dir
    )
    return Pipeline(config, progress, resume, stop_after).run()


VARIANTS_FILE = "variants.tsv"


def parse_sweep(text: str) -> tuple[str, list[int]]:
    """
    Parse ``name=v1,v2,...`` (for example ``d=16,32,64``).

    Raises:
        ConfigError: If the text is malformed
    """
    name, sep, raw_values = text.partition("=")
    try:
        values = [int(v) for v in raw_values.split(",") if v.strip()]
    except ValueError:
        values = []
    if not sep or not name.strip() or not values:
        raise ConfigError(f"Expected name=v1,v2,... for a sweep, got '{text}'")
    return name.strip(), values


def run_variants(
    config: Union[str, Path, RunConfig, None],
    overrides: Optional[Mapping[str, Any]] = None,
    variants: Sequence[str] = tuple(v.value for v in Variant),
    sweeps: Sequence[str] = (),
) -> tuple[VariantTable, dict[str, list[tuple[int, float]]]]:
    """
    Train every variant on the same triples and score them on the same tasks.

    Writes ``variants.tsv`` (and ``sweep_<parameter>.tsv`` per sweep) to the
    output directory.

    Args:
        variants: Variant names to compare, in table order
        sweeps: ``name=v1,v2,...`` parameter sweeps scored by clustering NMI

    Raises:
        ConfigError: On bad config values, unknown variants or a sweep
            without labels
        HinError: When analysis, extraction, training or evaluation fails
    """
    config = resolve_config(config, overrides)
    configs = [replace(config.train, variant=Variant.parse(v)) for v in variants]
    parsed_sweeps = [parse_sweep(text) for text in sweeps]
    for name, _ in parsed_sweeps:
        if name not in SWEEPABLE:
            raise ConfigError(
                f"Cannot sweep '{name}' (choose from {', '.join(sorted(SWEEPABLE))})",
                key="sweep",
            )
    labels = LabeledNodes.read_tsv(config.labels) if config.labels else None
    if parsed_sweeps and labels is None:
        raise ConfigError("Parameter sweeps need a labels file", key="labels")

    out = safe_create_directory(config.output_dir)
    g = load_graph(config.nodes, config.edges, config.schema)
    specs = (
        [g.relation(name) for name in config.relations]
        if config.relations
        else g.relations()
    )
    stats = analyze_all(g, specs, config.train.policy)
    categories = {s.name: s.category for s in stats if s.category is not None}
    triples = (
        read_triples(config.triples, g) if config.triples else extract_all(g, specs)
    )
    store = build_store(triples, categories)

    link = None
    if config.link_relation:
        link = link_task(
            g,
            store.relation_names,
            store.categories,
            config.link_relation,
            config.test_fraction,
            config.train.seed,
            config.link_feature,
        )
    tasks = EvaluationTasks(
        labels=labels,
        link=link,
        train_fraction=1.0 - config.test_fraction,
        seed=config.train.seed,
    )
    table = compare_variants(g, store, configs, tasks)
    (out / VARIANTS_FILE).write_text(table.to_tsv(), encoding="utf-8")

    sweep_results: dict[str, list[tuple[int, float]]] = {}
    for name, values in parsed_sweeps:
        if labels is None:
            break
        results = sweep_parameter(g, store, config.train, name, values, labels)
        sweep_results[name] = results
        lines = [f"{name}\tnmi"]
        lines.extend(f"{value}\t{nmi:.4f}" for value, nmi in results)
        text = "\n".join(lines) + "\n"
        (out / f"sweep_{name}.tsv").write_text(text, encoding="utf-8")
    return table, sweep_results
