"""Tests for the staged pipeline, the run manifest it writes, and variant runs."""

import json
import logging
import shutil
from pathlib import Path
from typing import Any

import pytest

from hin_embed.config import STAGES, load_run_config
from hin_embed.exceptions import ConfigError, StageError
from hin_embed.manifest import MANIFEST_NAME, SOURCE_DATE_ENV, RunManifest
from hin_embed.pipeline import (
    CHECKPOINT_FILE,
    EMBEDDINGS_FILE,
    EVAL_JSON_FILE,
    METRICS_FILE,
    NODE_INDEX_FILE,
    RELATIONS_FILE,
    TRIPLES_FILE,
    VARIANTS_FILE,
    parse_sweep,
    run_pipeline,
    run_variants,
)
from hin_embed.synthetic import SyntheticSpec, write_synthetic


def toy_overrides(files: dict[str, Path], out: Path, **extra: Any) -> dict[str, Any]:
    overrides: dict[str, Any] = {
        "nodes": str(files["nodes"]),
        "edges": str(files["edges"]),
        "schema": str(files["schema"]),
        "labels": str(files["labels"]),
        "output_dir": str(out),
        "dim": 4,
        "epochs": 3,
        "lr": 0.01,
        "test_fraction": 0.5,
        "link_relation": "AP",
    }
    overrides.update(extra)
    return overrides


def stage_messages(caplog: pytest.LogCaptureFixture, text: str) -> list[str]:
    return [r.getMessage() for r in caplog.records if text in r.getMessage()]


def test_full_run_writes_every_artifact(
    toy_files: dict[str, Path], tmp_path: Path
) -> None:
    out = tmp_path / "run"
    manifest = run_pipeline(None, toy_overrides(toy_files, out))

    assert list(manifest.stages) == list(STAGES)
    for name in manifest.outputs:
        assert (out / name).is_file(), name
    assert {RELATIONS_FILE, TRIPLES_FILE, CHECKPOINT_FILE, METRICS_FILE} <= set(
        manifest.outputs
    )

    embeddings = (out / EMBEDDINGS_FILE).read_text(encoding="utf-8").splitlines()
    assert len(embeddings) == 9
    assert all(len(line.split("\t")) == 5 for line in embeddings)
    index = (out / NODE_INDEX_FILE).read_text(encoding="utf-8").splitlines()
    assert index[0] == "a1\t0\tAuthor" and index[-1] == "c2\t8\tConference"

    metrics = (out / METRICS_FILE).read_text(encoding="utf-8").splitlines()
    assert metrics[0] == "epoch\tL_EuAR\tL_TrIR\ttotal" and len(metrics) == 4

    result = json.loads((out / EVAL_JSON_FILE).read_text(encoding="utf-8"))
    assert result["variant"] == "rhine"
    for key in ("nmi", "auc", "f1", "macro_f1", "micro_f1"):
        assert 0 <= result[key] <= 1, key

    on_disk = RunManifest.load(out)
    assert on_disk is not None and on_disk.outputs == manifest.outputs
    assert on_disk.config["dim"] == 4
    assert set(on_disk.inputs) == {"nodes", "edges", "schema", "labels"}


def test_rerun_skips_current_stages(
    toy_files: dict[str, Path], tmp_path: Path, caplog: pytest.LogCaptureFixture
) -> None:
    out = tmp_path / "run"
    run_pipeline(None, toy_overrides(toy_files, out))

    with caplog.at_level(logging.INFO, logger="hin_embed.pipeline"):
        run_pipeline(None, toy_overrides(toy_files, out))
    assert len(stage_messages(caplog, "is up to date")) == len(STAGES)

    caplog.clear()
    with caplog.at_level(logging.INFO, logger="hin_embed.pipeline"):
        run_pipeline(None, toy_overrides(toy_files, out, epochs=4))
    skipped = stage_messages(caplog, "is up to date")
    assert skipped == [
        "Stage analyze is up to date, skipping",
        "Stage extract is up to date, skipping",
    ]


def test_edited_output_is_rebuilt(
    toy_files: dict[str, Path], tmp_path: Path
) -> None:
    out = tmp_path / "run"
    run_pipeline(None, toy_overrides(toy_files, out))
    original = (out / EMBEDDINGS_FILE).read_bytes()
    (out / EMBEDDINGS_FILE).write_text("tampered\n", encoding="utf-8")
    run_pipeline(None, toy_overrides(toy_files, out, stages="export"))
    assert (out / EMBEDDINGS_FILE).read_bytes() == original


def test_missing_upstream_artifact(toy_files: dict[str, Path], tmp_path: Path) -> None:
    with pytest.raises(StageError) as excinfo:
        run_pipeline(None, toy_overrides(toy_files, tmp_path / "run", stages="train"))
    assert excinfo.value.stage == "train"
    assert "run the 'analyze' stage first" in str(excinfo.value)


def test_stage_failure_names_the_stage(
    toy_files: dict[str, Path], tmp_path: Path
) -> None:
    overrides = toy_overrides(toy_files, tmp_path / "run", link_relation="AX")
    with pytest.raises(StageError) as excinfo:
        run_pipeline(None, overrides)
    assert excinfo.value.stage == "eval"
    manifest = RunManifest.load(tmp_path / "run")
    assert manifest is not None and "train" in manifest.stages
    assert "eval" not in manifest.stages


def test_stop_and_resume_matches_a_full_run(
    toy_files: dict[str, Path], tmp_path: Path
) -> None:
    full = tmp_path / "full"
    run_pipeline(None, toy_overrides(toy_files, full, epochs=4))

    out = tmp_path / "resumed"
    overrides = toy_overrides(toy_files, out, epochs=4)
    manifest = run_pipeline(None, overrides, stop_after=2)
    assert "train" not in manifest.stages and "eval" not in manifest.stages
    assert (out / CHECKPOINT_FILE).is_file()

    run_pipeline(None, overrides, resume=out / CHECKPOINT_FILE)
    for name in (EMBEDDINGS_FILE, METRICS_FILE, EVAL_JSON_FILE):
        assert (out / name).read_bytes() == (full / name).read_bytes(), name


def test_reruns_are_byte_identical(
    toy_files: dict[str, Path], tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    monkeypatch.delenv(SOURCE_DATE_ENV, raising=False)
    out = tmp_path / "run"
    names = (EMBEDDINGS_FILE, METRICS_FILE, EVAL_JSON_FILE, MANIFEST_NAME)

    run_pipeline(None, toy_overrides(toy_files, out))
    first = {name: (out / name).read_bytes() for name in names}
    shutil.rmtree(out)
    run_pipeline(None, toy_overrides(toy_files, out))
    for name in names:
        assert (out / name).read_bytes() == first[name], name
    manifest = RunManifest.load(out)
    assert manifest is not None and manifest.timestamps == {"created": None}


def test_precomputed_triples(toy_files: dict[str, Path], tmp_path: Path) -> None:
    first = tmp_path / "first"
    run_pipeline(None, toy_overrides(toy_files, first, stages="analyze,extract"))

    second = tmp_path / "second"
    overrides = toy_overrides(
        toy_files, second, stages="analyze,extract", triples=str(first / TRIPLES_FILE)
    )
    manifest = run_pipeline(None, overrides)
    assert "triples" in manifest.inputs
    assert (second / TRIPLES_FILE).read_bytes() == (first / TRIPLES_FILE).read_bytes()


def test_config_file_and_overrides(toy_files: dict[str, Path], tmp_path: Path) -> None:
    path = tmp_path / "run.conf"
    lines = [f"{k} = {v}" for k, v in toy_overrides(toy_files, tmp_path / "a").items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    manifest = run_pipeline(path, {"seed": "9", "stages": "analyze"})
    assert manifest.seed == 9
    assert list(manifest.stages) == ["analyze"]

    config = load_run_config(path)
    manifest = run_pipeline(config, {"output_dir": str(tmp_path / "b")})
    assert manifest.config["output_dir"] == str(tmp_path / "b")


def test_parse_sweep() -> None:
    assert parse_sweep("d=16,32, 64") == ("d", [16, 32, 64])
    for bad in ("d", "d=", "=4", "k=a,b"):
        with pytest.raises(ConfigError):
            parse_sweep(bad)


def test_run_variants_on_toy(toy_files: dict[str, Path], tmp_path: Path) -> None:
    out = tmp_path / "variants"
    table, sweeps = run_variants(
        None, toy_overrides(toy_files, out), sweeps=["k=1,2"]
    )
    assert [row.variant for row in table.rows] == ["rhine", "eu", "tr", "reversed"]
    assert (out / VARIANTS_FILE).read_text(encoding="utf-8") == table.to_tsv()
    assert [value for value, _ in sweeps["k"]] == [1, 2]
    assert (out / "sweep_k.tsv").read_text(encoding="utf-8").startswith("k\tnmi\n")


def test_run_variants_argument_errors(
    toy_files: dict[str, Path], tmp_path: Path
) -> None:
    overrides = toy_overrides(toy_files, tmp_path / "v")
    with pytest.raises(ConfigError, match="Cannot sweep"):
        run_variants(None, overrides, sweeps=["lr=1,2"])
    with pytest.raises(ConfigError, match="variant"):
        run_variants(None, overrides, variants=["rhine", "hybrid"])
    without_labels = {k: v for k, v in overrides.items() if k != "labels"}
    with pytest.raises(ConfigError, match="labels"):
        run_variants(None, without_labels, sweeps=["d=2"])


@pytest.mark.slow
def test_synthetic_communities_are_recovered(tmp_path: Path) -> None:
    paths = write_synthetic(tmp_path / "synth", SyntheticSpec())
    manifest = run_pipeline(paths["config"])

    out = Path(manifest.config["output_dir"])
    report = (out / RELATIONS_FILE).read_text(encoding="utf-8")
    categories = dict(line.split("\t")[::6] for line in report.splitlines()[1:])
    assert categories == {
        "AP": "IR",
        "PC": "AR",
        "PP": "IR",
        "APC": "AR",
        "APA": "IR",
    }

    result = json.loads((out / EVAL_JSON_FILE).read_text(encoding="utf-8"))
    assert result["nmi"] >= 0.8, result
    assert result["auc"] > 0.5, result


@pytest.mark.slow
def test_structure_aware_assignment_is_not_worse(tmp_path: Path) -> None:
    paths = write_synthetic(tmp_path / "synth", SyntheticSpec())
    table, _ = run_variants(paths["config"])
    rows = table.by_variant()
    assert len(rows) == 4
    for name in ("eu", "tr", "reversed"):
        assert rows["rhine"].nmi >= rows[name].nmi, name  # type: ignore[operator]
        assert rows["rhine"].auc >= rows[name].auc, name  # type: ignore[operator]
