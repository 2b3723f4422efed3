"""Tests for the hin-embed command line."""

from pathlib import Path

import pytest

from hin_embed import __version__
from hin_embed.cli import main
from hin_embed.config import config_keys

SMALL_SYNTH = [
    "--communities",
    "2",
    "--authors-per-community",
    "10",
    "--papers-per-community",
    "15",
    "--seed",
    "1",
]


def synthesize(directory: Path, capsys: pytest.CaptureFixture[str]) -> Path:
    assert main(["synth", str(directory), *SMALL_SYNTH]) == 0
    written = dict(
        line.split("\t") for line in capsys.readouterr().out.splitlines()
    )
    assert set(written) == {"nodes", "edges", "schema", "labels", "config"}
    return Path(written["config"])


def test_version(capsys: pytest.CaptureFixture[str]) -> None:
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert __version__ in capsys.readouterr().out


@pytest.mark.parametrize("command", ["run", "train", "variants"])
def test_help_lists_every_config_key(
    command: str, capsys: pytest.CaptureFixture[str]
) -> None:
    with pytest.raises(SystemExit) as excinfo:
        main([command, "--help"])
    assert excinfo.value.code == 0
    text = capsys.readouterr().out
    for key in config_keys():
        assert "--" + key.replace("_", "-") in text, key


def test_usage_errors_exit_with_2(capsys: pytest.CaptureFixture[str]) -> None:
    for argv in ([], ["deploy"], ["train", "--stop-after", "soon"]):
        with pytest.raises(SystemExit) as excinfo:
            main(argv)
        assert excinfo.value.code == 2, argv
    capsys.readouterr()


def test_domain_errors_exit_with_1(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    assert main(["run"]) == 1
    assert "hin-embed: error: Missing required key" in capsys.readouterr().err

    config = synthesize(tmp_path / "synth", capsys)
    assert main(["run", "-c", str(config), "--dim", "many"]) == 1
    assert "'dim'" in capsys.readouterr().err
    assert main(["run", "-c", str(tmp_path / "absent.conf")]) == 1


def test_synth_then_run(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    config = synthesize(tmp_path / "synth", capsys)
    argv = ["run", "-c", str(config), "--dim", "4", "--epochs", "2"]
    assert main(["--log-level", "WARNING", *argv]) == 0

    outputs = dict(line.split("\t") for line in capsys.readouterr().out.splitlines())
    assert {"relations.tsv", "embeddings.tsv", "eval.json"} <= set(outputs)
    assert all(len(digest) == 64 for digest in outputs.values())
    assert (tmp_path / "synth" / "run" / "manifest.json").is_file()


def test_single_stage_command(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    config = synthesize(tmp_path / "synth", capsys)
    out = tmp_path / "analysis"
    assert main(["analyze", "-c", str(config), "--output-dir", str(out)]) == 0
    assert capsys.readouterr().out.startswith("relations.tsv\t")
    assert (out / "relations.tsv").is_file()
    assert not (out / "triples.tsv").exists()

    assert main(["train", "-c", str(config), "--output-dir", str(out)]) == 1
    assert "run the 'extract' stage first" in capsys.readouterr().err


def test_variants_command(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    config = synthesize(tmp_path / "synth", capsys)
    argv = ["variants", "-c", str(config), "--dim", "4", "--epochs", "1"]
    assert main([*argv, "--variants", "rhine,eu", "--sweep", "k=1,2"]) == 0

    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "variant\tnmi\tauc\tf1\tmacro_f1\tmicro_f1"
    assert [line.split("\t")[0] for line in lines[1:3]] == ["rhine", "eu"]
    assert lines[3] == "k\tnmi"
    assert len(lines) == 6
