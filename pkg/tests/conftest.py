"""Shared fixtures: a hand-checked bibliographic toy network."""

from pathlib import Path

import numpy as np
import pytest

from hin_embed.graph_loader import load_graph
from hin_embed.models.graph import HeteroGraph

# 4 authors, 3 papers, 2 conferences.
#
#   a1 - p1 - c1        APC instances: (a1,c1)=1 (a2,c1)=2 (a3,c1)=1
#   a2 - p1             (a3,c2)=1 (a4,c2)=1
#   a2 - p2 - c1        APA instances: a1a1=1 a1a2=1 a2a2=2 a2a3=1
#   a3 - p2             a3a3=2 a3a4=1 and the mirrored pairs
#   a3 - p3 - c2
#   a4 - p3
TOY_NODES = """\
# node_id\tnode_type
a1\tAuthor
a2\tAuthor
a3\tAuthor
a4\tAuthor
p1\tPaper
p2\tPaper
p3\tPaper
c1\tConference
c2\tConference
"""

TOY_EDGES = """\
a1\tp1\tAP
a2\tp1\tAP
a2\tp2\tAP
a3\tp2\tAP
a3\tp3\tAP
a4\tp3\tAP
p1\tc1\tPC
p2\tc1\tPC
p3\tc2\tPC
"""

TOY_SCHEMA = """\
AP\tAuthor\tPaper\tundirected
PC\tPaper\tConference\tdirected
metapath\tAPC\tAP,PC
metapath\tAPA\tAP,AP
"""

TOY_LABELS = """\
a1\tdb
a2\tdb
a3\tml
a4\tml
"""


@pytest.fixture
def toy_files(tmp_path: Path) -> dict[str, Path]:
    """The toy network written as nodes/edges/schema/labels TSV files."""
    files = {}
    for name, text in (
        ("nodes", TOY_NODES),
        ("edges", TOY_EDGES),
        ("schema", TOY_SCHEMA),
        ("labels", TOY_LABELS),
    ):
        path = tmp_path / f"{name}.tsv"
        path.write_text(text, encoding="utf-8")
        files[name] = path
    return files


@pytest.fixture
def toy_graph(toy_files: dict[str, Path]) -> HeteroGraph:
    return load_graph(toy_files["nodes"], toy_files["edges"], toy_files["schema"])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
