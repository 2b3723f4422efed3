"""Seeded synthetic bibliographic network with planted communities."""

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Union

import numpy as np

from .config import RunConfig, TrainConfig, write_config
from .exceptions import ConfigError
from .graph_loader import save_graph
from .models.evaluation import LabeledNodes
from .models.graph import EdgeType, HeteroGraph, MetaPath, NodeType
from .utils import safe_create_directory

logger = logging.getLogger(__name__)

CONFIG_NAME = "hin-embed.conf"
# Fresh rows sit about 24 apart in squared distance; gamma works on that scale
TRAINING = {"dim": 32, "epochs": 20, "lr": 0.01, "gamma": 10.0, "negatives": 3}


@dataclass(frozen=True)
class SyntheticSpec:
    """
    Size and noise of the generated network.

    Every paper belongs to one community, is published at one of that
    community's conferences and is written by 1-3 of its authors. Papers
    cite papers of the next community (community c cites c + 1, the last
    community cites nothing). With probability ``noise`` a conference,
    author or cited paper is drawn from anywhere instead.

    Attributes:
        communities: Number of planted communities (paper classes)
        authors_per_community: Authors in each community
        papers_per_community: Papers in each community
        conferences_per_community: Conferences in each community
        max_authors_per_paper: Upper bound of the uniform author count
        citations_per_paper: Citation draws per citing paper (0 disables PP)
        noise: Probability of a link that ignores the community structure
        seed: Generator seed
    """

    communities: int = 4
    authors_per_community: int = 100
    papers_per_community: int = 140
    conferences_per_community: int = 2
    max_authors_per_paper: int = 3
    citations_per_paper: int = 3
    noise: float = 0.02
    seed: int = 0

    def __post_init__(self) -> None:
        for name in (
            "communities",
            "authors_per_community",
            "papers_per_community",
            "conferences_per_community",
            "max_authors_per_paper",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1", key=name)
        if self.communities < 2:
            raise ConfigError("communities must be >= 2", key="communities")
        if self.citations_per_paper < 0:
            raise ConfigError(
                "citations_per_paper must be >= 0", key="citations_per_paper"
            )
        if not 0 <= self.noise < 1:
            raise ConfigError(f"noise must be in [0, 1), got {self.noise}", key="noise")

    @property
    def num_nodes(self) -> int:
        return self.communities * (
            self.authors_per_community
            + self.papers_per_community
            + self.conferences_per_community
        )

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


AUTHOR = NodeType(0, "Author")
PAPER = NodeType(1, "Paper")
CONFERENCE = NodeType(2, "Conference")
WRITES = EdgeType(0, "AP", AUTHOR, PAPER, directed=False)
PUBLISHED_AT = EdgeType(1, "PC", PAPER, CONFERENCE, directed=True)
CITES = EdgeType(2, "PP", PAPER, PAPER, directed=True)


def generate(
    spec: SyntheticSpec = SyntheticSpec(),
) -> tuple[HeteroGraph, LabeledNodes]:
    """
    Build the network and the paper community labels.

    The schema has edge types AP (undirected), PC and PP, and meta-paths
    APC and APA. PC and APC come out affiliation-shaped; AP, PP and APA
    interaction-shaped. PP joins neighbouring communities instead of
    members of one community.

    APA also pairs every author with themself (a round trip over one of
    their papers), weighted by their paper count. These self-pairs are
    path instances like any other and are extracted as triples.
    """
    rng = np.random.default_rng(spec.seed)
    k = spec.communities
    n_authors = k * spec.authors_per_community
    n_papers = k * spec.papers_per_community
    n_conferences = k * spec.conferences_per_community

    authors = [f"a{i}" for i in range(n_authors)]
    papers = [f"p{i}" for i in range(n_papers)]
    conferences = [f"c{i}" for i in range(n_conferences)]
    author_community = np.arange(n_authors) // spec.authors_per_community
    paper_community = np.arange(n_papers) // spec.papers_per_community

    def member(community: int, per_community: int, total: int) -> int:
        if rng.random() < spec.noise:
            return int(rng.integers(total))
        return community * per_community + int(rng.integers(per_community))

    edges: list[tuple[str, str, str, float]] = []
    written: set[tuple[int, int]] = set()
    cited: set[tuple[int, int]] = set()
    for p in range(n_papers):
        c = int(paper_community[p])
        venue = member(c, spec.conferences_per_community, n_conferences)
        edges.append((papers[p], conferences[venue], PUBLISHED_AT.name, 1.0))
        for _ in range(int(rng.integers(1, spec.max_authors_per_paper + 1))):
            written.add((member(c, spec.authors_per_community, n_authors), p))
        if c == k - 1:
            continue
        for _ in range(spec.citations_per_paper):
            q = member(c + 1, spec.papers_per_community, n_papers)
            if q != p:
                cited.add((p, q))

    # Every author writes at least one paper of their own community
    active = {a for a, _ in written}
    for a in range(n_authors):
        if a not in active:
            c = int(author_community[a])
            per = spec.papers_per_community
            p = c * per + int(rng.integers(per))
            written.add((a, p))

    edges.extend(
        (authors[a], papers[p], WRITES.name, 1.0) for a, p in sorted(written)
    )
    edges.extend((papers[p], papers[q], CITES.name, 1.0) for p, q in sorted(cited))
    nodes = (
        [(a, AUTHOR.name) for a in authors]
        + [(p, PAPER.name) for p in papers]
        + [(c, CONFERENCE.name) for c in conferences]
    )
    edge_types = [WRITES, PUBLISHED_AT]
    if spec.citations_per_paper:
        edge_types.append(CITES)
    graph = HeteroGraph(
        nodes=nodes,
        edges=edges,
        node_types=[AUTHOR, PAPER, CONFERENCE],
        edge_types=edge_types,
        metapaths=[
            MetaPath.from_edge_types("APC", [WRITES, PUBLISHED_AT]),
            MetaPath.from_edge_types("APA", [WRITES, WRITES]),
        ],
    )
    labels = LabeledNodes(
        labels={papers[p]: f"g{int(paper_community[p])}" for p in range(n_papers)}
    )
    logger.info(
        "Generated synthetic network: %d nodes, %d edges, %d communities",
        graph.num_nodes,
        graph.num_edges,
        k,
    )
    return graph, labels


def write_synthetic(
    directory: Union[str, Path], spec: SyntheticSpec = SyntheticSpec()
) -> dict[str, Path]:
    """
    Generate a network and write its files plus a ready-to-run config.

    The config points at the written files with absolute paths, sends
    outputs to ``<directory>/run`` and trains with ``TRAINING``. Link
    prediction holds out PP (AP when citations are off) and scores pairs
    by model distance.

    Returns:
        Map of "nodes", "edges", "schema", "labels", "config" to the
        written paths
    """
    out = safe_create_directory(directory)
    graph, labels = generate(spec)
    nodes_path, edges_path, schema_path = save_graph(graph, out)
    labels_path = out / "labels.tsv"
    labels.write_tsv(labels_path)
    config_path = out / CONFIG_NAME
    held_out = CITES if spec.citations_per_paper else WRITES
    write_config(
        RunConfig(
            nodes=nodes_path.resolve(),
            edges=edges_path.resolve(),
            schema=schema_path.resolve(),
            output_dir=(out / "run").resolve(),
            labels=labels_path.resolve(),
            train=TrainConfig(**TRAINING),
            link_relation=held_out.name,
            link_feature="score",
        ),
        config_path,
    )
    return {
        "nodes": nodes_path,
        "edges": edges_path,
        "schema": schema_path,
        "labels": labels_path,
        "config": config_path,
    }
