"""Graph loading abstraction for hin-embed."""

import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Optional, Union

from .exceptions import (
    DanglingEndpointError,
    GraphFormatError,
    SchemaError,
    UnknownTypeError,
)
from .models.graph import EdgeType, HeteroGraph, MetaPath, NodeType
from .utils import iter_tsv, safe_create_directory

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class GraphLoader(ABC):
    """Abstract base class for graph loaders.

    Implementations read a particular on-disk layout and return a validated
    HeteroGraph.
    """

    @abstractmethod
    def load(
        self, nodes_file: PathLike, edges_file: PathLike, schema_file: PathLike
    ) -> HeteroGraph:
        """Load a graph from its three input files.

        Args:
            nodes_file: Node list
            edges_file: Edge list
            schema_file: Edge type and meta-path declarations

        Returns:
            Validated HeteroGraph

        Raises:
            HinError: If the files cannot be parsed or violate the schema
        """
        pass


class TsvGraphLoader(GraphLoader):
    """
    Loader for the tab-separated layout.

    - nodes: ``node_id<TAB>node_type``
    - edges: ``src_id<TAB>dst_id<TAB>edge_type[<TAB>weight]``
    - schema: ``edge_type<TAB>src_type<TAB>dst_type<TAB>{directed|undirected}``
      and ``metapath<TAB>NAME<TAB>edge_type1,edge_type2,...``

    Lines starting with ``#`` are comments.
    """

    def load(
        self, nodes_file: PathLike, edges_file: PathLike, schema_file: PathLike
    ) -> HeteroGraph:
        for path in (nodes_file, edges_file, schema_file):
            if not Path(path).exists():
                raise FileNotFoundError(f"Input file not found: {path}")

        node_types, edge_types, metapaths = self.read_schema(schema_file)
        types_by_name = {t.name: t for t in node_types}
        edges_by_name = {t.name: t for t in edge_types}

        nodes: list[tuple[str, str]] = []
        node_type_of: dict[str, str] = {}
        for line_number, fields in iter_tsv(nodes_file):
            if len(fields) != 2 or not fields[0]:
                raise GraphFormatError(
                    "Expected node_id<TAB>node_type",
                    path=nodes_file,
                    line_number=line_number,
                )
            node_id, type_name = fields
            if type_name not in types_by_name:
                raise UnknownTypeError(
                    f"{nodes_file}:{line_number}: unknown node type '{type_name}'"
                )
            if node_id in node_type_of:
                raise GraphFormatError(
                    f"Duplicate node id '{node_id}'",
                    path=nodes_file,
                    line_number=line_number,
                )
            node_type_of[node_id] = type_name
            nodes.append((node_id, type_name))

        edges: list[tuple[str, str, str, float]] = []
        for line_number, fields in iter_tsv(edges_file):
            if len(fields) not in (3, 4):
                raise GraphFormatError(
                    "Expected src_id<TAB>dst_id<TAB>edge_type[<TAB>weight]",
                    path=edges_file,
                    line_number=line_number,
                )
            source_id, target_id, type_name = fields[:3]
            edge_type = edges_by_name.get(type_name)
            if edge_type is None:
                raise UnknownTypeError(
                    f"{edges_file}:{line_number}: unknown edge type '{type_name}'"
                )
            weight = 1.0
            if len(fields) == 4:
                try:
                    weight = float(fields[3])
                except ValueError:
                    raise GraphFormatError(
                        f"Invalid weight '{fields[3]}'",
                        path=edges_file,
                        line_number=line_number,
                    ) from None
                if not weight > 0 or weight == float("inf"):
                    raise GraphFormatError(
                        f"Weight must be positive and finite, got {fields[3]}",
                        path=edges_file,
                        line_number=line_number,
                    )
            for node_id in (source_id, target_id):
                if node_id not in node_type_of:
                    raise DanglingEndpointError(
                        f"{edges_file}:{line_number}: edge endpoint '{node_id}' "
                        "is not in the nodes file"
                    )
            if (
                node_type_of[source_id] != edge_type.source_type.name
                or node_type_of[target_id] != edge_type.target_type.name
            ):
                raise SchemaError(
                    f"{edges_file}:{line_number}: edge type '{type_name}' connects "
                    f"{edge_type.source_type.name} to {edge_type.target_type.name}, "
                    f"got {node_type_of[source_id]} to {node_type_of[target_id]}"
                )
            edges.append((source_id, target_id, type_name, weight))

        graph = HeteroGraph(
            nodes=nodes,
            edges=edges,
            node_types=node_types,
            edge_types=edge_types,
            metapaths=metapaths,
        )
        logger.info(
            "Loaded graph with %d nodes, %d edges, %d node types, %d edge types",
            graph.num_nodes,
            graph.num_edges,
            len(node_types),
            len(edge_types),
        )
        return graph

    def read_schema(
        self, schema_file: PathLike
    ) -> tuple[list[NodeType], list[EdgeType], list[MetaPath]]:
        """Parse edge type and meta-path declarations.

        Node types are numbered in order of first mention.
        """
        node_types: dict[str, NodeType] = {}
        edge_types: dict[str, EdgeType] = {}
        pending_paths: list[tuple[int, str, list[str]]] = []

        def node_type(name: str) -> NodeType:
            if name not in node_types:
                node_types[name] = NodeType(id=len(node_types), name=name)
            return node_types[name]

        for line_number, fields in iter_tsv(schema_file):
            if fields[0] == "metapath":
                if len(fields) != 3 or not fields[1] or not fields[2]:
                    raise GraphFormatError(
                        "Expected metapath<TAB>NAME<TAB>edge_type1,edge_type2,...",
                        path=schema_file,
                        line_number=line_number,
                    )
                steps = [s.strip() for s in fields[2].split(",") if s.strip()]
                pending_paths.append((line_number, fields[1], steps))
                continue

            if len(fields) != 4 or fields[3] not in ("directed", "undirected"):
                raise GraphFormatError(
                    "Expected edge_type<TAB>src_type<TAB>dst_type"
                    "<TAB>{directed|undirected}",
                    path=schema_file,
                    line_number=line_number,
                )
            name, source, target, direction = fields
            if name in edge_types:
                raise GraphFormatError(
                    f"Duplicate edge type '{name}'",
                    path=schema_file,
                    line_number=line_number,
                )
            edge_types[name] = EdgeType(
                id=len(edge_types),
                name=name,
                source_type=node_type(source),
                target_type=node_type(target),
                directed=direction == "directed",
            )

        metapaths = []
        for line_number, name, steps in pending_paths:
            unknown = [s for s in steps if s not in edge_types]
            if unknown:
                raise UnknownTypeError(
                    f"{schema_file}:{line_number}: meta-path '{name}' references "
                    f"unknown edge type '{unknown[0]}'"
                )
            try:
                metapaths.append(
                    MetaPath.from_edge_types(name, [edge_types[s] for s in steps])
                )
            except SchemaError as e:
                raise SchemaError(f"{schema_file}:{line_number}: {e}") from e

        return list(node_types.values()), list(edge_types.values()), metapaths


def load_graph(
    nodes_file: PathLike,
    edges_file: PathLike,
    schema_file: PathLike,
    loader: Optional[GraphLoader] = None,
) -> HeteroGraph:
    """
    Load a HeteroGraph from files.

    Example:
        >>> from hin_embed import load_graph
        >>> g = load_graph("nodes.tsv", "edges.tsv", "schema.tsv")
    """
    return (loader or TsvGraphLoader()).load(nodes_file, edges_file, schema_file)


def save_graph(g: HeteroGraph, directory: PathLike) -> tuple[Path, Path, Path]:
    """
    Write a graph in the TSV layout ``TsvGraphLoader`` reads.

    Returns:
        Paths of the nodes, edges and schema files
    """
    out = safe_create_directory(directory)
    nodes_path, edges_path, schema_path = (
        out / "nodes.tsv",
        out / "edges.tsv",
        out / "schema.tsv",
    )
    with open(nodes_path, "w", encoding="utf-8", newline="\n") as f:
        for node_id, node_type in g.nodes():
            f.write(f"{node_id}\t{node_type.name}\n")
    with open(edges_path, "w", encoding="utf-8", newline="\n") as f:
        for source_id, target_id, type_name, weight in g.edges():
            f.write(f"{source_id}\t{target_id}\t{type_name}\t{weight!r}\n")
    with open(schema_path, "w", encoding="utf-8", newline="\n") as f:
        for edge_type in g.edge_types:
            direction = "directed" if edge_type.directed else "undirected"
            f.write(
                f"{edge_type.name}\t{edge_type.source_type.name}\t"
                f"{edge_type.target_type.name}\t{direction}\n"
            )
        for metapath in g.metapaths:
            steps = ",".join(e.name for e in metapath.edge_types)
            f.write(f"metapath\t{metapath.name}\t{steps}\n")
    return nodes_path, edges_path, schema_path
