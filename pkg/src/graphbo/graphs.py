"""Undirected graph values, random generators, and edge-list serialization.

Graphs are immutable once constructed: node relabeling, edge mutation and
the like are done by building a new :class:`Graph`. This keeps candidate
sets safe to share across threads and worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np

from .exceptions import GraphParseError

__all__ = [
    "Graph",
    "CandidateSet",
    "SynthSpec",
    "generate_er",
    "generate_ba",
    "synth_dataset",
    "read_graphs",
    "write_graphs",
]


@dataclass(frozen=True)
class Graph:
    """An undirected graph on nodes ``0..node_count-1``.

    Edges are stored as a sorted tuple of ``(u, v)`` pairs with ``u < v``;
    the undirected representation makes symmetry structural. Optional
    integer node tags and real-valued graph attributes ride along for
    feature extraction.
    """

    node_count: int
    edges: tuple[tuple[int, int], ...]
    node_tags: dict[int, int] | None = None
    graph_attrs: dict[str, float] | None = None

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        normalized = []
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise ValueError(f"edge ({u}, {v}) endpoint out of range")
            normalized.append((u, v) if u < v else (v, u))
        normalized.sort()
        for a, b in zip(normalized, normalized[1:]):
            if a == b:
                raise ValueError(f"duplicate edge {a}")
        object.__setattr__(self, "edges", tuple(normalized))
        if self.node_tags is not None:
            for node in self.node_tags:
                if not 0 <= node < self.node_count:
                    raise ValueError(f"tagged node {node} out of range")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.node_count, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def adjacency_matrix(self) -> np.ndarray:
        """Dense boolean adjacency matrix."""
        adj = np.zeros((self.node_count, self.node_count), dtype=bool)
        for u, v in self.edges:
            adj[u, v] = True
            adj[v, u] = True
        return adj

    def neighbors(self, node: int) -> list[int]:
        return [v if u == node else u for u, v in self.edges if node in (u, v)]

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(self.edges)
        return g

    @classmethod
    def from_networkx(cls, g: nx.Graph, node_tags=None, graph_attrs=None) -> "Graph":
        """Convert a networkx graph whose nodes are ``0..n-1``."""
        n = g.number_of_nodes()
        if sorted(g.nodes()) != list(range(n)):
            mapping = {node: i for i, node in enumerate(sorted(g.nodes()))}
            g = nx.relabel_nodes(g, mapping)
        return cls(n, tuple(g.edges()), node_tags=node_tags, graph_attrs=graph_attrs)


@dataclass(frozen=True)
class CandidateSet:
    """An ordered, id-addressable collection of candidate graphs."""

    graphs: tuple[Graph, ...]
    ids: tuple[str, ...]

    def __post_init__(self):
        if not self.graphs:
            raise ValueError("candidate set must be non-empty")
        if len(self.graphs) != len(self.ids):
            raise ValueError("graphs and ids must have equal length")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("candidate ids must be unique")

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)


def generate_er(n: int, p: float, seed: int) -> Graph:
    """Erdős–Rényi G(n, p): each unordered pair is an edge with probability p."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must be in [0, 1], got {p}")
    return Graph.from_networkx(nx.gnp_random_graph(n, p, seed=seed))


def generate_ba(n: int, m: int, seed: int) -> Graph:
    """Barabási–Albert preferential attachment; final edge count (n-m)*m."""
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    return Graph.from_networkx(nx.barabasi_albert_graph(n, m, seed=seed))


@dataclass(frozen=True)
class SynthSpec:
    """Parameter lists for the mixed ER/BA synthetic candidate family.

    ``count_per_family`` graphs are produced for each of the two families
    (ER first, then BA), with parameters cycled over the cross product of
    the given value lists.
    """

    n_values: tuple[int, ...] = (20, 30, 40, 50, 60)
    p_values: tuple[float, ...] = (0.1, 0.15, 0.2, 0.25, 0.3)
    m_values: tuple[int, ...] = (1, 2, 3, 4, 5)
    count_per_family: int = 250
    seed: int = 0


def synth_dataset(spec: SynthSpec) -> CandidateSet:
    """Generate the mixed ER/BA dataset described by ``spec``."""
    if not spec.n_values or not spec.p_values or not spec.m_values:
        raise ValueError("parameter value lists must be non-empty")
    if spec.count_per_family < 1:
        raise ValueError("count_per_family must be >= 1")
    graphs = []
    ids = []
    rng = np.random.default_rng(spec.seed)
    for i in range(spec.count_per_family):
        n = spec.n_values[i % len(spec.n_values)]
        p = spec.p_values[(i // len(spec.n_values)) % len(spec.p_values)]
        graphs.append(generate_er(n, p, seed=int(rng.integers(2**31 - 1))))
        ids.append(f"er-{i}")
    for i in range(spec.count_per_family):
        n = spec.n_values[i % len(spec.n_values)]
        m = spec.m_values[(i // len(spec.n_values)) % len(spec.m_values)]
        m = min(m, n - 1)
        graphs.append(generate_ba(n, m, seed=int(rng.integers(2**31 - 1))))
        ids.append(f"ba-{i}")
    return CandidateSet(tuple(graphs), tuple(ids))


def write_graphs(candidates: CandidateSet, path) -> None:
    """Write a candidate set in the block edge-list format.

    Each block starts with ``# id=<id>`` and ``# nodes=<n>`` header lines,
    followed by one ``u v`` edge per line, optional ``t <node> <tag>`` node
    tag lines and ``a <name> <value>`` graph attribute lines. Blocks are
    separated by a blank line.
    """
    with open(path, "w") as fh:
        for gid, graph in zip(candidates.ids, candidates.graphs):
            fh.write(f"# id={gid}\n")
            fh.write(f"# nodes={graph.node_count}\n")
            for u, v in graph.edges:
                fh.write(f"{u} {v}\n")
            if graph.node_tags:
                for node in sorted(graph.node_tags):
                    fh.write(f"t {node} {graph.node_tags[node]}\n")
            if graph.graph_attrs:
                for name in sorted(graph.graph_attrs):
                    fh.write(f"a {name} {graph.graph_attrs[name]!r}\n")
            fh.write("\n")


def read_graphs(path) -> CandidateSet:
    """Read a candidate set written by :func:`write_graphs`."""
    graphs: list[Graph] = []
    ids: list[str] = []
    block: _Block | None = None

    def close(block):
        if block is None:
            return
        try:
            graphs.append(
                Graph(
                    block.nodes,
                    tuple(block.edges),
                    node_tags=block.tags or None,
                    graph_attrs=block.attrs or None,
                )
            )
        except ValueError as exc:
            raise GraphParseError(str(exc), path=path, line=block.start_line) from exc
        ids.append(block.gid)

    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                close(block)
                block = None
                continue
            if line.startswith("# id="):
                close(block)
                block = _Block(gid=line[5:].strip(), start_line=lineno)
                continue
            if block is None:
                raise GraphParseError("expected '# id=' header", path=path, line=lineno)
            if line.startswith("# nodes="):
                try:
                    block.nodes = int(line[8:])
                except ValueError:
                    raise GraphParseError("bad node count", path=path, line=lineno)
                continue
            parts = line.split()
            try:
                if parts[0] == "t":
                    block.tags[int(parts[1])] = int(parts[2])
                elif parts[0] == "a":
                    block.attrs[parts[1]] = float(parts[2])
                else:
                    u, v = int(parts[0]), int(parts[1])
                    key = (u, v) if u < v else (v, u)
                    if key in block.seen:
                        raise GraphParseError(
                            f"duplicate edge {key}", path=path, line=lineno
                        )
                    block.seen.add(key)
                    block.edges.append(key)
            except (IndexError, ValueError) as exc:
                raise GraphParseError(f"bad record {line!r}", path=path, line=lineno) from exc
    close(block)
    if not graphs:
        raise GraphParseError("file contains no graphs", path=path)
    return CandidateSet(tuple(graphs), tuple(ids))


class _Block:
    def __init__(self, gid, start_line):
        self.gid = gid
        self.start_line = start_line
        self.nodes = 0
        self.edges: list[tuple[int, int]] = []
        self.seen: set[tuple[int, int]] = set()
        self.tags: dict[int, int] = {}
        self.attrs: dict[str, float] = {}
