"""Logical problem graphs: seeded Erdős–Rényi generation and edge-list files.

Edge-list format:
    n <node_count>
    # seed <seed>                      (optional metadata)
    # edge_probability <p>             (optional metadata)
    u v                                (one edge per line, 0-indexed, u < v)
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import FrozenSet, Iterable, Tuple, Union

import networkx as nx
import numpy as np

from .exceptions import ArgumentError, ParseError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]
PathLike = Union[str, Path]

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class ProblemGraph:
    """Undirected logical graph instance."""

    node_count: int
    edges: FrozenSet[Edge]
    seed: int = 0
    edge_probability: float = 0.0

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise ArgumentError(f"node_count must be positive, got {self.node_count}")
        normalized = set()
        for u, v in self.edges:
            if u == v:
                raise ArgumentError(f"self-loop on node {u}")
            a, b = (u, v) if u < v else (v, u)
            if a < 0 or b >= self.node_count:
                raise ArgumentError(f"edge ({u}, {v}) outside [0, {self.node_count})")
            normalized.add((a, b))
        object.__setattr__(self, "edges", frozenset(normalized))

    @classmethod
    def from_edges(
        cls, node_count: int, edges: Iterable[Edge], seed: int = 0, edge_probability: float = 0.0
    ) -> "ProblemGraph":
        edge_list = list(edges)
        seen = set()
        for u, v in edge_list:
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ArgumentError(f"duplicate edge {key}")
            seen.add(key)
        return cls(node_count, frozenset(seen), seed, edge_probability)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.node_count, dtype=int)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def sorted_edges(self) -> Tuple[Edge, ...]:
        return tuple(sorted(self.edges))

    def to_networkx(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(range(self.node_count))
        G.add_edges_from(self.sorted_edges())
        return G

    @classmethod
    def from_networkx(
        cls, G: nx.Graph, seed: int = 0, edge_probability: float = 0.0
    ) -> "ProblemGraph":
        nodes = sorted(G.nodes())
        index = {node: i for i, node in enumerate(nodes)}
        edges = [(index[u], index[v]) for u, v in G.edges()]
        return cls.from_edges(len(nodes), edges, seed, edge_probability)


def gen_erdos_renyi(n: int, p: float, seed: int) -> ProblemGraph:
    """G(n, p) with candidate edges drawn in lexicographic (i < j) order.

    One uniform draw per candidate pair from a generator seeded with ``seed``,
    so identical (n, p, seed) always give identical graphs.
    """
    if n < 1:
        raise ArgumentError(f"n must be >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ArgumentError(f"p must lie in [0, 1], got {p}")

    rng = np.random.default_rng(seed & _SEED_MASK)
    rows, cols = np.triu_indices(n, k=1)
    draws = rng.random(rows.size)
    keep = draws < p
    edges = frozenset(zip(rows[keep].tolist(), cols[keep].tolist()))
    return ProblemGraph(n, edges, seed, p)


def degree_stats(g: ProblemGraph) -> Tuple[int, float]:
    """Return (max_degree, avg_degree) with avg = 2|E|/n."""
    deg = g.degrees()
    return int(deg.max(initial=0)), 2.0 * len(g.edges) / g.node_count


def save_graph(g: ProblemGraph, path: PathLike) -> None:
    lines = [f"n {g.node_count}", f"# seed {g.seed}", f"# edge_probability {g.edge_probability!r}"]
    lines.extend(f"{u} {v}" for u, v in g.sorted_edges())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_graph(path: PathLike) -> ProblemGraph:
    text = Path(path).read_text(encoding="utf-8")
    node_count, edges, meta = parse_edge_list(text.splitlines(), str(path))
    return ProblemGraph(
        node_count,
        frozenset(e for e, _ in edges),
        int(meta.get("seed", 0)),
        float(meta.get("edge_probability", 0.0)),
    )


def parse_edge_list(
    lines: Iterable[str],
    source: str = "<text>",
    extra_keywords: Tuple[str, ...] = (),
    check_range: bool = True,
):
    """Parse the shared edge-list format.

    Returns ``(node_count, edges, meta)``. ``edges`` is a list of
    ``((u, v), lineno)`` with u < v. ``meta`` holds ``# key value`` metadata
    and, for each keyword in ``extra_keywords``, the ``(id, lineno)`` pairs seen
    on ``<keyword> <id>`` lines. With ``check_range=False`` out-of-range ids are
    left for the caller to validate.
    """
    node_count = None
    edges = []
    seen = set()
    meta: dict = {kw: [] for kw in extra_keywords}

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2:
                meta[parts[0]] = parts[1]
            continue

        parts = line.split()
        if node_count is None:
            if len(parts) != 2 or parts[0] != "n":
                raise ParseError("expected header 'n <count>'", source, lineno)
            try:
                node_count = int(parts[1])
            except ValueError:
                raise ParseError(f"invalid node count {parts[1]!r}", source, lineno) from None
            if node_count < 1:
                raise ParseError("node count must be positive", source, lineno)
            continue

        if parts[0] in extra_keywords:
            if len(parts) != 2:
                raise ParseError(f"expected '{parts[0]} <id>'", source, lineno)
            try:
                meta[parts[0]].append((int(parts[1]), lineno))
            except ValueError:
                raise ParseError(f"invalid id {parts[1]!r}", source, lineno) from None
            continue

        if len(parts) != 2:
            raise ParseError(f"expected 'u v', got {line!r}", source, lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer edge {line!r}", source, lineno) from None
        if u == v:
            raise ParseError(f"self-loop on node {u}", source, lineno)
        if check_range and (min(u, v) < 0 or max(u, v) >= node_count):
            raise ParseError(f"node index outside [0, {node_count})", source, lineno)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise ParseError(f"duplicate edge {key}", source, lineno)
        seen.add(key)
        edges.append((key, lineno))

    if node_count is None:
        raise ParseError("missing header 'n <count>'", source, 1)

    return node_count, edges, meta
