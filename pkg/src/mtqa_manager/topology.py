"""Physical qubit/coupler graphs: Chimera generation, file import and node removal.

Hardware file format is the graph edge list plus optional ``disabled <id>`` lines;
qubit ids are ``0 .. n-1``.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import AbstractSet, Dict, FrozenSet, Iterable, Tuple, Union

import networkx as nx

from .exceptions import ArgumentError, ValidationError
from .graphs import parse_edge_list

logger = logging.getLogger(__name__)

Coupler = Tuple[int, int]
PathLike = Union[str, Path]


@dataclass(frozen=True)
class HardwareGraph:
    """Immutable hardware graph; removal operations return new values."""

    qubits: FrozenSet[int]
    couplers: FrozenSet[Coupler]
    family_tag: str = "file"
    disabled: FrozenSet[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        qubits = frozenset(int(q) for q in self.qubits)
        couplers = set()
        for a, b in self.couplers:
            if a == b:
                raise ValidationError(f"coupler ({a}, {b}) is a self-loop")
            if a not in qubits or b not in qubits:
                raise ValidationError(f"coupler ({a}, {b}) references an unknown qubit")
            couplers.add((a, b) if a < b else (b, a))
        disabled = frozenset(int(q) for q in self.disabled)
        unknown = disabled - qubits
        if unknown:
            raise ValidationError(f"disabled qubits not in graph: {sorted(unknown)}")
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "couplers", frozenset(couplers))
        object.__setattr__(self, "disabled", disabled)

    @cached_property
    def _adjacency(self) -> Dict[int, FrozenSet[int]]:
        adj: Dict[int, set] = {q: set() for q in self.qubits}
        for a, b in self.couplers:
            adj[a].add(b)
            adj[b].add(a)
        return {q: frozenset(n) for q, n in adj.items()}

    @cached_property
    def effective_qubits(self) -> FrozenSet[int]:
        return self.qubits - self.disabled

    @cached_property
    def effective_couplers(self) -> FrozenSet[Coupler]:
        alive = self.effective_qubits
        return frozenset(c for c in self.couplers if c[0] in alive and c[1] in alive)

    def neighbors(self, qubit: int, effective: bool = True) -> FrozenSet[int]:
        """Neighbors in the effective graph (or the full graph with ``effective=False``)."""
        nbrs = self._adjacency[qubit]
        return nbrs - self.disabled if effective else nbrs

    def has_coupler(self, a: int, b: int) -> bool:
        return ((a, b) if a < b else (b, a)) in self.couplers

    def effective_graph(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(sorted(self.effective_qubits))
        G.add_edges_from(sorted(self.effective_couplers))
        return G

    def _check_known(self, nodes: AbstractSet[int]) -> None:
        unknown = set(nodes) - self.qubits
        if unknown:
            raise ArgumentError(f"unknown qubit ids: {sorted(unknown)}")


def gen_chimera(rows: int, cols: int, shore: int = 4) -> HardwareGraph:
    """Chimera C(rows, cols, shore) with the standard linear indexing.

    Qubit ``((r*cols + c)*2 + u)*shore + k``: ``u=0`` is the vertical shore
    (chained to the same position in row r+1), ``u=1`` the horizontal shore
    (chained to column c+1). Each cell is a complete bipartite K_{shore,shore}.
    """
    if rows < 1 or cols < 1 or shore < 1:
        raise ArgumentError(f"chimera dimensions must be positive, got ({rows}, {cols}, {shore})")

    def q(r: int, c: int, u: int, k: int) -> int:
        return ((r * cols + c) * 2 + u) * shore + k

    couplers = set()
    for r in range(rows):
        for c in range(cols):
            for k in range(shore):
                for k2 in range(shore):
                    couplers.add((q(r, c, 0, k), q(r, c, 1, k2)))
                if r + 1 < rows:
                    couplers.add((q(r, c, 0, k), q(r + 1, c, 0, k)))
                if c + 1 < cols:
                    couplers.add((q(r, c, 1, k), q(r, c + 1, 1, k)))
    qubits = frozenset(range(rows * cols * 2 * shore))
    return HardwareGraph(qubits, frozenset(couplers), "chimera")


def parse_topology_spec(spec: str) -> HardwareGraph:
    """``chimera:R,C[,T]`` or a hardware file path."""
    if spec.startswith("chimera:"):
        try:
            dims = [int(t) for t in spec.split(":", 1)[1].split(",")]
        except ValueError:
            raise ArgumentError(f"bad chimera spec {spec!r}") from None
        if len(dims) not in (2, 3):
            raise ArgumentError(f"chimera spec needs rows,cols[,shore]: {spec!r}")
        return gen_chimera(*dims)
    return load_hardware(spec)


def load_hardware(path: PathLike) -> HardwareGraph:
    text = Path(path).read_text(encoding="utf-8")
    node_count, edges, meta = parse_edge_list(
        text.splitlines(), str(path), extra_keywords=("disabled",), check_range=False
    )
    qubits = frozenset(range(node_count))
    for (a, b), lineno in edges:
        if a not in qubits or b not in qubits:
            raise ValidationError(
                f"{path}:{lineno}: coupler ({a}, {b}) references an unknown qubit"
            )
    disabled = set()
    for qid, lineno in meta["disabled"]:
        if qid not in qubits:
            raise ValidationError(f"{path}:{lineno}: disabled qubit {qid} is unknown")
        disabled.add(qid)
    family = meta.get("family", "file")
    logger.debug(f"Loaded hardware {path}: {node_count} qubits, {len(disabled)} disabled")
    return HardwareGraph(qubits, frozenset(e for e, _ in edges), family, frozenset(disabled))


def save_hardware(h: HardwareGraph, path: PathLike) -> None:
    size = max(h.qubits) + 1 if h.qubits else 0
    if set(range(size)) != set(h.qubits):
        raise ArgumentError("hardware files require contiguous qubit ids 0..n-1")
    lines = [f"n {size}", f"# family {h.family_tag}"]
    lines.extend(f"{a} {b}" for a, b in sorted(h.couplers))
    lines.extend(f"disabled {qid}" for qid in sorted(h.disabled))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def remove_nodes(h: HardwareGraph, nodes: Iterable[int]) -> HardwareGraph:
    """Mark ``nodes`` disabled."""
    nodes = set(nodes)
    h._check_known(nodes)
    if nodes <= h.disabled:
        return h
    return HardwareGraph(h.qubits, h.couplers, h.family_tag, h.disabled | nodes)


def remove_nodes_and_neighbors(h: HardwareGraph, nodes: Iterable[int]) -> HardwareGraph:
    """Disable ``nodes`` and every effective neighbor, leaving a buffer zone."""
    nodes = set(nodes)
    h._check_known(nodes)
    buffer = set(nodes)
    for qid in nodes:
        buffer |= h.neighbors(qid, effective=True)
    return remove_nodes(h, buffer)
