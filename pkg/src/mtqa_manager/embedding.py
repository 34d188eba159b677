"""Minor embedding of logical graphs and parallel packing onto one hardware graph.

``find_embedding`` is an overuse-weighted chain-growing heuristic: logical nodes
are placed one at a time at the root minimising the node-weighted shortest-path
cost to their already placed neighbours, and every node is torn up and re-placed
until no qubit hosts two chains. A qubit costs ``(1 + history) * base ** usage``;
after every pass that leaves overlap, ``history`` grows on the overused qubits
and ``base`` is raised, so repeated conflicts get steadily more expensive.
"""

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Set, Tuple, Union

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .exceptions import ArgumentError, ParseError
from .graphs import Edge, ProblemGraph, gen_erdos_renyi
from .kind_registry import KindRegistry
from .topology import HardwareGraph, remove_nodes, remove_nodes_and_neighbors

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_SEED_MASK = (1 << 64) - 1

# per-pass congestion escalation
HISTORY_STEP = 1.0
BASE_GROWTH = 1.5


@dataclass(frozen=True)
class Embedding:
    """Chains of physical qubits per logical node.

    ``source_edges`` are the logical couplings the chains must realise;
    ``target`` is the hardware the embedding was found on.
    """

    chains: Dict[int, FrozenSet[int]]
    source_edges: FrozenSet[Edge] = frozenset()
    target: Optional[HardwareGraph] = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "chains", {int(k): frozenset(int(q) for q in v) for k, v in self.chains.items()}
        )
        object.__setattr__(
            self, "source_edges", frozenset((min(u, v), max(u, v)) for u, v in self.source_edges)
        )

    @property
    def qubits(self) -> FrozenSet[int]:
        return frozenset().union(*self.chains.values()) if self.chains else frozenset()

    def chain_lengths(self) -> List[int]:
        return [len(self.chains[v]) for v in sorted(self.chains)]

    def to_dict(self) -> dict:
        return {
            "chains": {str(v): sorted(c) for v, c in sorted(self.chains.items())},
            "edges": [list(e) for e in sorted(self.source_edges)],
        }

    @classmethod
    def from_dict(cls, data: Mapping, target: Optional[HardwareGraph] = None) -> "Embedding":
        chains = {int(v): frozenset(int(q) for q in c) for v, c in data["chains"].items()}
        edges = frozenset((int(u), int(v)) for u, v in data.get("edges", []))
        return cls(chains, edges, target)


@dataclass(frozen=True)
class PlanEntry:
    problem_id: str
    embedding: Embedding


@dataclass(frozen=True)
class ParallelPlan:
    """Ordered packing of embeddings onto ``hardware_snapshot``."""

    entries: Tuple[PlanEntry, ...]
    isolation: bool
    hardware_snapshot: HardwareGraph = field(compare=False, repr=False)

    @property
    def order(self) -> List[str]:
        return [e.problem_id for e in self.entries]

    def instance_keys(self) -> List[str]:
        """``<problem_id>#<copy>`` per entry, copies counted in plan order."""
        seen: Dict[str, int] = {}
        keys = []
        for entry in self.entries:
            copy = seen.get(entry.problem_id, 0)
            seen[entry.problem_id] = copy + 1
            keys.append(f"{entry.problem_id}#{copy}")
        return keys

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class PlanValidation:
    ok: bool
    message: str = ""
    qubits: Tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class ChainStats:
    mean: float
    std: float
    max: int
    per_instance: Dict[str, Tuple[float, float, int]] = field(default_factory=dict)


@dataclass(frozen=True)
class CapacityRow:
    kind: str
    n: int
    seed: int
    isolation: bool
    packed: int
    chain_mean: float
    chain_std: float
    chain_max: int


# --- single embedding ---------------------------------------------------------


class _ChainSearch:
    """Working state for one embedding try over the effective hardware."""

    def __init__(self, source: ProblemGraph, h: HardwareGraph, overuse_base: float):
        self.qubit_ids = np.array(sorted(h.effective_qubits), dtype=np.int64)
        self.index = {int(q): k for k, q in enumerate(self.qubit_ids)}
        rows, cols = [], []
        for a, b in h.effective_couplers:
            ia, ib = self.index[a], self.index[b]
            rows.extend((ia, ib))
            cols.extend((ib, ia))
        self.rows = np.asarray(rows, dtype=np.int64)
        self.cols = np.asarray(cols, dtype=np.int64)
        self.size = len(self.qubit_ids)
        self.base = float(overuse_base)
        self.adj: Dict[int, List[int]] = {v: [] for v in range(source.node_count)}
        for u, v in source.sorted_edges():
            self.adj[u].append(v)
            self.adj[v].append(u)
        self.usage = np.zeros(self.size, dtype=np.int64)
        self.history = np.zeros(self.size, dtype=float)
        self.chains: Dict[int, Set[int]] = {}

    def _weights(self) -> np.ndarray:
        return (1.0 + self.history) * np.power(self.base, self.usage.astype(float))

    def _weighted_graph(self, weights: np.ndarray) -> csr_matrix:
        # Entering a qubit costs its weight, so path length counts node weights.
        shape = (self.size, self.size)
        return csr_matrix((weights[self.cols], (self.rows, self.cols)), shape=shape)

    def place(self, v: int, rng: np.random.Generator) -> bool:
        old = self.chains.pop(v, None)
        if old:
            self.usage[list(old)] -= 1
        weights = self._weights()
        placed = [u for u in self.adj[v] if u in self.chains]
        if not placed:
            # lowest-index cheapest qubit: repeated packing fills the chip from one corner
            root = int(np.flatnonzero(weights <= weights.min() * (1.0 + 1e-12))[0])
            self.chains[v] = {root}
            self.usage[root] += 1
            return True

        graph = self._weighted_graph(weights)
        score = weights.copy()
        paths = []
        for u in placed:
            sources = sorted(self.chains[u])
            dist, pred, _ = dijkstra(
                graph, directed=True, indices=sources, min_only=True, return_predecessors=True
            )
            score += np.maximum(dist - weights, 0.0)
            paths.append((set(sources), pred))
        # the root must lie outside every neighbour chain
        for sources, _ in paths:
            score[list(sources)] = np.inf
        finite = np.isfinite(score)
        if not finite.any():
            return False
        best_score = score[finite].min()
        best = np.flatnonzero(score <= best_score * (1.0 + 1e-12))
        root = int(rng.choice(best))

        chain = {root}
        for sources, pred in paths:
            q = int(pred[root])
            while q >= 0 and q not in sources:
                chain.add(q)
                q = int(pred[q])
        self.chains[v] = chain
        self.usage[list(chain)] += 1
        return True

    def overuse(self) -> int:
        return int(np.maximum(self.usage - 1, 0).sum())

    def escalate(self) -> None:
        """Charge every overused qubit and raise the overlap base for the next pass."""
        over = self.usage > 1
        self.history[over] += HISTORY_STEP * (self.usage[over] - 1)
        self.base *= BASE_GROWTH

    def to_qubits(self) -> Dict[int, Set[int]]:
        return {v: {int(self.qubit_ids[k]) for k in c} for v, c in self.chains.items()}


def _placement_order(source: ProblemGraph, rng: np.random.Generator) -> List[int]:
    """Breadth-first order from random roots, one component at a time."""
    G = source.to_networkx()
    order: List[int] = []
    visited: Set[int] = set()
    for start in rng.permutation(source.node_count).tolist():
        if start in visited:
            continue
        visited.add(start)
        queue = [start]
        while queue:
            node = queue.pop(0)
            order.append(node)
            nbrs = [u for u in sorted(G.neighbors(node)) if u not in visited]
            for u in rng.permutation(nbrs).tolist() if nbrs else []:
                visited.add(u)
                queue.append(u)
    return order


def _chain_connected(chain: Set[int], h: HardwareGraph) -> bool:
    if len(chain) <= 1:
        return True
    start = next(iter(chain))
    seen = {start}
    stack = [start]
    while stack:
        q = stack.pop()
        for r in h.neighbors(q) & chain:
            if r not in seen:
                seen.add(r)
                stack.append(r)
    return len(seen) == len(chain)


def _couples(a: Set[int], b: Set[int], h: HardwareGraph) -> bool:
    return any(h.neighbors(q) & b for q in a)


def _cleanup_chains(chains: Dict[int, Set[int]], source: ProblemGraph, h: HardwareGraph) -> None:
    """Drop chain qubits whose removal keeps the chain connected and every edge covered."""
    adj: Dict[int, List[int]] = {v: [] for v in chains}
    for u, v in source.sorted_edges():
        adj[u].append(v)
        adj[v].append(u)
    changed = True
    while changed:
        changed = False
        for v in sorted(chains):
            for q in sorted(chains[v], reverse=True):
                if len(chains[v]) == 1:
                    break
                candidate = chains[v] - {q}
                if not _chain_connected(candidate, h):
                    continue
                if all(_couples(candidate, chains[u], h) for u in adj[v]):
                    chains[v] = candidate
                    changed = True


def find_embedding(
    source: ProblemGraph,
    h: HardwareGraph,
    seed: int,
    tries: int = 10,
    timeout_ms: Optional[int] = 1000,
    max_passes: int = 32,
    overuse_base: float = 10.0,
) -> Optional[Embedding]:
    """Embed ``source`` into the effective graph of ``h``.

    Returns None when every try fails or the timeout elapses. Tries use
    generators derived from ``(seed, try_index)`` so identical inputs give
    identical embeddings as long as the timeout does not fire.
    """
    if source.node_count < 1:
        raise ArgumentError("source graph is empty")
    if not h.effective_qubits:
        raise ArgumentError("hardware graph has no effective qubits")
    if tries < 1 or max_passes < 0:
        raise ArgumentError(f"tries must be >= 1 and max_passes >= 0, got {tries}, {max_passes}")
    if source.node_count > len(h.effective_qubits):
        logger.debug(
            f"{source.node_count} logical nodes exceed {len(h.effective_qubits)} available qubits"
        )
        return None

    deadline = None if timeout_ms is None else time.perf_counter() + timeout_ms / 1000.0
    search_seed = seed & _SEED_MASK

    for attempt in range(tries):
        rng = np.random.default_rng([search_seed, attempt])
        search = _ChainSearch(source, h, overuse_base)
        order = _placement_order(source, rng)
        success = False
        overuse = -1
        for _ in range(max_passes + 1):
            if not all(search.place(v, rng) for v in order):
                break
            overuse = search.overuse()
            if overuse == 0:
                success = True
                break
            search.escalate()
            order = rng.permutation(order).tolist()
            if deadline is not None and time.perf_counter() > deadline:
                logger.debug(f"find_embedding timed out after {timeout_ms} ms (try {attempt})")
                return None
        if success:
            chains = search.to_qubits()
            _cleanup_chains(chains, source, h)
            emb = Embedding(chains, source.edges, h)
            logger.debug(
                f"Embedded {source.node_count} nodes on try {attempt}: "
                f"{len(emb.qubits)} qubits, longest chain {max(emb.chain_lengths())}"
            )
            return emb
        logger.debug(f"Embedding try {attempt} failed (overuse {overuse})")
    return None


# --- parallel packing -----------------------------------------------------------


def _child_seed(seed: int, counter: int) -> int:
    state = np.random.SeedSequence([seed & _SEED_MASK, counter]).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


def parallel_embedding_search(
    problems: Sequence[ProblemGraph],
    h: HardwareGraph,
    isolation: bool,
    seed: int,
    problem_ids: Optional[Sequence[str]] = None,
    tries: int = 10,
    timeout_ms: Optional[int] = 1000,
    max_passes: int = 32,
    overuse_base: float = 10.0,
) -> ParallelPlan:
    """Sweep ``problems`` repeatedly, embedding each on the shrinking hardware.

    After every success the chain qubits (plus their neighbours when
    ``isolation``) are removed; the remaining problems of the same sweep are
    still attempted. Stops after a sweep with no success.
    """
    if problem_ids is None:
        problem_ids = [f"p{k}" for k in range(len(problems))]
    if len(problem_ids) != len(problems):
        raise ArgumentError("problem_ids and problems differ in length")

    working = h
    entries: List[PlanEntry] = []
    calls = 0
    while problems:
        found = False
        for pid, problem in zip(problem_ids, problems):
            if not working.effective_qubits:
                break
            emb = find_embedding(
                problem,
                working,
                _child_seed(seed, calls),
                tries,
                timeout_ms,
                max_passes,
                overuse_base,
            )
            calls += 1
            if emb is None:
                continue
            entries.append(PlanEntry(pid, Embedding(emb.chains, emb.source_edges, h)))
            remove = remove_nodes_and_neighbors if isolation else remove_nodes
            working = remove(working, emb.qubits)
            found = True
        if not found:
            break

    logger.info(
        f"Packed {len(entries)} instances (isolation={isolation}), "
        f"{len(working.effective_qubits)} of {len(h.effective_qubits)} qubits left"
    )
    return ParallelPlan(tuple(entries), isolation, h)


# --- validation and statistics ---------------------------------------------------


def validate_plan(plan: ParallelPlan, h: Optional[HardwareGraph] = None) -> PlanValidation:
    """Check chains, disjointness across instances and isolation; report the first violation."""
    h = h or plan.hardware_snapshot
    owner: Dict[int, Tuple[int, int]] = {}
    keys = plan.instance_keys()
    for idx, entry in enumerate(plan.entries):
        key = keys[idx]
        for v, chain in sorted(entry.embedding.chains.items()):
            if not chain:
                return PlanValidation(False, f"{key}: chain of node {v} is empty")
            for q in sorted(chain):
                if q not in h.qubits or q in h.disabled:
                    msg = f"{key}: qubit {q} is not an effective qubit"
                    return PlanValidation(False, msg, (q,))
                if q in owner:
                    other_idx, other_v = owner[q]
                    return PlanValidation(
                        False,
                        f"qubit {q} shared by {keys[other_idx]} node {other_v} and {key} node {v}",
                        (q,),
                    )
                owner[q] = (idx, v)
            if not _chain_connected(set(chain), h):
                return PlanValidation(
                    False, f"{key}: chain of node {v} is disconnected", tuple(sorted(chain))
                )
        chains = entry.embedding.chains
        for u, v in sorted(entry.embedding.source_edges):
            if u not in chains or v not in chains:
                return PlanValidation(False, f"{key}: edge ({u}, {v}) has an unmapped endpoint")
            if not _couples(set(chains[u]), set(chains[v]), h):
                return PlanValidation(
                    False, f"{key}: no coupler realises logical edge ({u}, {v})"
                )

    if plan.isolation:
        for a, b in sorted(h.effective_couplers):
            if a in owner and b in owner and owner[a][0] != owner[b][0]:
                return PlanValidation(
                    False,
                    f"coupler ({a}, {b}) joins {keys[owner[a][0]]} and {keys[owner[b][0]]}",
                    (a, b),
                )
    return PlanValidation(True)


def _length_stats(lengths: Sequence[int]) -> Tuple[float, float, int]:
    arr = np.asarray(lengths, dtype=float)
    return float(arr.mean()), float(arr.std()), int(arr.max())


def chain_stats(plan: ParallelPlan) -> ChainStats:
    """Mean, population standard deviation and max chain length over all logical nodes."""
    if not plan.entries:
        raise ArgumentError("chain_stats needs a nonempty plan")
    per_instance = {}
    lengths: List[int] = []
    for key, entry in zip(plan.instance_keys(), plan.entries):
        entry_lengths = entry.embedding.chain_lengths()
        per_instance[key] = _length_stats(entry_lengths)
        lengths.extend(entry_lengths)
    mean, std, longest = _length_stats(lengths)
    return ChainStats(mean, std, longest, per_instance)


def capacity_sweep(
    sizes: Sequence[int],
    seeds: Sequence[int],
    hardware: HardwareGraph,
    isolation: bool,
    kind: str = "mvcp",
    edge_probability: float = 0.9,
    **search_options,
) -> List[CapacityRow]:
    """Packed-instance counts and chain statistics per (n, seed).

    One Erdős–Rényi instance per (n, seed) is packed repeatedly; GPP instances
    are embedded through their dense interaction graph.
    """
    rows = []
    for n in sizes:
        for seed in seeds:
            g = gen_erdos_renyi(n, edge_probability, seed)
            target = KindRegistry.embedding_graph(kind, g)
            plan = parallel_embedding_search(
                [target], hardware, isolation, seed, [f"{kind}-n{n}-s{seed}"], **search_options
            )
            if plan.entries:
                stats = chain_stats(plan)
                row = CapacityRow(
                    kind, n, seed, isolation, len(plan), stats.mean, stats.std, stats.max
                )
                rows.append(row)
            else:
                rows.append(CapacityRow(kind, n, seed, isolation, 0, 0.0, 0.0, 0))
            logger.info(
                f"capacity kind={kind} n={n} seed={seed} isolation={isolation}: {len(plan)}"
            )
    return rows


# --- serialization ------------------------------------------------------------


def plan_to_dict(plan: ParallelPlan, hardware_ref: Optional[str] = None) -> dict:
    return {
        "isolation": plan.isolation,
        "hardware": hardware_ref,
        "entries": [
            {"problem_id": e.problem_id, **e.embedding.to_dict()} for e in plan.entries
        ],
    }


def save_plan(plan: ParallelPlan, path: PathLike, hardware_ref: Optional[str] = None) -> None:
    text = json.dumps(plan_to_dict(plan, hardware_ref), indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_plan(path: PathLike, hardware: HardwareGraph) -> ParallelPlan:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, str(path), e.lineno) from None
    try:
        entries = tuple(
            PlanEntry(str(item["problem_id"]), Embedding.from_dict(item, hardware))
            for item in data["entries"]
        )
        isolation = bool(data["isolation"])
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"malformed plan: {e}", str(path)) from None
    return ParallelPlan(entries, isolation, hardware)


def plan_graph(plan: ParallelPlan) -> nx.Graph:
    """Hardware subgraph induced by every qubit the plan uses, nodes tagged with their instance."""
    G = nx.Graph()
    for key, entry in zip(plan.instance_keys(), plan.entries):
        for v, chain in entry.embedding.chains.items():
            for q in chain:
                G.add_node(q, instance=key, logical=v)
    used = set(G.nodes)
    G.add_edges_from(
        (a, b) for a, b in plan.hardware_snapshot.effective_couplers if a in used and b in used
    )
    return G
