"""MVCP and GPP objectives, QUBO/Ising conversion and exhaustive oracles.

Conventions used across the package:
    * quadratic keys are ``(i, j)`` with ``i < j``;
    * binary 1 corresponds to spin +1 (``s = 2x - 1``);
    * assignments enumerate lexicographically with ``x[0]`` most significant.
"""

import itertools
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import ArgumentError, CapacityError, ParameterError, ParseError, ShapeError
from .graphs import ProblemGraph, degree_stats

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]
PathLike = Union[str, Path]

MAX_EXACT_SIZE = 24
_CHUNK_BITS = 18


def _normalize_pairs(terms: Mapping[Pair, float]) -> Dict[Pair, float]:
    out: Dict[Pair, float] = {}
    for (i, j), value in terms.items():
        if i == j:
            raise ArgumentError(f"quadratic key ({i}, {j}) is a diagonal entry")
        key = (i, j) if i < j else (j, i)
        out[key] = out.get(key, 0.0) + float(value)
    return out


def _prune(terms: Dict, tol: float = 0.0) -> Dict:
    return {k: v for k, v in terms.items() if abs(v) > tol}


@dataclass(frozen=True)
class Qubo:
    """Binary quadratic objective ``Σ linear_i x_i + Σ quadratic_ij x_i x_j + offset``."""

    size: int
    linear: Dict[int, float] = field(default_factory=dict)
    quadratic: Dict[Pair, float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self) -> None:
        if self.size < 0:
            raise ArgumentError(f"size must be non-negative, got {self.size}")
        quadratic = _normalize_pairs(self.quadratic)
        for i in self.linear:
            if not 0 <= i < self.size:
                raise ArgumentError(f"linear key {i} outside [0, {self.size})")
        for i, j in quadratic:
            if i < 0 or j >= self.size:
                raise ArgumentError(f"quadratic key ({i}, {j}) outside [0, {self.size})")
        object.__setattr__(self, "linear", {int(k): float(v) for k, v in self.linear.items()})
        object.__setattr__(self, "quadratic", quadratic)
        object.__setattr__(self, "offset", float(self.offset))

    @cached_property
    def matrix(self) -> np.ndarray:
        """Upper-triangular matrix with ``Q_ii`` on the diagonal."""
        M = np.zeros((self.size, self.size))
        for i, v in self.linear.items():
            M[i, i] += v
        for (i, j), v in self.quadratic.items():
            M[i, j] += v
        return M

    def energies(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.size:
            raise ShapeError(f"expected {self.size} columns, got {X.shape[1]}")
        return np.einsum("ri,ri->r", X @ self.matrix, X) + self.offset

    def energy(self, x: Sequence[int]) -> float:
        return float(self.energies(np.asarray(x)[None, :])[0])

    def to_dict(self) -> dict:
        return {
            "type": "qubo",
            "size": self.size,
            "linear": {str(k): v for k, v in sorted(self.linear.items())},
            "quadratic": {f"{i},{j}": v for (i, j), v in sorted(self.quadratic.items())},
            "offset": self.offset,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Qubo":
        return cls(
            int(data["size"]),
            {int(k): float(v) for k, v in data.get("linear", {}).items()},
            _parse_pair_keys(data.get("quadratic", {})),
            float(data.get("offset", 0.0)),
        )


@dataclass(frozen=True)
class IsingModel:
    """Spin objective ``Σ h_i s_i + Σ J_ij s_i s_j + offset`` over ``variables``.

    Logical models use ``variables = (0, ..., size-1)``; physical models use
    hardware qubit ids.
    """

    variables: Tuple[int, ...]
    h: Dict[int, float] = field(default_factory=dict)
    J: Dict[Pair, float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self) -> None:
        J = _normalize_pairs(self.J)
        variables = tuple(sorted(set(int(v) for v in self.variables)))
        known = set(variables)
        for i in self.h:
            if i not in known:
                raise ArgumentError(f"h key {i} is not a model variable")
        for i, j in J:
            if i not in known or j not in known:
                raise ArgumentError(f"J key ({i}, {j}) is not a pair of model variables")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "h", {int(k): float(v) for k, v in self.h.items()})
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def logical(cls, size: int, h=None, J=None, offset: float = 0.0) -> "IsingModel":
        return cls(tuple(range(size)), dict(h or {}), dict(J or {}), offset)

    @property
    def size(self) -> int:
        return len(self.variables)

    @cached_property
    def index(self) -> Dict[int, int]:
        return {v: k for k, v in enumerate(self.variables)}

    @cached_property
    def h_vector(self) -> np.ndarray:
        vec = np.zeros(self.size)
        for i, v in self.h.items():
            vec[self.index[i]] = v
        return vec

    @cached_property
    def j_matrix(self) -> np.ndarray:
        """Upper-triangular coupler matrix in ``variables`` order."""
        M = np.zeros((self.size, self.size))
        for (i, j), v in self.J.items():
            a, b = sorted((self.index[i], self.index[j]))
            M[a, b] += v
        return M

    def energies(self, S: np.ndarray) -> np.ndarray:
        S = np.atleast_2d(np.asarray(S, dtype=float))
        if S.shape[1] != self.size:
            raise ShapeError(f"expected {self.size} columns, got {S.shape[1]}")
        return S @ self.h_vector + np.einsum("ri,ri->r", S @ self.j_matrix, S) + self.offset

    def energy(self, s: Union[Sequence[int], Mapping[int, int]]) -> float:
        if isinstance(s, dict):
            s = [s[v] for v in self.variables]
        return float(self.energies(np.asarray(s)[None, :])[0])

    def max_abs_h(self) -> float:
        return max((abs(v) for v in self.h.values()), default=0.0)

    def max_abs_j(self) -> float:
        return max((abs(v) for v in self.J.values()), default=0.0)

    def scaled(self, factor: float) -> "IsingModel":
        """Return the model divided by ``factor``."""
        return IsingModel(
            self.variables,
            {k: v / factor for k, v in self.h.items()},
            {k: v / factor for k, v in self.J.items()},
            self.offset / factor,
        )

    def to_dict(self) -> dict:
        return {
            "type": "ising",
            "size": self.size,
            "variables": list(self.variables),
            "linear": {str(k): v for k, v in sorted(self.h.items())},
            "quadratic": {f"{i},{j}": v for (i, j), v in sorted(self.J.items())},
            "offset": self.offset,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "IsingModel":
        variables = data.get("variables")
        if variables is None:
            variables = range(int(data["size"]))
        return cls(
            tuple(int(v) for v in variables),
            {int(k): float(v) for k, v in data.get("linear", {}).items()},
            _parse_pair_keys(data.get("quadratic", {})),
            float(data.get("offset", 0.0)),
        )


def _parse_pair_keys(terms: Mapping[str, float]) -> Dict[Pair, float]:
    out = {}
    for key, value in terms.items():
        try:
            i, j = (int(t) for t in str(key).split(","))
        except ValueError:
            raise ParseError(f"quadratic key {key!r} is not 'i,j'") from None
        out[(i, j)] = float(value)
    return out


def save_model(model: Union[Qubo, IsingModel], path: PathLike) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_model(path: PathLike) -> Union[Qubo, IsingModel]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, str(path), e.lineno) from None
    kind = data.get("type", "qubo")
    if kind == "qubo":
        return Qubo.from_dict(data)
    if kind == "ising":
        return IsingModel.from_dict(data)
    raise ParseError(f"unknown model type {kind!r}", str(path))


# --- objective builders ------------------------------------------------------

def build_mvcp_qubo(g: ProblemGraph, A: float = 2.0, B: float = 1.0) -> Qubo:
    """``A Σ_E (1-x_i)(1-x_j) + B Σ_V x_i`` expanded."""
    if not 0 < B < A:
        raise ParameterError(f"MVCP requires 0 < B < A, got A={A}, B={B}")
    deg = g.degrees()
    linear = {i: B - A * float(deg[i]) for i in range(g.node_count)}
    quadratic = {e: float(A) for e in g.sorted_edges()}
    return Qubo(g.node_count, _prune(linear), quadratic, A * len(g.edges))


def gpp_penalty_bound(g: ProblemGraph, B: float = 1.0) -> float:
    """Balance penalty ``B·min(2Δ, |V|)/8``."""
    max_degree, _ = degree_stats(g)
    return B * min(2 * max_degree, g.node_count) / 8.0


def gpp_strict_penalty(g: ProblemGraph, B: float = 1.0) -> float:
    """Penalty ``B·(Δ+1)`` above the one-vertex-move bound.

    Moving one vertex changes the cut by at most Δ, so any ``A > B·Δ`` makes
    every minimizer balanced when |V| is even.
    """
    max_degree, _ = degree_stats(g)
    return B * (max_degree + 1)


def build_gpp_qubo(g: ProblemGraph, B: float = 1.0, A: Optional[float] = None) -> Qubo:
    """``A (Σ x_i - |V|/2)² + B Σ_E (x_u + x_v - 2 x_u x_v)`` expanded.

    The default penalty is the degree bound, floored at ``B/8`` so edgeless
    graphs still prefer balanced assignments.
    """
    if A is None:
        A = max(gpp_penalty_bound(g, B), B / 8.0)
    if g.edges and A <= 0:
        raise ParameterError(f"GPP balance penalty must be positive, got A={A}")
    n = g.node_count
    if n % 2:
        logger.warning(f"GPP on odd |V|={n}: balance term penalizes every assignment")

    deg = g.degrees()
    linear = {i: A * (1 - n) + B * float(deg[i]) for i in range(n)}
    quadratic: Dict[Pair, float] = {}
    for i, j in itertools.combinations(range(n), 2):
        quadratic[(i, j)] = 2.0 * A
    for e in g.sorted_edges():
        quadratic[e] = quadratic[e] - 2.0 * B
    return Qubo(n, _prune(linear), _prune(quadratic), A * n * n / 4.0)


def qubo_to_ising(q: Qubo) -> IsingModel:
    """Substitute ``x = (1 + s)/2``; energies agree for every assignment."""
    h = {i: 0.0 for i in range(q.size)}
    J: Dict[Pair, float] = {}
    offset = q.offset
    for i, v in q.linear.items():
        h[i] += v / 2.0
        offset += v / 2.0
    for (i, j), v in q.quadratic.items():
        J[(i, j)] = v / 4.0
        h[i] += v / 4.0
        h[j] += v / 4.0
        offset += v / 4.0
    return IsingModel.logical(q.size, _prune(h), J, offset)


def interaction_graph(model: Union[Qubo, IsingModel]) -> ProblemGraph:
    """Logical graph of the nonzero couplings of a logical model."""
    if isinstance(model, Qubo):
        couplings = model.quadratic
    else:
        couplings = model.J
    return ProblemGraph.from_edges(max(model.size, 1), [k for k, v in couplings.items() if v])


# --- exhaustive oracles ------------------------------------------------------

def _bit_chunks(n: int) -> Iterable[Tuple[int, np.ndarray]]:
    """Yield ``(start, X)`` blocks of binary assignments in lexicographic order."""
    total = 1 << n
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    step = 1 << _CHUNK_BITS
    for start in range(0, total, step):
        k = np.arange(start, min(start + step, total), dtype=np.int64)
        yield start, ((k[:, None] >> shifts) & 1).astype(float)


def _check_capacity(size: int) -> None:
    if size > MAX_EXACT_SIZE:
        raise CapacityError(f"exhaustive search limited to {MAX_EXACT_SIZE} variables, got {size}")


def _tolerance(energy: float) -> float:
    return 1e-9 * max(1.0, abs(energy))


def brute_force_min(q: Qubo) -> Tuple[Tuple[int, ...], float]:
    """Exhaustive minimum; ties go to the lexicographically smallest assignment."""
    _check_capacity(q.size)
    if q.size == 0:
        return (), q.offset
    best_energy = np.inf
    best_index = 0
    for start, X in _bit_chunks(q.size):
        E = q.energies(X)
        k = int(np.argmin(E))
        if E[k] < best_energy:
            best_energy = float(E[k])
            best_index = start + k
    bits = tuple((best_index >> (q.size - 1 - i)) & 1 for i in range(q.size))
    return bits, best_energy


def qubo_argmin_set(q: Qubo) -> Tuple[List[Tuple[int, ...]], float]:
    """All assignments attaining the minimum (within round-off), in lexicographic order."""
    spins, energy = ising_ground_states(qubo_to_ising(q))
    return [tuple((b + 1) // 2 for b in s) for s in spins], energy


def ising_ground_states(m: IsingModel) -> Tuple[List[Tuple[int, ...]], float]:
    """Exhaustive ground set of an Ising model (spins ordered by ``variables``)."""
    _check_capacity(m.size)
    if m.size == 0:
        return [()], m.offset
    energies = []
    for _, X in _bit_chunks(m.size):
        energies.append(m.energies(2.0 * X - 1.0))
    E = np.concatenate(energies)
    ground = float(E.min())
    hits = np.flatnonzero(E <= ground + _tolerance(ground))
    n = m.size
    states = [tuple(2 * ((int(k) >> (n - 1 - i)) & 1) - 1 for i in range(n)) for k in hits]
    return states, ground


# --- solution checks ---------------------------------------------------------

def _check_length(g: ProblemGraph, assignment: Sequence[int]) -> np.ndarray:
    x = np.asarray(assignment, dtype=int)
    if x.ndim != 1 or x.size != g.node_count:
        raise ShapeError(f"assignment length {x.size} != node_count {g.node_count}")
    return x


def cut_edges(g: ProblemGraph, assignment: Sequence[int]) -> int:
    x = _check_length(g, assignment)
    return sum(1 for u, v in g.edges if x[u] != x[v])


def vertex_cover_valid(g: ProblemGraph, assignment: Sequence[int]) -> bool:
    x = _check_length(g, assignment)
    return all(x[u] or x[v] for u, v in g.edges)


def partition_balanced(assignment: Sequence[int]) -> bool:
    x = np.asarray(assignment, dtype=int)
    return 2 * int(x.sum()) == x.size


def minimum_vertex_cover_size(g: ProblemGraph) -> int:
    """Smallest cover by direct subset search (independent of the QUBO)."""
    for k in range(g.node_count + 1):
        for subset in itertools.combinations(range(g.node_count), k):
            chosen = set(subset)
            if all(u in chosen or v in chosen for u, v in g.edges):
                return k
    return g.node_count


def minimum_balanced_cut(g: ProblemGraph) -> int:
    """Fewest cut edges over all balanced partitions (even |V| only)."""
    n = g.node_count
    if n % 2:
        raise ArgumentError("balanced partitions need an even node count")
    best = len(g.edges)
    for subset in itertools.combinations(range(n), n // 2):
        side = set(subset)
        best = min(best, sum(1 for u, v in g.edges if (u in side) != (v in side)))
    return best
