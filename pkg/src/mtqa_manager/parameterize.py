"""Chain strengths, physical Ising construction and per-instance or global scaling."""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from .embedding import Embedding, ParallelPlan
from .exceptions import ArgumentError, ConfigError, EmbeddingInvalidError
from .graphs import ProblemGraph, degree_stats
from .kind_registry import KindRegistry
from .qubo import IsingModel, Qubo, interaction_graph, qubo_to_ising
from .topology import HardwareGraph

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]

MODE_MTQA = "MTQA"
MODE_PQA = "PQA"
CONVENTIONS = ("ising", "qubo")


@dataclass(frozen=True)
class LogicalProblem:
    """One logical instance: its graph, objective and spin form."""

    problem_id: str
    kind: str
    graph: ProblemGraph
    qubo: Qubo
    ising: IsingModel

    @classmethod
    def build(cls, problem_id: str, kind: str, graph: ProblemGraph, **options) -> "LogicalProblem":
        qubo = KindRegistry.builder(kind)(graph, **options)
        return cls(problem_id, kind, graph, qubo, qubo_to_ising(qubo))

    def embedding_graph(self) -> ProblemGraph:
        return interaction_graph(self.ising)


@dataclass(frozen=True)
class EmbeddedInstance:
    """A logical problem placed on hardware.

    ``physical`` is the scaled model; ``chain_constant`` is the (scaled) energy
    contributed by satisfied chain couplers, ``-chain_strength * tree_edges / scale_factor``.
    """

    instance_id: str
    problem_id: str
    kind: str
    physical: IsingModel
    chain_strength: float
    scale_factor: float
    embedding: Embedding
    chain_constant: float
    problem: Optional[LogicalProblem] = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "problem_id": self.problem_id,
            "kind": self.kind,
            "chain_strength": self.chain_strength,
            "scale_factor": self.scale_factor,
            "chain_constant": self.chain_constant,
            "qubits": sorted(self.embedding.qubits),
        }


@dataclass(frozen=True)
class ComposedProgram:
    mode: str
    instances: Tuple[EmbeddedInstance, ...]
    combined: IsingModel
    hardware: Optional[HardwareGraph] = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "instances": [inst.to_dict() for inst in self.instances],
            "combined": self.combined.to_dict(),
        }


# --- chain strength rules ---------------------------------------------------------


def chain_strength_utc(
    m: Union[IsingModel, Qubo], g: ProblemGraph, prefactor: float = 0.5
) -> float:
    """``prefactor · sqrt(mean J²) · sqrt(avg degree)``.

    ``m`` may be the logical Ising model (default convention) or the logical
    QUBO, in which case its quadratic terms are used.
    """
    couplers = list(m.quadratic.values() if isinstance(m, Qubo) else m.J.values())
    if not couplers:
        return 0.0
    rms = math.sqrt(sum(v * v for v in couplers) / len(couplers))
    _, avg_degree = degree_stats(g)
    return prefactor * rms * math.sqrt(avg_degree)


def chain_strength_scaled(m: IsingModel, prefactor: float = 1.5) -> float:
    """``prefactor · max(max|h|, max|J|)``."""
    return prefactor * max(m.max_abs_h(), m.max_abs_j())


def mtqa_chain_strength(
    problem: LogicalProblem,
    kind: Optional[str] = None,
    prefactor: Optional[float] = None,
    convention: str = "ising",
) -> float:
    """Chain strength from the rule registered for the problem's kind."""
    spec = KindRegistry.get(kind or problem.kind)
    if prefactor is None:
        prefactor = spec.prefactor
    if spec.chain_rule == "utc":
        if convention not in CONVENTIONS:
            raise ConfigError(f"chain_strength_convention must be one of {CONVENTIONS}")
        model = problem.ising if convention == "ising" else problem.qubo
        return chain_strength_utc(model, problem.graph, prefactor)
    return chain_strength_scaled(problem.ising, prefactor)


# --- physical model -----------------------------------------------------------


def _spanning_tree(chain: List[int], hw: HardwareGraph) -> List[Pair]:
    """Breadth-first tree from the lowest qubit, neighbours visited in ascending id order."""
    members = set(chain)
    root = min(chain)
    seen = {root}
    queue = [root]
    edges = []
    while queue:
        q = queue.pop(0)
        for r in sorted(hw.neighbors(q) & members):
            if r not in seen:
                seen.add(r)
                queue.append(r)
                edges.append((q, r) if q < r else (r, q))
    if len(seen) != len(members):
        raise EmbeddingInvalidError(f"chain {sorted(chain)} is not connected on the hardware")
    return edges


def chain_tree_edges(e: Embedding, hardware: Optional[HardwareGraph] = None) -> int:
    hw = hardware or e.target
    if hw is None:
        raise ArgumentError("embedding has no target hardware")
    return sum(len(_spanning_tree(sorted(c), hw)) for c in e.chains.values())


def embed_ising(
    m: IsingModel,
    e: Embedding,
    chain_strength: float,
    hardware: Optional[HardwareGraph] = None,
) -> IsingModel:
    """Map a logical model onto the chains of ``e``.

    Each ``h_i`` is split evenly over chain(i); each ``J_ij`` goes to the
    lowest-id coupler joining chain(i) and chain(j); chains are bound by
    ``-chain_strength`` on a breadth-first spanning tree.
    """
    hw = hardware or e.target
    if hw is None:
        raise ArgumentError("embed_ising needs the target hardware")

    for v in m.variables:
        if v not in e.chains or not e.chains[v]:
            raise EmbeddingInvalidError(f"logical variable {v} has no chain")
    chains = {v: sorted(e.chains[v]) for v in m.variables}

    h: Dict[int, float] = {}
    for v, chain in chains.items():
        share = m.h.get(v, 0.0) / len(chain)
        for q in chain:
            h[q] = share

    J: Dict[Pair, float] = {}
    for (i, j), value in sorted(m.J.items()):
        chain_j = set(chains[j])
        candidates = sorted(
            (min(a, b), max(a, b)) for a in chains[i] for b in hw.neighbors(a) & chain_j
        )
        if not candidates:
            raise EmbeddingInvalidError(f"no coupler between chains of logical edge ({i}, {j})")
        J[candidates[0]] = J.get(candidates[0], 0.0) + value

    for chain in chains.values():
        for edge in _spanning_tree(chain, hw):
            J[edge] = -float(chain_strength)

    variables = tuple(q for chain in chains.values() for q in chain)
    return IsingModel(variables, h, J, m.offset)


def scale_instance(
    p: IsingModel, h_max: float = 4.0, j_max: float = 1.0
) -> Tuple[IsingModel, float]:
    """Divide by ``d = max(1, max|h|/h_max, max|J|/j_max)``; returns ``(model, d)``."""
    if h_max <= 0 or j_max <= 0:
        raise ArgumentError(f"h_max and j_max must be positive, got {h_max}, {j_max}")
    d = max(1.0, p.max_abs_h() / h_max, p.max_abs_j() / j_max)
    return (p if d == 1.0 else p.scaled(d)), d


def disjoint_union(models: List[IsingModel]) -> IsingModel:
    variables: List[int] = []
    h: Dict[int, float] = {}
    J: Dict[Pair, float] = {}
    offset = 0.0
    seen: set = set()
    for m in models:
        overlap = seen.intersection(m.variables)
        if overlap:
            raise ArgumentError(f"instances share qubits {sorted(overlap)}")
        seen.update(m.variables)
        variables.extend(m.variables)
        h.update(m.h)
        J.update(m.J)
        offset += m.offset
    return IsingModel(tuple(variables), h, J, offset)


# --- composition ---------------------------------------------------------------


def _resolve(
    plan: ParallelPlan,
    problems: Mapping[str, LogicalProblem],
    problem_kinds: Optional[Mapping[str, str]],
) -> List[Tuple[str, LogicalProblem, str, Embedding]]:
    resolved = []
    kinds = problem_kinds or {}
    for key, entry in zip(plan.instance_keys(), plan.entries):
        if entry.problem_id not in problems:
            raise ArgumentError(f"no logical model for plan entry {entry.problem_id!r}")
        problem = problems[entry.problem_id]
        kind = kinds.get(entry.problem_id, problem.kind)
        KindRegistry.get(kind)
        resolved.append((key, problem, kind, entry.embedding))
    return resolved


def compose_mtqa(
    plan: ParallelPlan,
    problems: Mapping[str, LogicalProblem],
    problem_kinds: Optional[Mapping[str, str]] = None,
    h_max: float = 4.0,
    j_max: float = 1.0,
    prefactors: Optional[Mapping[str, float]] = None,
    convention: str = "ising",
) -> ComposedProgram:
    """Per-instance chain strength and scaling, then disjoint union."""
    prefactors = prefactors or {}
    instances = []
    for key, problem, kind, emb in _resolve(plan, problems, problem_kinds):
        cs = mtqa_chain_strength(problem, kind, prefactors.get(kind), convention)
        physical = embed_ising(problem.ising, emb, cs, plan.hardware_snapshot)
        scaled, d = scale_instance(physical, h_max, j_max)
        constant = -cs * chain_tree_edges(emb, plan.hardware_snapshot) / d
        instances.append(
            EmbeddedInstance(key, problem.problem_id, kind, scaled, cs, d, emb, constant, problem)
        )
        logger.debug(f"MTQA {key}: chain_strength={cs:.4g} scale_factor={d:.4g}")

    combined = disjoint_union([inst.physical for inst in instances])
    logger.info(f"Composed MTQA program: {len(instances)} instances, {combined.size} qubits")
    return ComposedProgram(MODE_MTQA, tuple(instances), combined, plan.hardware_snapshot)


def compose_pqa(
    plan: ParallelPlan,
    problems: Mapping[str, LogicalProblem],
    problem_kinds: Optional[Mapping[str, str]] = None,
    h_max: float = 4.0,
    j_max: float = 1.0,
    prefactors: Optional[Mapping[str, float]] = None,
    convention: str = "ising",
) -> ComposedProgram:
    """One mean chain strength for every instance and one global scale factor."""
    prefactors = prefactors or {}
    resolved = _resolve(plan, problems, problem_kinds)
    if not resolved:
        return ComposedProgram(MODE_PQA, (), IsingModel(()), plan.hardware_snapshot)

    strengths = [
        mtqa_chain_strength(problem, kind, prefactors.get(kind), convention)
        for _, problem, kind, _ in resolved
    ]
    cs = float(np.mean(strengths))
    physical = [embed_ising(p.ising, emb, cs, plan.hardware_snapshot) for _, p, _, emb in resolved]
    _, d = scale_instance(disjoint_union(physical), h_max, j_max)

    instances = []
    for (key, problem, kind, emb), model in zip(resolved, physical):
        constant = -cs * chain_tree_edges(emb, plan.hardware_snapshot) / d
        scaled = model if d == 1.0 else model.scaled(d)
        instances.append(
            EmbeddedInstance(key, problem.problem_id, kind, scaled, cs, d, emb, constant, problem)
        )

    combined = disjoint_union([inst.physical for inst in instances])
    logger.info(
        f"Composed PQA program: {len(instances)} instances, chain_strength={cs:.4g}, "
        f"global scale_factor={d:.4g}"
    )
    return ComposedProgram(MODE_PQA, tuple(instances), combined, plan.hardware_snapshot)
