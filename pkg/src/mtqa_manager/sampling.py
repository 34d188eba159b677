"""Seeded simulated annealing over Ising models and majority-vote unembedding.

Spin +1 maps to bit 1 everywhere in this module.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .embedding import ParallelPlan
from .exceptions import ArgumentError, ShapeError
from .qubo import IsingModel, Qubo, ising_ground_states

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Reads over ``variables``: ``states`` is ``(reads, len(variables))`` in ±1."""

    variables: Tuple[int, ...]
    states: np.ndarray
    energies: np.ndarray
    wall_time_seconds: float
    sweeps: int
    seed: int
    beta_range: Tuple[float, float] = (0.0, 0.0)

    @property
    def num_reads(self) -> int:
        return int(self.states.shape[0])

    @property
    def reads(self) -> Iterator[Tuple[Dict[int, int], float]]:
        for row, energy in zip(self.states, self.energies):
            yield dict(zip(self.variables, row.tolist())), float(energy)

    def lowest(self) -> Tuple[Dict[int, int], float]:
        k = int(np.argmin(self.energies))
        return dict(zip(self.variables, self.states[k].tolist())), float(self.energies[k])


@dataclass(frozen=True, eq=False)
class InstanceSolutions:
    """Unembedded reads of one plan entry; energies are on the original logical QUBO."""

    instance_id: str
    problem_id: str
    assignments: np.ndarray
    energies: np.ndarray
    chain_break_fraction: np.ndarray
    unembed_seconds: float
    scale_factor: float = 1.0

    @property
    def mean_chain_break_fraction(self) -> float:
        return float(self.chain_break_fraction.mean()) if self.chain_break_fraction.size else 0.0


@dataclass(frozen=True, eq=False)
class LogicalSolutionSet:
    instances: Dict[str, InstanceSolutions] = field(default_factory=dict)

    def __getitem__(self, instance_id: str) -> InstanceSolutions:
        return self.instances[instance_id]

    def __iter__(self):
        return iter(self.instances.values())

    def __len__(self) -> int:
        return len(self.instances)

    def chain_break_fraction(self) -> float:
        """Fraction of (read, chain) pairs that were not unanimous."""
        total = broken = 0.0
        for sol in self.instances.values():
            chains = sol.assignments.shape[1] if sol.assignments.ndim == 2 else 0
            total += sol.chain_break_fraction.size * chains
            broken += float(sol.chain_break_fraction.sum()) * chains
        return broken / total if total else 0.0


# --- simulated annealing --------------------------------------------------------


def geometric_beta_schedule(
    m: IsingModel, sweeps: int, beta_range: Optional[Tuple[float, float]] = None
) -> np.ndarray:
    """Inverse temperatures for each sweep, geometric from beta_min to beta_max.

    By default the hottest sweep accepts the largest single-spin move with
    probability 1/2 and the coldest accepts the smallest nonzero move with
    probability 1/100.
    """
    if beta_range is None:
        beta_range = default_beta_range(m)
    beta_min, beta_max = beta_range
    if not 0 < beta_min < beta_max:
        raise ArgumentError(f"need 0 < beta_min < beta_max, got {beta_range}")
    return np.geomspace(beta_min, beta_max, sweeps)


def default_beta_range(m: IsingModel) -> Tuple[float, float]:
    h = np.abs(m.h_vector)
    J = np.abs(m.j_matrix)
    field_bound = h + J.sum(axis=0) + J.sum(axis=1)
    coefs = np.concatenate([h[h > 0], J[J > 0]])
    if coefs.size == 0:
        return 0.1, 10.0
    max_move = 2.0 * float(field_bound.max())
    min_move = 2.0 * float(coefs.min())
    return math.log(2.0) / max_move, math.log(100.0) / min_move


def _neighbor_lists(m: IsingModel) -> List[Tuple[np.ndarray, np.ndarray]]:
    sym = m.j_matrix + m.j_matrix.T
    lists = []
    for i in range(m.size):
        nbrs = np.flatnonzero(sym[i])
        lists.append((nbrs, sym[i, nbrs]))
    return lists


def sa_sample(
    m: IsingModel,
    reads: int = 2500,
    sweeps: int = 1000,
    beta_range: Optional[Tuple[float, float]] = None,
    seed: int = 0,
) -> SampleSet:
    """Single-spin Metropolis annealing, all reads advanced together.

    Reads start from independent uniform random states drawn from one
    generator seeded with ``seed``; the result is fully determined by
    ``(m, reads, sweeps, beta_range, seed)``.
    """
    if reads < 1 or sweeps < 1:
        raise ArgumentError(f"reads and sweeps must be >= 1, got {reads}, {sweeps}")
    betas = geometric_beta_schedule(m, sweeps, beta_range)
    rng = np.random.default_rng(seed & _SEED_MASK)
    start = time.perf_counter()

    n = m.size
    S = rng.integers(0, 2, size=(reads, n), dtype=np.int8) * 2 - 1
    if n:
        h = m.h_vector
        neighbors = _neighbor_lists(m)
        S = S.astype(float)
        for beta in betas:
            draws = rng.random((n, reads))
            for i in range(n):
                nbrs, weights = neighbors[i]
                local = h[i] + S[:, nbrs] @ weights if nbrs.size else np.full(reads, h[i])
                delta = -2.0 * S[:, i] * local
                accept = (delta <= 0) | (draws[i] < np.exp(-beta * np.maximum(delta, 0.0)))
                S[accept, i] *= -1.0
        S = S.astype(np.int8)

    energies = m.energies(S) if n else np.full(reads, m.offset)
    wall = time.perf_counter() - start
    logger.debug(f"SA: {reads} reads x {sweeps} sweeps on {n} spins in {wall:.3f}s")
    return SampleSet(
        m.variables, S, energies, wall, sweeps, seed, (float(betas[0]), float(betas[-1]))
    )


def exact_sample(m: IsingModel) -> Tuple[List[Tuple[int, ...]], float]:
    """Exhaustive ground set (spin tuples ordered by ``m.variables``) and ground energy."""
    return ising_ground_states(m)


# --- unembedding -----------------------------------------------------------------


def _logical_qubo(model: Any) -> Qubo:
    return model if isinstance(model, Qubo) else model.qubo


def unembed_majority_vote(
    samples: SampleSet,
    plan: ParallelPlan,
    logical_models: Mapping[str, Any],
    scale_factors: Optional[Mapping[str, float]] = None,
    seed: Optional[int] = None,
) -> LogicalSolutionSet:
    """Majority vote per chain; ties go to a coin seeded per (seed, entry).

    ``logical_models`` maps problem ids to their logical ``Qubo`` (or any
    object with a ``qubo`` attribute); energies are evaluated on those
    unscaled objectives. ``scale_factors`` is keyed by instance id.
    """
    seed = samples.seed if seed is None else seed
    column = {q: k for k, q in enumerate(samples.variables)}
    scale_factors = scale_factors or {}
    reads = samples.num_reads
    out: Dict[str, InstanceSolutions] = {}

    for idx, (key, entry) in enumerate(zip(plan.instance_keys(), plan.entries)):
        start = time.perf_counter()
        if entry.problem_id not in logical_models:
            raise ArgumentError(f"no logical model for {entry.problem_id!r}")
        qubo = _logical_qubo(logical_models[entry.problem_id])
        chains = entry.embedding.chains
        if set(chains) != set(range(qubo.size)):
            raise ShapeError(f"{key}: chains do not cover logical variables 0..{qubo.size - 1}")

        coin_rng = np.random.default_rng(np.random.SeedSequence([seed & _SEED_MASK, idx]))
        coins = coin_rng.integers(0, 2, size=(reads, qubo.size), dtype=np.int8)
        X = np.zeros((reads, qubo.size), dtype=np.int8)
        broken = np.zeros((reads, qubo.size), dtype=bool)
        for v in range(qubo.size):
            try:
                cols = [column[q] for q in sorted(chains[v])]
            except KeyError as e:
                raise ShapeError(f"{key}: qubit {e.args[0]} missing from the samples") from None
            votes = samples.states[:, cols].astype(np.int64).sum(axis=1)
            X[:, v] = np.where(votes > 0, 1, np.where(votes < 0, 0, coins[:, v]))
            broken[:, v] = np.abs(votes) != len(cols)
        energies = qubo.energies(X)
        fraction = broken.mean(axis=1) if qubo.size else np.zeros(reads)
        elapsed = time.perf_counter() - start

        scale = float(scale_factors.get(key, 1.0))
        out[key] = InstanceSolutions(key, entry.problem_id, X, energies, fraction, elapsed, scale)
    return LogicalSolutionSet(out)


# --- export ---------------------------------------------------------------------


def _bitstrings(states: np.ndarray) -> List[str]:
    return ["".join("1" if s > 0 else "0" for s in row) for row in states]


def export_samples_csv(
    samples: SampleSet, path: PathLike, solutions: Optional[LogicalSolutionSet] = None
) -> None:
    """One row per read: bitstring over ``variables``, energy and chain-break flags."""
    df = pd.DataFrame(
        {
            "read": np.arange(samples.num_reads),
            "energy": samples.energies,
            "assignment": _bitstrings(samples.states),
        }
    )
    if solutions is not None:
        for sol in solutions:
            df[f"broken:{sol.instance_id}"] = (sol.chain_break_fraction > 0).astype(int)
    df.to_csv(path, index=False, encoding="utf-8")


def export_solutions_csv(solutions: LogicalSolutionSet, path: PathLike) -> None:
    frames = []
    for sol in solutions:
        frames.append(
            pd.DataFrame(
                {
                    "instance": sol.instance_id,
                    "read": np.arange(sol.energies.size),
                    "assignment": ["".join(str(int(b)) for b in row) for row in sol.assignments],
                    "energy": sol.energies,
                    "chain_break_fraction": sol.chain_break_fraction,
                }
            )
        )
    columns = ["instance", "read", "assignment", "energy", "chain_break_fraction"]
    df = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=columns)
    df.to_csv(path, index=False, encoding="utf-8")


def sample_bits(samples: SampleSet, variables: Sequence[int]) -> np.ndarray:
    """Binary view of the reads restricted to ``variables``."""
    column = {q: k for k, q in enumerate(samples.variables)}
    try:
        cols = [column[q] for q in variables]
    except KeyError as e:
        raise ShapeError(f"qubit {e.args[0]} missing from the samples") from None
    return ((samples.states[:, cols] + 1) // 2).astype(np.int8)
