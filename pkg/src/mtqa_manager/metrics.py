"""Success-probability and time-to-solution metrics."""

import math
from typing import Dict, Optional, Sequence

import numpy as np

from .exceptions import ArgumentError
from .graphs import ProblemGraph
from .qubo import cut_edges, partition_balanced


def gsp(p_list: Sequence[float]) -> float:
    """Ground-state probability: mean of the per-instance optimal-hit probabilities."""
    if len(p_list) == 0:
        raise ArgumentError("gsp needs at least one probability")
    for p in p_list:
        if not 0.0 <= p <= 1.0:
            raise ArgumentError(f"probability {p} outside [0, 1]")
    return float(np.mean(p_list))


def tts(t_run_seconds: float, p_avg: float, p_success: float = 0.99) -> Optional[float]:
    """Time to reach the optimum with confidence ``p_success``.

    Returns None (undefined) when ``p_avg`` is 0 and ``t_run_seconds`` when it is 1.
    """
    if t_run_seconds <= 0:
        raise ArgumentError(f"t_run must be positive, got {t_run_seconds}")
    if not 0.0 <= p_avg <= 1.0:
        raise ArgumentError(f"p_avg must lie in [0, 1], got {p_avg}")
    if not 0.0 < p_success < 1.0:
        raise ArgumentError(f"p_success must lie in (0, 1), got {p_success}")
    if p_avg == 0.0:
        return None
    if p_avg == 1.0:
        return t_run_seconds
    return t_run_seconds * math.log(1.0 - p_success) / math.log(1.0 - p_avg)


def t_run(
    A_reads: int,
    qpu_equiv_seconds: float,
    n_mvcp: int,
    n_gpp: int,
    unembed_seconds: Sequence[float],
) -> float:
    """Per-read run time with the sampler time shared across parallel instances.

    ``(T / (N_MVCP + N_GPP) + Σ U_i) / A``, where T is the sampler wall time.
    """
    if A_reads < 1:
        raise ArgumentError(f"A_reads must be >= 1, got {A_reads}")
    instances = n_mvcp + n_gpp
    if instances < 1:
        raise ArgumentError("t_run needs at least one instance")
    return (qpu_equiv_seconds / instances + float(sum(unembed_seconds))) / A_reads


def optimal_hit_probability(energies: Sequence[float], optimum: float, tol: float = 1e-9) -> float:
    """Fraction of reads whose energy reaches ``optimum`` (relative tolerance ``tol``)."""
    values = np.asarray(energies, dtype=float)
    if values.size == 0:
        return 0.0
    threshold = optimum + tol * max(1.0, abs(optimum))
    return float(np.mean(values <= threshold))


def energy_summary(values: Sequence[float]) -> Dict[str, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ArgumentError("energy_summary needs at least one value")
    q1, median, q3 = np.quantile(arr, [0.25, 0.5, 0.75])
    return {
        "min": float(arr.min()),
        "q1": float(q1),
        "median": float(median),
        "q3": float(q3),
        "max": float(arr.max()),
    }


def cut_edge_summary(g: ProblemGraph, assignments: np.ndarray) -> Dict[str, Optional[float]]:
    """Best cut over balanced reads, median cut over all reads and the balanced fraction."""
    rows = np.atleast_2d(np.asarray(assignments, dtype=int))
    cuts = np.array([cut_edges(g, row) for row in rows])
    balanced = np.array([partition_balanced(row) for row in rows], dtype=bool)
    return {
        "best": int(cuts[balanced].min()) if balanced.any() else None,
        "median": float(np.median(cuts)),
        "balanced_fraction": float(balanced.mean()),
    }
