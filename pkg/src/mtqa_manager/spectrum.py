"""Exact diagonalization of small annealing Hamiltonians.

All Hamiltonian energies are in GHz (E/h). Conversion to joules happens only in
the transition-probability helpers. Qubit ``variables[0]`` is the most
significant bit of the basis index, and basis bit 0 is the σz = +1 state.
"""

import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import constants, sparse
from scipy.linalg import eigh
from scipy.optimize import minimize_scalar
from scipy.special import expit

from .embedding import Embedding
from .exceptions import ArgumentError, CapacityError, ParseError
from .parameterize import embed_ising
from .qubo import IsingModel
from .topology import HardwareGraph

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MAX_DENSE_QUBITS = 12
DEFAULT_ANNEAL_TIME = 20e-6
DEFAULT_TEMPERATURE = 0.016

# (s, A_GHz, B_GHz)
_ANCHORS = ((0.0, 9.62, 0.23), (0.28, 1.28, 1.28), (1.0, 0.0, 7.56))


@dataclass(frozen=True, eq=False)
class AnnealSchedule:
    """Sampled A(s), B(s) in GHz; values between samples are linearly interpolated."""

    s: np.ndarray
    A: np.ndarray
    B: np.ndarray
    anneal_time_seconds: float = DEFAULT_ANNEAL_TIME

    def __post_init__(self) -> None:
        s, A, B = (np.asarray(a, dtype=float) for a in (self.s, self.A, self.B))
        if not (s.shape == A.shape == B.shape) or s.ndim != 1 or s.size < 2:
            raise ArgumentError("schedule needs at least two aligned (s, A, B) samples")
        if s[0] != 0.0 or s[-1] != 1.0 or np.any(np.diff(s) <= 0):
            raise ArgumentError("schedule s must increase strictly from 0 to 1")
        if np.any(A < 0) or np.any(B < 0):
            raise ArgumentError("schedule coefficients must be non-negative")
        if np.any(np.diff(A) > 0) or np.any(np.diff(B) < 0):
            raise ArgumentError("A(s) must be non-increasing and B(s) non-decreasing")
        if self.anneal_time_seconds <= 0:
            raise ArgumentError("anneal_time_seconds must be positive")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def samples(self):
        return list(zip(self.s.tolist(), self.A.tolist(), self.B.tolist()))

    def at(self, s: float) -> Tuple[float, float]:
        return float(np.interp(s, self.s, self.A)), float(np.interp(s, self.s, self.B))


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    s_grid: np.ndarray
    e0: np.ndarray
    e1: np.ndarray
    gap: np.ndarray
    min_gap: Tuple[float, float]
    p_lz: Optional[np.ndarray] = None
    p_thermal: Optional[np.ndarray] = None
    p_total: Optional[np.ndarray] = None

    def max_p_total(self) -> Tuple[float, float]:
        if self.p_total is None:
            raise ArgumentError("transition probabilities not computed")
        k = int(np.argmax(self.p_total))
        return float(self.s_grid[k]), float(self.p_total[k])


def default_schedule(
    points: int = 201, anneal_time_seconds: float = DEFAULT_ANNEAL_TIME
) -> AnnealSchedule:
    """Piecewise-linear schedule through the three anchors on a uniform grid."""
    s_anchor, a_anchor, b_anchor = (np.array(col) for col in zip(*_ANCHORS))
    # Rounding puts interior anchors such as 0.28 exactly on the grid.
    grid = np.round(np.linspace(0.0, 1.0, points), 12)
    return AnnealSchedule(
        grid, np.interp(grid, s_anchor, a_anchor), np.interp(grid, s_anchor, b_anchor),
        anneal_time_seconds,
    )


def load_schedule_csv(
    path: PathLike, anneal_time_seconds: float = DEFAULT_ANNEAL_TIME
) -> AnnealSchedule:
    """Read a ``s,A_GHz,B_GHz`` schedule."""
    try:
        df = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(str(e), str(path)) from None
    missing = {"s", "A_GHz", "B_GHz"} - set(df.columns)
    if missing:
        raise ParseError(f"schedule missing columns {sorted(missing)}", str(path), 1)
    return AnnealSchedule(
        df["s"].to_numpy(float), df["A_GHz"].to_numpy(float), df["B_GHz"].to_numpy(float),
        anneal_time_seconds,
    )


# --- Hamiltonian ---------------------------------------------------------------


@lru_cache(maxsize=16)
def _transverse_sum(n: int) -> np.ndarray:
    """Σ_i σx_i on n qubits as a dense matrix."""
    sigma_x = sparse.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    total = sparse.csr_matrix((1 << n, 1 << n))
    for i in range(n):
        term = sparse.kron(
            sparse.identity(1 << i, format="csr"),
            sparse.kron(sigma_x, sparse.identity(1 << (n - 1 - i), format="csr")),
        )
        total = total + term
    return total.toarray()


def _basis_spins(n: int) -> np.ndarray:
    k = np.arange(1 << n, dtype=np.int64)[:, None]
    bits = (k >> np.arange(n - 1, -1, -1, dtype=np.int64)) & 1
    return 1.0 - 2.0 * bits


def _check_dense(m: IsingModel) -> None:
    if m.size > MAX_DENSE_QUBITS:
        raise CapacityError(f"dense Hamiltonian limited to {MAX_DENSE_QUBITS} qubits, got {m.size}")
    if m.size < 1:
        raise ArgumentError("model has no qubits")


@lru_cache(maxsize=64)
def _diagonal_cached(key: Tuple) -> np.ndarray:
    variables, h_items, j_items, offset = key
    m = IsingModel(variables, dict(h_items), dict(j_items), offset)
    return m.energies(_basis_spins(m.size))


def problem_diagonal(m: IsingModel) -> np.ndarray:
    """Classical Ising energy of every basis state, offset included."""
    key = (m.variables, tuple(sorted(m.h.items())), tuple(sorted(m.J.items())), m.offset)
    return _diagonal_cached(key)


def build_hamiltonian(m: IsingModel, sched: AnnealSchedule, s: float) -> np.ndarray:
    """``-(A/2) Σ σx_i + (B/2) (Σ h_i σz_i + Σ J_ij σz_i σz_j + offset)`` at ``s``."""
    _check_dense(m)
    if not 0.0 <= s <= 1.0:
        raise ArgumentError(f"s must lie in [0, 1], got {s}")
    A, B = sched.at(s)
    H = -0.5 * A * _transverse_sum(m.size)
    H[np.diag_indices_from(H)] += 0.5 * B * problem_diagonal(m)
    return H


def _lowest_two(m: IsingModel, sched: AnnealSchedule, s: float) -> Tuple[float, float]:
    w = eigh(build_hamiltonian(m, sched, s), eigvals_only=True, subset_by_index=[0, 1])
    return float(w[0]), float(w[1])


def _gap_at(m: IsingModel, sched: AnnealSchedule, s: float) -> float:
    e0, e1 = _lowest_two(m, sched, s)
    return e1 - e0


def eigencurves(
    m: IsingModel, sched: AnnealSchedule, s_grid: Optional[Sequence[float]] = None
) -> SpectrumResult:
    """Two lowest eigenvalues along ``s_grid`` and the refined minimum gap."""
    _check_dense(m)
    grid = sched.s if s_grid is None else np.asarray(s_grid, dtype=float)
    pairs = np.array([_lowest_two(m, sched, float(s)) for s in grid])
    e0, e1 = pairs[:, 0], pairs[:, 1]
    gap = e1 - e0

    k = int(np.argmin(gap))
    best = (float(grid[k]), float(gap[k]))
    lo, hi = float(grid[max(k - 1, 0)]), float(grid[min(k + 1, grid.size - 1)])
    if hi > lo:
        res = minimize_scalar(
            lambda s: _gap_at(m, sched, s),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-4},
        )
        if res.success and res.fun < best[1]:
            best = (float(res.x), float(max(res.fun, 0.0)))
    logger.debug(f"min gap {best[1]:.6g} GHz at s={best[0]:.4f} ({m.size} qubits)")
    return SpectrumResult(grid, e0, e1, gap, best)


def combine_identical(spec: SpectrumResult) -> SpectrumResult:
    """Two non-interacting copies: energies add, the gap is unchanged."""
    e0 = 2.0 * spec.e0
    return SpectrumResult(spec.s_grid, e0, e0 + spec.gap, spec.gap.copy(), spec.min_gap)


def combine_different(a: SpectrumResult, b: SpectrumResult) -> SpectrumResult:
    """Non-interacting pair: ground energies add, the gap is the pointwise minimum."""
    if a.s_grid.shape != b.s_grid.shape or not np.array_equal(a.s_grid, b.s_grid):
        raise ArgumentError("spectra are sampled on different grids")
    e0 = a.e0 + b.e0
    gap = np.minimum(a.gap, b.gap)
    min_gap = min(a.min_gap, b.min_gap, key=lambda t: t[1])
    return SpectrumResult(a.s_grid, e0, e0 + gap, gap, min_gap)


# --- transition probabilities ------------------------------------------------------


def ghz_to_joules(values) -> np.ndarray:
    return constants.h * np.asarray(values, dtype=float) * 1e9


def landau_zener_probability(gap_ghz, velocity) -> np.ndarray:
    """``exp(-2π δ)`` with ``δ = Δ²/(4ħv)``; ``velocity`` in J/s, zero velocity gives 0."""
    gap_j = ghz_to_joules(gap_ghz)
    v = np.broadcast_to(np.asarray(velocity, dtype=float), gap_j.shape)
    delta = np.divide(
        gap_j**2, 4.0 * constants.hbar * v, out=np.full(gap_j.shape, np.inf), where=v > 0
    )
    return np.exp(-2.0 * np.pi * delta)


def thermal_probability(gap_ghz, temperature_kelvin: float = DEFAULT_TEMPERATURE) -> np.ndarray:
    """Boltzmann weight of the excited level in a two-level system, ``1/(1+exp(Δ/k_B T))``."""
    if temperature_kelvin <= 0:
        raise ArgumentError("temperature must be positive")
    return expit(-ghz_to_joules(gap_ghz) / (constants.k * temperature_kelvin))


def transition_probabilities(
    spec: SpectrumResult, sched: AnnealSchedule, T_kelvin: float = DEFAULT_TEMPERATURE
) -> SpectrumResult:
    """Landau–Zener, thermal and combined excitation probabilities along the grid.

    The sweep velocity is ``|d gap_J / ds| / anneal_time``, central differences
    inside the grid and one-sided at the ends.
    """
    gap_j = ghz_to_joules(spec.gap)
    if spec.s_grid.size > 1:
        velocity = np.abs(np.gradient(gap_j, spec.s_grid)) / sched.anneal_time_seconds
    else:
        velocity = np.zeros_like(gap_j)
    p_lz = landau_zener_probability(spec.gap, velocity)
    p_th = thermal_probability(spec.gap, T_kelvin)
    p_total = p_lz + (1.0 - p_lz) * p_th
    result = replace(spec, p_lz=p_lz, p_thermal=p_th, p_total=p_total)
    s_peak, p_peak = result.max_p_total()
    logger.info(f"max P_total {p_peak:.4g} at s={s_peak:.3f} (T={T_kelvin} K)")
    return result


def export_spectrum_csv(result: SpectrumResult, path: PathLike) -> None:
    empty = np.full(result.s_grid.shape, np.nan)
    pd.DataFrame(
        {
            "s": result.s_grid,
            "e0": result.e0,
            "e1": result.e1,
            "gap": result.gap,
            "p_lz": result.p_lz if result.p_lz is not None else empty,
            "p_thermal": result.p_thermal if result.p_thermal is not None else empty,
            "p_total": result.p_total if result.p_total is not None else empty,
        }
    ).to_csv(path, index=False, encoding="utf-8")


def compare_parameterizations(
    m: IsingModel,
    embedding: Embedding,
    mtqa: Tuple[float, float],
    pqa: Tuple[float, float],
    sched: Optional[AnnealSchedule] = None,
    s_grid: Optional[Sequence[float]] = None,
    hardware: Optional[HardwareGraph] = None,
) -> Dict[str, SpectrumResult]:
    """Eigencurves of one embedded instance under per-instance and global parameters.

    ``mtqa`` and ``pqa`` are ``(chain_strength, scale_factor)`` pairs.
    """
    sched = sched or default_schedule()
    out = {}
    for mode, (chain_strength, scale) in (("MTQA", mtqa), ("PQA", pqa)):
        physical = embed_ising(m, embedding, chain_strength, hardware).scaled(scale)
        out[mode] = eigencurves(physical, sched, s_grid)
    return out
