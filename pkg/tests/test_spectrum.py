"""Tests for annealing schedules, eigencurves and transition probabilities."""

import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mtqa_manager.embedding import Embedding
from mtqa_manager.exceptions import ArgumentError, CapacityError, ParseError
from mtqa_manager.graphs import ProblemGraph
from mtqa_manager.parameterize import LogicalProblem, disjoint_union
from mtqa_manager.qubo import IsingModel
from mtqa_manager.sampling import exact_sample
from mtqa_manager.spectrum import (
    AnnealSchedule,
    SpectrumResult,
    build_hamiltonian,
    combine_different,
    combine_identical,
    compare_parameterizations,
    default_schedule,
    eigencurves,
    export_spectrum_csv,
    landau_zener_probability,
    load_schedule_csv,
    problem_diagonal,
    thermal_probability,
    transition_probabilities,
)
from mtqa_manager.topology import gen_chimera

SCHED = default_schedule()
COARSE = np.linspace(0.0, 1.0, 21)
TRIANGLE = ProblemGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


def synthetic(gap_value, grid=COARSE):
    e0 = -np.ones_like(grid)
    gap = np.full_like(grid, gap_value)
    return SpectrumResult(grid, e0, e0 + gap, gap, (0.0, gap_value))


# --- schedule ---------------------------------------------------------------------


def test_default_schedule_anchors():
    assert SCHED.at(0.0) == (9.62, 0.23)
    assert SCHED.at(0.28) == pytest.approx((1.28, 1.28))
    assert SCHED.at(1.0) == (0.0, 7.56)
    assert len(SCHED.s) == 201


def test_schedule_validation():
    with pytest.raises(ArgumentError):
        AnnealSchedule(np.array([0.0, 0.5]), np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    with pytest.raises(ArgumentError):
        AnnealSchedule(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    with pytest.raises(ArgumentError):
        AnnealSchedule(np.array([0.0, 1.0]), np.array([1.0, 0.0]), np.array([1.0, 0.0]))


def test_load_schedule_csv(tmp_path):
    path = tmp_path / "schedule.csv"
    path.write_text("s,A_GHz,B_GHz\n0,5,0\n0.5,1,1\n1,0,6\n")
    sched = load_schedule_csv(path, anneal_time_seconds=1e-5)
    assert sched.at(0.25) == pytest.approx((3.0, 0.5))
    assert sched.anneal_time_seconds == 1e-5

    path.write_text("s,A\n0,1\n1,0\n")
    with pytest.raises(ParseError):
        load_schedule_csv(path)


# --- Hamiltonian and eigencurves ---------------------------------------------------


def test_single_free_qubit():
    m = IsingModel.logical(1)
    for s in (0.0, 0.28, 0.5):
        A, _ = SCHED.at(s)
        w = np.linalg.eigvalsh(build_hamiltonian(m, SCHED, s))
        assert w == pytest.approx([-A / 2, A / 2])

    spec = eigencurves(m, SCHED)
    assert spec.min_gap[0] == pytest.approx(1.0)
    assert spec.min_gap[1] == pytest.approx(0.0, abs=1e-9)


def test_single_qubit_with_field():
    spec = eigencurves(IsingModel.logical(1, {0: 1.0}), SCHED)
    assert spec.gap[-1] == pytest.approx(7.56)


def test_diagonal_limit_matches_classical_energies():
    m = IsingModel.logical(3, {0: 0.5, 1: -1.0}, {(0, 1): 0.75, (1, 2): -0.5}, 0.25)
    H = build_hamiltonian(m, SCHED, 1.0)
    assert np.count_nonzero(H - np.diag(np.diag(H))) == 0
    assert np.sort(np.diag(H)) == pytest.approx(np.sort(7.56 / 2 * problem_diagonal(m)))

    _, ground = exact_sample(m)
    assert eigencurves(m, SCHED, [1.0]).e0[0] == pytest.approx(7.56 / 2 * ground)


def test_hamiltonian_is_hermitian():
    m = LogicalProblem.build("t", "mvcp", TRIANGLE).ising
    for s in COARSE:
        H = build_hamiltonian(m, SCHED, float(s))
        assert np.allclose(H, H.conj().T)


def test_hamiltonian_limits():
    with pytest.raises(CapacityError):
        build_hamiltonian(IsingModel.logical(13), SCHED, 0.5)
    with pytest.raises(ArgumentError):
        build_hamiltonian(IsingModel.logical(1), SCHED, 1.5)


def test_triangle_gap_positive_inside_the_anneal():
    spec = eigencurves(LogicalProblem.build("t", "mvcp", TRIANGLE).ising, SCHED)
    assert np.all(spec.e0 <= spec.e1)
    assert np.all(spec.gap[1:-1] > 0)
    assert spec.min_gap[1] <= spec.gap.min()


# --- composition -------------------------------------------------------------------


def test_identical_pair_doubles_energies():
    spec = eigencurves(LogicalProblem.build("t", "mvcp", TRIANGLE).ising, SCHED, COARSE)
    pair = combine_identical(spec)
    assert np.array_equal(pair.gap, spec.gap)
    assert pair.e0 == pytest.approx(2 * spec.e0)

    twice = combine_identical(pair)
    assert twice.e0 == pytest.approx(4 * spec.e0)
    assert twice.gap == pytest.approx(spec.gap)


def test_combine_different_rules():
    a, b = synthetic(2.0), synthetic(3.0)
    combined = combine_different(a, b)
    assert np.all(combined.gap == 2.0)
    assert np.all(combined.e0 == -2.0)

    same = combine_different(a, a)
    reference = combine_identical(a)
    assert np.array_equal(same.e0, reference.e0)
    assert np.array_equal(same.gap, reference.gap)

    with pytest.raises(ArgumentError):
        combine_different(a, synthetic(1.0, np.linspace(0.0, 1.0, 11)))


def test_combine_different_matches_composite_hamiltonian():
    a = IsingModel.logical(2, {0: 0.5}, {(0, 1): -1.0})
    b = IsingModel((2, 3), {3: -0.25}, {(2, 3): 0.75})
    combined = combine_different(eigencurves(a, SCHED, COARSE), eigencurves(b, SCHED, COARSE))
    direct = eigencurves(disjoint_union([a, b]), SCHED, COARSE)
    np.testing.assert_allclose(combined.e0, direct.e0, atol=1e-9)
    np.testing.assert_allclose(combined.e1, direct.e1, atol=1e-9)

    s = 0.4
    Ha, Hb = build_hamiltonian(a, SCHED, s), build_hamiltonian(b, SCHED, s)
    H = np.kron(Ha, np.eye(4)) + np.kron(np.eye(4), Hb)
    w = np.linalg.eigvalsh(H)
    pair = combine_different(eigencurves(a, SCHED, [s, 1.0]), eigencurves(b, SCHED, [s, 1.0]))
    assert w[:2] == pytest.approx([pair.e0[0], pair.e1[0]])


# --- transition probabilities ------------------------------------------------------


def test_transition_probability_limits():
    assert landau_zener_probability(np.array([0.0]), np.array([1e-20]))[0] == 1.0
    assert landau_zener_probability(np.array([1.0]), np.array([0.0]))[0] == 0.0
    assert thermal_probability(np.array([0.0]))[0] == 0.5
    with pytest.raises(ArgumentError):
        thermal_probability(np.array([1.0]), temperature_kelvin=0.0)


@given(gaps=st.lists(st.floats(0.0, 20.0), min_size=2, max_size=10))
def test_thermal_probability_decreases_with_gap(gaps):
    values = thermal_probability(np.sort(np.array(gaps)))
    assert np.all(np.diff(values) <= 0)
    assert np.all((values >= 0) & (values <= 0.5))


def test_total_probability_combines_both_channels():
    spec = transition_probabilities(synthetic(0.0), SCHED)
    # zero gap with zero velocity: no LZ channel, thermal at its maximum
    assert np.allclose(spec.p_thermal, 0.5)
    assert np.allclose(spec.p_total, spec.p_lz + (1 - spec.p_lz) * spec.p_thermal)


def test_star_profile_peaks_mid_anneal():
    star = ProblemGraph.from_edges(6, [(0, k) for k in range(1, 6)])
    spec = eigencurves(LogicalProblem.build("star", "mvcp", star).ising, SCHED)
    result = transition_probabilities(spec, SCHED, 0.016)
    for curve in (result.p_lz, result.p_thermal, result.p_total):
        assert np.all((curve >= 0) & (curve <= 1))
    s_peak, _ = result.max_p_total()
    assert 0.2 < s_peak < 0.6
    assert result.p_total[-1] < 1e-3


def test_export_spectrum_csv(tmp_path):
    spec = eigencurves(IsingModel.logical(1, {0: 1.0}), SCHED, COARSE)
    export_spectrum_csv(spec, tmp_path / "bare.csv")
    bare = pd.read_csv(tmp_path / "bare.csv")
    assert list(bare.columns) == ["s", "e0", "e1", "gap", "p_lz", "p_thermal", "p_total"]
    assert bare["p_total"].isna().all()

    export_spectrum_csv(transition_probabilities(spec, SCHED), tmp_path / "full.csv")
    assert pd.read_csv(tmp_path / "full.csv")["p_total"].notna().all()


def test_compare_parameterizations_scales_the_spectrum():
    hw = gen_chimera(1, 1, 4)
    m = LogicalProblem.build("t", "mvcp", TRIANGLE).ising
    emb = Embedding({0: {0}, 1: {4}, 2: {1, 5}}, TRIANGLE.edges, hw)
    out = compare_parameterizations(m, emb, mtqa=(1.0, 1.0), pqa=(1.0, 4.0), s_grid=[1.0])
    assert set(out) == {"MTQA", "PQA"}
    assert out["PQA"].e0[0] == pytest.approx(out["MTQA"].e0[0] / 4.0)
