"""Tests for the MVCP/GPP objectives, Ising conversion and exact oracles."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtqa_manager.exceptions import CapacityError, ParameterError, ShapeError
from mtqa_manager.graphs import ProblemGraph, gen_erdos_renyi
from mtqa_manager.qubo import (
    IsingModel,
    Qubo,
    brute_force_min,
    build_gpp_qubo,
    build_mvcp_qubo,
    cut_edges,
    gpp_penalty_bound,
    gpp_strict_penalty,
    interaction_graph,
    ising_ground_states,
    load_model,
    minimum_balanced_cut,
    minimum_vertex_cover_size,
    partition_balanced,
    qubo_argmin_set,
    qubo_to_ising,
    save_model,
    vertex_cover_valid,
)

TRIANGLE = ProblemGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
K4 = ProblemGraph.from_edges(4, itertools.combinations(range(4), 2))
C4 = ProblemGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])


def all_assignments(n):
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=float)


# --- MVCP --------------------------------------------------------------------

def test_mvcp_energy_examples():
    q = build_mvcp_qubo(TRIANGLE)
    assert q.energy([1, 1, 0]) == pytest.approx(2.0)

    edge = build_mvcp_qubo(ProblemGraph.from_edges(2, [(0, 1)]))
    assert edge.energy([0, 0]) == pytest.approx(2.0)

    empty = build_mvcp_qubo(ProblemGraph(3, frozenset()))
    assert empty.energy([0, 0, 0]) == pytest.approx(0.0)


def test_mvcp_requires_b_below_a():
    with pytest.raises(ParameterError):
        build_mvcp_qubo(TRIANGLE, A=1.0, B=1.0)
    with pytest.raises(ParameterError):
        build_mvcp_qubo(TRIANGLE, A=2.0, B=0.0)


@given(n=st.integers(2, 9), p=st.floats(0.1, 1.0), seed=st.integers(0, 1000))
@settings(max_examples=25, deadline=None)
def test_mvcp_minimum_is_a_minimum_cover(n, p, seed):
    g = gen_erdos_renyi(n, p, seed)
    bits, energy = brute_force_min(build_mvcp_qubo(g))
    assert vertex_cover_valid(g, bits)
    assert energy == pytest.approx(minimum_vertex_cover_size(g))


# --- GPP ---------------------------------------------------------------------

def test_gpp_penalty_bound_examples():
    K10 = ProblemGraph.from_edges(10, itertools.combinations(range(10), 2))
    assert gpp_penalty_bound(K10) == pytest.approx(1.25)
    assert gpp_penalty_bound(TRIANGLE) == pytest.approx(0.375)
    assert gpp_penalty_bound(ProblemGraph(4, frozenset())) == 0.0


def test_gpp_energy_examples():
    q = build_gpp_qubo(K4, B=1.0, A=1.0)
    assert q.energy([1, 1, 0, 0]) == pytest.approx(4.0)
    assert q.energy([0, 0, 0, 0]) == pytest.approx(4.0)

    cycle = build_gpp_qubo(C4, B=1.0, A=1.0)
    assert cycle.energy([1, 1, 0, 0]) == pytest.approx(2.0)


def test_gpp_energy_matches_direct_formula():
    g = gen_erdos_renyi(6, 0.6, seed=4)
    A, B = 0.7, 1.3
    q = build_gpp_qubo(g, B=B, A=A)
    for x in all_assignments(6):
        direct = A * (x.sum() - 3) ** 2 + B * cut_edges(g, x.astype(int))
        assert q.energy(x) == pytest.approx(direct)


def test_gpp_rejects_nonpositive_penalty():
    with pytest.raises(ParameterError):
        build_gpp_qubo(K4, A=0.0)


def test_gpp_odd_node_count_warns(caplog):
    build_gpp_qubo(TRIANGLE)
    assert "odd" in caplog.text


@pytest.mark.parametrize(
    "g", [ProblemGraph(4, frozenset()), gen_erdos_renyi(6, 0.0, 3)], ids=["empty4", "er6-p0"]
)
def test_gpp_default_penalty_on_edgeless_graph(g):
    q = build_gpp_qubo(g)
    argmins, energy = qubo_argmin_set(q)
    assert energy == pytest.approx(0.0)
    assert all(partition_balanced(x) for x in argmins)
    assert len(argmins) == len(list(itertools.combinations(range(g.node_count), g.node_count // 2)))
    # explicit penalties are taken as given
    assert build_gpp_qubo(g, A=0.0).energy([0] * g.node_count) == pytest.approx(0.0)


def test_gpp_default_penalty_admits_unbalanced_minimum_on_k4():
    # degree bound A = 0.5: one vertex alone costs 0.5 + 3 cut edges < 4 cut edges balanced
    argmins, energy = qubo_argmin_set(build_gpp_qubo(K4))
    assert energy == pytest.approx(3.5)
    assert not any(partition_balanced(x) for x in argmins)


def _seeded_graphs(count=200, sizes=range(4, 11)):
    rng = np.random.default_rng(2024)
    for k in range(count):
        n = int(sizes[k % len(sizes)])
        yield gen_erdos_renyi(n, float(rng.uniform(0.2, 1.0)), int(rng.integers(0, 10**6)))


def test_objectives_match_direct_search_on_seeded_graphs():
    graphs = list(_seeded_graphs())
    assert len(graphs) == 200
    for g in graphs:
        bits, energy = brute_force_min(build_mvcp_qubo(g))
        assert vertex_cover_valid(g, bits)
        assert energy == pytest.approx(minimum_vertex_cover_size(g))
        if g.node_count % 2 == 0:
            argmins, cut = qubo_argmin_set(build_gpp_qubo(g, A=gpp_strict_penalty(g)))
            assert all(partition_balanced(x) for x in argmins)
            assert all(cut_edges(g, x) == minimum_balanced_cut(g) for x in argmins)
            assert cut == pytest.approx(minimum_balanced_cut(g))


@given(seed=st.integers(0, 500), p=st.floats(0.2, 1.0))
@settings(max_examples=20, deadline=None)
def test_strict_penalty_gives_balanced_minimum_cut(seed, p):
    g = gen_erdos_renyi(8, p, seed)
    q = build_gpp_qubo(g, A=gpp_strict_penalty(g))
    argmins, energy = qubo_argmin_set(q)
    assert all(partition_balanced(x) for x in argmins)
    assert energy == pytest.approx(minimum_balanced_cut(g))


# --- Ising conversion --------------------------------------------------------

def test_ising_conversion_examples():
    single = qubo_to_ising(Qubo(1, {0: 1.0}))
    assert single.h == {0: 0.5}
    assert single.offset == pytest.approx(0.5)

    pair = qubo_to_ising(Qubo(2, {}, {(0, 1): 4.0}))
    assert pair.J == {(0, 1): 1.0}
    assert pair.h == {0: 1.0, 1: 1.0}
    assert pair.offset == pytest.approx(1.0)


@given(n=st.integers(1, 8), p=st.floats(0.0, 1.0), seed=st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_ising_energies_agree_with_qubo(n, p, seed):
    g = gen_erdos_renyi(n, p, seed)
    for q in (build_mvcp_qubo(g), build_gpp_qubo(g, A=1.0)):
        X = all_assignments(n)
        m = qubo_to_ising(q)
        np.testing.assert_allclose(m.energies(2 * X - 1), q.energies(X), atol=1e-9)


def test_ising_model_helpers():
    m = IsingModel((3, 7), {3: -2.0}, {(7, 3): 1.5}, 0.25)
    assert m.J == {(3, 7): 1.5}
    assert m.energy({3: 1, 7: -1}) == pytest.approx(-2.0 - 1.5 + 0.25)
    assert m.max_abs_h() == 2.0
    assert m.max_abs_j() == 1.5

    half = m.scaled(2.0)
    assert half.h == {3: -1.0}
    assert half.J == {(3, 7): 0.75}

    with pytest.raises(ShapeError):
        m.energies(np.ones((1, 3)))


def test_interaction_graph():
    q = build_mvcp_qubo(C4)
    assert interaction_graph(q).edges == C4.edges
    assert interaction_graph(qubo_to_ising(q)).edges == C4.edges


def test_model_files(tmp_path):
    q = build_gpp_qubo(C4, A=1.0)
    save_model(q, tmp_path / "q.json")
    assert load_model(tmp_path / "q.json") == q

    m = qubo_to_ising(q)
    save_model(m, tmp_path / "m.json")
    loaded = load_model(tmp_path / "m.json")
    assert loaded.h == pytest.approx(m.h)
    assert loaded.J == pytest.approx(m.J)


# --- oracles -----------------------------------------------------------------

def test_brute_force_examples():
    assert brute_force_min(build_mvcp_qubo(TRIANGLE))[1] == pytest.approx(2.0)
    bits, energy = brute_force_min(build_gpp_qubo(K4, A=1.0))
    assert energy == pytest.approx(4.0)
    # ties resolve to the lexicographically smallest assignment
    assert bits == (0, 0, 0, 0)


def test_brute_force_empty_and_capacity():
    assert brute_force_min(Qubo(0, offset=1.5)) == ((), 1.5)
    with pytest.raises(CapacityError):
        brute_force_min(Qubo(25))


def test_argmin_set_of_single_edge_cover():
    argmins, energy = qubo_argmin_set(build_mvcp_qubo(ProblemGraph.from_edges(2, [(0, 1)])))
    assert argmins == [(0, 1), (1, 0)]
    assert energy == pytest.approx(1.0)


def test_ising_ground_states_of_ferromagnetic_pair():
    states, energy = ising_ground_states(IsingModel.logical(2, J={(0, 1): -1.0}))
    assert states == [(-1, -1), (1, 1)]
    assert energy == pytest.approx(-1.0)


def test_solution_checks():
    assert cut_edges(K4, [1, 1, 0, 0]) == 4
    assert partition_balanced([1, 1, 0, 0])
    assert not partition_balanced([1, 0, 0])
    assert vertex_cover_valid(TRIANGLE, [1, 1, 0])
    assert not vertex_cover_valid(TRIANGLE, [1, 0, 0])
    with pytest.raises(ShapeError):
        vertex_cover_valid(TRIANGLE, [1, 1])
