"""Tests for success probability and time-to-solution metrics."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mtqa_manager.exceptions import ArgumentError
from mtqa_manager.graphs import ProblemGraph
from mtqa_manager.metrics import (
    cut_edge_summary,
    energy_summary,
    gsp,
    optimal_hit_probability,
    t_run,
    tts,
)


def test_gsp_is_the_mean():
    assert gsp([0.5, 1.0]) == pytest.approx(0.75)
    assert gsp([0.0]) == 0.0


def test_gsp_rejects_bad_input():
    with pytest.raises(ArgumentError):
        gsp([])
    with pytest.raises(ArgumentError):
        gsp([0.5, 1.2])


def test_tts_examples():
    assert tts(1.0, 0.5) == pytest.approx(6.6439, rel=1e-4)
    assert tts(2.5, 1.0) == 2.5
    assert tts(1.0, 0.0) is None


@given(
    t=st.floats(1e-6, 1e3),
    p=st.floats(1e-6, 1.0 - 1e-6),
    target=st.floats(0.5, 0.999),
)
def test_tts_at_least_t_run_below_target(t, p, target):
    value = tts(t, p, target)
    if p < target:
        assert value >= t * (1 - 1e-12)
    assert math.isfinite(value)


def test_tts_argument_checks():
    with pytest.raises(ArgumentError):
        tts(0.0, 0.5)
    with pytest.raises(ArgumentError):
        tts(1.0, 1.5)
    with pytest.raises(ArgumentError):
        tts(1.0, 0.5, p_success=1.0)


def test_t_run_shares_sampler_time():
    assert t_run(1, 10.0, 1, 0, [2.0]) == pytest.approx(12.0)
    assert t_run(100, 10.0, 3, 2, [0.5] * 5) == pytest.approx((2.0 + 2.5) / 100)
    with pytest.raises(ArgumentError):
        t_run(0, 1.0, 1, 0, [])
    with pytest.raises(ArgumentError):
        t_run(1, 1.0, 0, 0, [])


def test_optimal_hit_probability():
    assert optimal_hit_probability([1.0, 2.0, 1.0, 3.0], 1.0) == 0.5
    assert optimal_hit_probability([1.0 + 1e-12], 1.0) == 1.0
    assert optimal_hit_probability([], 1.0) == 0.0


def test_energy_summary():
    summary = energy_summary([1, 2, 3, 4, 5])
    assert summary == {"min": 1.0, "q1": 2.0, "median": 3.0, "q3": 4.0, "max": 5.0}
    with pytest.raises(ArgumentError):
        energy_summary([])


def test_cut_edge_summary():
    c4 = ProblemGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    reads = np.array([[1, 1, 0, 0], [1, 0, 1, 0], [1, 1, 1, 0]])
    summary = cut_edge_summary(c4, reads)
    assert summary["best"] == 2
    assert summary["median"] == 2.0
    assert summary["balanced_fraction"] == pytest.approx(2 / 3)

    unbalanced = cut_edge_summary(c4, np.array([[1, 1, 1, 1]]))
    assert unbalanced["best"] is None
