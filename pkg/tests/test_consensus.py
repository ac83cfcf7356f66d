import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cbome.consensus import consensus_point, consensus_subset, gibbs_weights
from cbome.ensemble import ParticleEnsemble


def test_single_participant():
    for alpha in (0.0, 1.0, 1e6):
        assert consensus_point([[7.0, 7.0]], [3.0], alpha).point.tolist() == [7.0, 7.0]


def test_equal_values_give_mean():
    assert consensus_point([[0.0], [2.0]], [5.0, 5.0], 10.0).point[0] == 1.0


def test_two_point_gibbs_value():
    c = consensus_point([[0.0], [1.0]], [0.0, 1.0], 1.0)
    assert c.point[0] == pytest.approx(1.0 / (1.0 + math.e), abs=1e-12)


def test_alpha_zero_is_arithmetic_mean():
    rng = np.random.default_rng(0)
    y, v = rng.normal(size=(7, 3)), rng.normal(size=7)
    np.testing.assert_allclose(consensus_point(y, v, 0.0).point, y.mean(axis=0), atol=1e-14)


def test_large_alpha_no_overflow():
    c = consensus_point([[0.0], [1.0]], [0.0, 1e6], 1e9)
    assert c.point[0] == 0.0


def test_non_finite_value_raises():
    with pytest.raises(FloatingPointError, match="non-finite objective"):
        consensus_point([[0.0], [1.0]], [0.0, np.nan], 1.0)
    with pytest.raises(ValueError, match="empty ensemble"):
        consensus_point(np.zeros((0, 1)), [], 1.0)


def test_shift_invariance_is_exact_for_dyadic_shift():
    y = np.array([[0.5], [1.25], [-3.0]])
    v = np.array([0.25, 1.5, 0.75])
    a = consensus_point(y, v, 2.0).point
    b = consensus_point(y, v + 8.0, 2.0).point
    assert np.array_equal(a, b)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 10), st.integers(1, 3)),
              elements=st.floats(-100, 100)),
       st.floats(0, 50), st.floats(-1e3, 1e3))
def test_consensus_in_hull_and_shift_invariant(y, alpha, shift):
    v = np.linspace(0.0, 1.0, len(y))
    c = consensus_point(y, v, alpha).point
    assert np.all(c >= y.min(axis=0) - 1e-9) and np.all(c <= y.max(axis=0) + 1e-9)
    c2 = consensus_point(y, v + shift, alpha).point
    np.testing.assert_allclose(c, c2, atol=1e-9 * (1 + np.abs(y).max()))
    w = gibbs_weights(v, alpha)
    assert w.sum() == pytest.approx(1.0)


def _ens(values):
    n = len(values)
    y = np.arange(n, dtype=float).reshape(-1, 1) * 10.0
    return ParticleEnsemble(ids=np.arange(n), positions=y.copy(), personal_bests=y,
                            pb_values=np.asarray(values, float))


def test_subset_matches_direct_formula():
    ens = _ens([0.0, 1.0, 2.0, 3.0])
    sub = consensus_subset(ens, [0, 1], 1.0)
    direct = consensus_point(ens.personal_bests[:2], [0.0, 1.0], 1.0)
    assert np.array_equal(sub.point, direct.point)
    assert sub.participant_ids == frozenset({0, 1})


def test_subset_full_and_single():
    ens = _ens([2.0, 0.5, 1.0])
    full = consensus_subset(ens, ens.ids, 3.0)
    assert np.array_equal(full.point, consensus_point(ens.personal_bests, ens.pb_values, 3.0).point)
    assert consensus_subset(ens, [1], 3.0).point[0] == 10.0


def test_subset_rejects_inactive_ids():
    with pytest.raises(ValueError):
        consensus_subset(_ens([0.0, 1.0]), [5], 1.0)
