import math

import numpy as np
import pytest

from cbome.transport import (
    EmpiricalMeasure,
    selection_bound_experiment,
    w2_bruteforce_equal_size,
    w2_distance,
)


@pytest.mark.parametrize("method", ["network-simplex", "lp"])
@pytest.mark.parametrize("a, b, expected", [
    ([[0.0], [1.0]], [[0.0], [1.0]], 0.0),
    ([[0.0]], [[1.0]], 1.0),
    ([[0.0], [2.0]], [[0.0]], math.sqrt(2.0)),
    ([[0.0], [1.0]], [[1.0], [0.0]], 0.0),
    ([[0.0], [1.0]], [[0.0], [3.0]], math.sqrt(2.0)),
])
def test_w2_examples(method, a, b, expected):
    d, plan = w2_distance(a, b, method)
    assert d == pytest.approx(expected, abs=1e-12)
    np.testing.assert_allclose(plan.weights.sum(axis=1), 1.0 / len(a))
    np.testing.assert_allclose(plan.weights.sum(axis=0), 1.0 / len(b))


def test_bruteforce_examples():
    assert w2_bruteforce_equal_size([[0.0], [1.0]], [[0.0], [3.0]]) == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        w2_bruteforce_equal_size(np.zeros((7, 1)), np.zeros((7, 1)))


def test_methods_agree_on_unequal_sizes():
    rng = np.random.default_rng(1)
    a, b = rng.random((9, 2)), rng.random((5, 2))
    d1, _ = w2_distance(a, b, "network-simplex")
    d2, _ = w2_distance(a, b, "lp")
    assert d1 == pytest.approx(d2, abs=1e-9)


def test_symmetry_and_shuffle_invariance():
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=(6, 3)), rng.normal(size=(4, 3))
    assert w2_distance(a, b)[0] == pytest.approx(w2_distance(b, a)[0], abs=1e-12)
    assert w2_distance(a, a[rng.permutation(6)])[0] == pytest.approx(0.0, abs=1e-12)


def test_errors():
    with pytest.raises(ValueError):
        w2_distance([[0.0, 1.0]], [[0.0]])
    with pytest.raises(ValueError):
        EmpiricalMeasure(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        w2_distance([[0.0]], [[1.0]], method="sinkhorn")


def test_tight_case():
    rows = selection_bound_experiment(n=2, dims=(1,), n_sel_grid=[1], trials=20,
                                      cloud={1: [[0.0], [2.0]]})
    (row,) = rows
    assert row["empirical_w2sq"] == pytest.approx(2.0)
    assert row["bound_prop4"] == pytest.approx(2.0)


def test_coincident_cloud_zero():
    rows = selection_bound_experiment(n=4, dims=(2,), n_sel_grid=[3], trials=5,
                                      cloud={2: np.ones((4, 2))})
    assert rows[0]["empirical_w2sq"] == 0.0
    assert rows[0]["bound_prop4"] == 0.0


def test_small_sweep_under_bound():
    rows = selection_bound_experiment(n=30, dims=(3,), n_sel_grid=range(2, 30, 4), trials=40)
    assert len(rows) == 7
    for r in rows:
        assert r["empirical_w2sq"] <= 1.05 * r["bound_prop4"]
