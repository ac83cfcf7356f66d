import numpy as np
import pytest
from sklearn.base import clone

from cbome import CBOMinimizer, make_benchmark


def test_minimizer_fit_and_params():
    est = CBOMinimizer(n_particles=40, max_iter=500, random_state=2)
    est.fit(make_benchmark("sphere", 3))
    assert est.fun_ < 1e-3
    assert est.x_.shape == (3,)
    assert est.n_iter_ == est.report_.iterations
    assert est.score(make_benchmark("sphere", 3)) == pytest.approx(-est.fun_)


def test_minimizer_clone_and_set_params():
    est = CBOMinimizer(mu=0.1)
    c = clone(est).set_params(n_particles=17)
    assert c.get_params()["mu"] == 0.1
    assert c.solver_config().n0 == 17


def test_minimizer_reproducible():
    obj = make_benchmark("ackley", 4)
    a = CBOMinimizer(n_particles=30, max_iter=100).fit(obj)
    b = CBOMinimizer(n_particles=30, max_iter=100).fit(obj)
    assert np.array_equal(a.x_, b.x_)


def test_minimizer_requires_objective():
    with pytest.raises(TypeError):
        CBOMinimizer().fit(np.zeros((3, 2)))
