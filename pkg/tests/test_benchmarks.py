import numpy as np
import pytest

from cbome.benchmarks import BENCHMARKS, make_benchmark
from cbome.rng import RngStream


def test_ackley_optimum():
    assert abs(make_benchmark("ackley", 20)(np.zeros(20))) < 1e-9


def test_rastrigin_optimum_and_value():
    f = make_benchmark("rastrigin", 2)
    assert f([0.0, 0.0]) == 0.0
    assert f([1.0, 0.0]) == pytest.approx(1.0)


def test_schwefel220_value():
    assert make_benchmark("schwefel220", 3)([1.0, -2.0, 3.0]) == 6.0


@pytest.mark.parametrize("name", sorted(BENCHMARKS))
def test_known_minimum_at_argmin(name):
    obj = make_benchmark(name, 5)
    assert obj(obj.known_argmin) == pytest.approx(obj.known_min, abs=1e-12)


@pytest.mark.parametrize("name", sorted(BENCHMARKS))
def test_random_points_not_below_minimum(name):
    obj = make_benchmark(name, 4)
    u = np.random.default_rng(0).random((500, 4))
    X = obj.lower + u * (obj.upper - obj.lower)
    assert np.all(obj.evaluate(X) >= obj.known_min - 1e-12)


def test_griewank_and_salomon_values():
    g = make_benchmark("griewank", 2)
    x = np.array([np.pi, 0.0])
    assert g(x) == pytest.approx(1 + np.pi**2 / 4000 - np.cos(np.pi))
    s = make_benchmark("salomon", 2)
    assert s([3.0, 4.0]) == pytest.approx(1 - np.cos(10 * np.pi) + 0.5)


def test_rosenbrock_standard_form():
    r = make_benchmark("rosenbrock", 2)
    assert r([0.0, 0.0]) == 1.0
    assert r([1.0, 1.0]) == 0.0


def test_xsy_random_constants_frozen_per_seed():
    a = make_benchmark("xsy_random", 3, RngStream(4))
    b = make_benchmark("xsy_random", 3, RngStream(4))
    c = make_benchmark("xsy_random", 3, RngStream(5))
    x = np.array([0.5, -1.0, 2.0])
    assert a(x) == b(x)
    assert a(x) != c(x)
    assert a.resample(5)(x) == c(x)


def test_unknown_name():
    with pytest.raises(ValueError):
        make_benchmark("nope", 2)
