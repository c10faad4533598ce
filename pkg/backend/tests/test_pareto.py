import numpy as np
import pytest

from app.errors import ParetoError
from app.ga.pareto import dominates, hypervolume_2d, nadir_point, pareto_front, pareto_indices


def _oracle(points):
    return [i for i, p in enumerate(points) if not any(dominates(q, p) for q in points)]


def _monte_carlo(front, nadir, rng, samples=100_000):
    front = np.asarray(front)
    high = front.max(axis=0)
    box = (high[0] - nadir[0]) * (high[1] - nadir[1])
    draws = rng.uniform(nadir, high, size=(samples, 2))
    covered = np.zeros(samples, dtype=bool)
    for x, y in front:
        covered |= (draws[:, 0] <= x) & (draws[:, 1] <= y)
    p = covered.mean()
    return box * p, box * np.sqrt(p * (1 - p) / samples)


def test_dominates():
    assert dominates((2, 2), (1, 2))
    assert not dominates((1, 1), (1, 1))
    assert not dominates((2, 0), (0, 2))


def test_front_matches_quadratic_oracle():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 30))
        # integer coordinates exercise ties and duplicates
        points = [tuple(map(float, p)) for p in rng.integers(0, 6, size=(n, 2))]
        assert pareto_indices(points) == _oracle(points)


def test_front_keeps_points():
    points = [(1.0, 3.0), (2.0, 2.0), (0.5, 0.5), (3.0, 1.0)]
    assert pareto_front(points) == [(1.0, 3.0), (2.0, 2.0), (3.0, 1.0)]


def test_hypervolume_examples():
    assert hypervolume_2d([(1.0, 1.0)], (0.0, 0.0)) == pytest.approx(1.0)
    assert hypervolume_2d([(1.0, 0.5), (0.5, 1.0)], (0.0, 0.0)) == pytest.approx(0.75)
    assert hypervolume_2d([], (0.0, 0.0)) == 0.0


def test_dominated_points_add_nothing():
    front = [(1.0, 0.5), (0.5, 1.0)]
    assert hypervolume_2d(front + [(0.4, 0.4)], (0.0, 0.0)) == pytest.approx(hypervolume_2d(front, (0.0, 0.0)))


def test_hypervolume_matches_monte_carlo():
    rng = np.random.default_rng(1)
    for _ in range(20):
        points = [tuple(p) for p in rng.normal(size=(int(rng.integers(2, 15)), 2))]
        nadir = nadir_point(points)
        front = pareto_front(points)
        estimate, sigma = _monte_carlo(front, nadir, rng)
        assert abs(hypervolume_2d(front, nadir) - estimate) <= 4 * sigma + 1e-9


def test_point_below_nadir():
    with pytest.raises(ParetoError):
        hypervolume_2d([(1.0, -1.0)], (0.0, 0.0))


def test_nadir():
    assert nadir_point([(1.0, 5.0), (3.0, 2.0)]) == (1.0, 2.0)
    with pytest.raises(ParetoError):
        nadir_point([])
