import math

import numpy as np
import pytest

from cpfs.coupling import (
    CouplingError, couple_ignore_recoveries, couple_monotone, open_probability,
    percolation_component, percolation_component_coupled,
)
from cpfs.distributions import FitnessDist, OffspringDist
from cpfs.experiments.stats import MCEstimate
from cpfs.tree import generate_tree, lazy_root, make_path, make_star

ONE = FitnessDist.constant_one()


def test_identical_params_identical_runs():
    rng = np.random.default_rng(0)
    g = make_star(3, 2.0, 1.0)
    for _ in range(200):
        run = couple_monotone(g, 1.0, 1.0, g.fitness, g.fitness, [0], rng)
        assert run.ext_low == run.ext_high and run.violations == 0


def test_monotone_coupling_star():
    rng = np.random.default_rng(1)
    g = make_star(4, 1.0, 1.0)
    for _ in range(10**4):
        run = couple_monotone(g, 0.5, 1.0, g.fitness, g.fitness, [0], rng)
        assert run.violations == 0
        assert run.ext_low <= run.ext_high


def test_monotone_coupling_rejects_non_dominated_rates():
    g = make_star(2, 1.0, 1.0)
    with pytest.raises(CouplingError):
        couple_monotone(g, 1.0, 0.5, g.fitness, g.fitness, [0], np.random.default_rng(0))


def test_ignore_recoveries_empty_set_is_identity():
    rng = np.random.default_rng(2)
    g = make_star(2, 1.5, 1.0)
    for _ in range(500):
        run = couple_ignore_recoveries(g, 1.0, [0], 0, [], rng)
        assert run.ext_low == run.ext_high and run.extra == 0


def test_ignore_all_root_recoveries():
    rng = np.random.default_rng(3)
    g = make_star(2, 1.0, 1.0)
    for _ in range(200):
        run = couple_ignore_recoveries(g, 1.0, [0], 0, [(0.0, math.inf)], rng, horizon=20.0)
        assert run.ext_high == math.inf and run.violations == 0


def test_ignore_recoveries_random_intervals():
    rng = np.random.default_rng(4)
    g = make_path([1.0, 2.0, 1.0, 1.5])
    for _ in range(10**4):
        a = float(rng.uniform(0, 3))
        run = couple_ignore_recoveries(g, 0.8, [0], int(rng.integers(0, 4)),
                                       [(a, a + float(rng.uniform(0, 2)))], rng, horizon=30.0)
        assert run.violations == 0


def test_bad_intervals():
    with pytest.raises(CouplingError):
        couple_ignore_recoveries(make_path([1.0]), 1.0, [0], 0, [(2.0, 1.0)],
                                 np.random.default_rng(0))


def test_percolation_tiny_window():
    rng = np.random.default_rng(5)
    tree = generate_tree(OffspringDist.deterministic(2), ONE, 10, 10**4, rng)
    singles = sum(len(percolation_component(tree, 1.0, 1e-12, rng)) == 1 for _ in range(10**4))
    assert singles >= 9990


def test_percolation_on_path_is_geometric():
    rng = np.random.default_rng(6)
    t0 = 0.7
    p = open_probability(1.0, 1.0, 1.0, t0)
    sizes = []
    for _ in range(2 * 10**4):
        tree = lazy_root(ONE, rng)
        sizes.append(len(percolation_component(tree, 1.0, t0, rng,
                                               (OffspringDist.deterministic(1), ONE))) - 1)
    assert MCEstimate.mean(sizes).contains(p / (1 - p))


def test_percolation_scaled_component_contains():
    rng = np.random.default_rng(7)
    for _ in range(2000):
        tree = lazy_root(ONE, rng)
        lo, hi = percolation_component_coupled(tree, 0.2, 0.5, rng, 2.0,
                                               (OffspringDist.poisson(2.0), ONE))
        assert lo <= hi


def test_percolation_errors():
    with pytest.raises(CouplingError):
        percolation_component(make_path([1.0]), 1.0, 0.0, np.random.default_rng(0))
    with pytest.raises(CouplingError):
        percolation_component(lazy_root(ONE, np.random.default_rng(0)), 1.0, 1.0,
                              np.random.default_rng(0))
