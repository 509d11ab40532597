import math

import numpy as np
import pytest

from cpfs.distributions import (
    DistributionError, FitnessDist, OffspringDist, log_tail_ratio, parse_fitness, parse_offspring,
)
from cpfs.experiments.stats import MCEstimate, wilson_interval


def test_deterministic_is_point_mass():
    d = OffspringDist.deterministic(2)
    rng = np.random.default_rng(0)
    assert d.mean == 2
    assert d.sample(rng) == 2
    assert d.pmf(2) == 1.0 and d.pmf(1) == 0.0


def test_poisson_sample_mean():
    x = OffspringDist.poisson(2.0).sample(np.random.default_rng(1), 10**5)
    assert MCEstimate.mean(x).contains(2.0)


def test_empirical_offspring_mean():
    d = OffspringDist.empirical({0: 0.5, 3: 0.5})
    assert d.mean == pytest.approx(1.5)
    x = d.sample(np.random.default_rng(2), 10**5)
    assert set(np.unique(x)) <= {0, 3}
    assert MCEstimate.mean(x).contains(1.5)


@pytest.mark.parametrize("dist", [
    OffspringDist.poisson(2.0),
    OffspringDist.geometric(0.3),
    OffspringDist.power_law(2.5, 200),
    OffspringDist.power_law(2.5),
    OffspringDist.stretched_exp(0.5),
    OffspringDist.empirical({1: 0.25, 2: 0.75}),
])
def test_pmf_sums_to_one(dist):
    total = math.fsum(dist.pmf(k) for k in range(0, 20000))
    assert total == pytest.approx(1.0, abs=1e-6)
    assert all(dist.pmf(k) >= 0 for k in range(50))


def test_geometric_mean():
    assert OffspringDist.geometric(0.25).mean == pytest.approx(3.0)


def test_power_law_without_cutoff_needs_alpha_above_one():
    with pytest.raises(DistributionError):
        OffspringDist.power_law(1.0)
    with pytest.raises(DistributionError):
        OffspringDist.power_law(0.5)
    OffspringDist.power_law(0.5, 100)


def test_stretched_exp_cap_mass_negligible():
    d = OffspringDist.stretched_exp(0.5)
    assert math.isfinite(d.mean)
    assert math.fsum(d.pmf(k) for k in range(0, 2000)) == pytest.approx(1.0, abs=1e-12)


def test_fitness_support():
    rng = np.random.default_rng(3)
    assert FitnessDist.constant_one().sample(rng) == 1.0
    assert FitnessDist.constant(4.0).sample(rng) == 4.0
    for d in (FitnessDist.pareto(0.5), FitnessDist.uniform(1.0, 3.0),
              FitnessDist.empirical([1.0, 2.0, 5.0], [0.0, 0.5, 1.0])):
        assert np.all(d.sample(rng, 10**4) >= 1.0)
    with pytest.raises(DistributionError):
        FitnessDist.constant(0.5)
    with pytest.raises(DistributionError):
        FitnessDist.uniform(0.5, 2.0)
    with pytest.raises(DistributionError):
        FitnessDist.empirical([0.5, 2.0], [0.0, 1.0])


def test_pareto_tail():
    x = FitnessDist.pareto(2.0).sample(np.random.default_rng(4), 10**6)
    n = len(x)
    k = int(np.sum(x > 10))
    se = math.sqrt(0.01 * 0.99 / n)
    assert abs(k / n - 0.01) < 3 * se
    assert FitnessDist.pareto(2.0).tail(10.0) == pytest.approx(0.01)
    assert log_tail_ratio(FitnessDist.pareto(1.7), 50.0) == pytest.approx(-1.7)


@pytest.mark.parametrize("text,mean", [
    ("det:3", 3.0), ("pois:2.5", 2.5), ("geom:0.5", 1.0),
    ("emp:0=0.5,3=0.5", 1.5),
])
def test_parse_offspring(text, mean):
    assert parse_offspring(text).mean == pytest.approx(mean)


def test_parse_variants():
    assert parse_offspring("pow:2.5,100").mean > 1
    assert parse_offspring("sexp:0.5").mean > 0
    assert parse_fitness("const:2").tail(2.0) == 1.0
    assert parse_fitness("pareto:1").tail(4.0) == pytest.approx(0.25)
    assert parse_fitness("unif:1,3").tail(2.0) == pytest.approx(0.5)
    parse_fitness("emp:1=0,2=1")


@pytest.mark.parametrize("bad", ["det:-1", "det:x", "pois", "foo:1", "pow:0.5", "geom:0"])
def test_parse_offspring_errors(bad):
    with pytest.raises(DistributionError):
        parse_offspring(bad)


@pytest.mark.parametrize("bad", ["const:0.5", "pareto:-1", "unif:3", "x:1"])
def test_parse_fitness_errors(bad):
    with pytest.raises(DistributionError):
        parse_fitness(bad)


def test_wilson_examples():
    assert wilson_interval(0, 100, 0.95)[0] == 0.0
    lo, hi = wilson_interval(50, 100, 0.95)
    assert (lo + hi) / 2 == pytest.approx(0.5)
    assert hi - lo == pytest.approx(0.19, abs=0.005)
    assert wilson_interval(100, 100, 0.95)[1] == 1.0
    with pytest.raises(ValueError):
        wilson_interval(3, 2)
