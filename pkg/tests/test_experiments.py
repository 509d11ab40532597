import math
import warnings

import numpy as np
import pytest

from cpfs import bounds as B
from cpfs import exact as E
from cpfs.distributions import FitnessDist, OffspringDist
from cpfs.experiments import estimators as X
from cpfs.experiments import io as out_io
from cpfs.experiments.stats import MCEstimate
from cpfs.tree import generate_tree, make_path

BIN = OffspringDist.deterministic(2)
ONE = FitnessDist.constant_one()


def test_mc_estimate_invariants():
    e = MCEstimate.proportion(37, 200, 0.99)
    assert e.lo <= e.point <= e.hi
    m = MCEstimate.mean([1.0, 2.0, 3.0, 4.0])
    assert m.point == 2.5 and m.lo < 2.5 < m.hi and m.total == 10.0


def test_survival_tiny_lambda():
    e = X.estimate_survival(BIN, ONE, 1e-6, 50.0, 10**4, 1)
    assert e.point <= 0.001


def test_survival_warns_for_subcritical_tree():
    with pytest.warns(UserWarning):
        X.estimate_survival(OffspringDist.poisson(0.5), ONE, 0.5, 5.0, 100, 1)


def test_root_reinfection_single_vertex():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        e = X.estimate_root_reinfection(OffspringDist.deterministic(0), ONE, 1.0, 1.0, 10**5, 2)
    assert e.contains(math.exp(-1))


def test_heavier_fitness_raises_root_infection():
    a = X.estimate_root_reinfection(BIN, ONE, 0.3, 3.0, 2000, 5, budget=50000)
    b = X.estimate_root_reinfection(BIN, FitnessDist.pareto(1.0), 0.3, 3.0, 2000, 5, budget=50000)
    assert b.point > a.point


def test_coupled_sweep_monotone():
    sw = X.coupled_sweep(BIN, ONE, [0.1, 0.2, 0.4, 0.8, 1.6], 20.0, 2000, 3, budget=5000)
    assert sw.monotone()
    assert X.lambda1_proxy(sw) <= 1.6
    assert math.isnan(X.lambda2_proxy(sw, threshold=1.1))


def test_depth_tail_path_matches_exact():
    p3 = make_path([1.0, 1.0, 1.0])
    dt = X.estimate_depth_tail(0.25, [1, 2, 3], 10**5, 4, tree=p3)
    assert dt.estimates[0].point == 1.0
    for h, e in zip([2, 3], dt.estimates[1:]):
        assert e.contains(E.exact_depth_hit_probability(p3, 0.25, h).probability)


def test_depth_tail_slope_omitted_without_mass():
    dt = X.estimate_depth_tail(1e-4, [1, 2, 3], 1000, 4, tree=make_path([1.0, 1.0, 1.0]))
    assert dt.slope is None and dt.slope_points == 1


def test_star_hitting_bound_and_monotonicity():
    s = X.star_hitting_experiment(1, 8, 512, 4000, 1)
    assert s.L == 241 and s.preconditions_met
    assert s.died_first.bound == pytest.approx(0.0625) and s.died_first.passed
    lo = X.star_hitting_experiment(1, 2, 64, 4000, 1)
    hi = X.star_hitting_experiment(1, 4, 64, 4000, 1)
    assert hi.died_first.estimate.point < lo.died_first.estimate.point
    assert hi.slow.estimate.point < lo.slow.estimate.point


def test_star_hitting_small_regime_reports_only():
    s = X.star_hitting_experiment(1, 1, 4, 2000, 1)
    assert not s.preconditions_met
    assert s.died_first.vacuous and s.died_first.passed is None


def test_star_persistence_starts():
    kw = dict(cap=50.0)
    a = X.star_persistence_experiment(1, 4, 64, 0.1, 400, 2, start="root", **kw)
    b = X.star_persistence_experiment(1, 4, 64, 0.1, 400, 2, start="L", **kw)
    h = X.star_hitting_experiment(1, 4, 64, 400, 2)
    assert b.failure.lo <= a.failure.hi + h.slow.estimate.hi
    assert a.L == 29 and a.threshold == 2 and a.horizon == 50.0
    assert X.star_persistence_experiment(1, 4, 8, 0.49, 10, 2, cap=5.0).stressed
    with pytest.raises(ValueError):
        X.star_persistence_experiment(1, 4, 64, 0.5, 10, 2)


@pytest.mark.parametrize("lam,fit,exact", [(1, [1, 1, 1, 1], 0.125), (1, [9, 1, 9], 0.81)])
def test_path_B(lam, fit, exact):
    pt = X.path_transmission_experiment(lam, fit, 10**5, 3)
    assert pt.exact_B == pytest.approx(exact)
    assert pt.B.contains(exact)
    assert pt.containment_failures_by == 0
    assert pt.reach_by.point >= pt.B_and_fast.point


def test_relay():
    r1 = X.star_path_relay_experiment(1, 8, 64, 1, 2000, 1, cap=5.0)
    r5 = X.star_path_relay_experiment(1, 8, 64, 5, 2000, 1, cap=5.0)
    assert r1.failure.point < r5.failure.point
    r = X.star_path_relay_experiment(1, 8, 64, 3, 500, 1)
    assert r.horizon == 200.0 and r.comparison.note == "capped horizon"
    v = X.star_path_relay_experiment(1, 1, 64, 3, 200, 1)
    assert v.comparison.vacuous and v.comparison.passed is None


def test_good_vertices_binary():
    t = generate_tree(BIN, ONE, 5, 10**4, np.random.default_rng(0))
    assert X.count_good_vertices(t, 1.0, 2).tolist() == [1, 2, 4, 8, 16, 0]
    assert X.count_good_vertices(t, 2.0, 2).sum() == 0


def test_good_vertices_rejects_unexpanded_frontier():
    t = generate_tree(BIN, ONE, 3, 100, np.random.default_rng(0))
    t.frontier.add(1)
    with pytest.raises(ValueError):
        X.count_good_vertices(t, 1.0, 2)


def test_good_vertices_mean():
    off, fit = OffspringDist.poisson(2.0), FitnessDist.pareto(2.0)
    rng = np.random.default_rng(7)
    j5 = []
    for _ in range(10**4):
        j = X.count_good_vertices(generate_tree(off, fit, 6, 10**6, rng, root_children=3), 2.0, 3)
        j5.append(float(j[5]) if len(j) > 5 else 0.0)
    expect = 3 * 2.0**4 * off.pmf(3) * fit.tail(2.0)
    assert X.expected_good_vertices(off, fit, 2.0, 3, 5, root_children=3) == pytest.approx(expect)
    assert MCEstimate.mean(j5).contains(expect)


def test_result_row_format():
    est = MCEstimate.proportion(3, 10, seed=9)
    row = out_io.result_row("x", {"b": math.inf, "a": 1}, est, 0.5, False)
    assert row[1] == '{"a": 1, "b": "inf"}'
    assert row[-3:] == ["0.5", "0", "9"]
    text = out_io.render(out_io.RESULT_COLUMNS, [row], {"k": 1}, 9)
    assert text.splitlines()[0].startswith("# cpfs ")
    assert out_io.read_rows(text)[0]["estimate"] == "0.3"


def test_vacuous_flag_semantics():
    est = MCEstimate.proportion(0, 100)
    assert X.BoundComparison.one_sided("a", est, 2.0).passed is None
    assert X.BoundComparison.one_sided("a", est, 0.5).passed is True
    assert X.BoundComparison.one_sided("a", MCEstimate.proportion(90, 100), 0.5).passed is False
    assert B.is_vacuous(1.0)
