import math

import numpy as np
import pytest

from cpfs.bounds import hitting_time_bound
from cpfs.experiments.stats import MCEstimate
from cpfs.gadgets import (
    YChain, embedded_Z_supermartingale_check, estimate_Y_drift, frakN_pmf, sample_frakN,
    simulate_Y_chain, z_one_step_drift,
)


def test_frakN_pmf():
    assert frakN_pmf(0, 1.0, 1.0) == pytest.approx(0.5)
    assert math.fsum(frakN_pmf(j, 0.5, 3.0) for j in range(200)) == pytest.approx(1.0)


def test_frakN_mean():
    x = sample_frakN(1.0, 2.0, np.random.default_rng(0), 10**6)
    assert MCEstimate.mean(x).contains(0.5)


def test_frakN_large_rate():
    x = sample_frakN(1.0, 1e6, np.random.default_rng(1), 10**6)
    assert np.sum(x == 0) >= 999990


def test_frakN_rejects_nonpositive():
    with pytest.raises(ValueError):
        sample_frakN(0.0, 1.0, np.random.default_rng(0))


def test_ychain_basics():
    c = YChain(1, 1, 3)
    assert c.L == 1 and c.drift() == 0.0
    run = simulate_Y_chain(1, 8, 64, 5.0, np.random.default_rng(0))
    assert run.values[0] == 0 and np.all(np.diff(run.times) > 0)
    assert np.all(run.values <= run.L)
    assert run.T_L < math.inf


def test_ychain_censored_hitting():
    run = YChain(0.01, 1, 1000).run(1e-9, np.random.default_rng(0))
    assert run.T_L == math.inf and run.R_0 == math.inf


def test_drift_zero_case():
    d = estimate_Y_drift(1, 1, 3, 20000, 5.0, np.random.default_rng(2))
    assert d.exact == 0.0
    assert d.ci[0] <= 0.0 <= d.ci[1]


def test_drift_large_case():
    d = estimate_Y_drift(1, 16, 64, 5000, 5.0, np.random.default_rng(3))
    assert d.ci[0] <= d.exact <= d.ci[1]


def test_hitting_time_of_L():
    rng = np.random.default_rng(4)
    c = YChain(1, 32, 1000)
    t = [c.run(100.0, rng, record=False, stop_at_L=True).T_L for _ in range(2000)]
    est = MCEstimate.mean(t)
    assert est.hi <= hitting_time_bound(1, 32)


def test_supermartingale_exact():
    assert embedded_Z_supermartingale_check(1, 16, 64) <= 1e-12
    chk = z_one_step_drift(1, 16, 64)
    assert len(chk.drifts) == chk.L - 1
    visited = embedded_Z_supermartingale_check(1, 16, 64, 2000, np.random.default_rng(5))
    assert visited <= chk.max_drift + 1e-18


def test_supermartingale_reports_positive_drift_for_small_rates():
    assert embedded_Z_supermartingale_check(0.1, 1, 200) > 0
