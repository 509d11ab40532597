import math

import pytest

from cpfs import bounds as B


@pytest.mark.parametrize("lam,f,k,L", [
    (1, 1, 3, 1), (1, 1e9, 64, 32), (0.1, 1, 10, 1), (1, 8, 512, 241), (1, 4, 64, 29),
])
def test_compute_L(lam, f, k, L):
    assert B.compute_L(lam, f, k) == L


def test_compute_L_rejects_bad_input():
    with pytest.raises(B.BoundError):
        B.compute_L(0, 1, 3)
    with pytest.raises(B.BoundError):
        B.compute_L(1, 0.5, 3)


def test_compute_S():
    assert B.compute_S(1, 1, 3, 0.25) == pytest.approx(1.5**0.5 / 18, rel=1e-12)
    for lam, f, k, eps in [(1, 8, 512, 0.1), (0.5, 3, 100, 0.3), (2, 1, 7, 0.05)]:
        assert B.log_S(lam, f, k, eps) == pytest.approx(B.log_S_second_form(lam, f, k, eps),
                                                        rel=1e-12)
    with pytest.raises(B.BoundError):
        B.compute_S(1, 1, 3, 0.5)


def test_compute_S_overflow_safe():
    assert B.compute_S(1, 1e6, 10**6, 0.1) == math.inf
    assert math.isfinite(B.log_S(1, 1e6, 10**6, 0.1))


def test_S_monotone_in_f():
    k, lam, eps = 200, 1.0, 0.1
    fs = [2, 4, 8, 16, 32, 64]
    vals = [B.log_S(lam, f, k, eps) for f in fs
            if B.compute_L(lam, f, k) * (1 - 2 * eps) > 1]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_constants():
    assert B.compute_C_lambda_f(1, 1) == pytest.approx(1.0)
    assert B.compute_lhat_Chat(1, 1) == pytest.approx((0.5, 0.25))
    assert B.compute_C_lambda_f(0.5, 1e12) == pytest.approx(9.0, rel=1e-9)
    assert B.compute_C_lambda_f(1e9, 1) == pytest.approx(1.0, rel=1e-6)


def test_compute_R():
    ones = B.BoundParams.with_overrides(c=1, c_hat1=1, c2=1)
    assert B.compute_R(10, 1000, 1, ones) == pytest.approx(0.1101)
    assert B.compute_R(20, 1000, 1, ones) == pytest.approx(B.compute_R(10, 1000, 1, ones) / 2)


def test_r_of_fk_and_condition():
    assert B.compute_r_of_fk(2.0, 1, 2.0, 1.0, 0.25, 0.5) == 4
    assert B.compute_r_of_fk(2.0, 1, 2.0, 1.0, 1.0, 1.0) >= 1
    with pytest.raises(B.BoundError):
        B.compute_r_of_fk(2.0, 1, 2.0, 1.0, 0.0, 0.5)
    cond = B.check_condition_62(1, 1e4, 1000, 0.1, 10)
    assert cond.holds and cond.log_lhs > cond.log_rhs


def test_bound_params():
    p = B.BoundParams()
    assert p.c == 4.0 and p.eps == 0.1
    q = B.BoundParams.with_overrides(c=2.0)
    assert q.describe()["c"] == {"value": 2.0, "source": "user"}
    assert q.describe()["gamma"]["source"] == "default"
    with pytest.raises(B.BoundError):
        B.BoundParams.with_overrides(c=-1.0)
    with pytest.raises(B.BoundError):
        B.BoundParams.with_overrides(eps=0.6)


def test_named_bounds():
    assert B.star_extinction_bound(1, 8, 512) == pytest.approx(0.0625)
    assert B.star_persistence_bound(1, 4, 64, 0.1) == pytest.approx(7 * 3 ** (-2.9))
    assert B.path_B_probability(1, [1, 1, 1, 1]) == pytest.approx(0.125)
    assert B.path_B_probability(1, [9, 1, 9]) == pytest.approx(0.81)
    assert B.is_vacuous(B.relay_bound(1, 1, 64, 3, 0.1, 200))
    assert not B.is_vacuous(0.5)
