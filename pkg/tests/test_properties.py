import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from cpfs import bounds as B
from cpfs import exact as E
from cpfs import tree as T
from cpfs.cli import parse_grid
from cpfs.coupling import couple_monotone
from cpfs.experiments.stats import wilson_interval

fit = st.floats(1.0, 10.0, allow_nan=False)


@st.composite
def trees(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    parents = [-1] + [draw(st.integers(0, v - 1)) for v in range(1, n)]
    return T.from_parents(parents, draw(st.lists(fit, min_size=n, max_size=n)))


@given(trees(max_n=30))
def test_tree_text_roundtrip(tree):
    back = T.loads(T.dumps(tree))
    assert back.n == tree.n
    assert list(back.parent) == list(tree.parent)
    assert list(back.fitness) == list(tree.fitness)


@given(st.integers(0, 10**6), st.integers(1, 10**6), st.sampled_from([0.9, 0.95, 0.99]))
def test_wilson_contains_point(s, n, level):
    s = min(s, n)
    lo, hi = wilson_interval(s, n, level)
    assert 0.0 <= lo <= s / n <= hi <= 1.0


@given(st.floats(0.01, 10), st.floats(1, 100), st.integers(1, 10**4))
def test_cutoff_level_bounds(lam, f, k):
    L = B.compute_L(lam, f, k)
    x = lam * f * k / (1 + 2 * lam * f)
    assert x - 1e-9 <= L < x + 1
    assert L <= math.ceil(k / 2)


@settings(max_examples=40, deadline=None)
@given(trees(), st.floats(0.05, 3.0), st.booleans())
def test_generator_rows_sum_to_zero(tree, lam, frozen):
    gen = E.build_generator(tree, lam, frozen_root=frozen)
    sums = gen.row_sums()
    assert np.all(np.abs(sums) <= 1e-9 * (1 + np.abs(gen.Q.diagonal())))
    q = gen.Q.toarray()
    np.fill_diagonal(q, 0.0)
    assert q.min() >= 0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=64).filter(lambda v: sum(v) > 0),
       st.floats(0.05, 0.95), st.data())
def test_reweight_normalized(p, theta, data):
    p = np.array(p) / sum(p)
    depths = np.array(data.draw(st.lists(st.integers(0, 6), min_size=len(p), max_size=len(p))))
    nu = E.delayed_reweight(E.StationaryVector(p, math.nan, None), theta, depths)
    assert abs(nu.p.sum() - 1) < 1e-12
    assert np.all(nu.p >= 0)
    # mass moves towards deeper states
    assert (nu.p * depths).sum() >= (p * depths).sum() - 1e-12


@settings(max_examples=30, deadline=None)
@given(trees(max_n=8), st.floats(0.1, 1.5), st.floats(1.0, 2.0), st.integers(0, 2**32 - 1))
def test_monotone_coupling_nested(tree, lam, factor, seed):
    rng = np.random.default_rng(seed)
    fh = [f * factor for f in tree.fitness]
    run = couple_monotone(tree, lam, lam * factor, tree.fitness, fh, [0], rng, horizon=10.0)
    assert run.violations == 0
    assert run.ext_low <= run.ext_high


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=20))
def test_grid_list_roundtrip(xs):
    assert parse_grid(",".join(repr(x) for x in xs)) == xs


@given(st.floats(-100, 100), st.floats(0.01, 10), st.integers(0, 200))
def test_grid_range(a, s, m):
    g = parse_grid(f"{a!r}:{s!r}:{a + m * s!r}")
    assert len(g) in (m + 1, m)
    assert abs(g[0] - a) < 1e-9
    assert all(y > x for x, y in zip(g, g[1:]))
