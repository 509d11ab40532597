import numpy as np
import pytest

from cpfs.distributions import FitnessDist, OffspringDist
from cpfs.experiments.stats import MCEstimate
from cpfs.tree import (
    TreeError, VertexBudgetExceeded, attach_extra_root, dumps, extend_vertex, from_parents,
    generate_tree, iter_generation_sizes, lazy_root, load, loads, make_path, make_star,
    make_star_with_path, save,
)

ONE = FitnessDist.constant_one()


def test_binary_tree_size():
    t = generate_tree(OffspringDist.deterministic(2), ONE, 3, 100, np.random.default_rng(0))
    assert t.n == 15
    assert list(iter_generation_sizes(t)) == [1, 2, 4, 8]
    t.check()


def test_deterministic_three_size():
    t = generate_tree(OffspringDist.deterministic(3), ONE, 4, 10**4, np.random.default_rng(0))
    assert t.n == (3**5 - 1) // 2


def test_single_vertex_tree():
    t = generate_tree(OffspringDist.deterministic(0), FitnessDist.pareto(1.0), 5, 10,
                      np.random.default_rng(0))
    assert t.n == 1


def test_budget_overflow_is_explicit():
    with pytest.raises(VertexBudgetExceeded) as e:
        generate_tree(OffspringDist.deterministic(2), ONE, 10, 100, np.random.default_rng(0))
    assert e.value.partial <= 100


def test_generation_mean_matches_branching_identity():
    rng = np.random.default_rng(5)
    sizes = [list(iter_generation_sizes(
        generate_tree(OffspringDist.poisson(2.0), ONE, 6, 10**6, rng)))
        for _ in range(10**4)]
    v6 = [s[6] if len(s) > 6 else 0 for s in sizes]
    assert MCEstimate.mean(v6).contains(64.0)


def test_extend_vertex_contract():
    rng = np.random.default_rng(0)
    t = lazy_root(ONE, rng)
    new = extend_vertex(t, 0, OffspringDist.deterministic(3), ONE, rng)
    assert len(new) == 3 and t.frontier == set(new)
    with pytest.raises(TreeError):
        extend_vertex(t, 0, OffspringDist.deterministic(3), ONE, rng)


def test_lazy_expansion_mean():
    rng = np.random.default_rng(6)
    off = OffspringDist.poisson(2.0)
    t = lazy_root(ONE, rng)
    counts = []
    while len(counts) < 10**4:
        v = min(t.frontier) if t.frontier else None
        if v is None:
            t = lazy_root(ONE, rng)
            continue
        counts.append(len(extend_vertex(t, v, off, ONE, rng)))
    assert MCEstimate.mean(counts).contains(2.0)


def test_star_builders():
    s = make_star(3, 1, [1, 1, 1])
    assert s.n == 4 and len(s.children[0]) == 3 and s.height() == 1
    s = make_star(64, 4.0, 1.0)
    assert s.n == 65 and s.fitness[0] == 4.0
    with pytest.raises(TreeError):
        make_star(0, 1, 1)
    with pytest.raises(TreeError):
        make_star(2, 0.5, 1)
    with pytest.raises(TreeError):
        make_star(2, 1, [1, 1, 1])


def test_star_with_path():
    g = make_star_with_path(3, 2, 1.0, [1.0, 7.0])
    assert g.n == 5
    assert g.depth[g.n - 1] == 2 and g.fitness[g.n - 1] == 7.0
    assert loads(dumps(g)).fitness[g.n - 1] == 7.0
    assert make_star_with_path(1, 1, 2.0, [1.0]).n == 2
    with pytest.raises(TreeError):
        make_star_with_path(3, 2, 1.0, [1.0])


def test_extra_root():
    t = attach_extra_root(make_path([2.0]))
    assert t.n == 2 and t.fitness[t.extra_root] == 1.0
    assert t.depth[0] == 0 and t.depth[t.extra_root] == -1
    with pytest.raises(TreeError):
        attach_extra_root(t)
    s = attach_extra_root(make_star(2, 1, 1))
    assert s.n == 4 and s.children[s.extra_root] == [0]


def test_serialization_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    t = generate_tree(OffspringDist.poisson(2.0), FitnessDist.pareto(1.0), 4, 10**5, rng)
    t.frontier.add(t.n - 1)
    text = dumps(t)
    assert text.startswith(f"cpfs-tree v1 n={t.n} extra_root=0\n")
    assert loads(text) == t
    p = tmp_path / "t.txt"
    save(attach_extra_root(t), p)
    u = load(p)
    assert u.extra_root == u.n - 1 and u == attach_extra_root(t)


@pytest.mark.parametrize("text", [
    "",
    "cpfs-tree v1 n=2 extra_root=0\n0 -1 1 0\n",
    "cpfs-tree v1 n=2 extra_root=0\n0 -1 1 0\n1 0 0.5 0\n",
    "cpfs-tree v1 n=2 extra_root=0\n0 -1 1 0\n2 0 1 0\n",
    "cpfs-tree v1 n=x\n",
])
def test_malformed_tree_files(text):
    with pytest.raises(TreeError):
        loads(text)


def test_from_parents_requires_order():
    with pytest.raises(TreeError):
        from_parents([-1, 2, 0], [1, 1, 1])
