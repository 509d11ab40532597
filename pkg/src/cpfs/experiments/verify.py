"""Verification batteries: exact identities, MC-vs-exact agreement and
coupling invariants, each reported as rows of
``check_name,instance_id,deviation,tolerance,pass``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import exact as E
from ..coupling import couple_ignore_recoveries, couple_monotone
from ..process import ProcessParams, run_trials
from ..tree import WeightedTree, from_parents
from .stats import MCEstimate

EXACT_TOL = 1e-10
# relative; mean excursions reach ~1e7 on these instances and the solve is
# only that well conditioned
EXCURSION_TOL = 1e-8


@dataclass
class CheckRow:
    check_name: str
    instance_id: str
    deviation: float
    tolerance: float
    passed: bool


def random_tree(rng: np.random.Generator, n: int, fit_range=(1.0, 8.0)) -> WeightedTree:
    """Uniform random recursive tree on ``n`` vertices with i.i.d. uniform fitness."""
    parents = [-1] + [int(rng.integers(0, v)) for v in range(1, n)]
    fitness = rng.uniform(*fit_range, size=n).tolist()
    return from_parents(parents, fitness)


def exact_suite(seed: int, n_instances: int = 100, max_vertices: int = 10,
                tol: float = EXACT_TOL) -> list[CheckRow]:
    """Stationary empty mass, product law, delayed reweighting and the
    excursion identity on random small trees."""
    if max_vertices < 2:
        raise ValueError("max_vertices must be >= 2")
    rng = np.random.default_rng(seed)
    cap = min(max_vertices, 12)
    rows = []
    for i in range(n_instances):
        n = int(rng.integers(1, cap + 1))
        tree = random_tree(rng, n, (1.0, 3.0))
        lam = float(rng.uniform(0.1, 2.0))
        theta = float(rng.uniform(0.2, 0.9))
        root_fit = float(rng.uniform(1.0, 3.0))
        iid = f"{i}:n={n}:lam={lam:.4f}"
        rows.append(CheckRow("zero_mass", iid, E.zero_mass_check(tree, lam, root_fit), tol, False))
        rows.append(CheckRow("delayed_reweight", iid, E.delayed_reweight_check(tree, lam, theta), tol, False))
        ex = E.excursion_identity_check(tree, lam)
        rows.append(CheckRow("excursion", iid, ex.deviation / max(1.0, ex.direct), EXCURSION_TOL, False))
        exd = E.excursion_identity_check(tree, lam, theta)
        rows.append(CheckRow("excursion_delayed", iid, exd.deviation / max(1.0, exd.direct), EXCURSION_TOL, False))
        m = int(rng.integers(2, 4))
        sizes = rng.integers(1, 5, size=m)
        subs = [random_tree(rng, int(s), (1.0, 3.0)) for s in sizes]
        pc = E.product_chain_check(subs, lam, root_fit)
        rows.append(CheckRow("product", iid, max(pc.max_deviation, pc.zero_mass_deviation), tol, False))
    for r in rows:
        r.passed = r.deviation < r.tolerance
    return rows


@dataclass
class BatteryInstance:
    tree: WeightedTree
    lam: float
    exact_mean: float
    jumps: float


def extinction_battery(seed: int, n_trees: int = 25, max_vertices: int = 10,
                       max_jumps: float = 300.0) -> list[BatteryInstance]:
    """Random trees with ``lam`` in ``[0.1, 2]`` and fitness in ``[1, 8]``.
    Instance ``i`` has ``2 + i mod (max_vertices - 1)`` vertices.  Draws whose
    exact expected number of jumps to extinction exceeds ``max_jumps`` are
    redrawn at the same size, which keeps the Monte Carlo side tractable."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n_trees:
        n = 2 + len(out) % (max_vertices - 1)
        tree = random_tree(rng, n)
        lam = float(rng.uniform(0.1, 2.0))
        gen = E.build_generator(tree, lam)
        jumps = E.expected_jumps(gen, 0, 1)
        if jumps > max_jumps:
            continue
        out.append(BatteryInstance(tree, lam, E.expected_hitting_time(gen, 0, 1), jumps))
    return out


def mc_suite(seed: int, n_trees: int = 25, n_trials: int = 10**5, max_vertices: int = 10,
             level: float = 0.99, jobs: int = 1) -> list[CheckRow]:
    """MC mean extinction time against the exact linear solve.  Deviation is
    ``|mc - exact|`` and the tolerance is the CI half-width."""
    rows = []
    for i, inst in enumerate(extinction_battery(seed, n_trees, max_vertices)):
        res = run_trials(inst.tree, ProcessParams(inst.lam), [0], n_trials, seed + i, jobs=jobs)
        est = MCEstimate.mean(res.time, level, seed=seed + i)
        half = (est.hi - est.lo) / 2
        rows.append(CheckRow("extinction_mean", f"{i}:n={inst.tree.n}:lam={inst.lam:.4f}",
                             abs(est.point - inst.exact_mean), half, est.contains(inst.exact_mean)))
    return rows


def coupling_suite(seed: int, n_trials: int = 10**4, max_vertices: int = 10) -> list[CheckRow]:
    """Subset violations of the monotone and the ignore-recoveries couplings
    (tolerance zero)."""
    rng = np.random.default_rng(seed)
    mono = ign = 0
    for _ in range(n_trials):
        n = int(rng.integers(2, max_vertices + 1))
        tree = random_tree(rng, n, (1.0, 2.0))
        lo = float(rng.uniform(0.1, 1.0))
        hi = lo * float(rng.uniform(1.0, 2.0))
        fl = tree.fitness
        fh = [f * float(rng.uniform(1.0, 1.5)) for f in fl]
        mono += couple_monotone(tree, lo, hi, fl, fh, [0], rng, horizon=20.0).violations
        ign += couple_ignore_recoveries(tree, lo, [0], int(rng.integers(0, n)),
                                        [(0.0, float(rng.uniform(0.0, 5.0)))], rng,
                                        horizon=20.0).violations
    return [CheckRow("monotone_coupling", f"trials={n_trials}", float(mono), 0.0, mono == 0),
            CheckRow("ignore_recoveries_coupling", f"trials={n_trials}", float(ign), 0.0, ign == 0)]


SUITES = {"exact": exact_suite, "mc": mc_suite, "coupling": coupling_suite}
