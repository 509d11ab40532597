"""Estimators and bound-comparison experiments built on the trial runner."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .. import bounds as B
from .. import engine
from ..distributions import FitnessDist, OffspringDist
from ..process import Growth, ProcessParams, Probes, run_coupled_levels, run_trials
from ..tree import (
    WeightedTree, attach_extra_root, lazy_root, make_path, make_star, make_star_with_path,
)
from .stats import MCEstimate

DEFAULT_BUDGET = 20_000


def _lazy(offspring: OffspringDist, fitness: FitnessDist, budget: int, max_gen: int = 10**9):
    tree = lazy_root(fitness, np.random.default_rng(0))
    return tree, Growth(offspring, fitness, max_gen=max_gen, budget=budget)


def _warn_mu(offspring: OffspringDist) -> None:
    if offspring.mean <= 1:
        warnings.warn(f"offspring mean {offspring.mean} <= 1: the tree is finite a.s.", stacklevel=3)


def estimate_survival(offspring: OffspringDist, fitness: FitnessDist, lam: float, horizon: float,
                      n_trials: int, seed: int, level: float = 0.99,
                      budget: int = DEFAULT_BUDGET, jobs: int = 1) -> MCEstimate:
    """``P(X_T != 0)`` from the root alone on a lazily grown tree.

    Trials that exhaust the vertex budget (or the event cap) are still
    infected when stopped; they count as survivals and are reported in
    ``censored``.
    """
    _warn_mu(offspring)
    tree, growth = _lazy(offspring, fitness, budget)
    res = run_trials(tree, ProcessParams(lam, horizon=horizon), [0], n_trials, seed,
                     growth=growth, jobs=jobs)
    st = res.status
    cens = int(np.sum((st == engine.OVERFLOW) | (st == engine.EVENT_CAP)))
    alive = int(np.sum(st != engine.EXTINCT))
    return MCEstimate.proportion(alive, n_trials, level, cens, seed)


def estimate_root_reinfection(offspring: OffspringDist, fitness: FitnessDist, lam: float,
                              horizon: float, n_trials: int, seed: int, level: float = 0.99,
                              budget: int = DEFAULT_BUDGET, jobs: int = 1) -> MCEstimate:
    """``P(root infected at T)``.  Trials stopped early by the vertex budget
    or event cap have an unknown root state at ``T``; they are dropped from
    numerator and denominator and reported in ``censored``."""
    _warn_mu(offspring)
    tree, growth = _lazy(offspring, fitness, budget)
    res = run_trials(tree, ProcessParams(lam, horizon=horizon), [0], n_trials, seed,
                     growth=growth, jobs=jobs)
    st = res.status
    bad = (st == engine.OVERFLOW) | (st == engine.EVENT_CAP)
    ok = ~bad
    hit = int(np.sum(ok & (st == engine.HORIZON) & (res.col("ROOT_FINAL") == 1)))
    n_ok = int(ok.sum())
    if n_ok == 0:
        return MCEstimate(0, math.nan, (0.0, 1.0), int(bad.sum()), seed, level)
    return MCEstimate.proportion(hit, n_ok, level, int(bad.sum()), seed)


@dataclass
class SweepResult:
    lams: np.ndarray
    survival: list[MCEstimate]
    root: list[MCEstimate]

    def monotone(self) -> bool:
        s = [e.successes for e in self.survival]
        return all(a <= b for a, b in zip(s, s[1:]))


def coupled_sweep(offspring: OffspringDist, fitness: FitnessDist, lams, horizon: float,
                  n_trials: int, seed: int, level: float = 0.99, budget: int = DEFAULT_BUDGET,
                  jobs: int = 1) -> SweepResult:
    """Survival and root-infection proportions on a grid of intensities, all
    driven by one graphical representation per trial, so the survival
    counts are nondecreasing in ``lambda`` exactly.  Censored (budget or
    event cap) levels count as survivals for the survival column and are
    dropped for the root column."""
    lams = np.asarray(sorted(lams), dtype=float)
    tree, growth = _lazy(offspring, fitness, budget)
    res = run_coupled_levels(tree, lams, 1.0, [0], n_trials, seed, horizon, growth=growth, jobs=jobs)
    surv, root = [], []
    for j in range(len(lams)):
        a = res.alive[:, j]
        cens = int(np.sum(a == engine.LV_CENSORED))
        surv.append(MCEstimate.proportion(int(np.sum(a != engine.LV_DEAD)), n_trials, level, cens, seed))
        ok = a != engine.LV_CENSORED
        hits = int(np.sum(ok & (res.root[:, j] == 1)))
        n_ok = int(ok.sum())
        root.append(MCEstimate.proportion(hits, n_ok, level, cens, seed) if n_ok else
                    MCEstimate(0, math.nan, (0.0, 1.0), cens, seed, level))
    return SweepResult(lams, surv, root)


def lambda1_proxy(sweep: SweepResult, threshold: float = 0.05) -> float:
    """Smallest grid intensity whose survival proportion exceeds ``threshold``."""
    for lam, e in zip(sweep.lams, sweep.survival):
        if e.point > threshold:
            return float(lam)
    return math.nan


def lambda2_proxy(sweep: SweepResult, threshold: float = 0.02) -> float:
    for lam, e in zip(sweep.lams, sweep.root):
        if e.point > threshold:
            return float(lam)
    return math.nan


def paired_fitness_survival(offspring: OffspringDist, fitness: FitnessDist, lam: float,
                            horizon: float, n_trials: int, seed: int, level: float = 0.99,
                            budget: int = DEFAULT_BUDGET, jobs: int = 1) -> tuple[MCEstimate, MCEstimate]:
    """Survival with fitness ``F`` versus fitness identically 1, run with the
    same master seed (paired streams)."""
    a = estimate_survival(offspring, FitnessDist.constant_one(), lam, horizon, n_trials, seed,
                          level, budget, jobs)
    b = estimate_survival(offspring, fitness, lam, horizon, n_trials, seed, level, budget, jobs)
    return a, b


@dataclass
class DepthTail:
    hs: np.ndarray
    estimates: list[MCEstimate]
    slope: float | None
    slope_points: int
    H: np.ndarray = field(repr=False)


def depth_tail_from_H(H: np.ndarray, hs, n_censored: int, seed: int, level: float = 0.99) -> DepthTail:
    n = len(H)
    hs = np.asarray(hs, dtype=int)
    ests = [MCEstimate.proportion(int(np.sum(H >= h)), n, level, n_censored, seed) for h in hs]
    pts = [(h, e.point) for h, e in zip(hs, ests) if e.point > 10.0 / n]
    slope = None
    if len(pts) >= 2:
        x = np.array([p[0] for p in pts], dtype=float)
        y = np.log([p[1] for p in pts])
        slope = float(np.polyfit(x, y, 1)[0])
    return DepthTail(hs, ests, slope, len(pts), H)


def estimate_depth_tail(lam: float, hs, n_trials: int, seed: int, tree: WeightedTree | None = None,
                        offspring: OffspringDist | None = None, fitness: FitnessDist | None = None,
                        max_gen: int = 12, level: float = 0.99, budget: int = DEFAULT_BUDGET,
                        jobs: int = 1) -> DepthTail:
    """Tail of the maximal depth ``H`` reached (depth counted from the extra
    root) during one excursion of the process with a permanently infected
    extra root, started from the root alone and stopped on return to 0.

    Reports ``P(H >= h)`` per ``h``: ``H >= h`` is the event of hitting the
    set ``{r(x) >= h}`` before 0.  The slope is a least-squares fit of the log
    estimates against ``h`` over points with estimate above ``10/n``.
    """
    if lam > 1:
        warnings.warn("depth-tail decay is a small-lambda statement", stacklevel=2)
    growth = None
    if tree is None:
        if offspring is None or fitness is None:
            raise ValueError("need a tree or offspring and fitness laws")
        tree, growth = _lazy(offspring, fitness, budget, max_gen)
    if tree.extra_root is None:
        tree = attach_extra_root(tree)
    res = run_trials(tree, ProcessParams(lam), [0], n_trials, seed, growth=growth, jobs=jobs)
    cens = int(np.sum(res.status != engine.EXTINCT))
    return depth_tail_from_H(res.col("H"), hs, cens, seed, level)


@dataclass
class BoundComparison:
    name: str
    estimate: MCEstimate
    bound: float
    vacuous: bool
    passed: bool | None
    note: str = ""

    @classmethod
    def one_sided(cls, name: str, est: MCEstimate, bound: float, note: str = "") -> "BoundComparison":
        vac = B.is_vacuous(bound)
        return cls(name, est, bound, vac, (est.hi < bound) if not vac else None, note)


@dataclass
class StarHitting:
    L: int
    died_first: BoundComparison
    slow: BoundComparison
    preconditions_met: bool


def star_hitting_experiment(lam: float, f: float, k: int, n_trials: int, seed: int,
                            consts: B.BoundParams = B.BoundParams(), level: float = 0.99,
                            jobs: int = 1) -> StarHitting:
    """Star with centre fitness ``f`` and unit leaves, from the centre alone.
    Estimates ``P(T_L > T_00)`` (dies before ``L`` leaves are infected) and
    ``P(T_L > 1)``."""
    L = B.compute_L(lam, f, k)
    star = make_star(k, f, 1.0)
    res = run_trials(star, ProcessParams(lam), [0], n_trials, seed,
                     probes=Probes(threshold=L, stop_on_threshold=True), jobs=jobs)
    thr = res.col("THR_TIME")
    died = int(np.sum(res.status == engine.EXTINCT))
    slow = int(np.sum(thr > 1.0))
    e1 = MCEstimate.proportion(died, n_trials, level, 0, seed)
    e2 = MCEstimate.proportion(slow, n_trials, level, 0, seed)
    pre = f >= 8 / lam and k >= 64
    return StarHitting(
        L,
        BoundComparison.one_sided("star_died_before_L", e1, B.star_extinction_bound(lam, f, k, consts)),
        BoundComparison.one_sided("star_L_after_time_1", e2, B.star_slow_bound(lam, f, k, consts)),
        pre,
    )


@dataclass
class StarPersistence:
    L: int
    threshold: int
    S: float
    horizon: float
    failure: MCEstimate
    comparison: BoundComparison
    R: float
    start: str
    stressed: bool


def star_persistence_experiment(lam: float, f: float, k: int, eps: float, n_trials: int, seed: int,
                                cap: float = 1e3, start: str = "root",
                                consts: B.BoundParams = B.BoundParams(), level: float = 0.99,
                                jobs: int = 1) -> StarPersistence:
    """Failure event ``inf |Lambda_t| <= eps L`` over the window, where
    ``Lambda_t`` is the set of infected leaves.

    ``start='root'``: centre alone, window ``[1, min(S, cap)]``.
    ``start='L'``: centre plus ``L`` leaves, window ``[0, min(S, cap)]``.
    Since the leaf count never exceeds the total count, the leaf-based
    failure dominates the total-count event bounded by
    ``(3 + lam f)(1 + lam f/2)**(-eps L)``, so comparing it with that bound
    is conservative.
    """
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    L = B.compute_L(lam, f, k)
    S = B.compute_S(lam, f, k, eps)
    horizon = min(S, cap)
    thr = int(math.floor(eps * L))
    star = make_star(k, f, 1.0)
    if start == "root":
        init, lo = [0], 1.0
    elif start == "L":
        init, lo = [0] + list(range(1, L + 1)), 0.0
    else:
        raise ValueError("start must be 'root' or 'L'")
    probes = Probes(window=(lo, horizon), win_thr=thr)
    res = run_trials(star, ProcessParams(lam, horizon=horizon), init, n_trials, seed,
                     probes=probes, jobs=jobs)
    fails = int(np.sum(res.col("WIN_MIN") <= thr))
    est = MCEstimate.proportion(fails, n_trials, level, 0, seed, horizon=horizon, S=S)
    bound = B.star_persistence_bound(lam, f, k, eps)
    note = "capped horizon" if S > cap else ""
    return StarPersistence(L, thr, S, horizon, est,
                           BoundComparison.one_sided("star_persistence", est, bound, note),
                           B.compute_R(f, k, lam, consts), start,
                           stressed=eps > 0.45 or k < 64)


@dataclass
class PathTransmission:
    exact_B: float
    B: MCEstimate
    reach: MCEstimate
    reach_by: MCEstimate
    B_and_fast: MCEstimate
    lower_bound: float
    containment_failures: int
    containment_failures_by: int


def path_transmission_experiment(lam: float, fitness, n_trials: int, seed: int,
                                 consts: B.BoundParams = B.BoundParams(), level: float = 0.99,
                                 jobs: int = 1) -> PathTransmission:
    """Path ``v_0 .. v_r`` from ``v_0`` alone.  ``B``: each ``v_{i-1}``
    infects ``v_i`` before recovering, in order; ``T`` is the time ``v_r``
    is first infected on ``B``.  Also estimates ``P(v_r in X_{2r})`` and
    ``P(B and T <= 2r)``.  The first event does not contain the second
    (``v_r`` may recover before ``2r``), so trials in ``B and T <= 2r`` with
    ``v_r`` healthy at ``2r`` are counted.  ``reach_by`` is
    ``P(v_r infected at some time <= 2r)``, which does contain it; its
    per-trial failures are counted too and must be zero."""
    fitness = [float(x) for x in fitness]
    r = len(fitness) - 1
    if r < 1:
        raise ValueError("path needs r >= 1")
    path = make_path(fitness)
    res = run_trials(path, ProcessParams(lam), [0], n_trials, seed,
                     probes=Probes(target=r, snapshot=2.0 * r, path_r=r), jobs=jobs)
    b = res.col("B") == 1
    fast = b & (res.col("B_TIME") <= 2 * r)
    reach = res.col("TARGET_SNAP") == 1
    reach_by = res.col("TARGET_TIME") <= 2 * r
    return PathTransmission(
        B.path_B_probability(lam, fitness),
        MCEstimate.proportion(int(b.sum()), n_trials, level, 0, seed),
        MCEstimate.proportion(int(reach.sum()), n_trials, level, 0, seed),
        MCEstimate.proportion(int(reach_by.sum()), n_trials, level, 0, seed),
        MCEstimate.proportion(int(fast.sum()), n_trials, level, 0, seed),
        B.path_lower_bound(lam, fitness, consts),
        int(np.sum(fast & ~reach)),
        int(np.sum(fast & ~reach_by)),
    )


@dataclass
class Relay:
    failure: MCEstimate
    comparison: BoundComparison
    S: float
    horizon: float


def star_path_relay_experiment(lam: float, f: float, k: int, r: int, n_trials: int, seed: int,
                               cap: float = 200.0, consts: B.BoundParams = B.BoundParams(),
                               level: float = 0.99, jobs: int = 1) -> Relay:
    """Star (centre fitness ``f``) with a path ``u_1..u_r`` from leaf 1;
    ``F_{u_r} = f`` and the other path vertices have fitness 1.  Failure:
    ``u_r`` never infected during ``[0, min(S, cap)]``."""
    pf = [1.0] * (r - 1) + [float(f)]
    g = make_star_with_path(k, r, f, pf)
    target = g.n - 1
    S = B.compute_S(lam, f, k, consts.eps)
    horizon = min(S, cap)
    res = run_trials(g, ProcessParams(lam, horizon=horizon), [0], n_trials, seed,
                     probes=Probes(target=target, stop_on_target=True), jobs=jobs)
    fails = int(np.sum(~np.isfinite(res.col("TARGET_TIME"))))
    est = MCEstimate.proportion(fails, n_trials, level, 0, seed)
    bound = B.relay_bound(lam, f, k, r, consts.eps, cap, consts)
    return Relay(est, BoundComparison.one_sided("relay", est, bound,
                                                "capped horizon" if S > cap else ""), S, horizon)


def count_good_vertices(tree: WeightedTree, f: float, k: int) -> np.ndarray:
    """``J_r``: vertices at depth ``r`` with fitness ``>= f`` and exactly
    ``k`` children, for ``r = 0..height``."""
    h = tree.height()
    for v in tree.frontier:
        if tree.depth[v] < h:
            raise ValueError(f"frontier vertex {v} at depth {tree.depth[v]} is not expanded")
    out = np.zeros(h + 1, dtype=np.int64)
    for v in range(tree.n):
        if v == tree.extra_root or v in tree.frontier:
            continue
        if tree.fitness[v] >= f and len(tree.children[v]) == k:
            out[tree.depth[v]] += 1
    return out


def expected_good_vertices(offspring: OffspringDist, fitness: FitnessDist, f: float, k: int,
                           r: int, root_children: int | None = None) -> float:
    """``E[J_r] = E|V_r| P(xi = k) P(F >= f)`` with ``E|V_r| = mu**r``, or
    ``root_children * mu**(r-1)`` when the root's child count is pinned."""
    mu = offspring.mean
    if root_children is None:
        return mu**r * offspring.pmf(k) * fitness.tail(f)
    if r == 0:
        return float(root_children == k) * fitness.tail(f)
    return root_children * mu ** (r - 1) * offspring.pmf(k) * fitness.tail(f)
