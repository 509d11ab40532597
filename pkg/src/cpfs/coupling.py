"""Graphical-representation couplings, the percolation component and a
direct (first-reaction) simulator used as an oracle for the delayed process.

These run in plain Python: they are checks on small graphs, not the
production engine.  Clocks are attached to every vertex infected in at least
one of the coupled processes, so each marginal is an honest contact process
and the subset relation is verified rather than assumed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import FitnessDist, OffspringDist
from .tree import WeightedTree, extend_vertex


class CouplingError(ValueError):
    pass


@dataclass
class CoupledRun:
    ext_low: float
    ext_high: float
    violations: int
    events: int
    extra: int = 0


def _neighbors(tree: WeightedTree) -> list[list[int]]:
    nb = []
    for v in range(tree.n):
        out = [w for w in tree.children[v]]
        p = tree.parent[v]
        if p >= 0:
            out.append(p)
        nb.append(out)
    return nb


def couple_monotone(tree: WeightedTree, lam_low: float, lam_high: float,
                    fit_low: Sequence[float], fit_high: Sequence[float], initial,
                    rng: np.random.Generator, horizon: float = math.inf) -> CoupledRun:
    """Couple two processes with ``lam_low F1_u F1_v <= lam_high F2_u F2_v``.

    Arrows run at the high rate; the low process keeps an arrow iff its
    shared uniform mark falls below the rate ratio.  Recovery marks are
    shared.  ``violations`` counts events after which low is not a subset
    of high.
    """
    nb = _neighbors(tree)
    n = tree.n
    ratio = {}
    for u in range(n):
        for w in nb[u]:
            hi = lam_high * fit_high[u] * fit_high[w]
            lo = lam_low * fit_low[u] * fit_low[w]
            if lo > hi * (1 + 1e-12):
                raise CouplingError(f"rate dominance fails on edge ({u}, {w}): {lo} > {hi}")
            ratio[u, w] = lo / hi
    low, high = set(initial), set(initial)
    t, events, violations = 0.0, 0, 0
    ext_low = ext_high = math.inf
    while high or low:
        active = sorted(low | high)
        rates = [1.0 + lam_high * fit_high[u] * sum(fit_high[w] for w in nb[u]) for u in active]
        total = sum(rates)
        t += rng.exponential(1.0 / total)
        if t > horizon:
            break
        events += 1
        i = int(np.searchsorted(np.cumsum(rates), rng.random() * total, side="right"))
        u = active[min(i, len(active) - 1)]
        x = rng.random() * rates[active.index(u)]
        if x < 1.0:
            low.discard(u)
            high.discard(u)
        else:
            y = (x - 1.0) / (lam_high * fit_high[u])
            w = nb[u][-1]
            for c in nb[u]:
                if y < fit_high[c]:
                    w = c
                    break
                y -= fit_high[c]
            mark = rng.random()
            if u in high:
                high.add(w)
            if u in low and mark < ratio[u, w]:
                low.add(w)
        if not low <= high:
            violations += 1
        if not low and ext_low == math.inf:
            ext_low = t
        if not high and ext_high == math.inf:
            ext_high = t
    return CoupledRun(ext_low, ext_high, violations, events)


def _in_intervals(t: float, intervals) -> bool:
    return any(a <= t <= b for a, b in intervals)


def couple_ignore_recoveries(tree: WeightedTree, lam: float, initial, ignored: int,
                             intervals, rng: np.random.Generator,
                             horizon: float = math.inf) -> CoupledRun:
    """Base process versus the one whose recoveries at ``ignored`` during
    ``intervals`` (list of closed ``(a, b)``) are skipped.

    ``extra`` counts the recovery marks skipped by the modified process.
    """
    for a, b in intervals:
        if not a <= b:
            raise CouplingError("intervals must satisfy a <= b")
    nb = _neighbors(tree)
    fit = tree.fitness
    base, mod = set(initial), set(initial)
    t, events, violations, skipped = 0.0, 0, 0, 0
    ext_base = ext_mod = math.inf
    while base or mod:
        active = sorted(base | mod)
        rates = [1.0 + lam * fit[u] * sum(fit[w] for w in nb[u]) for u in active]
        total = sum(rates)
        dt = rng.exponential(1.0 / total)
        if t + dt > horizon:
            break
        t += dt
        events += 1
        i = int(np.searchsorted(np.cumsum(rates), rng.random() * total, side="right"))
        i = min(i, len(active) - 1)
        u = active[i]
        x = rng.random() * rates[i]
        if x < 1.0:
            base.discard(u)
            if u == ignored and _in_intervals(t, intervals):
                skipped += 1
            else:
                mod.discard(u)
        else:
            y = (x - 1.0) / (lam * fit[u])
            w = nb[u][-1]
            for c in nb[u]:
                if y < fit[c]:
                    w = c
                    break
                y -= fit[c]
            if u in base:
                base.add(w)
            if u in mod:
                mod.add(w)
        if not base <= mod:
            violations += 1
        if not base and ext_base == math.inf:
            ext_base = t
        if not mod and ext_mod == math.inf:
            ext_mod = t
    return CoupledRun(ext_base, ext_mod, violations, events, skipped)


def open_probability(lam: float, fu: float, fv: float, t0: float) -> float:
    return -math.expm1(-lam * fu * fv * t0)


def percolation_component(tree: WeightedTree, lam: float, t0: float, rng: np.random.Generator,
                          growth: tuple[OffspringDist, FitnessDist] | None = None,
                          budget: int = 10**6) -> set[int]:
    """Component of the root when each edge is open with probability
    ``1 - exp(-lam F_u F_v t0)``.  Frontier vertices reached by the
    component are expanded (in place) when ``growth`` is given."""
    low, _ = percolation_component_coupled(tree, lam, t0, rng, 1.0, growth, budget)
    return low


def percolation_component_coupled(tree: WeightedTree, lam: float, t0: float,
                                  rng: np.random.Generator, scale: float = 2.0,
                                  growth=None, budget: int = 10**6) -> tuple[set[int], set[int]]:
    """Components for fitness ``F`` and ``scale * F`` from shared edge
    uniforms; the second always contains the first."""
    if not t0 > 0:
        raise CouplingError("t0 must be positive")
    if scale < 1:
        raise CouplingError("scale must be >= 1")
    low, high = {0}, {0}
    stack = [0]
    while stack:
        u = stack.pop()
        if u in tree.frontier:
            if growth is None:
                raise CouplingError("reached an unexpanded vertex without a growth spec")
            extend_vertex(tree, u, growth[0], growth[1], rng, budget)
        for w in tree.children[u]:
            mark = rng.random()
            fu, fw = tree.fitness[u], tree.fitness[w]
            if u in high and mark < open_probability(lam, scale * fu, scale * fw, t0):
                high.add(w)
                if u in low and mark < open_probability(lam, fu, fw, t0):
                    low.add(w)
                stack.append(w)
    return low, high


def simulate_delayed_direct(tree: WeightedTree, lam: float, theta: float, initial,
                            rng: np.random.Generator, perm: bool = False,
                            horizon: float = math.inf) -> float:
    """Delayed process by the first-reaction method: every enabled transition
    gets its own exponential clock at rate ``theta**r(x) * q``.  Returns the
    extinction time (first hitting time of the all-healthy state)."""
    nb = _neighbors(tree)
    fit = tree.fitness
    core = [v for v in range(tree.n) if v != tree.extra_root]
    has_extra = perm or tree.extra_root is not None
    off = 1 if has_extra else 0
    x = set(initial) - {tree.extra_root}
    t = 0.0
    while x:
        r = max(tree.depth[v] for v in x) + off
        scale = theta**r
        best, move = math.inf, None
        for v in core:
            if v in x:
                rate = 1.0
            else:
                rate = lam * fit[v] * sum(fit[w] for w in nb[v] if w in x and w != tree.extra_root)
                if has_extra and v == 0:
                    rate += lam * fit[0]
            if rate > 0:
                s = rng.exponential(1.0 / (scale * rate))
                if s < best:
                    best, move = s, v
        t += best
        if t > horizon:
            return horizon
        x ^= {move}
    return t
