"""Exact CTMC analysis on small trees.

States are bitmasks over the core vertices (bit ``i`` set when vertex ``i``
is infected); the permanently infected extra root, when present, is not
encoded.  Small systems are solved densely with partial pivoting
(LAPACK ``gesv``); above ``DENSE_MAX`` states a sparse direct LU is used.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .tree import WeightedTree

MAX_VERTICES = 20
MAX_SOLVE_STATES = 2**14
DENSE_MAX = 2**11


class ExactError(ValueError):
    pass


@dataclass
class GeneratorMatrix:
    Q: sp.csr_matrix
    n_vertices: int
    depths: np.ndarray        # r(x) per state
    variant: str
    perm: bool

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def rate(self, x: int, y: int) -> float:
        return float(self.Q[x, y])

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.Q.sum(axis=1)).ravel()


@dataclass
class StationaryVector:
    p: np.ndarray
    residual: float
    support: np.ndarray


def _popcount_max_depth(states: np.ndarray, depth: np.ndarray) -> np.ndarray:
    r = np.zeros(len(states), dtype=np.int64)
    for i, d in enumerate(depth):
        on = (states >> i) & 1
        r = np.where(on.astype(bool), np.maximum(r, d), r)
    return r


def build_from_arrays(parent: Sequence[int], fitness: Sequence[float], rdepth: Sequence[int],
                      lam: float, perm_fitness: float | None = None, frozen_root: bool = False,
                      theta: float | None = None, variant: str = "") -> GeneratorMatrix:
    """Generator for vertices ``0..n-1`` with the given parent links.

    ``parent[v] == -1`` marks a top vertex; when ``perm_fitness`` is given,
    every top vertex hangs below a permanently infected vertex of that
    fitness.  ``rdepth[v]`` is the depth used in ``r(x)``; ``r(0) = 0``.
    ``frozen_root`` lets vertex 0 recover only from the state ``{0}``.
    """
    n = len(parent)
    if n > MAX_VERTICES:
        raise ExactError(f"exact analysis is limited to {MAX_VERTICES} vertices, got {n}")
    if not lam > 0:
        raise ExactError("lambda must be > 0")
    if theta is not None and not 0 < theta < 1:
        raise ExactError("theta must lie in (0, 1)")
    fit = np.asarray(fitness, dtype=float)
    N = 1 << n
    states = np.arange(N, dtype=np.int64)
    depths = _popcount_max_depth(states, np.asarray(rdepth, dtype=np.int64))
    scale = np.ones(N) if theta is None else theta ** depths.astype(float)
    nbrs = [[] for _ in range(n)]
    for v, p in enumerate(parent):
        if p >= 0:
            nbrs[v].append(p)
            nbrs[p].append(v)
    rows, cols, vals = [], [], []
    for v in range(n):
        bit = 1 << v
        on = (states & bit) != 0
        # recoveries
        src = states[on]
        rate = np.ones(len(src))
        if frozen_root and v == 0:
            rate = (src == 1).astype(float)
        keep = rate > 0
        rows.append(src[keep])
        cols.append(src[keep] ^ bit)
        vals.append(rate[keep] * scale[src[keep]])
        # infections
        src = states[~on]
        press = np.zeros(len(src))
        for u in nbrs[v]:
            press += fit[u] * ((src >> u) & 1)
        if perm_fitness is not None and parent[v] == -1:
            press += perm_fitness
        rate = lam * fit[v] * press
        keep = rate > 0
        rows.append(src[keep])
        cols.append(src[keep] | bit)
        vals.append(rate[keep] * scale[src[keep]])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    w = np.concatenate(vals)
    off = sp.csr_matrix((w, (r, c)), shape=(N, N))
    diag = -np.asarray(off.sum(axis=1)).ravel()
    Q = (off + sp.diags(diag)).tocsr()
    return GeneratorMatrix(Q, n, depths, variant, perm_fitness is not None)


def tree_arrays(tree: WeightedTree):
    """Core parent links, fitness and depth measured from the top vertex
    (the extra root when present)."""
    core = [v for v in range(tree.n) if v != tree.extra_root]
    if core != list(range(len(core))):
        raise ExactError("extra root must be the last vertex")
    parent = [p if p != tree.extra_root else -1 for p in tree.parent[: len(core)]]
    off = 1 if tree.extra_root is not None else 0
    depth = [tree.depth[v] + off for v in core]
    return parent, [tree.fitness[v] for v in core], depth


def build_generator(tree: WeightedTree, lam: float, frozen_root: bool = False,
                    theta: float | None = None) -> GeneratorMatrix:
    """Generator of the process on ``tree``; an extra root, if present, is
    permanently infected with fitness 1 and depths are measured from it."""
    parent, fit, depth = tree_arrays(tree)
    perm = 1.0 if tree.extra_root is not None else None
    variant = "+".join(s for s, on in [("extraRootPermanent", perm is not None),
                                        ("rootFrozenRecovery", frozen_root),
                                        (f"delayed({theta})", theta is not None)] if on) or "plain"
    return build_from_arrays(parent, fit, depth, lam, perm, frozen_root, theta, variant)


def _reachable(Q: sp.csr_matrix, start) -> np.ndarray:
    seen = np.zeros(Q.shape[0], dtype=bool)
    queue = deque(np.atleast_1d(start))
    seen[list(queue)] = True
    indptr, indices, data = Q.indptr, Q.indices, Q.data
    while queue:
        x = queue.popleft()
        for j in range(indptr[x], indptr[x + 1]):
            y = indices[j]
            if data[j] > 0 and not seen[y]:
                seen[y] = True
                queue.append(y)
    return seen


def _solve(A, b):
    """Solve ``A x = b``; dense partial pivoting for small systems."""
    n = A.shape[0]
    if n > MAX_SOLVE_STATES:
        raise ExactError(f"linear system with {n} unknowns exceeds the {MAX_SOLVE_STATES} cap")
    if n <= DENSE_MAX:
        dense = A.toarray() if sp.issparse(A) else np.asarray(A)
        return scipy.linalg.solve(dense, b)
    return spla.splu(sp.csc_matrix(A)).solve(np.asarray(b, dtype=float))


def stationary_distribution(gen: GeneratorMatrix) -> StationaryVector:
    """Stationary law on the class reached from the all-healthy state."""
    if not gen.perm:
        raise ExactError("state 0 (all healthy) is absorbing; a stationary "
                         "solve needs a permanently infected extra root")
    support = np.nonzero(_reachable(gen.Q, 0))[0]
    Qs = gen.Q[support][:, support]
    m = len(support)
    A = sp.lil_matrix(Qs.T)
    A[m - 1, :] = np.ones(m)
    b = np.zeros(m)
    b[m - 1] = 1.0
    ps = _solve(sp.csr_matrix(A), b)
    ps = np.clip(ps, 0.0, None)
    ps /= ps.sum()
    p = np.zeros(gen.n)
    p[support] = ps
    residual = float(np.abs(Qs.T @ ps).max())
    return StationaryVector(p, residual, support)


def _hitting_setup(gen: GeneratorMatrix, targets, start: int):
    target = np.zeros(gen.n, dtype=bool)
    target[list(np.atleast_1d(targets))] = True
    reach = _reachable(gen.Q, start)
    if not (reach & target).any():
        raise ExactError(f"target unreachable from state {start}")
    # every reachable state must be able to reach the target
    back = _reachable(gen.Q.T.tocsr(), np.nonzero(target)[0])
    bad = reach & ~back
    if bad.any():
        raise ExactError(f"state {int(np.nonzero(bad)[0][0])} is reachable but cannot reach the target")
    idx = np.nonzero(reach & ~target)[0]
    return idx


def expected_hitting_time(gen: GeneratorMatrix, targets, start: int) -> float:
    """Mean time to hit ``targets`` from ``start``: solves ``Q_NN h = -1``."""
    idx = _hitting_setup(gen, targets, start)
    if start not in set(idx):
        return 0.0
    A = gen.Q[idx][:, idx]
    h = _solve(A, -np.ones(len(idx)))
    return float(h[np.searchsorted(idx, start)])


def expected_jumps(gen: GeneratorMatrix, targets, start: int) -> float:
    """Mean number of transitions before hitting ``targets``."""
    idx = _hitting_setup(gen, targets, start)
    if start not in set(idx):
        return 0.0
    A = gen.Q[idx][:, idx]
    out = -gen.Q.diagonal()[idx]
    h = _solve(A, -out)
    return float(h[np.searchsorted(idx, start)])


def hit_probability(gen: GeneratorMatrix, good, bad, start: int) -> float:
    """Probability of hitting the set ``good`` before the set ``bad``."""
    good_m = np.zeros(gen.n, dtype=bool)
    good_m[list(np.atleast_1d(good))] = True
    bad_m = np.zeros(gen.n, dtype=bool)
    bad_m[list(np.atleast_1d(bad))] = True
    if good_m[start]:
        return 1.0
    if bad_m[start]:
        return 0.0
    reach = _reachable(gen.Q, start)
    idx = np.nonzero(reach & ~good_m & ~bad_m)[0]
    A = gen.Q[idx][:, idx]
    g = np.asarray(gen.Q[idx][:, np.nonzero(good_m)[0]].sum(axis=1)).ravel()
    u = _solve(A, -g)
    return float(u[np.searchsorted(idx, start)])


def transient_probability(gen: GeneratorMatrix, start: int, t: float) -> np.ndarray:
    """Law of the state at time ``t`` from ``start`` (matrix exponential)."""
    p0 = np.zeros(gen.n)
    p0[start] = 1.0
    return spla.expm_multiply(gen.Q.T.tocsc() * t, p0)


def state_depths(tree: WeightedTree) -> np.ndarray:
    parent, fit, depth = tree_arrays(tree)
    n = len(parent)
    return _popcount_max_depth(np.arange(1 << n, dtype=np.int64), np.asarray(depth))


def delayed_reweight(plain: StationaryVector, theta: float, depths: np.ndarray) -> StationaryVector:
    """``nu(x) proportional to theta**-r(x) pi(x)``."""
    if not 0 < theta < 1:
        raise ExactError("theta must lie in (0, 1)")
    w = plain.p * theta ** (-np.asarray(depths, dtype=float))
    return StationaryVector(w / w.sum(), math.nan, plain.support)


def _component_arrays(subtrees: Sequence[WeightedTree], depth_offset: int):
    parent, fit, depth, tops = [], [], [], []
    for t in subtrees:
        if t.extra_root is not None:
            raise ExactError("subtrees must not carry their own extra root")
        base = len(parent)
        tops.append(base)
        for v in range(t.n):
            p = t.parent[v]
            parent.append(-1 if p < 0 else p + base)
            fit.append(t.fitness[v])
            depth.append(t.depth[v] + depth_offset)
    return parent, fit, depth, tops


def product_chain(subtrees: Sequence[WeightedTree], lam: float, root_fitness: float,
                  theta: float | None = None, depth_offset: int = 1) -> tuple[GeneratorMatrix, list[int]]:
    """Subtrees side by side below one permanently infected vertex."""
    parent, fit, depth, tops = _component_arrays(subtrees, depth_offset)
    gen = build_from_arrays(parent, fit, depth, lam, root_fitness, False, theta, "product")
    return gen, tops


@dataclass
class ProductCheck:
    max_deviation: float
    zero_mass_deviation: float


def product_chain_check(subtrees: Sequence[WeightedTree], lam, root_fitness: float) -> ProductCheck:
    """Compare the stationary law of the product chain with the tensor
    product of the per-subtree laws, and the empty-state mass with
    ``prod 1/(1 + lam F_root F_top E[S_i])``."""
    lams = np.atleast_1d(np.asarray(lam, dtype=float))
    if len(lams) > 1 and not np.all(lams == lams[0]):
        raise ExactError("all components must share the same lambda")
    lam = float(lams[0])
    if len(subtrees) < 2:
        raise ExactError("need at least two subtrees")
    if sum(t.n for t in subtrees) > 16:
        raise ExactError("product check limited to 16 vertices")
    gen, _ = product_chain(subtrees, lam, root_fitness)
    joint = stationary_distribution(gen).p
    tensor = np.ones(1)
    zero = 1.0
    for t in subtrees:
        g, _ = product_chain([t], lam, root_fitness)
        pi = stationary_distribution(g).p
        tensor = np.kron(pi, tensor)
        es = expected_hitting_time(g, 0, 1)
        zero *= 1.0 / (1.0 + lam * root_fitness * t.fitness[0] * es)
    return ProductCheck(float(np.abs(joint - tensor).max()), abs(joint[0] - zero))


@dataclass
class DepthHit:
    probability: float
    beyond_height: bool


def exact_depth_hit_probability(tree: WeightedTree, lam: float, h: int) -> DepthHit:
    """``P(r(X) >= h`` before returning to 0) from the root alone, with
    depths counted from the extra root (attached here if missing)."""
    from .tree import attach_extra_root

    if tree.extra_root is None:
        tree = attach_extra_root(tree)
    if h < 1:
        raise ExactError("h must be >= 1")
    gen = build_generator(tree, lam)
    if h > int(gen.depths.max()):
        return DepthHit(0.0, True)
    good = np.nonzero(gen.depths >= h)[0]
    return DepthHit(hit_probability(gen, good, [0], 1), False)


@dataclass
class ExcursionCheck:
    direct: float
    via_identity: float
    deviation: float


def excursion_identity_check(tree: WeightedTree, lam: float, theta: float | None = None) -> ExcursionCheck:
    """Mean root-frozen excursion from the root alone, solved directly and
    through ``theta**-1 + lam F_root sum_j F_j E[S_j]`` where ``S_j`` is the
    hitting time of 0 in the product chain of the child subtrees started
    from child ``j`` alone (``theta = 1`` when not delayed).  Depths are
    counted from the extra root in both computations."""
    from .tree import attach_extra_root

    core = tree if tree.extra_root is None else _strip_extra(tree)
    if core.n > 12:
        raise ExactError("excursion check limited to 12 vertices")
    plus = attach_extra_root(core)
    direct = expected_hitting_time(build_generator(plus, lam, frozen_root=True, theta=theta), 0, 1)
    subs = [_subtree(core, c) for c in core.children[0]]
    th = 1.0 if theta is None else theta
    total = 1.0 / th
    if subs:
        gen, tops = product_chain(subs, lam, core.fitness[0], theta, depth_offset=2)
        for t, top in zip(subs, tops):
            total += lam * core.fitness[0] * t.fitness[0] * expected_hitting_time(gen, 0, 1 << top)
    return ExcursionCheck(direct, total, abs(direct - total))


def _strip_extra(tree: WeightedTree) -> WeightedTree:
    from .tree import from_parents

    parent, fit, _ = tree_arrays(tree)
    return from_parents(parent, fit)


def _subtree(tree: WeightedTree, v: int) -> WeightedTree:
    from .tree import WeightedTree as WT

    out = WT(tree.fitness[v])
    stack = [(v, 0)]
    while stack:
        u, nu = stack.pop()
        for c in tree.children[u]:
            stack.append((c, out.add_child(nu, tree.fitness[c])))
    return out


def plain_vs_frozen(tree: WeightedTree, lam: float) -> tuple[float, float]:
    """Mean excursion lengths from the root alone with and without frozen
    root recoveries (extra root attached)."""
    from .tree import attach_extra_root

    core = tree if tree.extra_root is None else _strip_extra(tree)
    plus = attach_extra_root(core)
    plain = expected_hitting_time(build_generator(plus, lam), 0, 1)
    frozen = expected_hitting_time(build_generator(plus, lam, frozen_root=True), 0, 1)
    return plain, frozen


def zero_mass_check(tree: WeightedTree, lam: float, root_fitness: float = 1.0) -> float:
    """``|pi(0) - 1/(1 + lam F_root F_v E[S])|`` for ``tree`` hung below a
    permanently infected vertex of fitness ``root_fitness``; ``S`` is the
    hitting time of 0 from the top vertex alone."""
    core = tree if tree.extra_root is None else _strip_extra(tree)
    gen, _ = product_chain([core], lam, root_fitness)
    pi = stationary_distribution(gen).p
    es = expected_hitting_time(gen, 0, 1)
    return abs(pi[0] - 1.0 / (1.0 + lam * root_fitness * core.fitness[0] * es))


def delayed_reweight_check(tree: WeightedTree, lam: float, theta: float) -> float:
    """Max deviation between the delayed stationary law solved directly and
    the reweighted plain law (extra root attached if missing)."""
    from .tree import attach_extra_root

    if tree.extra_root is None:
        tree = attach_extra_root(tree)
    plain = stationary_distribution(build_generator(tree, lam))
    direct = stationary_distribution(build_generator(tree, lam, theta=theta))
    reweighted = delayed_reweight(plain, theta, build_generator(tree, lam).depths)
    return float(np.abs(direct.p - reweighted.p).max())
