"""Fitness-weighted rooted trees and the gadget graphs built from them.

Vertex ids are dense integers with the root at 0.  An optional extra root
(the permanently infected parent of the root) is stored as the last id with
stored depth -1; all other depths are distances from the root.
"""
from __future__ import annotations

from collections import deque
from typing import Iterable, Sequence

import numpy as np

from .distributions import FitnessDist, OffspringDist

HEADER = "cpfs-tree v1"


class TreeError(ValueError):
    pass


class VertexBudgetExceeded(RuntimeError):
    """Raised when growth would exceed the vertex budget."""

    def __init__(self, partial: int, budget: int):
        super().__init__(f"vertex budget {budget} exceeded ({partial} vertices generated)")
        self.partial = partial
        self.budget = budget


class WeightedTree:
    def __init__(self, fitness: float = 1.0):
        _check_fitness(fitness)
        self.parent: list[int] = [-1]
        self.children: list[list[int]] = [[]]
        self.fitness: list[float] = [float(fitness)]
        self.depth: list[int] = [0]
        self.frontier: set[int] = set()
        self.extra_root: int | None = None

    root = 0

    @property
    def n(self) -> int:
        return len(self.parent)

    @property
    def n_core(self) -> int:
        """Vertex count without the extra root."""
        return self.n - (self.extra_root is not None)

    def __len__(self) -> int:
        return self.n

    def add_child(self, v: int, fitness: float) -> int:
        _check_fitness(fitness)
        w = self.n
        self.parent.append(v)
        self.children.append([])
        self.fitness.append(float(fitness))
        self.depth.append(self.depth[v] + 1)
        self.children[v].append(w)
        return w

    def height(self) -> int:
        return max(d for i, d in enumerate(self.depth) if i != self.extra_root)

    def level(self, r: int) -> list[int]:
        return [v for v in range(self.n) if v != self.extra_root and self.depth[v] == r]

    def leaves(self) -> list[int]:
        return [v for v in range(self.n) if v != self.extra_root and not self.children[v]]

    def neighbors(self, v: int) -> list[int]:
        out = list(self.children[v])
        if self.parent[v] >= 0:
            out.append(self.parent[v])
        return out

    def edges(self) -> list[tuple[int, int]]:
        return [(self.parent[v], v) for v in range(self.n) if self.parent[v] >= 0]

    def copy(self) -> "WeightedTree":
        t = WeightedTree.__new__(WeightedTree)
        t.parent = list(self.parent)
        t.children = [list(c) for c in self.children]
        t.fitness = list(self.fitness)
        t.depth = list(self.depth)
        t.frontier = set(self.frontier)
        t.extra_root = self.extra_root
        return t

    def check(self) -> None:
        """Assert the structural invariants."""
        seen = 0
        for v in range(self.n):
            if self.fitness[v] < 1:
                raise TreeError(f"vertex {v} has fitness {self.fitness[v]} < 1")
            p = self.parent[v]
            if v == self.extra_root:
                if p != -1 or self.depth[v] != -1 or self.fitness[v] != 1.0:
                    raise TreeError("malformed extra root")
                if self.children[v] != [0]:
                    raise TreeError("extra root must have exactly the root as child")
                continue
            if p == -1:
                seen += 1
                if v != 0 or self.depth[v] != 0:
                    raise TreeError("root must be vertex 0 at depth 0")
            elif p != self.extra_root and self.depth[v] != self.depth[p] + 1:
                raise TreeError(f"depth mismatch at vertex {v}")
            elif v not in self.children[p]:
                raise TreeError(f"vertex {v} missing from its parent's child list")
        if self.extra_root is None and seen != 1:
            raise TreeError("tree must have a single root")

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightedTree):
            return NotImplemented
        return (
            self.parent == other.parent
            and self.fitness == other.fitness
            and self.frontier == other.frontier
            and self.extra_root == other.extra_root
        )

    def bfs_order(self) -> list[int]:
        order, queue = [], deque([0])
        while queue:
            v = queue.popleft()
            order.append(v)
            queue.extend(self.children[v])
        return order

    def to_arrays(self):
        """Core vertices relabelled in breadth-first order.

        Children of every vertex occupy a contiguous id range, which the
        compiled kernels rely on.  ``order[i]`` is the original id of new
        vertex ``i``; the extra root is dropped and reported as ``perm``.
        """
        order = self.bfs_order()
        new = {v: i for i, v in enumerate(order)}
        m = len(order)
        parent = np.full(m, -1, dtype=np.int64)
        fitness = np.empty(m)
        depth = np.empty(m, dtype=np.int64)
        cstart = np.zeros(m, dtype=np.int64)
        ccount = np.zeros(m, dtype=np.int64)
        expanded = np.ones(m, dtype=np.bool_)
        for i, v in enumerate(order):
            p = self.parent[v]
            parent[i] = new[p] if p >= 0 and p != self.extra_root else -1
            fitness[i] = self.fitness[v]
            depth[i] = self.depth[v]
            kids = self.children[v]
            ccount[i] = len(kids)
            cstart[i] = new[kids[0]] if kids else 0
            expanded[i] = v not in self.frontier
        return TreeArrays(parent, fitness, depth, cstart, ccount, expanded,
                          self.extra_root is not None, np.array(order, dtype=np.int64))


class TreeArrays:
    def __init__(self, parent, fitness, depth, cstart, ccount, expanded, perm, order):
        self.parent = parent
        self.fitness = fitness
        self.depth = depth
        self.cstart = cstart
        self.ccount = ccount
        self.expanded = expanded
        self.perm = perm
        self.order = order

    @property
    def n(self) -> int:
        return len(self.parent)

    def new_id(self, original: int) -> int:
        return int(np.nonzero(self.order == original)[0][0])


def _check_fitness(f: float) -> None:
    if not f >= 1:
        raise TreeError(f"fitness must be >= 1, got {f}")


def generate_tree(
    offspring: OffspringDist,
    fitness: FitnessDist,
    max_gen: int,
    max_vertices: int,
    rng: np.random.Generator,
    root_fitness: float | None = None,
    root_children: int | None = None,
) -> WeightedTree:
    """Breadth-first Galton-Watson tree truncated at generation ``max_gen``.

    ``root_fitness`` / ``root_children`` pin the root's values instead of
    sampling them.
    """
    if max_gen < 0 or max_vertices < 1:
        raise TreeError("need max_gen >= 0 and max_vertices >= 1")
    tree = WeightedTree(fitness.sample(rng) if root_fitness is None else root_fitness)
    queue = deque([0])
    while queue:
        v = queue.popleft()
        if tree.depth[v] >= max_gen:
            continue
        k = root_children if (v == 0 and root_children is not None) else offspring.sample(rng)
        if tree.n + k > max_vertices:
            raise VertexBudgetExceeded(tree.n, max_vertices)
        fits = fitness.sample(rng, k) if k else ()
        for f in fits:
            queue.append(tree.add_child(v, f))
    return tree


def lazy_root(fitness: FitnessDist, rng: np.random.Generator) -> WeightedTree:
    """A single unexpanded root, the starting point of lazy growth."""
    tree = WeightedTree(fitness.sample(rng))
    tree.frontier.add(0)
    return tree


def extend_vertex(
    tree: WeightedTree,
    v: int,
    offspring: OffspringDist,
    fitness: FitnessDist,
    rng: np.random.Generator,
    max_vertices: int | None = None,
) -> list[int]:
    """Sample the children of frontier vertex ``v`` (exactly once)."""
    if v not in tree.frontier:
        raise TreeError(f"vertex {v} is not on the frontier")
    k = offspring.sample(rng)
    if max_vertices is not None and tree.n + k > max_vertices:
        raise VertexBudgetExceeded(tree.n, max_vertices)
    tree.frontier.discard(v)
    new = [tree.add_child(v, f) for f in (fitness.sample(rng, k) if k else ())]
    tree.frontier.update(new)
    return new


def _broadcast(values, k: int, what: str) -> list[float]:
    if np.isscalar(values):
        return [float(values)] * k
    values = [float(x) for x in values]
    if len(values) == 1:
        return values * k
    if len(values) != k:
        raise TreeError(f"{what}: expected {k} values, got {len(values)}")
    return values


def make_star(k: int, root_fitness: float, leaf_fitness: float | Sequence[float] = 1.0) -> WeightedTree:
    """Star with a centre of the given fitness and ``k`` leaves."""
    if k < 1:
        raise TreeError("a star needs at least one leaf")
    tree = WeightedTree(root_fitness)
    for f in _broadcast(leaf_fitness, k, "leaf fitness"):
        tree.add_child(0, f)
    return tree


def make_star_with_path(
    k: int,
    r: int,
    root_fitness: float,
    path_fitness: Sequence[float],
    leaf_fitness: float = 1.0,
) -> WeightedTree:
    """Star with ``k`` leaves whose first leaf starts a path ``u_1..u_r``.

    ``path_fitness[i]`` is the fitness of ``u_{i+1}``; ``u_1`` is leaf 1, so
    the graph has ``k + r`` vertices and ``u_r`` is the last id.
    """
    if k < 1 or r < 1:
        raise TreeError("need k >= 1 and r >= 1")
    pf = list(path_fitness)
    if len(pf) != r:
        raise TreeError(f"path fitness: expected {r} values, got {len(pf)}")
    tree = WeightedTree(root_fitness)
    tree.add_child(0, pf[0])
    for _ in range(k - 1):
        tree.add_child(0, leaf_fitness)
    v = 1
    for f in pf[1:]:
        v = tree.add_child(v, f)
    return tree


def make_path(fitness: Sequence[float]) -> WeightedTree:
    """Path ``v_0 - v_1 - ... - v_r`` rooted at ``v_0``."""
    fs = list(fitness)
    if not fs:
        raise TreeError("empty path")
    tree = WeightedTree(fs[0])
    v = 0
    for f in fs[1:]:
        v = tree.add_child(v, f)
    return tree


def from_parents(parents: Sequence[int], fitness: Sequence[float]) -> WeightedTree:
    """Build a tree from a parent list with ``parents[0] == -1`` and
    ``parents[v] < v``."""
    if len(parents) != len(fitness) or not parents or parents[0] != -1:
        raise TreeError("bad parent list")
    tree = WeightedTree(fitness[0])
    for v in range(1, len(parents)):
        p = parents[v]
        if not 0 <= p < v:
            raise TreeError(f"parent of {v} must precede it")
        tree.add_child(p, fitness[v])
    return tree


def attach_extra_root(tree: WeightedTree) -> WeightedTree:
    """Return a copy with a permanently infected parent (fitness 1) above the root."""
    if tree.extra_root is not None:
        raise TreeError("tree already has an extra root")
    out = tree.copy()
    e = out.n
    out.parent.append(-1)
    out.children.append([0])
    out.fitness.append(1.0)
    out.depth.append(-1)
    out.parent[0] = e
    out.extra_root = e
    return out


def dumps(tree: WeightedTree) -> str:
    lines = [f"{HEADER} n={tree.n} extra_root={int(tree.extra_root is not None)}"]
    for v in range(tree.n):
        lines.append(f"{v} {tree.parent[v]} {tree.fitness[v]:.17g} {int(v in tree.frontier)}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> WeightedTree:
    rows = [ln.strip() for ln in text.splitlines()]
    rows = [ln for ln in rows if ln and not ln.startswith("#")]
    if not rows or not rows[0].startswith(HEADER):
        raise TreeError("missing cpfs-tree header")
    try:
        fields = dict(tok.split("=") for tok in rows[0][len(HEADER):].split())
        n, has_extra = int(fields["n"]), fields["extra_root"] == "1"
    except (KeyError, ValueError) as exc:
        raise TreeError(f"malformed header {rows[0]!r}") from exc
    body = rows[1:]
    if len(body) != n:
        raise TreeError(f"header says n={n} but {len(body)} vertex lines follow")
    parent, fitness, frontier = [0] * n, [0.0] * n, set()
    for line_no, line in enumerate(body, start=2):
        parts = line.split()
        if len(parts) != 4:
            raise TreeError(f"line {line_no}: expected 4 fields")
        v, p, f, fr = int(parts[0]), int(parts[1]), float(parts[2]), parts[3]
        if v != line_no - 2:
            raise TreeError(f"line {line_no}: ids must be dense and ordered")
        parent[v], fitness[v] = p, f
        if fr == "1":
            frontier.add(v)
    extra = n - 1 if has_extra else None
    tree = WeightedTree.__new__(WeightedTree)
    tree.parent = parent
    tree.fitness = fitness
    tree.children = [[] for _ in range(n)]
    tree.frontier = frontier
    tree.extra_root = extra
    for v in range(n):
        if parent[v] >= 0:
            tree.children[parent[v]].append(v)
    tree.depth = [0] * n
    if extra is not None:
        tree.depth[extra] = -1
    for v in tree.bfs_order()[1:]:
        tree.depth[v] = tree.depth[parent[v]] + 1
    tree.check()
    return tree


def save(tree: WeightedTree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(tree))


def load(path) -> WeightedTree:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def iter_generation_sizes(tree: WeightedTree) -> Iterable[int]:
    h = tree.height()
    counts = [0] * (h + 1)
    for v in range(tree.n):
        if v != tree.extra_root:
            counts[tree.depth[v]] += 1
    return counts
