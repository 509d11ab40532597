"""Contact-process parameters and the trial runner around the compiled kernel."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .distributions import FitnessDist, OffspringDist
from .tree import WeightedTree, attach_extra_root

BLOCK = 1000
DEFAULT_MAX_EVENTS = 10**8
DEFAULT_BUDGET = 200_000


class ParamError(ValueError):
    pass


@dataclass(frozen=True)
class ProcessParams:
    """Infection intensity plus the variant flags.

    ``extra_root_permanent`` adjoins a permanently infected parent of the
    root (unless the tree already has one); ``root_frozen`` suppresses root
    recoveries while any other vertex is infected; ``theta`` in (0, 1)
    switches on the delayed dynamics.
    """

    lam: float
    extra_root_permanent: bool = False
    root_frozen: bool = False
    theta: float | None = None
    horizon: float = math.inf
    max_events: int = DEFAULT_MAX_EVENTS

    def __post_init__(self):
        if not self.lam > 0:
            raise ParamError(f"lambda must be > 0, got {self.lam}")
        if self.theta is not None and not 0 < self.theta < 1:
            raise ParamError(f"theta must lie in (0, 1), got {self.theta}")
        if not self.horizon > 0:
            raise ParamError("horizon must be positive")
        if self.max_events < 1:
            raise ParamError("event cap must be positive")

    @property
    def variant(self) -> str:
        parts = []
        if self.extra_root_permanent:
            parts.append("extraRootPermanent")
        if self.root_frozen:
            parts.append("rootFrozenRecovery")
        if self.theta is not None:
            parts.append(f"delayed({self.theta})")
        return "+".join(parts) or "plain"


@dataclass(frozen=True)
class Growth:
    """Lazy growth: children of a vertex are sampled when it is first infected.

    With ``fresh_root`` and an unexpanded root, the root fitness is redrawn
    at the start of every trial so each trial sees an independent tree.
    """

    offspring: OffspringDist
    fitness: FitnessDist
    max_gen: int = 10**9
    budget: int = DEFAULT_BUDGET
    fresh_root: bool = True


@dataclass
class Probes:
    """Optional per-trial observables computed inside the kernel.

    ``threshold``: record the first time at least this many children of the
    root are infected (optionally stopping there).  ``window``: minimum of
    that count over ``[lo, hi]``, with early stop once it is ``<= win_thr``.
    ``target``: first infection time of a vertex (optionally stopping
    there) and its state at time ``snapshot``.  ``path_r``: track the
    sequential relay event along the path ``0, 1, ..., r``.
    """

    threshold: int = -1
    stop_on_threshold: bool = False
    window: tuple[float, float] = (0.0, -1.0)
    win_thr: int = -1
    target: int = -1
    stop_on_target: bool = False
    snapshot: float = -1.0
    path_r: int = 0


@dataclass
class TrialResults:
    floats: np.ndarray
    ints: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.floats.shape[0]

    @property
    def time(self):
        return self.floats[:, engine.F_TIME]

    @property
    def status(self):
        return self.ints[:, engine.I_STATUS]

    def col(self, name: str):
        if hasattr(engine, "F_" + name):
            return self.floats[:, getattr(engine, "F_" + name)]
        return self.ints[:, getattr(engine, "I_" + name)]


@dataclass
class KernelSetup:
    args: tuple
    order: np.ndarray
    perm: bool


def _prepare(tree: WeightedTree, params: ProcessParams, initial, growth: Growth | None,
             probes: Probes | None) -> KernelSetup:
    if params.extra_root_permanent and tree.extra_root is None:
        tree = attach_extra_root(tree)
    perm = tree.extra_root is not None
    if params.root_frozen and tree.n_core < 1:
        raise ParamError("root-frozen dynamics need a root")
    arrs = tree.to_arrays()
    new = {int(o): i for i, o in enumerate(arrs.order)}
    init = []
    for v in initial:
        if v == tree.extra_root:
            continue
        if v not in new:
            raise ParamError(f"initial vertex {v} not in tree")
        init.append(new[v])
    if not init and not perm:
        raise ParamError("initial set must be nonempty without a permanent extra root")
    if growth is None:
        if not arrs.expanded.all():
            raise ParamError("tree has unexpanded frontier vertices but no growth spec")
        off = (engine.OFF_DET, np.zeros(1), np.zeros(1))
        fit = (engine.FIT_CONST, np.ones(1), np.zeros((2, 1)))
        capacity, max_gen = arrs.n, 0
    else:
        if growth.fresh_root and arrs.expanded[0]:
            growth = Growth(growth.offspring, growth.fitness, growth.max_gen, growth.budget, False)
        off = growth.offspring.kernel_spec()
        fit = growth.fitness.kernel_spec()
        capacity, max_gen = max(growth.budget, arrs.n), growth.max_gen
    pr = probes or Probes()
    target = new.get(pr.target, -1) if pr.target >= 0 else -1
    args = (
        arrs.parent, arrs.fitness, arrs.depth, arrs.cstart, arrs.ccount, arrs.expanded,
        int(capacity), int(max_gen),
        off[0], off[1], off[2], fit[0], fit[1], fit[2],
        float(params.lam), perm, bool(params.root_frozen),
        1.0 if params.theta is None else float(params.theta),
        growth is not None and growth.fresh_root,
        np.array(init, dtype=np.int64), float(params.horizon), int(params.max_events),
        int(pr.threshold), bool(pr.stop_on_threshold),
        float(pr.window[0]), float(pr.window[1]), int(pr.win_thr),
        int(target), bool(pr.stop_on_target), float(pr.snapshot), int(pr.path_r),
    )
    return KernelSetup(args, arrs.order, perm)


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _empty_log():
    return (np.zeros(0), np.zeros(0, np.int64), np.zeros(0, np.int64),
            np.zeros(0, np.int64), np.zeros(0, np.int64))


def _run_blocks(args, seed, blocks):
    out = []
    for b, ntr in blocks:
        of = np.empty((ntr, engine.NF))
        oi = np.empty((ntr, engine.NI), dtype=np.int64)
        engine.run_block(block_rng(seed, b), ntr, *args, of, oi, *_empty_log())
        out.append((of, oi))
    return out


def run_trials(tree: WeightedTree, params: ProcessParams, initial, n_trials: int, seed: int,
               growth: Growth | None = None, probes: Probes | None = None,
               jobs: int = 1) -> TrialResults:
    """Run independent trials; results do not depend on ``jobs``.

    Trials are grouped in blocks of ``BLOCK``; block ``b`` draws from the
    stream ``SeedSequence(seed, spawn_key=(b,))`` and blocks are concatenated
    in index order.
    """
    if n_trials < 1:
        raise ParamError("need at least one trial")
    setup = _prepare(tree, params, initial, growth, probes)
    nb = (n_trials + BLOCK - 1) // BLOCK
    blocks = [(b, min(BLOCK, n_trials - b * BLOCK)) for b in range(nb)]
    if jobs <= 1 or nb == 1:
        parts = _run_blocks(setup.args, seed, blocks)
    else:
        chunks = [blocks[i::jobs] for i in range(jobs)]
        chunks = [c for c in chunks if c]
        with ProcessPoolExecutor(max_workers=len(chunks)) as ex:
            futs = [ex.submit(_run_blocks, setup.args, seed, c) for c in chunks]
            results = [f.result() for f in futs]
        parts = [None] * nb
        for c, res in zip(chunks, results):
            for (b, _), r in zip(c, res):
                parts[b] = r
    return TrialResults(np.concatenate([p[0] for p in parts]),
                        np.concatenate([p[1] for p in parts]), seed)


@dataclass
class Observables:
    extinction_time: float
    censored: bool
    status: int
    max_depth: int
    root_reinfections: int
    touched_vertices: int
    events: int
    final_count: int


@dataclass
class Trajectory:
    observables: Observables
    final_infected: set[int]
    times: np.ndarray = field(repr=False)
    event_type: np.ndarray = field(repr=False)
    vertex: np.ndarray = field(repr=False)
    infected_count: np.ndarray = field(repr=False)
    depth: np.ndarray = field(repr=False)

    def to_csv(self) -> str:
        names = {engine.LOG_INFECT: "infect", engine.LOG_RECOVER: "recover", engine.LOG_CENSOR: "censor"}
        rows = ["time,event_type,vertex,infected_count,depth"]
        for t, e, v, c, d in zip(self.times, self.event_type, self.vertex, self.infected_count, self.depth):
            rows.append(f"{t:.17g},{names[int(e)]},{v},{c},{d}")
        return "\n".join(rows) + "\n"


def simulate(tree: WeightedTree, params: ProcessParams, initial, seed: int,
             growth: Growth | None = None, probes: Probes | None = None) -> Trajectory:
    """One trial with its full event log (vertex ids are kernel ids, i.e.
    breadth-first order of the input tree followed by lazily grown ones)."""
    setup = _prepare(tree, params, initial, growth, probes)
    cap = 4096
    while True:
        of = np.empty((1, engine.NF))
        oi = np.empty((1, engine.NI), dtype=np.int64)
        logs = (np.zeros(cap), np.zeros(cap, np.int64), np.zeros(cap, np.int64),
                np.zeros(cap, np.int64), np.zeros(cap, np.int64))
        nlog = engine.run_block(block_rng(seed, 0), 1, *setup.args, of, oi, *logs)
        if nlog < cap:
            break
        cap *= 8
    logs = [a[:nlog] for a in logs]
    init = setup.args[19]
    infected = set(int(v) for v in init)
    for e, v in zip(logs[1], logs[2]):
        if e == engine.LOG_INFECT:
            infected.add(int(v))
        elif e == engine.LOG_RECOVER:
            infected.discard(int(v))
    st = int(oi[0, engine.I_STATUS])
    obs = Observables(
        extinction_time=float(of[0, engine.F_TIME]),
        censored=st in (engine.HORIZON, engine.EVENT_CAP),
        status=st,
        max_depth=int(oi[0, engine.I_H]),
        root_reinfections=int(oi[0, engine.I_REINF]),
        touched_vertices=int(oi[0, engine.I_TOUCHED]),
        events=int(oi[0, engine.I_EVENTS]),
        final_count=int(oi[0, engine.I_FINAL]),
    )
    if st == engine.OVERFLOW:
        from .tree import VertexBudgetExceeded
        raise VertexBudgetExceeded(int(oi[0, engine.I_NVERT]), setup.args[6])
    return Trajectory(obs, infected, *logs)



@dataclass
class LevelResults:
    alive: np.ndarray
    root: np.ndarray
    seed: int


def _run_level_blocks(args, seed, m, blocks):
    out = []
    for b, ntr in blocks:
        alive = np.empty((ntr, m), dtype=np.int64)
        root = np.empty((ntr, m), dtype=np.int64)
        engine.run_levels(block_rng(seed, b), ntr, *args, alive, root)
        out.append((alive, root))
    return out


def run_coupled_levels(tree: WeightedTree, lams, expos, initial, n_trials: int, seed: int,
                       horizon: float, growth: Growth | None = None,
                       max_events: int = DEFAULT_MAX_EVENTS, jobs: int = 1) -> LevelResults:
    """Run several intensities / fitness exponents on one shared graphical
    representation.  Level ``j`` uses ``lams[j]`` and fitness ``F**expos[j]``
    with ``0 <= expos[j] <= 1``; levels ordered in both coordinates give
    nested infected sets in every trial."""
    lams = np.asarray(lams, dtype=float)
    expos = np.broadcast_to(np.asarray(expos, dtype=float), lams.shape).copy()
    if lams.ndim != 1 or len(lams) == 0 or (lams <= 0).any():
        raise ParamError("need a nonempty vector of positive intensities")
    if ((expos < 0) | (expos > 1)).any():
        raise ParamError("fitness exponents must lie in [0, 1]")
    setup = _prepare(tree, ProcessParams(float(lams.max()), horizon=horizon), initial, growth, None)
    if setup.perm:
        raise ParamError("coupled levels run the plain process only")
    a = setup.args
    args = a[:14] + (a[18], lams, expos, a[19], float(horizon), int(max_events))
    m = len(lams)
    nb = (n_trials + BLOCK - 1) // BLOCK
    blocks = [(b, min(BLOCK, n_trials - b * BLOCK)) for b in range(nb)]
    if jobs <= 1 or nb == 1:
        parts = _run_level_blocks(args, seed, m, blocks)
    else:
        chunks = [c for c in (blocks[i::jobs] for i in range(jobs)) if c]
        with ProcessPoolExecutor(max_workers=len(chunks)) as ex:
            futs = [ex.submit(_run_level_blocks, args, seed, m, c) for c in chunks]
            results = [f.result() for f in futs]
        parts = [None] * nb
        for c, res in zip(chunks, results):
            for (b, _), r in zip(c, res):
                parts[b] = r
    return LevelResults(np.concatenate([p[0] for p in parts]),
                        np.concatenate([p[1] for p in parts]), seed)
