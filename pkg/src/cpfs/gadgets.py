"""The auxiliary one-dimensional chain that lower-bounds the number of
infected leaves of a star, and its geometric burst variable."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .bounds import compute_L


def frakN_success(lam: float, f: float) -> float:
    x = lam * f
    return x / (x + 1)


def sample_frakN(lam: float, f: float, rng: np.random.Generator, size=None):
    """Number of leaf recoveries while the centre is healthy:
    ``P(N = j) = (1/(lam f + 1))**j * lam f / (lam f + 1)``."""
    if not lam * f > 0:
        raise ValueError("need lam * f > 0")
    out = rng.geometric(frakN_success(lam, f), size) - 1
    return int(out) if size is None else out


def frakN_pmf(j: int, lam: float, f: float) -> float:
    p = frakN_success(lam, f)
    return (1 - p) ** j * p


@dataclass
class YRun:
    times: np.ndarray
    values: np.ndarray
    T_L: float
    R_0: float
    L: int


class YChain:
    """Jump rates: ``y -> y - 1`` at rate ``L``; ``y -> min(y + 1, L)`` at
    rate ``lam f (k - L)``; ``y -> y - N`` at rate 1."""

    def __init__(self, lam: float, f: float, k: int):
        if k < 1 or f < 1 or lam <= 0:
            raise ValueError("need k >= 1, f >= 1, lam > 0")
        self.lam, self.f, self.k = lam, f, k

    @property
    def L(self) -> int:
        return compute_L(self.lam, self.f, self.k)

    def rates(self) -> tuple[float, float, float]:
        L = self.L
        return float(L), self.lam * self.f * (self.k - L), 1.0

    def drift(self) -> float:
        """Mean drift below ``L``: ``-L + lam f (k - L) - 1/(lam f)``."""
        L = self.L
        return -L + self.lam * self.f * (self.k - L) - 1.0 / (self.lam * self.f)

    def run(self, horizon: float, rng: np.random.Generator, y0: int = 0,
            record: bool = True, stop_at_L: bool = False) -> YRun:
        """Simulate until ``horizon`` (or until ``L`` is hit, with
        ``stop_at_L``).  ``T_L = inf{t: Y_t >= L}``; ``R_0`` is the first
        time after ``T_1`` with ``Y <= 0``.  Unreached times are ``inf``."""
        L = self.L
        rd, ru, rb = self.rates()
        total = rd + ru + rb
        p = frakN_success(self.lam, self.f)
        t, y = 0.0, y0
        times, vals = [0.0], [y0]
        T_L = 0.0 if y0 >= L else math.inf
        T_1 = 0.0 if y0 >= 1 else math.inf
        R_0 = math.inf
        while True:
            t += rng.exponential(1.0 / total)
            if t > horizon:
                break
            u = rng.random() * total
            if u < rd:
                y -= 1
            elif u < rd + ru:
                y = min(y + 1, L)
            else:
                y -= int(rng.geometric(p)) - 1
            if record:
                times.append(t)
                vals.append(y)
            if y >= L and T_L == math.inf:
                T_L = t
                if stop_at_L:
                    break
            if y >= 1 and T_1 == math.inf:
                T_1 = t
            elif y <= 0 and T_1 < math.inf and R_0 == math.inf:
                R_0 = t
        return YRun(np.array(times), np.array(vals), T_L, R_0, L)


def simulate_Y_chain(lam: float, f: float, k: int, horizon: float, rng: np.random.Generator,
                     y0: int = 0) -> YRun:
    return YChain(lam, f, k).run(horizon, rng, y0)


@dataclass
class DriftEstimate:
    estimate: float
    ci: tuple[float, float]
    exact: float
    n: int


def estimate_Y_drift(lam: float, f: float, k: int, n_runs: int, h: float,
                     rng: np.random.Generator, level: float = 0.99) -> DriftEstimate:
    """Ratio estimator ``sum(Y_{tau ^ h} - Y_0) / sum(tau ^ h)`` with
    ``tau = T_L``; optional stopping makes it consistent for the drift.
    The interval is the delta-method normal interval."""
    chain = YChain(lam, f, k)
    a = np.empty(n_runs)
    b = np.empty(n_runs)
    for i in range(n_runs):
        run = chain.run(h, rng, 0, record=True, stop_at_L=True)
        a[i] = run.values[-1]
        b[i] = min(run.T_L, h)
    ratio = a.sum() / b.sum()
    resid = a - ratio * b
    se = math.sqrt(resid.var(ddof=1) / n_runs) / b.mean()
    z = stats.norm.ppf(0.5 + level / 2)
    return DriftEstimate(ratio, (ratio - z * se, ratio + z * se), chain.drift(), n_runs)


@dataclass
class ZCheck:
    max_drift: float
    argmax: int
    drifts: np.ndarray
    L: int


def z_one_step_drift(lam: float, f: float, k: int) -> ZCheck:
    """Exact ``E[b**-Z_{n+1} | Z_n = z] - b**-z`` for ``b = 1 + lam f/2`` and
    every interior ``z`` in ``1..L-1`` of the embedded jump chain.

    The burst term uses ``E[b**N] = p / (1 - q b)`` with ``q = 1/(lam f + 1)``;
    ``q b < 1`` always holds.
    """
    chain = YChain(lam, f, k)
    L = chain.L
    rd, ru, rb = chain.rates()
    tot = rd + ru + rb
    pd, pu, pb = rd / tot, ru / tot, rb / tot
    b = 1.0 + lam * f / 2.0
    p = frakN_success(lam, f)
    q = 1.0 - p
    burst = p / (1.0 - q * b)
    zs = np.arange(1, L)
    if len(zs) == 0:
        return ZCheck(-math.inf, -1, np.zeros(0), L)
    base = b ** (-zs.astype(float))
    nxt = pd * b ** (-(zs - 1.0)) + pu * b ** (-np.minimum(zs + 1, L).astype(float)) + pb * base * burst
    drifts = nxt - base
    i = int(np.argmax(drifts))
    return ZCheck(float(drifts[i]), int(zs[i]), drifts, L)


def embedded_Z_supermartingale_check(lam: float, f: float, k: int, n_trials: int = 0,
                                     rng: np.random.Generator | None = None) -> float:
    """Largest one-step drift over interior states (``<= 0`` means the
    supermartingale property holds there).

    With ``n_trials`` and ``rng`` the maximum is taken over the interior
    states visited by that many jumps of the chain started at 0; otherwise
    over all of ``1..L-1``.  The drift at each state is exact either way.
    """
    check = z_one_step_drift(lam, f, k)
    if not n_trials or rng is None or len(check.drifts) == 0:
        return check.max_drift
    chain = YChain(lam, f, k)
    rd, ru, rb = chain.rates()
    tot = rd + ru + rb
    p = frakN_success(lam, f)
    L, y, seen = check.L, 0, set()
    for _ in range(n_trials):
        u = rng.random() * tot
        if u < rd:
            y -= 1
        elif u < rd + ru:
            y = min(y + 1, L)
        else:
            y -= int(rng.geometric(p)) - 1
        if 0 < y < L:
            seen.add(y)
        elif y <= 0:
            y = 0
    if not seen:
        return -math.inf
    return float(max(check.drifts[z - 1] for z in seen))
