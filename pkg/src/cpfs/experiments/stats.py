"""Monte Carlo estimates with confidence intervals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats


def _z(level: float) -> float:
    if not 0 < level < 1:
        raise ValueError("confidence level must lie in (0, 1)")
    return float(stats.norm.ppf(0.5 + level / 2))


def wilson_interval(successes: int, n: int, level: float = 0.99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n < 1 or not 0 <= successes <= n:
        raise ValueError("need n >= 1 and 0 <= successes <= n")
    z = _z(level)
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


@dataclass
class MCEstimate:
    n: int
    point: float
    ci: tuple[float, float]
    censored: int = 0
    seed: int | None = None
    level: float = 0.99
    successes: int | None = None
    total: float | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def proportion(cls, successes: int, n: int, level: float = 0.99, censored: int = 0,
                   seed: int | None = None, **extra) -> "MCEstimate":
        successes, n = int(successes), int(n)
        return cls(n, successes / n, wilson_interval(successes, n, level), censored, seed,
                   level, successes=successes, extra=extra)

    @classmethod
    def mean(cls, samples, level: float = 0.99, censored: int = 0, seed: int | None = None,
             **extra) -> "MCEstimate":
        x = np.asarray(samples, dtype=float)
        n = len(x)
        total = math.fsum(x)
        point = total / n
        se = float(x.std(ddof=1)) / math.sqrt(n) if n > 1 else math.inf
        z = _z(level)
        return cls(n, point, (point - z * se, point + z * se), censored, seed, level,
                   total=total, extra=extra)

    def contains(self, value: float) -> bool:
        return self.ci[0] <= value <= self.ci[1]

    @property
    def lo(self) -> float:
        return self.ci[0]

    @property
    def hi(self) -> float:
        return self.ci[1]
