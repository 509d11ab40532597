"""Offspring and fitness laws.

Both classes carry a family tag and a parameter tuple.  They sample with a
:class:`numpy.random.Generator` from Python code and also export a compact
``(kind, params, table)`` triple that the compiled simulation kernel reads
when it grows trees lazily.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

# kernel codes, shared with engine.py
OFF_DET, OFF_POIS, OFF_GEOM, OFF_TABLE, OFF_POWER = 0, 1, 2, 3, 4
FIT_CONST, FIT_PARETO, FIT_UNIF, FIT_EMP = 0, 1, 2, 3

PMF_TOL = 1e-12
SEXP_DEFAULT_CAP = 10**6


class DistributionError(ValueError):
    pass


def _table_from_pmf(pmf: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(pmf)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    return cdf


@dataclass(frozen=True)
class OffspringDist:
    """Law of the number of children of a vertex.

    Families
    --------
    ``deterministic(k)``
        point mass at ``k``.
    ``poisson(mu)``
    ``geometric(p)``
        ``P(xi = j) = (1 - p)**j * p`` on ``j >= 0``.
    ``powerLaw(alpha, cutoff)``
        ``P(xi >= k) = k**-alpha`` for ``k >= 1``; with a cutoff the law is
        truncated at ``cutoff`` and renormalised.
    ``stretchedExp(gamma, cap)``
        ``P(xi = k) = c * exp(-k**gamma)`` on ``0 <= k <= cap``.
    ``empirical(pmf)``
        explicit ``{k: p}`` mapping.
    """

    family: str
    params: tuple = ()
    _pmf: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        fam, p = self.family, self.params
        if fam == "deterministic":
            k = int(p[0])
            if k < 0 or k != p[0]:
                raise DistributionError("deterministic offspring needs a nonnegative integer")
        elif fam == "poisson":
            if not p[0] >= 0:
                raise DistributionError("poisson mean must be >= 0")
        elif fam == "geometric":
            if not 0 < p[0] <= 1:
                raise DistributionError("geometric success probability must lie in (0, 1]")
        elif fam == "powerLaw":
            alpha, cutoff = p[0], (p[1] if len(p) > 1 else None)
            if alpha <= 0:
                raise DistributionError("power-law exponent must be positive")
            if cutoff is None and alpha <= 1:
                raise DistributionError(
                    f"power law with alpha={alpha} <= 1 and no cutoff has infinite mean"
                )
            if cutoff is not None:
                ks = np.arange(1, int(cutoff) + 1, dtype=float)
                pmf = np.concatenate([[0.0], ks**-alpha - (ks + 1) ** -alpha])
                object.__setattr__(self, "_pmf", pmf / pmf.sum())
        elif fam == "stretchedExp":
            gamma = p[0]
            cap = int(p[1]) if len(p) > 1 else SEXP_DEFAULT_CAP
            if gamma <= 0:
                raise DistributionError("stretched-exponential exponent must be positive")
            ks = np.arange(cap + 1, dtype=float)
            logw = -(ks**gamma)
            w = np.exp(logw - logw.max())
            nz = np.nonzero(w > 0)[0]
            w = w[: nz[-1] + 1]
            object.__setattr__(self, "_pmf", w / w.sum())
        elif fam == "empirical":
            mapping = dict(p)
            if any(k < 0 or int(k) != k for k in mapping):
                raise DistributionError("empirical support must be nonnegative integers")
            probs = np.array(list(mapping.values()), dtype=float)
            if (probs < 0).any() or abs(probs.sum() - 1.0) > PMF_TOL:
                raise DistributionError("empirical pmf must be nonnegative and sum to 1")
            pmf = np.zeros(int(max(mapping)) + 1)
            for k, v in mapping.items():
                pmf[int(k)] += v
            object.__setattr__(self, "_pmf", pmf)
        else:
            raise DistributionError(f"unknown offspring family {fam!r}")

    # constructors
    @classmethod
    def deterministic(cls, k: int) -> "OffspringDist":
        return cls("deterministic", (k,))

    @classmethod
    def poisson(cls, mu: float) -> "OffspringDist":
        return cls("poisson", (float(mu),))

    @classmethod
    def geometric(cls, p: float) -> "OffspringDist":
        return cls("geometric", (float(p),))

    @classmethod
    def power_law(cls, alpha: float, cutoff: int | None = None) -> "OffspringDist":
        return cls("powerLaw", (float(alpha),) if cutoff is None else (float(alpha), int(cutoff)))

    @classmethod
    def stretched_exp(cls, gamma: float, cap: int = SEXP_DEFAULT_CAP) -> "OffspringDist":
        return cls("stretchedExp", (float(gamma), int(cap)))

    @classmethod
    def empirical(cls, pmf: dict) -> "OffspringDist":
        return cls("empirical", tuple(sorted(pmf.items())))

    @property
    def mean(self) -> float:
        fam, p = self.family, self.params
        if fam == "deterministic":
            return float(p[0])
        if fam == "poisson":
            return float(p[0])
        if fam == "geometric":
            return (1.0 - p[0]) / p[0]
        if fam == "powerLaw" and self._pmf is None:
            return float(special.zeta(p[0], 1))
        return float(np.dot(np.arange(len(self._pmf)), self._pmf))

    def pmf(self, k: int) -> float:
        fam, p = self.family, self.params
        if k < 0:
            return 0.0
        if fam == "deterministic":
            return 1.0 if k == p[0] else 0.0
        if fam == "poisson":
            return float(stats.poisson.pmf(k, p[0]))
        if fam == "geometric":
            return (1.0 - p[0]) ** k * p[0]
        if fam == "powerLaw" and self._pmf is None:
            return 0.0 if k == 0 else k ** -p[0] - (k + 1) ** -p[0]
        return float(self._pmf[k]) if k < len(self._pmf) else 0.0

    def sample(self, rng: np.random.Generator, size=None):
        fam, p = self.family, self.params
        if fam == "deterministic":
            return int(p[0]) if size is None else np.full(size, int(p[0]), dtype=np.int64)
        if fam == "poisson":
            out = rng.poisson(p[0], size)
        elif fam == "geometric":
            out = rng.geometric(p[0], size) - 1
        elif fam == "powerLaw" and self._pmf is None:
            u = 1.0 - rng.random(size)
            out = np.floor(u ** (-1.0 / p[0]))
        else:
            out = rng.choice(len(self._pmf), size=size, p=self._pmf)
        return int(out) if size is None else np.asarray(out, dtype=np.int64)

    def kernel_spec(self) -> tuple[int, np.ndarray, np.ndarray]:
        fam, p = self.family, self.params
        empty = np.zeros(1)
        if fam == "deterministic":
            return OFF_DET, np.array([float(p[0])]), empty
        if fam == "poisson":
            return OFF_POIS, np.array([float(p[0])]), empty
        if fam == "geometric":
            return OFF_GEOM, np.array([float(p[0])]), empty
        if fam == "powerLaw" and self._pmf is None:
            return OFF_POWER, np.array([float(p[0])]), empty
        return OFF_TABLE, np.zeros(1), _table_from_pmf(self._pmf)

    def __str__(self) -> str:
        return f"{self.family}{self.params}"


@dataclass(frozen=True)
class FitnessDist:
    """Law of the per-vertex fitness, supported on ``[1, inf)``.

    ``pareto(C1)`` has ``P(F > f) = f**-C1`` for ``f >= 1``; ``empirical``
    takes ``(x, cdf)`` knots and inverts the piecewise-linear cdf.
    """

    family: str
    params: tuple = ()

    def __post_init__(self):
        fam, p = self.family, self.params
        if fam == "constant":
            if not p[0] >= 1:
                raise DistributionError(f"fitness must be >= 1, got constant {p[0]}")
        elif fam == "pareto":
            if not p[0] > 0:
                raise DistributionError("pareto tail exponent must be > 0")
        elif fam == "boundedUniform":
            lo, hi = p
            if not (1 <= lo <= hi):
                raise DistributionError("uniform fitness needs 1 <= lo <= hi")
        elif fam == "empirical":
            xs, cdf = np.asarray(p[0], float), np.asarray(p[1], float)
            if len(xs) != len(cdf) or len(xs) < 1:
                raise DistributionError("empirical fitness needs matching knot arrays")
            if xs[0] < 1:
                raise DistributionError("empirical fitness support below 1")
            if np.any(np.diff(xs) < 0) or np.any(np.diff(cdf) < 0):
                raise DistributionError("empirical knots must be nondecreasing")
            if abs(cdf[-1] - 1.0) > PMF_TOL or cdf[0] < 0:
                raise DistributionError("empirical cdf must end at 1")
        else:
            raise DistributionError(f"unknown fitness family {fam!r}")

    @classmethod
    def constant_one(cls) -> "FitnessDist":
        return cls("constant", (1.0,))

    @classmethod
    def constant(cls, f: float) -> "FitnessDist":
        return cls("constant", (float(f),))

    @classmethod
    def pareto(cls, c1: float) -> "FitnessDist":
        return cls("pareto", (float(c1),))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "FitnessDist":
        return cls("boundedUniform", (float(lo), float(hi)))

    @classmethod
    def empirical(cls, xs, cdf) -> "FitnessDist":
        return cls("empirical", (tuple(map(float, xs)), tuple(map(float, cdf))))

    def tail(self, f: float) -> float:
        """``P(F >= f)``."""
        fam, p = self.family, self.params
        if f <= 1:
            return 1.0
        if fam == "constant":
            return 1.0 if p[0] >= f else 0.0
        if fam == "pareto":
            return f ** -p[0]
        if fam == "boundedUniform":
            lo, hi = p
            if hi == lo:
                return 1.0 if lo >= f else 0.0
            return float(np.clip((hi - f) / (hi - lo), 0.0, 1.0))
        xs, cdf = np.asarray(p[0]), np.asarray(p[1])
        return float(1.0 - np.interp(f, xs, cdf, left=0.0, right=1.0))

    def sample(self, rng: np.random.Generator, size=None):
        fam, p = self.family, self.params
        if fam == "constant":
            return float(p[0]) if size is None else np.full(size, float(p[0]))
        u = rng.random(size)
        if fam == "pareto":
            out = (1.0 - u) ** (-1.0 / p[0])
        elif fam == "boundedUniform":
            out = p[0] + (p[1] - p[0]) * u
        else:
            out = np.interp(u, p[1], p[0])
        return float(out) if size is None else np.asarray(out)

    def kernel_spec(self) -> tuple[int, np.ndarray, np.ndarray]:
        fam, p = self.family, self.params
        if fam == "constant":
            return FIT_CONST, np.array([float(p[0])]), np.zeros((2, 1))
        if fam == "pareto":
            return FIT_PARETO, np.array([float(p[0])]), np.zeros((2, 1))
        if fam == "boundedUniform":
            return FIT_UNIF, np.array([float(p[0]), float(p[1])]), np.zeros((2, 1))
        return FIT_EMP, np.zeros(1), np.array([p[1], p[0]], dtype=float)

    def __str__(self) -> str:
        return f"{self.family}{self.params}"


def parse_offspring(text: str) -> OffspringDist:
    """Parse the flag mini-language: ``det:k``, ``pois:mu``, ``geom:p``,
    ``pow:alpha[,cutoff]``, ``sexp:gamma[,cap]``, ``emp:k=p,k=p``."""
    name, _, arg = text.partition(":")
    try:
        if name == "det":
            return OffspringDist.deterministic(int(arg))
        if name == "pois":
            return OffspringDist.poisson(float(arg))
        if name == "geom":
            return OffspringDist.geometric(float(arg))
        if name == "pow":
            parts = arg.split(",")
            return OffspringDist.power_law(float(parts[0]), int(parts[1]) if len(parts) > 1 else None)
        if name == "sexp":
            parts = arg.split(",")
            cap = int(float(parts[1])) if len(parts) > 1 else SEXP_DEFAULT_CAP
            return OffspringDist.stretched_exp(float(parts[0]), cap)
        if name == "emp":
            pmf = {}
            for item in arg.split(","):
                k, _, v = item.partition("=")
                pmf[int(k)] = float(v)
            return OffspringDist.empirical(pmf)
    except (ValueError, IndexError) as exc:
        raise DistributionError(f"bad offspring spec {text!r}: {exc}") from exc
    raise DistributionError(f"unknown offspring spec {text!r}")


def parse_fitness(text: str) -> FitnessDist:
    """Parse ``const:f``, ``pareto:C1``, ``unif:lo,hi`` or ``emp:x=c,x=c``."""
    name, _, arg = text.partition(":")
    try:
        if name == "const":
            return FitnessDist.constant(float(arg))
        if name == "pareto":
            return FitnessDist.pareto(float(arg))
        if name == "unif":
            lo, hi = arg.split(",")
            return FitnessDist.uniform(float(lo), float(hi))
        if name == "emp":
            xs, cs = [], []
            for item in arg.split(","):
                x, _, c = item.partition("=")
                xs.append(float(x))
                cs.append(float(c))
            return FitnessDist.empirical(xs, cs)
    except (ValueError, IndexError) as exc:
        raise DistributionError(f"bad fitness spec {text!r}: {exc}") from exc
    raise DistributionError(f"unknown fitness spec {text!r}")


def log_tail_ratio(dist: FitnessDist, f: float) -> float:
    """``log P(F > f) / log f``; for the Pareto family this is ``-C1`` exactly."""
    return math.log(dist.tail(f)) / math.log(f)
