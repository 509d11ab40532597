"""Closed-form quantities from the star, path and relay estimates.

Abstract constants (``c``, ``c_hat``, ``c_hat1``, ``c2``, ``gamma``, ...)
have no numeric value in the theory; they live in :class:`BoundParams` as
user-supplied surrogates with a default of 4.0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields


class BoundError(ValueError):
    pass


SURROGATE_DEFAULT = 4.0


@dataclass(frozen=True)
class BoundParams:
    c: float = SURROGATE_DEFAULT
    c_hat: float = SURROGATE_DEFAULT
    c_hat1: float = SURROGATE_DEFAULT
    c2: float = SURROGATE_DEFAULT
    gamma: float = SURROGATE_DEFAULT
    K: float = SURROGATE_DEFAULT
    eps: float = 0.1
    eps1: float = SURROGATE_DEFAULT
    eps2: float = SURROGATE_DEFAULT
    delta: float = SURROGATE_DEFAULT
    m: float = SURROGATE_DEFAULT
    user_set: frozenset = field(default=frozenset(), compare=False)

    def __post_init__(self):
        for f in fields(self):
            if f.name == "user_set":
                continue
            if not getattr(self, f.name) > 0:
                raise BoundError(f"constant {f.name} must be positive")
        if not 0 < self.eps < 0.5:
            raise BoundError("eps must lie in (0, 1/2)")

    @classmethod
    def with_overrides(cls, **kw) -> "BoundParams":
        return cls(**kw, user_set=frozenset(kw))

    def describe(self) -> dict:
        return {f.name: {"value": getattr(self, f.name),
                         "source": "user" if f.name in self.user_set else "default"}
                for f in fields(self) if f.name != "user_set"}


def _check(lam: float, f: float, k: int | None = None) -> None:
    if not lam > 0:
        raise BoundError("lambda must be > 0")
    if not f >= 1:
        raise BoundError("f must be >= 1")
    if k is not None and k < 1:
        raise BoundError("k must be >= 1")


def compute_L(lam: float, f: float, k: int) -> int:
    """Cut-off level ``ceil(lam f k / (1 + 2 lam f))``."""
    _check(lam, f, k)
    x = lam * f * k / (1.0 + 2.0 * lam * f)
    r = round(x)
    if abs(x - r) <= 1e-12 * max(1.0, x):
        return int(r)
    return int(math.ceil(x))


def log_S(lam: float, f: float, k: int, eps: float) -> float:
    """Natural log of ``(1 + lam f/2)**(L(1-2 eps)) / (2k(2 + lam f))``."""
    if not 0 < eps < 0.5:
        raise BoundError("eps must lie in (0, 1/2)")
    L = compute_L(lam, f, k)
    b = 1.0 + lam * f / 2.0
    return L * (1 - 2 * eps) * math.log(b) - math.log(2 * k * (2 + lam * f))


def log_S_second_form(lam: float, f: float, k: int, eps: float) -> float:
    """Same quantity written as ``(1/4k) (1 + lam f/2)**(L(1-2 eps) - 1)``."""
    L = compute_L(lam, f, k)
    b = 1.0 + lam * f / 2.0
    return (L * (1 - 2 * eps) - 1) * math.log(b) - math.log(4 * k)


def compute_S(lam: float, f: float, k: int, eps: float) -> float:
    """The persistence time scale; ``inf`` if it overflows a float."""
    ls = log_S(lam, f, k, eps)
    return math.exp(ls) if ls < 709 else math.inf


def compute_C_lambda_f(lam: float, f: float) -> float:
    _check(lam, f)
    return ((lam + 1) / lam) ** 2 * (lam * f / (1 + lam * f)) ** 2


def compute_lhat_Chat(lam: float, f: float) -> tuple[float, float]:
    return lam / (lam + 1), compute_C_lambda_f(lam, f) / 4.0


def compute_R(f: float, k: int, lam: float, consts: BoundParams = BoundParams()) -> float:
    _check(lam, f, k)
    return consts.c_hat1 / (lam * f) + consts.c / (lam * f * k ** (1 / 3)) + consts.c2 / (f * k)


def compute_r_of_fk(f: float, k: int, mu: float, c: float, pmf_at_k: float, tail_at_f: float) -> int:
    """``ceil(-log(c k P(xi=k) P(F>=f) / mu) / log mu)``, clamped below at 1."""
    if not mu > 1:
        raise BoundError("mean offspring must exceed 1")
    if not (0 < pmf_at_k <= 1 and 0 < tail_at_f <= 1):
        raise BoundError("r(f, k) undefined for zero probabilities")
    arg = c * k * pmf_at_k * tail_at_f / mu
    x = -math.log(arg) / math.log(mu)
    r = round(x)
    r = int(r) if abs(x - r) <= 1e-12 * max(1.0, abs(x)) else int(math.ceil(x))
    return max(r, 1)


@dataclass
class Condition62:
    holds: bool
    log_lhs: float
    log_rhs: float


def check_condition_62(lam: float, f: float, k: int, eps: float, r: int) -> Condition62:
    """Compare ``S/(2r+1)`` with ``2/(C_hat lhat**r)`` in log space."""
    lhat, chat = compute_lhat_Chat(lam, f)
    log_lhs = log_S(lam, f, k, eps) - math.log(2 * r + 1)
    log_rhs = math.log(2.0) - math.log(chat) - r * math.log(lhat)
    return Condition62(log_lhs > log_rhs, log_lhs, log_rhs)


def star_extinction_bound(lam: float, f: float, k: int, consts: BoundParams = BoundParams()) -> float:
    """``c / (lam f k**(1/3))``: dying out before reaching ``L`` infected leaves."""
    _check(lam, f, k)
    return consts.c / (lam * f * k ** (1 / 3))


def star_slow_bound(lam: float, f: float, k: int, consts: BoundParams = BoundParams()) -> float:
    """``c_hat1/(lam f) + c/(lam f k**(1/3))``: not reaching ``L`` leaves by time 1."""
    _check(lam, f, k)
    return consts.c_hat1 / (lam * f) + consts.c / (lam * f * k ** (1 / 3))


def star_persistence_bound(lam: float, f: float, k: int, eps: float) -> float:
    """``(3 + lam f) (1 + lam f/2)**(-eps L)`` starting from ``L`` leaves and the centre."""
    L = compute_L(lam, f, k)
    return (3 + lam * f) * (1 + lam * f / 2) ** (-eps * L)


def hitting_time_bound(lam: float, f: float, consts: BoundParams = BoundParams()) -> float:
    """``c_hat / (lam f)`` for the mean hitting time of ``L`` by the Y-chain."""
    return consts.c_hat / (lam * f)


def path_B_probability(lam: float, fitness) -> float:
    """``prod lam F_{i-1} F_i / (1 + lam F_{i-1} F_i)`` along a path."""
    out = 1.0
    for a, b in zip(fitness[:-1], fitness[1:]):
        x = lam * a * b
        out *= x / (1 + x)
    return out


def path_lower_bound(lam: float, fitness, consts: BoundParams = BoundParams()) -> float:
    r = len(fitness) - 1
    return (1 - math.exp(-consts.gamma * r)) * path_B_probability(lam, fitness)


def relay_bound(lam: float, f: float, k: int, r: int, eps: float, cap: float | None = None,
                consts: BoundParams = BoundParams()) -> float:
    """``(1 - C_hat lhat**r)**(S'/(2r+1)) + R`` with ``S' = min(S, cap)``."""
    lhat, chat = compute_lhat_Chat(lam, f)
    S = compute_S(lam, f, k, eps)
    if cap is not None:
        S = min(S, cap)
    q = chat * lhat**r
    first = (1 - q) ** (S / (2 * r + 1)) if q < 1 else 0.0
    return first + compute_R(f, k, lam, consts)


def is_vacuous(bound: float) -> bool:
    return not bound < 1.0
