"""Exact linear solves next to Monte Carlo on a small tree.

A 6-vertex tree is small enough that the whole state space (64 states) fits
in a generator matrix.  We compare the mean extinction time, the stationary
mass of the empty state with an extra root, and the probability that one
excursion reaches depth 2.
"""
import numpy as np

from cpfs import exact as E
from cpfs.process import ProcessParams, run_trials
from cpfs.experiments import estimators as X
from cpfs.experiments.stats import MCEstimate
from cpfs.tree import attach_extra_root, from_parents

tree = from_parents([-1, 0, 0, 1, 1, 2], [2.0, 1.0, 3.0, 1.0, 1.5, 1.0])
lam = 0.4

gen = E.build_generator(tree, lam)
print(f"{gen.n} states, generator rows sum to {np.abs(gen.row_sums()).max():.1e}")

exact_T = E.expected_hitting_time(gen, 0, 1)
res = run_trials(tree, ProcessParams(lam), [0], 50_000, seed=1)
mc = MCEstimate.mean(res.time)
print(f"mean extinction time: exact {exact_T:.4f}, MC {mc.point:.4f} "
      f"[{mc.lo:.4f}, {mc.hi:.4f}]")

plus = attach_extra_root(tree)
pi = E.stationary_distribution(E.build_generator(plus, lam))
print(f"with a permanently infected extra root, pi(empty) = {pi.p[0]:.6f}")

exact_h = E.exact_depth_hit_probability(plus, lam, 2).probability
dt = X.estimate_depth_tail(lam, [2], 50_000, 2, tree=plus)
e = dt.estimates[0]
print(f"P(excursion reaches depth 2): exact {exact_h:.5f}, MC {e.point:.5f} "
      f"[{e.lo:.5f}, {e.hi:.5f}]")
