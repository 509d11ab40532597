"""A star with a fit centre keeps a fixed fraction of its leaves infected.

Once the infected-leaf count hits the cut-off level L, it rarely drops
below eps * L over a long window.  The closed-form bound is compared with
the observed failure rate; the window is capped because the natural time
scale S is astronomically long.
"""
from cpfs import bounds as B
from cpfs.experiments import estimators as X

lam, f, k, eps = 1.0, 4.0, 64, 0.1
print(f"L = {B.compute_L(lam, f, k)}, S = {B.compute_S(lam, f, k, eps):.3g}")

hit = X.star_hitting_experiment(lam, f, k, 2000, seed=1)
print(f"P(centre dies before L leaves are infected) ~ {hit.died_first.estimate.point:.4f}")

per = X.star_persistence_experiment(lam, f, k, eps, 1000, seed=2, cap=200.0)
c = per.comparison
print(f"failure over [1, {per.horizon:g}]: {per.failure.point:.4f} "
      f"(CI upper {per.failure.hi:.4f}) against bound {c.bound:.4f}; passed={c.passed}")
