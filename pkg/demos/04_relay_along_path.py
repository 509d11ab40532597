"""How far can a persistent star push infection along a path?

A star of k leaves keeps the centre busy; the far end of an attached path
of length r gets infected within the window unless the path is too long.
"""
from cpfs.experiments import estimators as X

for r in (1, 2, 3, 5, 8):
    rel = X.star_path_relay_experiment(1.0, 8.0, 64, r, 500, seed=r, cap=5.0)
    print(f"r = {r}: P(path end not infected by t = {rel.horizon:g}) ~ {rel.failure.point:.3f}")

pt = X.path_transmission_experiment(1.0, [9, 1, 9], 20_000, seed=4)
print(f"\npath 9-1-9: P(B) exact {pt.exact_B:.4f}, MC {pt.B.point:.4f}")
print(f"P(end infected at time 2r) {pt.reach.point:.4f}, "
      f"P(end infected by time 2r) {pt.reach_by.point:.4f}")
