"""Measuring how different two unlabeled samples are.

The estimate fits a least-squares linear classifier that tries to tell the
two samples apart and turns its error eps into 1 - 2 eps. That value can
never exceed the maximum over pairs of halfplanes, approximated here on a
grid for comparison; for overlapping small samples it can be well below it.
"""
import numpy as np

from activetask import build_matrix, discrepancy_bruteforce, estimate_discrepancy, generate_synthetic

rng = np.random.default_rng(0)
base = rng.standard_normal((200, 2))
print("identical samples:", estimate_discrepancy(base, base))
for shift in (0.25, 1.0, 2.0, 4.0):
    other = rng.standard_normal((200, 2)) + [shift, 0.0]
    print(f"shift {shift}: estimate {estimate_discrepancy(base, other):.3f}, "
          f"grid maximum {discrepancy_bruteforce(base, other):.3f}")

# The full matrix over a collection is symmetric with a zero diagonal.
coll = generate_synthetic(T=8, n=1000, m=100, seed=3)
D = build_matrix(coll)
print(np.round(D.values, 2))
means = np.array([s.mean for s in coll.specs])
far = np.linalg.norm(means[:, None] - means[None], axis=2)
iu = np.triu_indices(coll.T, 1)
print("correlation with mean distance:", round(float(np.corrcoef(far[iu], D.values[iu])[0, 1]), 3))
