"""Sample projections at random and watch the integrality obstruction hold.

Compress random orthogonal conjugates of coordinate projections, read off
their diagonals, and sum the defects: small entries directly, large entries
through their distance to one.  The two sums always differ by an integer --
no counterexample ever shows up.
"""

import numpy as np

from carpenter.selector import necessity_oracle

for dim in (2, 3, 4, 5, 6):
    r = necessity_oracle(dim, trials=500, seed=2024 + dim)
    print(
        f"dim {dim}: {r.trials} trials, {r.violations} violations, "
        f"worst distance to an integer {r.worst_distance:.2e}"
    )
    assert r.passed

# the same statement fails immediately for non-projections
rng = np.random.default_rng(8)
x = rng.uniform(0.05, 0.45, 5)
a = x.sum()
print(f"\nrandom non-projection diagonal: defect sum {a:.6f} (not an integer)")
assert abs(a - round(a)) > 1e-6
print("so a diagonal like that can only come from a matrix that is not a projection")
