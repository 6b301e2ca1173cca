"""Stream orthonormal vectors whose squares tile a constant diagonal.

Each vector occupies a short window of coordinates; consecutive windows
overlap in at most one pair of columns, where a closed-form coupling keeps
everything orthogonal.  Entries left of the moving boundary are settled: no
later vector will touch them.
"""

import numpy as np

from carpenter.seqcore import DiagonalSpec, TailRule
from carpenter.tetris import tetris_vectors

spec = DiagonalSpec.of(tail=TailRule.constant("2/5"))
out = tetris_vectors(spec, 4)

print("boundary indices:", out.min_s)
print("settled prefix  :", out.settled_prefix)
print("column masses   :", [f"sigma_{n+1}={s}" for n, s in enumerate(out.sigma)])
print()

m = 12
v = np.vstack([w.dense(m) for w in out.vectors])
np.set_printoptions(precision=4, suppress=True, linewidth=120)
print("the four vectors on the first 12 coordinates:")
print(v)

g = v @ v.T
assert np.allclose(g, np.eye(4), atol=1e-12)
print("\nGram == I_4  (orthonormal)")

col = (v**2).sum(axis=0)
print("column sums of squares:", col)
for k in range(out.settled_prefix):
    assert abs(col[k] - 0.4) < 1e-12
print(f"first {out.settled_prefix} columns already carry exactly 2/5")
