"""Finite-dimensional diagonal prescriptions.

A self-adjoint matrix with eigenvalue list ``lam`` can be rotated so that its
diagonal becomes ``f`` exactly when ``f`` is majorized by ``lam``.  The
construction here is fully deterministic: it pins the target entries one at a
time with planar rotations, choosing the rotation plane by a fixed first-fit
rule, so repeated runs produce byte-identical matrices.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import MajorizationError, SpecError
from .seqcore import ProjectionRep, SparseVector

__all__ = [
    "majorizes",
    "schur_horn_unitary",
    "finite_projection",
    "finite_projection_pair",
    "intertwining_unitary",
]


def _is_rational_list(xs) -> bool:
    return all(isinstance(x, (int, Fraction)) for x in xs)


def majorizes(f, lam, tol=None) -> bool:
    """True when the sorted prefix sums of f never exceed those of lam and the
    totals agree.

    With rational inputs the comparison is exact; otherwise ``tol`` (default
    1e-9) absorbs floating-point fuzz.
    """
    f = list(f)
    lam = list(lam)
    if len(f) != len(lam):
        raise SpecError(f"length mismatch: {len(f)} vs {len(lam)}")
    exact = _is_rational_list(f) and _is_rational_list(lam) and tol is None
    if tol is None:
        tol = 0 if exact else 1e-9
    fs = sorted(f, reverse=True)
    ls = sorted(lam, reverse=True)
    pf = pl = 0
    for i in range(len(fs)):
        pf += fs[i]
        pl += ls[i]
        if pf > pl + tol:
            return False
    return abs(pf - pl) <= tol


def schur_horn_unitary(lam, f, tol=1e-9) -> np.ndarray:
    """Orthogonal U with diag(U^T diag(lam) U) = f, given f majorized by lam.

    Targets are pinned from the largest down.  Each step rotates the tightest
    pair of remaining values straddling the target so that the target
    coordinate reads exactly f_k while the partner keeps the leftover; with
    this pair choice the remaining values still majorize the remaining
    targets, so the recursion closes and the last coordinate ends exact by
    mass conservation.  Bookkeeping is exact (floats convert to fractions
    without loss); only the rotation entries involve square roots.
    """
    n = len(lam)
    if len(f) != n:
        raise SpecError(f"length mismatch: {len(f)} vs {n}")
    exact_in = _is_rational_list(lam) and _is_rational_list(f)
    if not majorizes(f, lam, tol=None if exact_in else tol):
        raise MajorizationError("target diagonal is not majorized by the spectrum")
    d = [Fraction(x) for x in lam]
    fv = [Fraction(x) for x in f]
    u = np.eye(n)
    order = sorted(range(n), key=lambda i: (-fv[i], i))
    pinned = [False] * n
    for t in order[: n - 1] if n else []:
        ft = fv[t]
        free = [i for i in range(n) if not pinned[i]]
        below = [i for i in free if d[i] <= ft]
        above = [i for i in free if d[i] >= ft]
        if not above or not below:
            # only reachable through float-tolerance majorization: absorb
            # the roundoff at the nearest value and move on
            p = min(free, key=lambda i: abs(d[i] - ft))
            _swap(u, d, t, p)
            d[t] = ft
            pinned[t] = True
            continue
        p = max(below, key=lambda i: d[i])
        q = min(above, key=lambda i: d[i])
        if d[p] == ft or d[q] == ft:
            _swap(u, d, t, p if d[p] == ft else q)
            pinned[t] = True
            continue
        if p != t:
            _swap(u, d, t, p)
            if q == t:
                q = p
        # now d[t] < ft < d[q]; rotate so coordinate t reads exactly ft
        c2 = (d[q] - ft) / (d[q] - d[t])
        c, s = math.sqrt(c2), math.sqrt(1 - c2)
        rot = np.eye(n)
        rot[t, t] = c
        rot[q, t] = s
        rot[t, q] = -s
        rot[q, q] = c
        u = u @ rot
        d[q] = d[t] + d[q] - ft
        d[t] = ft
        pinned[t] = True
    last = order[-1] if n else 0
    if n and abs(float(d[last] - fv[last])) > max(tol, 1e-9):
        raise MajorizationError(
            f"residual {float(d[last] - fv[last])} at the last pinned coordinate"
        )
    return u


def _swap(u: np.ndarray, d: list, i: int, j: int):
    if i != j:
        d[i], d[j] = d[j], d[i]
        u[:, [i, j]] = u[:, [j, i]]


def finite_projection_pair(f) -> tuple[list[SparseVector], list[SparseVector]]:
    """Orthonormal row systems (range, complement) for a finite diagonal f.

    The entries of f must lie in [0,1] and sum to an integer k; the first list
    spans a rank-k projection with diagonal f, the second its orthogonal
    complement inside the same coordinates.
    """
    fv = [Fraction(x) if isinstance(x, (int, Fraction)) else x for x in f]
    n = len(fv)
    for x in fv:
        if not 0 <= x <= 1:
            raise SpecError(f"diagonal entry {x} outside [0,1]")
    total = sum(fv)
    k = int(round(float(total)))
    if abs(float(total) - k) > 1e-12:
        raise MajorizationError(f"diagonal sum {total} is not an integer")
    if all(x in (0, 1) for x in fv):
        ones = [SparseVector.basis(i + 1) for i, x in enumerate(fv) if x == 1]
        zeros = [SparseVector.basis(i + 1) for i, x in enumerate(fv) if x == 0]
        return ones, zeros
    lam = [1.0] * k + [0.0] * (n - k)
    u = schur_horn_unitary(lam, fv)
    rng = [SparseVector.from_dense(u[i, :]) for i in range(k)]
    ker = [SparseVector.from_dense(u[i, :]) for i in range(k, n)]
    return rng, ker


def finite_projection(f) -> ProjectionRep:
    """Rank-sum(f) projection on len(f) coordinates with diagonal exactly f."""
    rng, _ = finite_projection_pair(f)
    return ProjectionRep.frame(tuple(rng))


def intertwining_unitary(p: np.ndarray, q: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Orthogonal U with U^T P U = Q for two projections of equal rank.

    Both matrices are diagonalized; matching the eigenbases ordered by
    eigenvalue gives the conjugation.  When P and Q coincide the result is the
    identity up to roundoff.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise SpecError(f"need square matrices of equal size, got {p.shape} and {q.shape}")
    for name, mat in (("first", p), ("second", q)):
        if np.abs(mat - mat.T).max() > tol or np.abs(mat @ mat - mat).max() > tol:
            raise SpecError(f"{name} argument is not a projection (tolerance {tol})")
    rp = int(round(np.trace(p)))
    rq = int(round(np.trace(q)))
    if rp != rq:
        raise SpecError(f"rank mismatch: {rp} vs {rq}")
    _, bp = np.linalg.eigh(p)
    _, bq = np.linalg.eigh(q)
    return bp @ bq.T
