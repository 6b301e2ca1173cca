"""Constructions for diagonals whose defect sums a and b both converge.

Here a projection with the requested diagonal exists exactly when a - b is an
integer, and the construction always terminates: after finitely many vectors
every diagonal entry is settled.  The hard case (infinitely many entries on
both sides of 1/2) is handled by decoupling: three distinguished entries are
adjusted so the sequence falls apart into a finite group with integer mass, a
finite group with mass one, and a terminal group whose complement has mass
one.  Each group is realized independently, and a single 3x3 rotation moves
the adjusted entries back to their requested values.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    ConstructionError,
    InfeasibleDiagonalError,
    UnsupportedStructureError,
)
from .feasibility import classify
from .seqcore import (
    GEOMETRIC,
    INF,
    CONSTANT,
    ZERO_KIND,
    DiagonalSpec,
    ListShiftEmbedding,
    PermutationWindow,
    ProjectionRep,
    SparseVector,
    SqrtTail,
    conjugate_by_permutation,
    fmt_rat,
)
from .schurhorn import finite_projection_pair, majorizes, schur_horn_unitary
from .tetris import (
    _subsample_spec,
    _window_from_pairs,
    block_sort,
    positions,
    tetris_vectors,
)

__all__ = [
    "ProperMaps",
    "positions_proper",
    "rank_one",
    "split_small_large",
    "proper_subspec",
    "DecouplingPlan",
    "decouple",
    "conjugate_on_coords",
    "summable_construct2",
    "summable_construct",
    "embed_with_improper",
]


@dataclass
class ProperMaps:
    """1-based lookups: Pro(n) = n-th entry in (0,1), pro(n) = n-th entry in {0,1}."""

    spec: DiagonalSpec

    def __post_init__(self):
        self._cls = self.spec.proper_classes()

    def Pro(self, n: int) -> int:
        return self._cls.nth(n, True)

    def pro(self, n: int) -> int:
        return self._cls.nth(n, False)

    def count_proper(self):
        return self._cls.count(True)

    def count_improper(self):
        return self._cls.count(False)


def positions_proper(spec: DiagonalSpec) -> ProperMaps:
    return ProperMaps(spec)


def rank_one(spec: DiagonalSpec) -> ProjectionRep:
    """The rank-one projection onto the vector with squares f_i (needs sum f = 1)."""
    if spec.total() != 1:
        raise ConstructionError(f"total mass {fmt_rat(spec.total())} != 1")
    p = len(spec.prefix)
    entries = [(i, spec.entry(i), 1) for i in range(1, p + 1)]
    t = spec.tail
    tail = None
    if t.kind == GEOMETRIC:
        tail = SqrtTail(p + 1, t, 1)
    elif not (t.kind == ZERO_KIND or (t.kind == CONSTANT and t.c == 0)):
        raise ConstructionError(f"tail {t.kind!r} cannot have total mass 1")
    v = SparseVector.from_exact(entries, tail)
    if v.exact_norm_sq() != 1:
        raise ConstructionError("internal: rank-one vector is not unit")
    return ProjectionRep.frame((v,))


def split_small_large(spec: DiagonalSpec):
    """Subsequences of entries <= 1/2 and > 1/2, plus the position maps.

    Finite classes come back zero-padded; use the maps for the true counts.
    """
    cls = spec.half_classes()
    small = _subsample_spec(spec, cls, True, 1, 1)
    large = _subsample_spec(spec, cls, False, 1, 1)
    return small, large, positions(spec)


def proper_subspec(spec: DiagonalSpec):
    """Strip the 0/1 entries: returns (proper subsequence, embedding, improper).

    The embedding maps index i of the subsequence to the position of the i-th
    proper entry of the original; ``improper`` lists (position, value) for the
    finitely many 0/1 entries.  Raises when there are infinitely many.
    """
    cls = spec.proper_classes()
    t = cls.count(False)
    if t == INF:
        raise UnsupportedStructureError("infinitely many 0/1 entries")
    improper = tuple((cls.nth(n, False), int(spec.entry(cls.nth(n, False)))) for n in range(1, t + 1))
    sub = _subsample_spec(spec, cls, True, 1, 1)
    rest = cls.rest_start()
    j0 = rest - 1 - t  # proper entries strictly before the exception-free tail
    head = tuple(cls.nth(i, True) for i in range(1, j0 + 1))
    return sub, ListShiftEmbedding(head, t), improper


# ---------------------------------------------------------------------------
# decoupling


@dataclass(frozen=True)
class DecouplingPlan:
    """Exact bookkeeping for the three-group decomposition.

    ``small`` lists the n_small entries <= 1/2 in order; ``i1``/``i2`` are the
    ordinals of the two largest of the first two of them, ``i3`` the large
    entry used for the mass-one group, ``i4``/``i5`` the cut ordinals.  The
    adjusted values replace a_{i1}, a_{i2}, b_{i3}; the groups then carry
    integer mass, mass one, and co-mass one respectively.
    """

    spec: DiagonalSpec
    i1: int
    i2: int
    i3: int
    i4: int
    i5: int
    small: tuple[Fraction, ...]
    b_tilde: Fraction
    a1_tilde: Fraction
    a2_tilde: Fraction
    group1: tuple[Fraction, ...]
    group2: tuple[Fraction, ...]
    group3_comp: DiagonalSpec
    group1_src: tuple[int, ...]
    group2_src: tuple[int, ...]

    @property
    def n_small(self) -> int:
        return len(self.small)

    def group3_ordinal(self, j: int) -> int:
        """Ordinal (into the large subsequence) of entry j >= 2 of group three."""
        o = self.i5 + (j - 2)
        if self.i5 <= self.i3 <= o:
            o += 1
        return o

    def group3_src(self, j: int) -> int:
        """Original index feeding slot j of group three."""
        pm = positions(self.spec)
        if j == 1:
            return pm.pos(self.i2)
        return pm.Pos(self.group3_ordinal(j))

    def to_json_dict(self) -> dict:
        return {
            "i": [self.i1, self.i2, self.i3, self.i4, self.i5],
            "small": [fmt_rat(x) for x in self.small],
            "adjusted": {
                "a1": fmt_rat(self.a1_tilde),
                "a2": fmt_rat(self.a2_tilde),
                "b": fmt_rat(self.b_tilde),
            },
            "group1": [fmt_rat(x) for x in self.group1],
            "group2": [fmt_rat(x) for x in self.group2],
            "group3_complement": self.group3_comp.to_json_dict(),
            "group1_src": list(self.group1_src),
            "group2_src": list(self.group2_src),
        }


def decouple(spec: DiagonalSpec) -> DecouplingPlan:
    """Compute the three-group decomposition of an all-proper summable spec.

    Requires infinitely many entries > 1/2 and finitely many (at least two)
    entries <= 1/2.  All scans and identities are exact; violations of the
    invariants raise ConstructionError rather than returning a bad plan.
    """
    prop = spec.proper_classes()
    if prop.count(False) != 0:
        raise ConstructionError("decoupling needs every entry strictly between 0 and 1")
    cls = spec.half_classes()
    if cls.count(False) != INF:
        raise ConstructionError("decoupling needs infinitely many entries > 1/2")
    n = cls.count(True)
    if n == INF or n < 2:
        raise ConstructionError(f"decoupling needs 2 <= #small < inf, got {n}")
    pm = positions(spec)
    a = [pm.small_value(i) for i in range(1, n + 1)]

    large = _subsample_spec(spec, cls, False, 1, 1)  # b_i = large.entry(i)
    large_c = large.complement()  # entries 1 - b_i, geometric tail, summable

    i1 = 1 if a[0] >= a[1] else 2
    i2 = 3 - i1
    i3 = 1
    while large.entry(i3) < 1 - a[i1 - 1]:
        i3 += 1
    i4 = next(
        k
        for k in range(3, n + 2)
        if large.entry(i3) + sum(a[k - 1 : n], Fraction(0)) <= 1
    )
    b3 = large.entry(i3)

    def co_mass_from(k: int) -> Fraction:
        s = large_c.tail_sum(k)
        if i3 >= k:
            s -= large_c.entry(i3)
        return s

    i5 = 1
    while co_mass_from(i5) > a[i2 - 1]:
        i5 += 1

    b_t = 1 - sum(a[i4 - 1 : n], Fraction(0))
    a2_t = co_mass_from(i5)
    a1_t = a[i1 - 1] + a[i2 - 1] + b3 - a2_t - b_t

    if not (a2_t <= a[i2 - 1] <= a[i1 - 1]):
        raise ConstructionError("adjusted small entry fails its bounds")
    if not b3 <= b_t:
        raise ConstructionError("adjusted large entry fails its lower bound")
    if not 0 <= a1_t <= 1:
        raise ConstructionError(f"adjusted entry {fmt_rat(a1_t)} outside [0,1]")
    # the adjusted first entry can exceed b3 (even 1/2); all the assembly
    # needs is the triple majorization, which the two stopping rules force
    if not majorizes([b3, a[i1 - 1], a[i2 - 1]], [b_t, a1_t, a2_t]):
        raise ConstructionError("requested triple is not majorized by the adjusted one")

    group1 = (a1_t,) + tuple(a[2 : i4 - 1]) + tuple(
        large.entry(i) for i in range(1, i5) if i != i3
    )
    k1 = sum(group1, Fraction(0))
    if k1.denominator != 1:
        raise ConstructionError(f"first group mass {fmt_rat(k1)} is not an integer")
    group2 = (b_t,) + tuple(a[i4 - 1 : n])
    if sum(group2, Fraction(0)) != 1:
        raise ConstructionError("second group mass != 1")

    p_l = len(large.prefix)
    cut = max(p_l + 1, i3 + 1, i5)
    head_ords = [o for o in range(i5, cut) if o != i3]
    g3c = DiagonalSpec(
        (1 - a2_t,) + tuple(large_c.entry(o) for o in head_ords),
        large_c.from_index(cut).tail,
    )
    if g3c.total() != 1:
        raise ConstructionError("terminal group co-mass != 1")

    g1_src = (
        (pm.pos(i1),)
        + tuple(pm.pos(i) for i in range(3, i4))
        + tuple(pm.Pos(i) for i in range(1, i5) if i != i3)
    )
    g2_src = (pm.Pos(i3),) + tuple(pm.pos(i) for i in range(i4, n + 1))
    return DecouplingPlan(
        spec, i1, i2, i3, i4, i5, tuple(a), b_t, a1_t, a2_t,
        group1, group2, g3c, g1_src, g2_src,
    )


# ---------------------------------------------------------------------------
# assembly


def conjugate_on_coords(rep: ProjectionRep, coords, u: np.ndarray) -> ProjectionRep:
    """Conjugate by an orthogonal matrix acting only on the listed coordinates.

    Both frames and coframes transform vectorwise: entries at the coordinates
    mix through u's columns, everything else is untouched.  Exact squares of
    touched vectors are discarded.
    """
    coords = tuple(coords)
    cmax = max(coords)
    out = []
    for v in rep.vectors:
        if v.sqrt_tail is not None and v.sqrt_tail.start <= cmax:
            v = v.materialized_through(cmax)
        sup = dict(v.support)
        if not any(c in sup for c in coords):
            out.append(v)
            continue
        old = np.array([sup.get(c, 0.0) for c in coords])
        new = u.T @ old
        base = [(i, val) for i, val in v.support if i not in coords]
        base.extend((c, float(nv)) for c, nv in zip(coords, new) if nv != 0.0)
        base.sort()
        out.append(SparseVector(tuple(base), v.sqrt_tail, None))
    return ProjectionRep(rep.form, tuple(out))


def _shift(vectors, by: int):
    if by == 0:
        return list(vectors)
    emb = ListShiftEmbedding((), by)
    return [v.remap(emb) for v in vectors]


def summable_construct2(spec: DiagonalSpec, m: int = 0, trace: dict | None = None) -> ProjectionRep:
    """Projection for an all-proper spec with infinitely many entries > 1/2
    and finitely many (>= 2) entries <= 1/2.

    Lays the three decoupled groups on consecutive coordinate ranges, realizes
    each one (integer-rank complement basis, rank-one complement basis, and a
    terminal rank-one co-mass vector), rotates the three adjusted entries back
    to their requested values, and permutes the coordinates into the original
    order.  The result is complete: every diagonal entry is settled.
    """
    plan = decouple(spec)
    n1, l2 = len(plan.group1), len(plan.group2)
    _, ker1 = finite_projection_pair(plan.group1)
    if l2 > 1:
        v2 = np.sqrt([float(x) for x in plan.group2])
        _, _, vh = np.linalg.svd(v2[None, :])
        comp2 = [SparseVector.from_dense(row) for row in vh[1:]]
    else:
        comp2 = []
    w = rank_one(plan.group3_comp).vectors[0]

    vecs = list(ker1) + _shift(comp2, n1) + _shift([w], n1 + l2)
    pre = ProjectionRep.coframe(tuple(vecs))

    coords = (1, n1 + 1, n1 + l2 + 1)
    for ci in coords:
        for cj in coords:
            if ci < cj and abs(pre.entry(ci, cj)) > 1e-10:
                raise ConstructionError("internal: decoupled groups are not orthogonal")
    current = [plan.a1_tilde, plan.b_tilde, plan.a2_tilde]
    for c, val in zip(coords, current):
        if abs(pre.diag(c) - float(val)) > 1e-9:
            raise ConstructionError("internal: adjusted diagonal mismatch before correction")
    a = plan.small
    target = [a[plan.i1 - 1], plan.spec.entry(positions(plan.spec).Pos(plan.i3)), a[plan.i2 - 1]]
    u3 = schur_horn_unitary([float(x) for x in current], [float(x) for x in target])
    corr = conjugate_on_coords(pre, coords, u3)

    rest = spec.half_classes().rest_start()
    pairs: dict[int, int] = {}
    for j, src in enumerate(plan.group1_src, start=1):
        pairs[j] = src
    for j, src in enumerate(plan.group2_src, start=1):
        pairs[n1 + j] = src
    j = 1
    while True:
        slot = n1 + l2 + j
        src = plan.group3_src(j)
        pairs[slot] = src
        if j >= 2 and src == slot and src >= rest:
            break
        j += 1
    w_lim = max((max(s, o) for s, o in pairs.items() if s != o), default=0)
    while n1 + l2 + j <= w_lim:
        j += 1
        pairs[n1 + l2 + j] = plan.group3_src(j)
    beta = _window_from_pairs(pairs)
    rep = conjugate_by_permutation(corr, beta)
    if trace is not None:
        trace["plan"] = plan.to_json_dict()
        trace["beta"] = list(beta.window)
        trace["settled_prefix"] = None
    return rep


def _tetris_complete_route(spec: DiagonalSpec, trace: dict | None = None) -> ProjectionRep:
    """Finite-total construction: sort blockwise, fill, undo the permutations.

    At most one entry may exceed 1/2; if it sits beyond position 1 it is
    swapped there first (the fill needs the large entry in front).
    """
    total = spec.total()
    if total == INF or Fraction(total).denominator != 1:
        raise ConstructionError(f"total mass {fmt_rat(total)} is not a natural number")
    n_total = int(total)
    cls = spec.half_classes()
    k = cls.count(False)
    if k == INF or k > 1:
        raise ConstructionError(f"at most one entry > 1/2 allowed, found {k}")
    swap = PermutationWindow(())
    work = spec
    if k == 1 and cls.nth(1, False) != 1:
        j = cls.nth(1, False)
        p = len(spec.prefix)
        if j > p:  # large entry inside the tail: materialize up to it first
            work = DiagonalSpec(
                tuple(spec.entries_through(j)), spec.tail.reindexed(j - p + 1)
            )
        head = list(range(1, j + 1))
        head[0], head[j - 1] = j, 1
        swap = PermutationWindow(tuple(head))
        pfx = list(work.prefix)
        pfx[0], pfx[j - 1] = pfx[j - 1], pfx[0]
        work = DiagonalSpec(tuple(pfx), work.tail)
    g, rho = block_sort(work)
    out = tetris_vectors(g, n_total)
    rep = conjugate_by_permutation(out.frame(), rho.inverse().compose(swap))
    if trace is not None:
        trace["min_s"] = {str(k): v for k, v in out.min_s.items()}
        trace["sigma"] = [fmt_rat(s) for s in out.sigma]
        trace["a"] = [fmt_rat(x) for x in out.a_coef]
        trace["settled_prefix"] = None
    return rep


def _improper_positions(spec: DiagonalSpec, want: int) -> list[int]:
    """Positions holding the improper value ``want``; that side must be finite."""
    prop = spec.proper_classes()
    if prop.count(False) != INF:
        members = [prop.nth(i, False) for i in range(1, prop.count(False) + 1)]
    else:
        # the improper class is the infinite tail class; all its tail entries
        # share one value, so the requested side is finite only if it differs
        if spec.tail.value(max(prop.exc, default=0) + 1) == want:
            raise ConstructionError(f"infinitely many entries equal {want}")
        members = [i + 1 for i, f in enumerate(prop.flags) if not f]
    return [i for i in members if spec.entry(i) == want]


def embed_with_improper(rep: ProjectionRep, emb, improper) -> ProjectionRep:
    """Transport a construction on the proper entries back to the full index set.

    Frames pick up a basis vector for every entry equal to 1, coframes for
    every entry equal to 0; the other improper value is handled by the
    representation form itself.
    """
    vecs = [v.remap(emb) for v in rep.vectors]
    keep = 1 if rep.form == "frame" else 0
    extras = sorted(j for j, val in improper if val == keep)
    return ProjectionRep(rep.form, tuple(vecs) + tuple(SparseVector.basis(j) for j in extras))


def _all_proper_construct(sub: DiagonalSpec, m: int, trace: dict | None) -> ProjectionRep:
    half = sub.half_classes()
    n_large = half.count(False)
    if n_large == INF:
        n_small = half.count(True)
        if n_small == INF:
            raise UnsupportedStructureError(
                "both threshold classes infinite with convergent sums: "
                "not expressible with the supported tails"
            )
        if n_small >= 2:
            if trace is not None:
                trace["route"] = f"decouple(N={n_small})"
            return summable_construct2(sub, m, trace)
        if trace is not None:
            trace["route"] = f"complement-tetris(N={n_small})"
        return _tetris_complete_route(sub.complement(), trace).complementary()
    if n_large >= 2:
        if trace is not None:
            trace["route"] = f"complement-decouple(N={n_large})"
        return summable_construct2(sub.complement(), m, trace).complementary()
    if trace is not None:
        trace["route"] = f"tetris(N={n_large})"
    return _tetris_complete_route(sub, trace)


def summable_construct(spec: DiagonalSpec, m: int = 0, trace: dict | None = None) -> ProjectionRep:
    """Projection for a feasible diagonal with convergent defect sums.

    The construction always completes: the returned representation settles
    every diagonal entry, so the ``m`` argument only shapes traces.  Raises
    InfeasibleDiagonalError when a - b is not an integer.
    """
    report = classify(spec)
    if not report.feasible:
        raise InfeasibleDiagonalError(
            f"a - b = {fmt_rat(report.a - report.b)} is not an integer"
        )
    if report.case != "summable":
        raise ConstructionError(f"not a summable-case diagonal (case {report.case})")
    if trace is not None:
        trace["report"] = report.to_json_dict()
        trace["settled_prefix"] = None

    prop = spec.proper_classes()
    n_proper = prop.count(True)
    if n_proper != INF:
        proper_idx = [prop.nth(i, True) for i in range(1, n_proper + 1)]
        fvals = [spec.entry(i) for i in proper_idx]
        shift = (proper_idx[-1] - n_proper) if proper_idx else 0
        emb = ListShiftEmbedding(tuple(proper_idx), shift)
        t = spec.tail
        ones_infinite = t.kind == CONSTANT and t.c == 1
        if ones_infinite:
            rng, _ = finite_projection_pair([1 - v for v in fvals])
            zeros = _improper_positions(spec, 0)
            rep = ProjectionRep.coframe(
                tuple(v.remap(emb) for v in rng)
                + tuple(SparseVector.basis(j) for j in zeros)
            )
        else:
            rng, _ = finite_projection_pair(fvals)
            ones = _improper_positions(spec, 1)
            rep = ProjectionRep.frame(
                tuple(v.remap(emb) for v in rng)
                + tuple(SparseVector.basis(j) for j in ones)
            )
        if trace is not None:
            trace["route"] = f"finite-schur-horn(n={n_proper})"
        return rep

    sub, emb, improper = proper_subspec(spec)
    inner = _all_proper_construct(sub, m, trace)
    return embed_with_improper(inner, emb, improper)
