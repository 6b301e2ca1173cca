"""Spectral-tetris construction for diagonals with divergent small-entry mass.

The constructor streams unit vectors v_1, v_2, ... whose columns reproduce the
requested diagonal: each vector picks up whole entries sqrt(f_i) until the
running mass would pass the next integer, then splits the boundary pair of
coordinates between the current vector and the next one through an exact
coupling coefficient that keeps consecutive vectors orthogonal.  All masses
are tracked as exact rationals; only the emitted vector entries (square roots)
are floating point.

Block sorting rearranges each between-integers block of the sequence in
decreasing order, which establishes the ordering hypothesis the fill needs;
the interleave splits decompose a sequence with several large entries into
subsequences with at most one, routed through disjoint subspaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .errors import ConstructionError, OutOfRangeError, SpecError, UnsupportedStructureError
from .feasibility import branch_of, classify
from .seqcore import (
    CONSTANT,
    GEOMETRIC,
    INF,
    ONE_MINUS_GEOMETRIC,
    ZERO_KIND,
    AffineEmbedding,
    DiagonalSpec,
    PermutationWindow,
    ProjectionRep,
    SparseVector,
    SqrtTail,
    TailRule,
    conjugate_by_permutation,
    fmt_rat,
)

__all__ = [
    "min_s",
    "MinSTable",
    "coupling",
    "TetrisOutput",
    "tetris_vectors",
    "sort_desc_window",
    "block_sort",
    "PositionMaps",
    "positions",
    "interleave_split_fin",
    "InfiniteSplit",
    "interleave_split_inf",
    "dyadic_class",
    "nonsummable_construct",
]


def min_s(spec: DiagonalSpec, n: int) -> int:
    """Smallest index i with S_i = f_1 + ... + f_i >= n (and 0 for n = 0)."""
    if n < 0:
        raise OutOfRangeError(f"n = {n} < 0")
    if n == 0:
        return 0
    p = len(spec.prefix)
    for i in range(1, p + 1):
        if spec.partial_sum(i) >= n:
            return i
    sp = spec.partial_sum(p)
    t = spec.tail
    if t.kind == ZERO_KIND or (t.kind == CONSTANT and t.c == 0):
        raise ConstructionError(f"partial sums stall at {fmt_rat(sp)} and never reach {n}")
    if t.kind == CONSTANT:
        return p + math.ceil((n - sp) / t.c)
    if t.kind == GEOMETRIC:
        if sp + t.sum_from(1) <= n:
            raise ConstructionError(f"partial sums stay below {n} (limit {fmt_rat(sp + t.sum_from(1))})")
        s, g, j = sp, t.c, 0
        while s < n:
            j += 1
            s += g
            g *= t.r
        return p + j
    # one_minus_geometric: grows by almost 1 per step
    s, g, j = sp, t.c, 0
    while s < n:
        j += 1
        s += 1 - g
        g *= t.r
    return p + j


class MinSTable:
    """Memoized minS lookups for one spec."""

    def __init__(self, spec: DiagonalSpec):
        self.spec = spec
        self._memo: dict[int, int] = {}

    def get(self, n: int) -> int:
        if n not in self._memo:
            self._memo[n] = min_s(self.spec, n)
        return self._memo[n]

    __getitem__ = get

    def known(self) -> dict[int, int]:
        return dict(sorted(self._memo.items()))


def coupling(d1, d2, sigma):
    """Split coefficient a = sigma*(sigma-d2) / (2*sigma - d1 - d2).

    Requires d1, d2, sigma in [0,1] with max(d1,d2) <= sigma <= d1+d2 and
    2*sigma > d1+d2.  Then a, sigma-a, d1-a and d2-sigma+a all lie in [0,1]
    and a*(d1-a) = (sigma-a)*(d2-sigma+a), which is exactly the orthogonality
    of consecutive fill vectors.  Exact on Fractions, plain arithmetic on
    floats.
    """
    for name, v in (("d1", d1), ("d2", d2), ("sigma", sigma)):
        if not 0 <= v <= 1:
            raise ConstructionError(f"coupling: {name} = {v} outside [0,1]")
    if not max(d1, d2) <= sigma <= d1 + d2:
        raise ConstructionError(
            f"coupling: sigma = {sigma} outside [max(d1,d2), d1+d2] = [{max(d1, d2)}, {d1 + d2}]"
        )
    if not 2 * sigma > d1 + d2:
        raise ConstructionError(f"coupling: 2*sigma = {2 * sigma} <= d1 + d2 = {d1 + d2}")
    return sigma * (sigma - d2) / (2 * sigma - d1 - d2)


@dataclass(frozen=True)
class TetrisOutput:
    """Result of streaming the fill construction.

    ``settled_prefix`` is the largest index whose diagonal entry no later
    vector can change (None once the construction is complete).  ``sigma`` and
    ``a_coef`` record the boundary mass and coupling coefficient of every
    coupled step, ``min_s`` the boundary indices actually used.
    """

    vectors: tuple[SparseVector, ...]
    settled_prefix: int | None
    min_s: dict[int, int]
    sigma: tuple[Fraction, ...]
    a_coef: tuple[Fraction, ...]
    total: int | None  # finite total mass N, or None when divergent
    complete: bool

    def frame(self) -> ProjectionRep:
        return ProjectionRep.frame(self.vectors)


def tetris_vectors(spec: DiagonalSpec, m: int) -> TetrisOutput:
    """Stream the first m fill vectors for the given diagonal.

    The sequence must have total mass in {1, 2, ...} or infinity, and must be
    blockwise ordered (see :func:`block_sort`): at every coupled step the left
    boundary entry must not be smaller than the right one.  When the total N
    is finite, m may be at most N and m = N finishes the construction with the
    ultimate vector that absorbs the whole remaining sequence.
    """
    if m < 0:
        raise OutOfRangeError(f"vector count {m} < 0")
    total = spec.total()
    n_total: int | None
    if total == INF:
        n_total = None
    else:
        if Fraction(total).denominator != 1:
            raise ConstructionError(f"total mass {fmt_rat(total)} is not an integer")
        n_total = int(total)
        if m > n_total:
            raise ConstructionError(f"requested {m} vectors but total mass is {n_total}")
    complete = n_total is not None and m == n_total

    table = MinSTable(spec)
    vectors: list[SparseVector] = []
    sigmas: list[Fraction] = []
    acoefs: list[Fraction] = []
    pending: list[tuple[int, Fraction]] = []  # leftover squares for the next vector
    cursor = 1  # first coordinate not fully consumed

    for n in range(1, m + 1):
        if complete and n == n_total:
            vectors.append(_ultimate_vector(spec, pending, cursor))
            break
        mn = table.get(n)
        if mn < cursor:
            raise ConstructionError(f"internal: minS({n}) = {mn} behind cursor {cursor}")
        left = mn - 1
        d2 = spec.entry(mn)
        direct = [(i, q) for i, q in pending if i != left]
        d1 = sum((q for i, q in pending if i == left), Fraction(0))
        if left >= cursor:
            # left boundary coordinate is untouched: ordering hypothesis applies
            d1 = spec.entry(left)
            if d1 < d2:
                raise ConstructionError(
                    f"ordering hypothesis fails at step {n}: entry {left} = {fmt_rat(d1)}"
                    f" < entry {mn} = {fmt_rat(d2)}"
                )
            direct = list(pending) + [(i, spec.entry(i)) for i in range(cursor, left)]
        sigma = 1 - sum((q for _, q in direct), Fraction(0))
        try:
            a = coupling(d1, d2, sigma)
        except ConstructionError as e:
            raise ConstructionError(f"step {n}: {e}") from None
        if left < cursor and n >= 2:
            # adjacent boundaries: the previous vector shares both pair
            # coordinates, so the cross terms must vanish individually
            l1 = next((q for i, q in direct if i == mn - 2), Fraction(0))
            if a != 0 or acoefs[-1] * l1 != 0:
                raise ConstructionError(
                    f"step {n}: adjacent boundary collision breaks orthogonality"
                )
        tail_leftover = d2 - sigma + a
        sign = -1 if tail_leftover > 0 else 1
        entries = [(i, q, 1) for i, q in direct]
        entries.append((left, a, 1))
        entries.append((mn, sigma - a, sign))
        vec = SparseVector.from_exact(entries)
        if vec.exact_norm_sq() != 1:
            raise ConstructionError(f"internal: step {n} produced norm^2 {vec.exact_norm_sq()}")
        vectors.append(vec)
        sigmas.append(sigma)
        acoefs.append(a)
        pending = [(i, q) for i, q in ((left, d1 - a), (mn, tail_leftover)) if q != 0]
        cursor = mn + 1

    if complete:
        settled = None
    else:
        settled = max(table.get(m) - 2, 0) if m > 0 else 0
    return TetrisOutput(
        tuple(vectors), settled, table.known(), tuple(sigmas), tuple(acoefs), n_total, complete
    )


def _ultimate_vector(spec: DiagonalSpec, pending, cursor: int) -> SparseVector:
    """Final vector of a finite-mass construction: leftovers plus everything else."""
    p = len(spec.prefix)
    entries = [(i, q, 1) for i, q in pending]
    hi = max(p, cursor - 1)
    entries += [(i, spec.entry(i), 1) for i in range(cursor, hi + 1)]
    t = spec.tail
    tail = None
    start = max(cursor, p + 1)
    if t.kind == GEOMETRIC:
        tail = SqrtTail(start, t.reindexed(start - p), 1)
    elif not (t.kind == ZERO_KIND or (t.kind == CONSTANT and t.c == 0)):
        raise ConstructionError(f"finite total mass with a divergent tail {t.kind!r}")
    vec = SparseVector.from_exact(entries, tail)
    if vec.exact_norm_sq() != 1:
        raise ConstructionError(f"internal: ultimate vector norm^2 {vec.exact_norm_sq()}")
    return vec


# ---------------------------------------------------------------------------
# block sorting


def sort_desc_window(values) -> tuple[tuple[Fraction, ...], PermutationWindow]:
    """Sort a finite window decreasingly; ties keep the smaller original index.

    Returns (sorted values g, window pi) with g_i = values[pi(i) - 1].
    """
    vals = tuple(Fraction(v) for v in values)
    order = sorted(range(1, len(vals) + 1), key=lambda i: (-vals[i - 1], i))
    return tuple(vals[i - 1] for i in order), PermutationWindow(tuple(order))


def block_sort(spec: DiagonalSpec) -> tuple[DiagonalSpec, PermutationWindow]:
    """Sort each between-integers block of the sequence in decreasing order.

    Requires entries beyond the first to be at most 1/2 and the total mass to
    be a natural number or infinite.  Returns (g, pi) with g_i = f_{pi(i)};
    the permutation is the identity beyond the finitely many blocks that can
    meet the prefix.  The output satisfies the left-boundary ordering at every
    coupled step, and the block boundaries of g interlace those of f.
    """
    half = spec.half_classes()
    n_large = half.count(False)
    if n_large == INF or (n_large > 0 and half.nth(1, False) != 1) or n_large > 1:
        raise ConstructionError("blockwise sorting needs every entry beyond the first <= 1/2")
    total = spec.total()
    if total != INF and Fraction(total).denominator != 1:
        raise ConstructionError(f"total mass {fmt_rat(total)} is not an integer")
    n_fin = None if total == INF else int(total)

    p = len(spec.prefix)
    table = MinSTable(spec)
    images: list[int] = []
    sorted_vals: list[Fraction] = []
    n = 1
    while True:
        if n_fin is not None and n >= n_fin:
            break  # the ultimate block is never sorted
        lo = table.get(n - 1)
        if lo >= p:
            break  # the remaining blocks sit inside the weakly decreasing tail
        hi = table.get(n)
        block = [spec.entry(i) for i in range(lo + 1, hi + 1)]
        g_block, perm = sort_desc_window(block)
        sorted_vals.extend(g_block)
        images.extend(lo + perm.apply(j) for j in range(1, len(block) + 1))
        n += 1

    w = len(images)
    perm = PermutationWindow(tuple(images))
    if w <= p:
        g = DiagonalSpec(tuple(sorted_vals) + spec.prefix[w:], spec.tail)
    else:
        g = DiagonalSpec(tuple(sorted_vals), spec.tail.reindexed(w - p + 1))
    _check_block_order(spec, g, table, n_sorted=n - 1)
    return g, perm


def _check_block_order(f: DiagonalSpec, g: DiagonalSpec, ftable: MinSTable, n_sorted: int):
    gtable = MinSTable(g)
    for n in range(1, n_sorted + 1):
        mg = gtable.get(n)
        if mg >= 2 and g.entry(mg - 1) < g.entry(mg):
            raise ConstructionError(f"sorted output breaks the boundary order at step {n}")
        if not mg <= ftable.get(n):
            raise ConstructionError(f"sorted boundary {mg} passed the original at step {n}")
        exact_hit = g.partial_sum(mg) == n
        if mg < ftable.get(n - 1) + 2 and not exact_hit:
            raise ConstructionError(f"sorted boundary {mg} too early at step {n}")


# ---------------------------------------------------------------------------
# positions of small and large entries


@dataclass
class PositionMaps:
    """1-based position lookups: pos(n) = n-th entry <= 1/2, Pos(n) = n-th > 1/2."""

    spec: DiagonalSpec

    def __post_init__(self):
        self._cls = self.spec.half_classes()

    def pos(self, n: int) -> int:
        return self._cls.nth(n, True)

    def Pos(self, n: int) -> int:
        return self._cls.nth(n, False)

    def count_small(self):
        return self._cls.count(True)

    def count_large(self):
        return self._cls.count(False)

    def small_value(self, n: int) -> Fraction:
        return self.spec.entry(self.pos(n))

    def large_value(self, n: int) -> Fraction:
        return self.spec.entry(self.Pos(n))


def positions(spec: DiagonalSpec) -> PositionMaps:
    return PositionMaps(spec)


def _subsample_spec(spec: DiagonalSpec, classes, a_flag: bool, o0: int, step: int) -> DiagonalSpec:
    """Spec of the entries at class positions with ordinals o0, o0+step, ...

    Finite classes are padded with a zero tail.  For infinite classes the
    eventual arithmetic structure of the positions turns the source tail into
    a closed tail of the subsequence (constant stays constant, geometric gets
    ratio r**step).
    """
    t = spec.tail
    p = len(spec.prefix)
    rest = classes.rest_start()
    vals: list[Fraction] = []
    o = o0
    while True:
        try:
            pos = classes.nth(o, a_flag)
        except OutOfRangeError:
            return DiagonalSpec(tuple(vals), TailRule.zero())
        if pos >= rest and a_flag == classes.rest_a:
            break
        vals.append(spec.entry(pos))
        o += step
    off0 = pos - p  # tail offset of the first closed-form source entry
    if t.kind == CONSTANT:
        tail = TailRule.constant(t.c)
    elif t.kind == ZERO_KIND:
        tail = TailRule.zero()
    else:
        tail = TailRule(t.kind, t.c * t.r ** (off0 - 1), t.r**step)
    return DiagonalSpec(tuple(vals), tail)


def _window_from_pairs(pairs: dict[int, int]) -> PermutationWindow:
    """Permutation (original -> slot) from a slot -> original map.

    The map must cover every slot up to the largest displaced index; beyond
    that the permutation is the identity.
    """
    displaced = [max(s, o) for s, o in pairs.items() if s != o]
    w = max(displaced, default=0)
    images = [0] * w
    for s, o in pairs.items():
        if o <= w:
            images[o - 1] = s
    if sorted(images) != list(range(1, w + 1)):
        raise ConstructionError("internal: index reassignment does not close into a window")
    return PermutationWindow(tuple(images))


def _largest_closed_prefix(pairs: dict[int, int], limit: int) -> PermutationWindow:
    """Largest w <= limit for which slots 1..w map onto originals 1..w exactly."""
    for w in range(limit, 0, -1):
        if all(s in pairs for s in range(1, w + 1)):
            origs = sorted(pairs[s] for s in range(1, w + 1))
            if origs == list(range(1, w + 1)):
                images = [0] * w
                for s in range(1, w + 1):
                    images[pairs[s] - 1] = s
                return PermutationWindow(tuple(images))
    return PermutationWindow(())


def interleave_split_fin(
    spec: DiagonalSpec, k: int
) -> tuple[list[DiagonalSpec], PermutationWindow]:
    """Split a sequence with exactly k entries > 1/2 into k subsequences.

    Subsequence m starts with the m-th large entry and continues with every
    k-th small entry starting from the m-th.  Returns the subsequence specs
    and the permutation beta mapping original indices to their slot in the
    residue layout (subsequence m occupies slots m, k+m, 2k+m, ...).
    """
    pm = positions(spec)
    if pm.count_large() != k or k < 1:
        raise ConstructionError(f"expected exactly {k} entries > 1/2, found {pm.count_large()}")
    if pm.count_small() != INF:
        raise ConstructionError("splitting needs infinitely many entries <= 1/2")
    cls = spec.half_classes()
    subs = []
    rest = cls.rest_start()

    def slot_source(m: int, i: int) -> int:
        return pm.Pos(m) if i == 1 else pm.pos((i - 2) * k + m)

    pairs: dict[int, int] = {}  # slot -> original index
    nexts: dict[int, int] = {}
    for m in range(1, k + 1):
        sub = _subsample_spec(spec, cls, True, m, k)
        subs.append(DiagonalSpec((pm.large_value(m),) + sub.prefix, sub.tail))
        i = 1
        while True:
            slot = (i - 1) * k + m
            src = slot_source(m, i)
            pairs[slot] = src
            if i >= 2 and src == slot and src >= rest:
                break
            i += 1
        nexts[m] = i + 1
    # extend every subsequence through the displaced range so the window closes
    w = max((max(s, o) for s, o in pairs.items() if s != o), default=0)
    for m in range(1, k + 1):
        i = nexts[m]
        while (i - 1) * k + m <= w:
            pairs[(i - 1) * k + m] = slot_source(m, i)
            i += 1
    return subs, _window_from_pairs(pairs)


def dyadic_class(t: int) -> tuple[int, int]:
    """Write t = 2**(i-1) * m with m odd; returns (m, i)."""
    if t < 1:
        raise OutOfRangeError(f"index {t} < 1")
    v = (t & -t).bit_length() - 1
    return t >> v, v + 1


@dataclass(frozen=True)
class InfiniteSplit:
    """Windowed decomposition into infinitely many subsequences (odd labels).

    ``subseq_values[m]`` lists the materialized entries of subsequence m;
    ``slot_map`` sends each dyadic slot 2**(i-1)*m <= window to the original
    index it draws from; ``intervals`` are the between-integers blocks of the
    small subsequence that were consumed.
    """

    window: int
    subseq_values: dict[int, list[Fraction]]
    slot_map: dict[int, int]
    intervals: dict[int, tuple[int, int]]
    permutation: PermutationWindow


def interleave_split_inf(spec: DiagonalSpec, window: int) -> InfiniteSplit:
    """Dyadic split for sequences with unbounded small mass and many large entries.

    Subsequence m (odd) starts with the ((m+1)/2)-th large entry and then runs
    through the blocks of the small subsequence whose ordinal lies in
    {m, 2m, 4m, ...}.  Only the slots up to ``window`` are materialized; the
    closed tails supported here never provide infinitely many large entries,
    so this split exists for window-level analysis and tests.
    """
    pm = positions(spec)
    cls = spec.half_classes()
    small = _subsample_spec(spec, cls, True, 1, 1)
    if small.total() != INF:
        raise UnsupportedStructureError("small-entry mass must diverge")
    table = MinSTable(small)
    values: dict[int, list[Fraction]] = {}
    slot_map: dict[int, int] = {}
    intervals: dict[int, tuple[int, int]] = {}
    for m in range(1, window + 1, 2):
        need = 0
        while 2**need * m <= window:
            need += 1  # number of slots this subsequence owns inside the window
        try:
            first = pm.Pos((m + 1) // 2)
        except OutOfRangeError:
            raise OutOfRangeError(
                f"window {window} needs large entry #{(m + 1) // 2}, which does not exist"
            ) from None
        vals = [spec.entry(first)]
        slot_map[m] = first
        got, n, i = 1, m, 2
        while got < need:
            lo, hi = table.get(n - 1), table.get(n)
            intervals[n] = (lo, hi)
            for o in range(lo + 1, hi + 1):
                src = pm.pos(o)
                vals.append(spec.entry(src))
                if got < need:
                    slot_map[2 ** (i - 1) * m] = src
                    i += 1
                got += 1
            n *= 2
        values[m] = vals
    perm = _largest_closed_prefix(slot_map, window)
    return InfiniteSplit(window, values, slot_map, intervals, perm)


# ---------------------------------------------------------------------------
# dispatcher for divergent threshold sums


def _settled_through(settled: int | None, perm: PermutationWindow) -> int | None:
    """Largest prefix that stays inside a settled slot-prefix after conjugation."""
    if settled is None:
        return None
    j = 0
    while perm.apply(j + 1) <= settled:
        j += 1
    return j


def nonsummable_construct(spec: DiagonalSpec, m: int, trace: dict | None = None) -> ProjectionRep:
    """Projection representation for a diagonal with a divergent threshold sum.

    Streams ``m`` fill vectors per subsequence.  When the divergent side is
    the co-mass b (entries near 1), the construction runs on 1 - f and the
    complement representation is returned.  ``trace``, when a dict is passed,
    collects the branch label, per-part fill data and the settled prefix.
    """
    report = classify(spec)
    label = branch_of(spec)
    if trace is not None:
        trace["branch"] = list(label.path)
        trace["report"] = report.to_json_dict()
    if report.case == "nonsummable_b":
        sub: dict = {}
        rep = nonsummable_construct(spec.complement(), m, sub)
        if trace is not None:
            trace["complement_of"] = sub
            trace["settled_prefix"] = sub.get("settled_prefix")
        return rep.complementary()
    if report.case != "nonsummable_a":
        raise ConstructionError(f"not a divergent-sum diagonal (case {report.case})")

    k = spec.half_classes().count(False)
    if k == 0:
        g, perm = block_sort(spec)
        out = tetris_vectors(g, m)
        rep = conjugate_by_permutation(out.frame(), perm.inverse())
        settled = _settled_through(out.settled_prefix, perm.inverse())
        if trace is not None:
            trace["parts"] = [_part_trace(None, perm, out)]
            trace["settled_prefix"] = settled
        return rep

    subs, beta = interleave_split_fin(spec, k)
    vectors: list[SparseVector] = []
    parts = []
    slot_settled = []
    for idx, subspec in enumerate(subs, start=1):
        g, perm = block_sort(subspec)
        out = tetris_vectors(g, m)
        local = conjugate_by_permutation(out.frame(), perm.inverse())
        emb = AffineEmbedding(k, idx)
        vectors.extend(v.remap(emb) for v in local.vectors)
        local_settled = _settled_through(out.settled_prefix, perm.inverse())
        slot_settled.append(local_settled * k + idx if local_settled is not None else None)
        parts.append(_part_trace(idx, perm, out))
    assembled = ProjectionRep.frame(vectors)
    rep = conjugate_by_permutation(assembled, beta)
    # a part with settled_prefix None is finished and does not constrain the rest
    finite = [s for s in slot_settled if s is not None]
    if finite:
        settled = _settled_through(min(finite) - 1, beta)
    else:
        settled = None
    if trace is not None:
        trace["parts"] = parts
        trace["beta"] = list(beta.window)
        trace["settled_prefix"] = settled
    return rep


def _part_trace(label, perm: PermutationWindow, out: TetrisOutput) -> dict:
    return {
        "part": label,
        "block_permutation": list(perm.window),
        "min_s": {str(n): v for n, v in out.min_s.items()},
        "sigma": [fmt_rat(s) for s in out.sigma],
        "a": [fmt_rat(a) for a in out.a_coef],
        "settled_prefix": out.settled_prefix,
    }
