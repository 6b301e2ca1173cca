"""Exact sequence model and sparse projection representations.

A diagonal sequence is stored as a finite rational prefix followed by a
closed-form tail rule, so partial sums, tail masses and threshold counts stay
exact.  Projections are stored as lists of sparse vectors, either directly
(``frame``: P = sum v v^T) or through the complement (``coframe``:
P = I - sum v v^T).  Vector entries whose squares are known rationals carry
that exact square alongside the floating-point value; analytic square-root
tails carry their rule, so norms and diagonals of infinite vectors are exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ExactnessError,
    OutOfRangeError,
    PartitionError,
    SpecError,
    UnsupportedStructureError,
)

__all__ = [
    "INF",
    "HALF",
    "rat",
    "fmt_rat",
    "TailRule",
    "DiagonalSpec",
    "entry",
    "tail_sum",
    "drop_at",
    "from_index",
    "SqrtTail",
    "SparseVector",
    "ProjectionRep",
    "diag_of",
    "AffineEmbedding",
    "ListShiftEmbedding",
    "PermutationWindow",
    "conjugate_by_permutation",
    "CellField",
    "glue",
    "dumps_canonical",
]

#: Extended-rational infinity.  ``Fraction + INF`` saturates to ``INF`` and
#: comparisons against Fractions behave as expected, so no wrapper type is
#: needed; just never subtract two infinities.
INF = float("inf")

HALF = Fraction(1, 2)

ZERO_KIND = "zero"
CONSTANT = "constant"
GEOMETRIC = "geometric"
ONE_MINUS_GEOMETRIC = "one_minus_geometric"


def rat(x) -> Fraction:
    """Coerce ints, Fractions and 'p/q' strings to an exact Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise SpecError(f"not an exact rational: {x!r} (floats must be converted explicitly)")


def fmt_rat(q: Fraction) -> str:
    """Render a Fraction as 'p/q' (or 'p' when the denominator is 1)."""
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# tail rules


@dataclass(frozen=True)
class TailRule:
    """Closed form for all sequence entries past the prefix.

    Supported kinds, with ``j`` the 1-based offset into the tail:

    ==================== =====================================
    zero                 f = 0
    constant             f = c
    geometric            f = c * r**(j-1)
    one_minus_geometric  f = 1 - c * r**(j-1)
    ==================== =====================================

    Geometric kinds require 0 < c <= 1 and 0 < r < 1.
    """

    kind: str
    c: Fraction | None = None
    r: Fraction | None = None

    def __post_init__(self):
        if self.kind == ZERO_KIND:
            if self.c is not None or self.r is not None:
                raise SpecError("zero tail takes no parameters")
        elif self.kind == CONSTANT:
            c = rat(self.c)
            object.__setattr__(self, "c", c)
            if not 0 <= c <= 1:
                raise SpecError(f"constant tail value {c} outside [0,1]")
            if self.r is not None:
                raise SpecError("constant tail takes no ratio")
        elif self.kind in (GEOMETRIC, ONE_MINUS_GEOMETRIC):
            c, r = rat(self.c), rat(self.r)
            object.__setattr__(self, "c", c)
            object.__setattr__(self, "r", r)
            if not 0 < c <= 1:
                raise SpecError(f"geometric coefficient {c} outside (0,1]")
            if not 0 < r < 1:
                raise SpecError(f"geometric ratio {r} outside (0,1)")
        else:
            raise SpecError(f"unknown tail kind {self.kind!r}")

    # -- constructors

    @classmethod
    def zero(cls) -> "TailRule":
        return cls(ZERO_KIND)

    @classmethod
    def constant(cls, v) -> "TailRule":
        return cls(CONSTANT, rat(v))

    @classmethod
    def geometric(cls, c, r) -> "TailRule":
        return cls(GEOMETRIC, rat(c), rat(r))

    @classmethod
    def one_minus_geometric(cls, c, r) -> "TailRule":
        return cls(ONE_MINUS_GEOMETRIC, rat(c), rat(r))

    # -- evaluation

    def value(self, j: int) -> Fraction:
        """Entry at tail offset j >= 1."""
        if j < 1:
            raise OutOfRangeError(f"tail offset {j} < 1")
        if self.kind == ZERO_KIND:
            return Fraction(0)
        if self.kind == CONSTANT:
            return self.c
        g = self.c * self.r ** (j - 1)
        return g if self.kind == GEOMETRIC else 1 - g

    def partial_sum(self, j: int) -> Fraction:
        """Sum of the first j tail entries (j >= 0), exact."""
        if j < 0:
            raise OutOfRangeError(f"negative tail length {j}")
        if self.kind == ZERO_KIND:
            return Fraction(0)
        if self.kind == CONSTANT:
            return j * self.c
        geo = self.c * (1 - self.r**j) / (1 - self.r)
        return geo if self.kind == GEOMETRIC else j - geo

    def sum_from(self, j: int):
        """Sum of all entries from offset j on: a Fraction, or INF."""
        if j < 1:
            raise OutOfRangeError(f"tail offset {j} < 1")
        if self.kind == ZERO_KIND:
            return Fraction(0)
        if self.kind == CONSTANT:
            return Fraction(0) if self.c == 0 else INF
        if self.kind == GEOMETRIC:
            return self.c * self.r ** (j - 1) / (1 - self.r)
        return INF  # one_minus_geometric tends to 1

    def complement_sum_from(self, j: int):
        """Sum of (1 - entry) from offset j on."""
        return self.complement().sum_from(j)

    # -- transforms

    def complement(self) -> "TailRule":
        """Tail rule of the complementary sequence 1 - f."""
        if self.kind == ZERO_KIND:
            return TailRule.constant(1)
        if self.kind == CONSTANT:
            return TailRule.constant(1 - self.c)
        if self.kind == GEOMETRIC:
            return TailRule(ONE_MINUS_GEOMETRIC, self.c, self.r)
        return TailRule(GEOMETRIC, self.c, self.r)

    def reindexed(self, j0: int) -> "TailRule":
        """The same tail viewed starting from offset j0 >= 1."""
        if j0 < 1:
            raise OutOfRangeError(f"tail offset {j0} < 1")
        if self.kind in (ZERO_KIND, CONSTANT) or j0 == 1:
            return self
        return TailRule(self.kind, self.c * self.r ** (j0 - 1), self.r)

    # -- classification helpers

    def half_exceptions(self) -> tuple[tuple[int, ...], bool]:
        """Offsets classified against 1/2.

        Returns ``(exceptions, rest_small)``: after the finitely many
        exceptional offsets, every entry is <= 1/2 iff ``rest_small``; the
        exceptions fall in the opposite class.
        """
        if self.kind == ZERO_KIND:
            return (), True
        if self.kind == CONSTANT:
            return (), self.c <= HALF
        if self.kind == GEOMETRIC:
            j, g = 1, self.c
            while g > HALF:
                j, g = j + 1, g * self.r
            return tuple(range(1, j)), True
        # one_minus_geometric: entries increase to 1; early ones may be small
        j, g = 1, self.c
        while 1 - g <= HALF:
            j, g = j + 1, g * self.r
        return tuple(range(1, j)), False

    def proper_exceptions(self) -> tuple[tuple[int, ...], bool]:
        """Offsets classified as proper (value in (0,1)) versus 0/1.

        Same convention as :meth:`half_exceptions`: ``(exceptions,
        rest_proper)``.
        """
        if self.kind == ZERO_KIND:
            return (), False
        if self.kind == CONSTANT:
            return (), 0 < self.c < 1
        # geometric kinds: only the very first entry can hit 0 or 1 (c == 1)
        return ((1,) if self.c == 1 else ()), True


# ---------------------------------------------------------------------------
# prescribed diagonals


@dataclass(frozen=True)
class DiagonalSpec:
    """A candidate diagonal: rational prefix plus closed-form tail.

    Entries are 1-based.  ``entry``, ``partial_sum`` and ``tail_sum`` are
    exact; sums that diverge come back as ``INF``.
    """

    prefix: tuple[Fraction, ...] = ()
    tail: TailRule = field(default_factory=TailRule.zero)

    def __post_init__(self):
        pfx = tuple(rat(x) for x in self.prefix)
        object.__setattr__(self, "prefix", pfx)
        for i, x in enumerate(pfx, start=1):
            if not 0 <= x <= 1:
                raise SpecError(f"entry {i} = {x} outside [0,1]")

    @classmethod
    def of(cls, *values, tail: TailRule | None = None) -> "DiagonalSpec":
        """Convenience constructor: DiagonalSpec.of('2/5', '2/5', tail=...)."""
        return cls(tuple(rat(v) for v in values), tail or TailRule.zero())

    @cached_property
    def _cumsums(self) -> tuple[Fraction, ...]:
        out, acc = [Fraction(0)], Fraction(0)
        for x in self.prefix:
            acc += x
            out.append(acc)
        return tuple(out)

    # -- evaluation

    def entry(self, i: int) -> Fraction:
        if i < 1:
            raise OutOfRangeError(f"index {i} < 1")
        if i <= len(self.prefix):
            return self.prefix[i - 1]
        return self.tail.value(i - len(self.prefix))

    def partial_sum(self, i: int) -> Fraction:
        """S_i = f_1 + ... + f_i, exact; S_i = 0 for i <= 0."""
        p = len(self.prefix)
        if i <= 0:
            return Fraction(0)
        if i <= p:
            return self._cumsums[i]
        return self._cumsums[p] + self.tail.partial_sum(i - p)

    def tail_sum(self, i: int):
        """Sum of entries from index i on: Fraction or INF."""
        p = len(self.prefix)
        if i < 1:
            raise OutOfRangeError(f"index {i} < 1")
        if i <= p:
            return (self._cumsums[p] - self._cumsums[i - 1]) + self.tail.sum_from(1)
        return self.tail.sum_from(i - p)

    def total(self):
        return self.tail_sum(1)

    def entries_through(self, m: int) -> list[Fraction]:
        return [self.entry(i) for i in range(1, m + 1)]

    # -- transforms

    def complement(self) -> "DiagonalSpec":
        return DiagonalSpec(tuple(1 - x for x in self.prefix), self.tail.complement())

    def from_index(self, s: int) -> "DiagonalSpec":
        """The subsequence f_s, f_{s+1}, ... as a spec, exactly reindexed."""
        p = len(self.prefix)
        if s < 1:
            raise OutOfRangeError(f"index {s} < 1")
        if s <= p + 1:
            return DiagonalSpec(self.prefix[s - 1 :], self.tail)
        return DiagonalSpec((), self.tail.reindexed(s - p))

    def drop_at(self, s: int) -> "DiagonalSpec":
        """Remove entry s.  Only prefix entries (or zero-tail entries) drop."""
        p = len(self.prefix)
        if s < 1:
            raise OutOfRangeError(f"index {s} < 1")
        if s <= p:
            return DiagonalSpec(self.prefix[: s - 1] + self.prefix[s:], self.tail)
        if self.tail.kind == ZERO_KIND or (self.tail.kind == CONSTANT and self.tail.c == 0):
            return self
        raise UnsupportedStructureError(
            f"cannot drop index {s} inside a non-zero tail (prefix length {p})"
        )

    # -- classification plumbing

    def half_classes(self) -> "TwoClassIndex":
        """Index classes against the 1/2 threshold (small: entry <= 1/2)."""
        flags = tuple(x <= HALF for x in self.prefix)
        exc, rest = self.tail.half_exceptions()
        return TwoClassIndex(flags, exc, rest)

    def proper_classes(self) -> "TwoClassIndex":
        """Index classes proper-vs-improper (proper: entry in (0,1))."""
        flags = tuple(0 < x < 1 for x in self.prefix)
        exc, rest = self.tail.proper_exceptions()
        return TwoClassIndex(flags, exc, rest)

    # -- serialization

    def to_json_dict(self) -> dict:
        tail: dict = {"kind": self.tail.kind}
        if self.tail.c is not None:
            tail["c"] = fmt_rat(self.tail.c)
        if self.tail.r is not None:
            tail["r"] = fmt_rat(self.tail.r)
        return {"prefix": [fmt_rat(x) for x in self.prefix], "tail": tail}

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "DiagonalSpec":
        t = d.get("tail", {"kind": ZERO_KIND})
        tail = TailRule(t["kind"], *(rat(t[k]) for k in ("c", "r") if k in t))
        return cls(tuple(rat(x) for x in d.get("prefix", ())), tail)


class TwoClassIndex:
    """nth-index queries for a two-way classification of 1-based indices.

    The prefix is classified entrywise by ``flags`` (True = class A); the tail
    contributes the finitely many exceptional offsets ``exc`` in the class
    opposite to ``rest_a``, after which every offset lies in class A iff
    ``rest_a``.
    """

    def __init__(self, flags: tuple[bool, ...], exc: tuple[int, ...], rest_a: bool):
        self.flags = flags
        self.exc = tuple(sorted(exc))
        self.rest_a = rest_a
        self.p = len(flags)
        # exceptional tail offsets belong to class (not rest_a)
        self._a_prefix = [i + 1 for i, f in enumerate(flags) if f]
        self._b_prefix = [i + 1 for i, f in enumerate(flags) if not f]

    def count(self, a: bool = True):
        """Number of indices in class A (or B): an int or INF."""
        if a == self.rest_a:
            return INF
        base = self._a_prefix if a else self._b_prefix
        return len(base) + len(self.exc)

    def nth(self, n: int, a: bool = True) -> int:
        """Global index of the n-th member of class A (or B), 1-based."""
        if n < 1:
            raise OutOfRangeError(f"ordinal {n} < 1")
        base = self._a_prefix if a else self._b_prefix
        if n <= len(base):
            return base[n - 1]
        k = n - len(base)  # k-th tail member of the class
        if a != self.rest_a:
            if k > len(self.exc):
                raise OutOfRangeError(f"class has only {self.count(a)} members")
            return self.p + self.exc[k - 1]
        # walk past the exceptions, then go arithmetic
        if not self.exc:
            return self.p + k
        skipped = 0
        for j in range(1, self.exc[-1] + 1):
            if j not in self.exc:
                skipped += 1
                if skipped == k:
                    return self.p + j
        return self.p + self.exc[-1] + (k - skipped)

    def members_upto(self, m: int, a: bool = True) -> list[int]:
        """All class members among global indices 1..m."""
        out, n = [], 1
        while True:
            try:
                i = self.nth(n, a)
            except OutOfRangeError:
                break
            if i > m:
                break
            out.append(i)
            n += 1
        return out

    def rest_start(self) -> int:
        """First global index from which the tail has no exceptions left."""
        return self.p + (self.exc[-1] + 1 if self.exc else 1)


# module-level operation aliases (the op names used throughout)


def entry(spec: DiagonalSpec, i: int) -> Fraction:
    return spec.entry(i)


def tail_sum(spec: DiagonalSpec, i: int):
    return spec.tail_sum(i)


def drop_at(spec: DiagonalSpec, s: int) -> DiagonalSpec:
    return spec.drop_at(s)


def from_index(spec: DiagonalSpec, s: int) -> DiagonalSpec:
    return spec.from_index(s)


# ---------------------------------------------------------------------------
# sparse vectors


@dataclass(frozen=True)
class SqrtTail:
    """Analytic vector tail: entry sqrt(rule.value(j)) at index start + (j-1)*stride."""

    start: int
    rule: TailRule
    stride: int = 1

    def __post_init__(self):
        if self.start < 1 or self.stride < 1:
            raise SpecError("sqrt tail needs start >= 1 and stride >= 1")
        if self.rule.kind != GEOMETRIC:
            raise UnsupportedStructureError(
                f"sqrt tails must decay geometrically, got {self.rule.kind!r}"
            )

    def offset_of(self, k: int) -> int | None:
        """Tail offset j covering global index k, or None."""
        if k < self.start or (k - self.start) % self.stride:
            return None
        return (k - self.start) // self.stride + 1

    def mass(self) -> Fraction:
        return self.rule.sum_from(1)


def _sq(x: float) -> float:
    return x * x


@dataclass(frozen=True)
class SparseVector:
    """A vector in l2 given by finite support plus an optional analytic tail.

    ``support`` holds (index, value) pairs with strictly increasing 1-based
    indices; ``squares``, when present, gives the exact |value|^2 for each
    support entry in order.  Tail entries are nonnegative square roots of the
    rule values.
    """

    support: tuple[tuple[int, float], ...] = ()
    sqrt_tail: SqrtTail | None = None
    squares: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        idx = [i for i, _ in self.support]
        if any(i < 1 for i in idx) or any(b <= a for a, b in zip(idx, idx[1:])):
            raise SpecError("support indices must be strictly increasing and >= 1")
        if self.squares is not None and len(self.squares) != len(self.support):
            raise SpecError("squares must align with support")
        if self.sqrt_tail is not None and idx and idx[-1] >= self.sqrt_tail.start:
            raise SpecError("support must end before the sqrt tail starts")

    @classmethod
    def from_exact(
        cls,
        entries: Iterable[tuple[int, Fraction, int]],
        sqrt_tail: SqrtTail | None = None,
    ) -> "SparseVector":
        """Build from (index, exact square, sign) triples; zero squares are dropped."""
        sup, sqs = [], []
        for i, q, sign in sorted(entries):
            q = rat(q)
            if q == 0:
                continue
            sup.append((i, sign * math.sqrt(q)))
            sqs.append(q)
        return cls(tuple(sup), sqrt_tail, tuple(sqs))

    @classmethod
    def basis(cls, i: int) -> "SparseVector":
        return cls(((i, 1.0),), None, (Fraction(1),))

    @classmethod
    def from_dense(cls, values: Sequence[float], tol: float = 0.0) -> "SparseVector":
        sup = tuple((i + 1, float(v)) for i, v in enumerate(values) if abs(v) > tol)
        return cls(sup)

    # -- lookups

    def value_at(self, k: int) -> float:
        for i, v in self.support:
            if i == k:
                return v
            if i > k:
                break
        if self.sqrt_tail is not None:
            j = self.sqrt_tail.offset_of(k)
            if j is not None:
                return math.sqrt(self.sqrt_tail.rule.value(j))
        return 0.0

    def square_at(self, k: int) -> float:
        ex = self.exact_square_at(k)
        return _sq(self.value_at(k)) if ex is None else float(ex)

    def exact_square_at(self, k: int) -> Fraction | None:
        """Exact |entry|^2 at index k, or None when only floats are known."""
        for pos, (i, _) in enumerate(self.support):
            if i == k:
                return self.squares[pos] if self.squares is not None else None
            if i > k:
                break
        if self.sqrt_tail is not None:
            j = self.sqrt_tail.offset_of(k)
            if j is not None:
                return self.sqrt_tail.rule.value(j)
        return Fraction(0)

    def norm_sq(self) -> float:
        s = sum(_sq(v) for _, v in self.support)
        if self.sqrt_tail is not None:
            s += float(self.sqrt_tail.mass())
        return s

    def exact_norm_sq(self) -> Fraction:
        if self.squares is None and self.support:
            raise ExactnessError("vector has float-only support entries")
        s = sum(self.squares, Fraction(0)) if self.support else Fraction(0)
        if self.sqrt_tail is not None:
            s += self.sqrt_tail.mass()
        return s

    def max_index(self) -> int | None:
        """Largest touched index, or None for an infinite tail."""
        if self.sqrt_tail is not None:
            return None
        return self.support[-1][0] if self.support else 0

    # -- products

    def inner(self, other: "SparseVector") -> float:
        acc = 0.0
        mine = dict(self.support)
        theirs = dict(other.support)
        for k, v in self.support:
            acc += v * (theirs.get(k) if k in theirs else other._tail_value(k))
        for k, v in other.support:
            if k not in mine:
                acc += v * self._tail_value(k)
        acc += self._tail_tail_inner(other)
        return acc

    def _tail_value(self, k: int) -> float:
        if self.sqrt_tail is None:
            return 0.0
        j = self.sqrt_tail.offset_of(k)
        return 0.0 if j is None else math.sqrt(self.sqrt_tail.rule.value(j))

    def _tail_tail_inner(self, other: "SparseVector") -> float:
        t1, t2 = self.sqrt_tail, other.sqrt_tail
        if t1 is None or t2 is None:
            return 0.0
        if t1.stride != t2.stride:
            raise UnsupportedStructureError("sqrt tails with different strides")
        if (t1.start - t2.start) % t1.stride:
            return 0.0  # interleaved, never meet
        k0 = max(t1.start, t2.start)
        j1, j2 = t1.offset_of(k0), t2.offset_of(k0)
        head = math.sqrt(float(t1.rule.value(j1)) * float(t2.rule.value(j2)))
        ratio = math.sqrt(float(t1.rule.r * t2.rule.r))
        return head / (1.0 - ratio)

    # -- reshaping

    def dense(self, m: int) -> np.ndarray:
        out = np.zeros(m)
        for i, v in self.support:
            if i <= m:
                out[i - 1] = v
        if self.sqrt_tail is not None:
            t = self.sqrt_tail
            k = t.start
            while k <= m:
                out[k - 1] = math.sqrt(t.rule.value(t.offset_of(k)))
                k += t.stride
        return out

    def materialized_through(self, m: int) -> "SparseVector":
        """Convert tail entries at indices <= m into explicit support entries."""
        t = self.sqrt_tail
        if t is None or t.start > m:
            return self
        extra = []
        k = t.start
        while k <= m:
            extra.append((k, t.rule.value(t.offset_of(k))))
            k += t.stride
        base = list(self.support)
        sqs = list(self.squares) if self.squares is not None else None
        for i, q in extra:
            base.append((i, math.sqrt(q)))
            if sqs is not None:
                sqs.append(q)
        new_tail = SqrtTail(k, t.rule.reindexed(t.offset_of(k)), t.stride)
        return SparseVector(tuple(base), new_tail, tuple(sqs) if sqs is not None else None)

    def remap(self, emb) -> "SparseVector":
        """Push the vector through an index embedding (Affine or ListShift)."""
        vec = self
        if isinstance(emb, ListShiftEmbedding) and vec.sqrt_tail is not None:
            if vec.sqrt_tail.start <= len(emb.head):
                vec = vec.materialized_through(len(emb.head))
        sup = tuple((emb.map_index(i), v) for i, v in vec.support)
        tail = None
        if vec.sqrt_tail is not None:
            t = vec.sqrt_tail
            if isinstance(emb, AffineEmbedding):
                tail = SqrtTail(emb.map_index(t.start), t.rule, t.stride * emb.stride)
            else:
                tail = SqrtTail(t.start + emb.shift, t.rule, t.stride)
        return SparseVector(sup, tail, vec.squares)

    # -- serialization

    def to_json_dict(self) -> dict:
        d: dict = {"support": [[i, v] for i, v in self.support]}
        if self.sqrt_tail is not None:
            t = self.sqrt_tail
            rule: dict = {"kind": t.rule.kind, "c": fmt_rat(t.rule.c), "r": fmt_rat(t.rule.r)}
            d["sqrtTail"] = {"start": t.start, "stride": t.stride, "rule": rule}
        else:
            d["sqrtTail"] = None
        if self.squares is not None:
            d["squares"] = [fmt_rat(q) for q in self.squares]
        return d

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "SparseVector":
        tail = None
        td = d.get("sqrtTail")
        if td is not None:
            rule = td["rule"]
            tail = SqrtTail(
                int(td["start"]),
                TailRule(rule["kind"], rat(rule["c"]), rat(rule["r"])),
                int(td.get("stride", 1)),
            )
        sqs = d.get("squares")
        return cls(
            tuple((int(i), float(v)) for i, v in d["support"]),
            tail,
            tuple(rat(q) for q in sqs) if sqs is not None else None,
        )


@dataclass(frozen=True)
class AffineEmbedding:
    """Index map i -> (i-1)*stride + offset (e.g. residue-class subspaces)."""

    stride: int
    offset: int

    def map_index(self, i: int) -> int:
        return (i - 1) * self.stride + self.offset


@dataclass(frozen=True)
class ListShiftEmbedding:
    """Index map: explicit images for 1..len(head), then i -> i + shift."""

    head: tuple[int, ...]
    shift: int

    def __post_init__(self):
        imgs = list(self.head) + [len(self.head) + 1 + self.shift]
        if any(b <= a for a, b in zip(imgs, imgs[1:])) or (self.head and self.head[0] < 1):
            raise SpecError("embedding images must be strictly increasing and >= 1")

    def map_index(self, i: int) -> int:
        return self.head[i - 1] if i <= len(self.head) else i + self.shift


# ---------------------------------------------------------------------------
# projection representations


@dataclass(frozen=True)
class ProjectionRep:
    """A projection as a frame (P = sum v v^T) or coframe (P = I - sum v v^T)."""

    form: str
    vectors: tuple[SparseVector, ...]

    def __post_init__(self):
        if self.form not in ("frame", "coframe"):
            raise SpecError(f"unknown projection form {self.form!r}")

    @classmethod
    def frame(cls, vectors: Iterable[SparseVector]) -> "ProjectionRep":
        return cls("frame", tuple(vectors))

    @classmethod
    def coframe(cls, vectors: Iterable[SparseVector]) -> "ProjectionRep":
        return cls("coframe", tuple(vectors))

    def complementary(self) -> "ProjectionRep":
        """Representation of I - P (swap frame and coframe)."""
        return ProjectionRep("coframe" if self.form == "frame" else "frame", self.vectors)

    def diag(self, k: int) -> float:
        s = sum(v.square_at(k) for v in self.vectors)
        return s if self.form == "frame" else 1.0 - s

    def exact_diag(self, k: int) -> Fraction:
        s = Fraction(0)
        for v in self.vectors:
            q = v.exact_square_at(k)
            if q is None:
                raise ExactnessError(f"float-only entry at index {k}")
            s += q
        return s if self.form == "frame" else 1 - s

    def entry(self, i: int, j: int) -> float:
        s = sum(v.value_at(i) * v.value_at(j) for v in self.vectors)
        if self.form == "frame":
            return s
        return (1.0 if i == j else 0.0) - s

    def gram(self) -> np.ndarray:
        n = len(self.vectors)
        g = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                g[i, j] = g[j, i] = self.vectors[i].inner(self.vectors[j])
        return g

    def dense(self, m: int) -> np.ndarray:
        v = np.vstack([w.dense(m) for w in self.vectors]) if self.vectors else np.zeros((0, m))
        p = v.T @ v
        return p if self.form == "frame" else np.eye(m) - p

    def to_json_dict(self) -> dict:
        return {"form": self.form, "vectors": [v.to_json_dict() for v in self.vectors]}

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "ProjectionRep":
        return cls(d["form"], tuple(SparseVector.from_json_dict(v) for v in d["vectors"]))


def diag_of(rep: ProjectionRep, k: int, exact: bool = False):
    """Diagonal entry k of the represented projection."""
    return rep.exact_diag(k) if exact else rep.diag(k)


# ---------------------------------------------------------------------------
# permutations


@dataclass(frozen=True)
class PermutationWindow:
    """A permutation of the positive integers that is the identity beyond a window.

    ``window[i-1]`` is the image of i for 1 <= i <= M; larger indices map to
    themselves.
    """

    window: tuple[int, ...] = ()

    def __post_init__(self):
        if sorted(self.window) != list(range(1, len(self.window) + 1)):
            raise SpecError(f"window is not a bijection of 1..{len(self.window)}")

    @classmethod
    def identity(cls, m: int = 0) -> "PermutationWindow":
        return cls(tuple(range(1, m + 1)))

    @property
    def size(self) -> int:
        return len(self.window)

    def apply(self, i: int) -> int:
        if i < 1:
            raise OutOfRangeError(f"index {i} < 1")
        return self.window[i - 1] if i <= len(self.window) else i

    def inverse(self) -> "PermutationWindow":
        inv = [0] * len(self.window)
        for i, img in enumerate(self.window, start=1):
            inv[img - 1] = i
        return PermutationWindow(tuple(inv))

    def compose(self, other: "PermutationWindow") -> "PermutationWindow":
        """self after other: (self . other)(i) = self(other(i))."""
        m = max(len(self.window), len(other.window))
        return PermutationWindow(tuple(self.apply(other.apply(i)) for i in range(1, m + 1)))

    def trimmed(self) -> "PermutationWindow":
        """Drop trailing fixed points from the window."""
        w = list(self.window)
        while w and w[-1] == len(w):
            w.pop()
        return PermutationWindow(tuple(w))


def conjugate_by_permutation(rep: ProjectionRep, perm: PermutationWindow) -> ProjectionRep:
    """Conjugate by the basis permutation e_i -> e_{perm(i)}.

    The result Q satisfies diag(Q)(i) = diag(P)(perm(i)); vector supports are
    relabelled through the inverse permutation.
    """
    inv = perm.inverse()
    m = perm.size
    out = []
    for v in rep.vectors:
        if v.sqrt_tail is not None and v.sqrt_tail.start <= m:
            v = v.materialized_through(m)
        sup = sorted(
            zip((inv.apply(i) for i, _ in v.support), (val for _, val in v.support))
        )
        sqs = None
        if v.squares is not None:
            by_idx = {inv.apply(i): q for (i, _), q in zip(v.support, v.squares)}
            sqs = tuple(by_idx[i] for i, _ in sup)
        out.append(SparseVector(tuple(sup), v.sqrt_tail, sqs))
    return ProjectionRep(rep.form, tuple(out))


# ---------------------------------------------------------------------------
# cell fields and gluing


@dataclass(frozen=True)
class CellField:
    """A finite measurable field at desk scale: one diagonal spec per cell."""

    cells: tuple[tuple[str, DiagonalSpec], ...]

    def __post_init__(self):
        ids = [c for c, _ in self.cells]
        if len(set(ids)) != len(ids):
            dup = sorted({c for c in ids if ids.count(c) > 1})
            raise SpecError(f"duplicate cell ids: {dup}")

    def ids(self) -> list[str]:
        return [c for c, _ in self.cells]

    def spec(self, cell_id: str) -> DiagonalSpec:
        for c, s in self.cells:
            if c == cell_id:
                return s
        raise OutOfRangeError(f"no cell {cell_id!r}")

    def to_json_list(self) -> list:
        return [{"cell": c, "spec": s.to_json_dict()} for c, s in self.cells]

    @classmethod
    def from_json_list(cls, items: Sequence[Mapping]) -> "CellField":
        return cls(tuple((d["cell"], DiagonalSpec.from_json_dict(d["spec"])) for d in items))


def glue(parts, field: CellField | None = None) -> dict:
    """Merge per-cell outputs computed over a partition of the cells.

    Parameters
    ----------
    parts : iterable of (cell_ids, outputs)
        Each element pairs a collection of cell ids with a mapping from those
        ids to per-cell outputs.  The id sets must be pairwise disjoint and
        each mapping must cover exactly its declared ids.
    field : CellField, optional
        When given, the union of all id sets must equal the field's cells.

    Returns
    -------
    dict mapping every cell id to its output.
    """
    merged: dict = {}
    seen: set = set()
    for ids, outputs in parts:
        ids = set(ids)
        if set(outputs) != ids:
            raise PartitionError(
                f"outputs cover {sorted(outputs)} but part declares {sorted(ids)}"
            )
        overlap = ids & seen
        if overlap:
            raise PartitionError(f"cells in more than one part: {sorted(overlap)}")
        seen |= ids
        merged.update(outputs)
    if field is not None and seen != set(field.ids()):
        missing = sorted(set(field.ids()) - seen)
        extra = sorted(seen - set(field.ids()))
        raise PartitionError(f"parts do not tile the field (missing {missing}, extra {extra})")
    return merged


def dumps_canonical(obj) -> str:
    """Deterministic JSON text: sorted keys, stable float repr, 2-space indent."""
    return json.dumps(obj, sort_keys=True, indent=2)
