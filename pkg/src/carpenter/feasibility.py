"""Feasibility of a prescribed diagonal, and branch bookkeeping.

For entries d_i in [0,1] put a = sum of the entries <= 1/2 and
b = sum of (1 - d_i) over entries > 1/2 (entries equal to 1/2 always count
toward a).  A projection with diagonal (d_i) exists iff a or b is infinite,
or both are finite and a - b is an integer.  Everything here is computed in
exact rational arithmetic; divergent sums come back as INF.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InfeasibleDiagonalError
from .seqcore import HALF, INF, CellField, DiagonalSpec, fmt_rat

__all__ = [
    "FeasibilityReport",
    "BranchLabel",
    "kadison_ab",
    "classify",
    "branch_of",
    "branch_partition",
]


def kadison_ab(spec: DiagonalSpec):
    """The pair (a, b) of threshold sums, each a Fraction or INF."""
    a = Fraction(0)
    b = Fraction(0)
    for x in spec.prefix:
        if x <= HALF:
            a += x
        else:
            b += 1 - x
    tail = spec.tail
    exc, rest_small = tail.half_exceptions()
    if rest_small:
        small_mass = tail.sum_from(1)
        for j in exc:  # finitely many tail entries > 1/2
            b += 1 - tail.value(j)
            small_mass = small_mass - tail.value(j) if small_mass != INF else INF
        a = INF if small_mass == INF else a + small_mass
    else:
        large_def = tail.complement_sum_from(1)
        for j in exc:  # finitely many tail entries <= 1/2
            a += tail.value(j)
            large_def = large_def - (1 - tail.value(j)) if large_def != INF else INF
        b = INF if large_def == INF else b + large_def
    return a, b


@dataclass(frozen=True)
class FeasibilityReport:
    a: Fraction | float
    b: Fraction | float
    verdict: str  # "feasible" | "infeasible"
    case: str  # "nonsummable_a" | "nonsummable_b" | "summable"
    diff: int | None  # a - b when both sums are finite and integral

    @property
    def feasible(self) -> bool:
        return self.verdict == "feasible"

    def to_json_dict(self) -> dict:
        show = lambda s: "inf" if s == INF else fmt_rat(s)
        return {
            "a": show(self.a),
            "b": show(self.b),
            "verdict": self.verdict,
            "case": self.case,
            "diff": self.diff,
        }


def classify(spec: DiagonalSpec) -> FeasibilityReport:
    """Decide feasibility exactly and name the construction case."""
    a, b = kadison_ab(spec)
    if a == INF:
        return FeasibilityReport(a, b, "feasible", "nonsummable_a", None)
    if b == INF:
        return FeasibilityReport(a, b, "feasible", "nonsummable_b", None)
    d = a - b
    if d.denominator == 1:
        return FeasibilityReport(a, b, "feasible", "summable", int(d))
    return FeasibilityReport(a, b, "infeasible", "summable", None)


@dataclass(frozen=True)
class BranchLabel:
    """The decision path a spec takes through the construction dispatch."""

    path: tuple[str, ...]

    def __str__(self) -> str:
        return "/".join(self.path)


def _summable_proper_route(proper: DiagonalSpec) -> list[str]:
    """Route labels for an all-proper summable spec (every entry in (0,1))."""
    half = proper.half_classes()
    n_large = half.count(False)
    if n_large == INF:
        n_small = half.count(True)
        if n_small == INF:  # unreachable with closed tails; kept for clarity
            return ["X'", "X_N(N=inf)", "decouple"]
        if n_small >= 2:
            return ["X'", f"X_N(N={n_small})", "decouple"]
        return ["X'", f"X_N(N={n_small})", "complement-tetris"]
    # finitely many large entries: work with the complement
    if n_large >= 2:
        return ["X\\X'", "complement", f"X_N(N={n_large})", "decouple"]
    return ["X\\X'", f"X_N(N={n_large})", "tetris"]


def branch_of(spec: DiagonalSpec) -> BranchLabel:
    """Label the branch the constructor will follow; exact and deterministic.

    Raises InfeasibleDiagonalError on infeasible specs.
    """
    report = classify(spec)
    if not report.feasible:
        raise InfeasibleDiagonalError(
            f"a - b = {fmt_rat(report.a - report.b)} is not an integer"
        )
    if report.case == "nonsummable_a":
        k = spec.half_classes().count(False)
        assert k != INF, "divergent small sum forces finitely many large entries"
        route = "tetris" if k == 0 else f"residue-split(k={k})"
        return BranchLabel(("NonsummableA", "S_infty", f"X_k(k={k})", route))
    if report.case == "nonsummable_b":
        sub = branch_of(spec.complement())
        return BranchLabel(("NonsummableB", "S_finite", "complement") + sub.path[2:])
    proper = spec.proper_classes()
    n_proper = proper.count(True)
    if n_proper != INF:
        return BranchLabel(("Summable", f"X_{{k1..kn}}(n={n_proper})", "finite-schur-horn"))
    # strip the finitely many 0/1 entries, then route the proper subsequence
    from .summable import proper_subspec  # deferred: avoids import cycle at load

    sub, _, _ = proper_subspec(spec)
    return BranchLabel(("Summable", "proper-infinite") + tuple(_summable_proper_route(sub)))


def branch_partition(field: CellField) -> dict[str, BranchLabel]:
    """Branch label per cell; raises on the first infeasible cell, naming it."""
    out: dict[str, BranchLabel] = {}
    for cell_id, spec in field.cells:
        try:
            out[cell_id] = branch_of(spec)
        except InfeasibleDiagonalError as e:
            raise InfeasibleDiagonalError(f"cell {cell_id!r}: {e}") from None
    return out
