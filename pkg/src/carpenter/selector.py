"""Top-level selection, verification and randomized cross-checks.

``carpenter`` looks at a diagonal spec, decides which constructor applies and
runs it; ``carpenter_field`` does the same for every cell of a finite field,
deterministically.  ``verify_projection`` re-derives the numerical evidence
that a representation really is a projection with the requested diagonal.
``necessity_oracle`` samples random finite projections and conjugates to
confirm that their diagonals always pass the integrality test.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InfeasibleDiagonalError, SpecError
from .feasibility import BranchLabel, FeasibilityReport, branch_of, classify
from .seqcore import (
    CellField,
    DiagonalSpec,
    ProjectionRep,
    conjugate_by_permutation,  # re-exported: permutations commute with selection
)
from .summable import summable_construct
from .tetris import nonsummable_construct

__all__ = [
    "carpenter",
    "VerificationReport",
    "verify_projection",
    "FieldCell",
    "ProjectionField",
    "carpenter_field",
    "NecessityReport",
    "necessity_oracle",
    "conjugate_by_permutation",
]


def carpenter(spec: DiagonalSpec, m: int = 16, trace: dict | None = None) -> ProjectionRep:
    """Build a projection representation with the requested diagonal.

    ``m`` bounds the number of streamed vectors per subsequence in the
    divergent case; convergent-defect constructions ignore it and settle every
    entry.  Raises InfeasibleDiagonalError when no such projection exists.
    A passed ``trace`` dict collects the branch label, the case report, the
    construction bookkeeping, and ``settled_prefix`` (None = fully settled).
    """
    report = classify(spec)
    if not report.feasible:
        a, b = report.a, report.b
        raise InfeasibleDiagonalError(
            f"no projection with this diagonal: a = {a}, b = {b}, a - b not an integer"
        )
    label = branch_of(spec)
    if trace is not None:
        trace["branch"] = list(label.path)
    if report.case == "summable":
        return summable_construct(spec, m, trace)
    return nonsummable_construct(spec, m, trace)


@dataclass(frozen=True)
class VerificationReport:
    """Numerical evidence that a representation matches a spec.

    ``gram_max_err``: worst deviation of the vector Gram matrix from identity;
    ``diag_max_err``: worst settled diagonal deviation; ``idempotency_err``:
    max norm of V^T (G - I) V, which bounds the truncated P^2 - P without
    charging truncation against the representation; ``symmetry_err`` from the
    dense truncation.
    """

    dim: int
    tol: float
    settled: int
    gram_max_err: float
    diag_max_err: float
    idempotency_err: float
    symmetry_err: float

    @property
    def passed(self) -> bool:
        return (
            max(self.gram_max_err, self.diag_max_err, self.idempotency_err, self.symmetry_err)
            <= self.tol
        )

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "tol": self.tol,
            "settled": self.settled,
            "gramMaxErr": self.gram_max_err,
            "diagMaxErr": self.diag_max_err,
            "idempotencyErr": self.idempotency_err,
            "symmetryErr": self.symmetry_err,
            "passed": self.passed,
        }


def verify_projection(
    rep: ProjectionRep,
    spec: DiagonalSpec,
    m: int = 16,
    tol: float = 1e-9,
    settled: int | None = None,
) -> VerificationReport:
    """Check orthonormality, idempotency, symmetry and the settled diagonal.

    ``settled`` limits the diagonal comparison to entries no later vector can
    change (None = all of 1..m are settled, as for complete constructions).
    """
    g = rep.gram()
    n = len(rep.vectors)
    gram_err = float(np.abs(g - np.eye(n)).max()) if n else 0.0
    v = np.vstack([w.dense(m) for w in rep.vectors]) if n else np.zeros((0, m))
    idem_err = float(np.abs(v.T @ (g - np.eye(n)) @ v).max()) if n else 0.0
    p = rep.dense(m)
    sym_err = float(np.abs(p - p.T).max())
    upto = m if settled is None else min(settled, m)
    diag_err = 0.0
    for k in range(1, upto + 1):
        diag_err = max(diag_err, abs(rep.diag(k) - float(spec.entry(k))))
    return VerificationReport(m, tol, upto, gram_err, diag_err, idem_err, sym_err)


# ---------------------------------------------------------------------------
# fields of diagonals


@dataclass(frozen=True)
class FieldCell:
    cell_id: str
    label: BranchLabel
    rep: ProjectionRep
    settled: int | None

    def to_json_dict(self) -> dict:
        return {
            "cell": self.cell_id,
            "branch": list(self.label.path),
            "settled": self.settled,
            "projection": self.rep.to_json_dict(),
        }


@dataclass(frozen=True)
class ProjectionField:
    """Per-cell projections over a finite field of diagonals."""

    cells: tuple[FieldCell, ...]

    def cell(self, cell_id: str) -> FieldCell:
        for c in self.cells:
            if c.cell_id == cell_id:
                return c
        raise KeyError(cell_id)

    def by_branch(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for c in self.cells:
            out.setdefault(str(c.label), []).append(c.cell_id)
        return out

    def to_json_dict(self) -> dict:
        return {"cells": [c.to_json_dict() for c in self.cells]}


def carpenter_field(field: CellField, m: int = 16) -> ProjectionField:
    """Run the selector on every cell, in order, deterministically.

    The first infeasible cell aborts the whole field with an error naming it.
    """
    out = []
    for cell_id, spec in field.cells:
        try:
            trace: dict = {}
            rep = carpenter(spec, m, trace)
        except InfeasibleDiagonalError as e:
            raise InfeasibleDiagonalError(f"cell {cell_id!r}: {e}") from None
        out.append(
            FieldCell(cell_id, branch_of(spec), rep, trace.get("settled_prefix"))
        )
    return ProjectionField(tuple(out))


# ---------------------------------------------------------------------------
# randomized necessity checks


@dataclass(frozen=True)
class NecessityReport:
    dim: int
    trials: int
    tol: float
    violations: int
    worst_distance: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "trials": self.trials,
            "tol": self.tol,
            "violations": self.violations,
            "worstDistance": self.worst_distance,
            "passed": self.passed,
        }


def _random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def necessity_oracle(dim: int, trials: int, seed: int = 1729, tol: float = 1e-9) -> NecessityReport:
    """Sample conjugated finite projections; their diagonals must pass the test.

    For each trial a random rank and random orthogonal conjugation produce a
    projection diagonal d; the defect sums a = sum of small entries and
    b = sum of (1 - large entries) must differ by an integer up to roundoff
    (entries are exact dyadic floats, the sums are computed exactly).
    """
    rng = np.random.default_rng(seed)
    violations = 0
    worst = 0.0
    for _ in range(trials):
        rank = int(rng.integers(0, dim + 1))
        u = _random_orthogonal(rng, dim)
        d = (u[:rank, :] ** 2).sum(axis=0)  # diag of U^T diag(1^rank 0^..) U
        a = sum((Fraction(float(x)) for x in d if x <= 0.5), Fraction(0))
        b = sum((1 - Fraction(float(x)) for x in d if x > 0.5), Fraction(0))
        dist = abs(float(a - b) - round(float(a - b)))
        worst = max(worst, dist)
        if dist > tol:
            violations += 1
    return NecessityReport(dim, trials, tol, violations, worst)


def feasibility_of_diagonal(values, tol: float = 1e-9) -> FeasibilityReport:
    """Classify a finite float diagonal after exact conversion (testing aid).

    Roundoff excursions outside [0,1] up to ``tol`` are clamped; larger ones
    are rejected.
    """
    slack = Fraction(tol).limit_denominator(10**12)
    xs = []
    for v in values:
        q = Fraction(float(v))
        if q < -slack or q > 1 + slack:
            raise SpecError(f"diagonal entry {float(v)} outside [0,1]")
        xs.append(min(max(q, Fraction(0)), Fraction(1)))
    return classify(DiagonalSpec(tuple(xs)))
