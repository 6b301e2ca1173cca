"""Command-line front end.

Subcommands::

    check       feasibility report for one diagonal spec
    construct   build a projection representation for one spec
    field       build per-cell projections for a finite field of specs
    verify      re-check a stored representation against its spec
    schur-horn  finite spectrum-to-diagonal rotation
    si          synthesize a range-function file from spectral samples
    oracle      randomized necessity check on conjugated projections

Exit codes: 0 success, 1 failed verification or internal error, 2 infeasible
or invalid input, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import dataclass

import numpy as np

from .errors import CarpenterError, InfeasibleDiagonalError, MajorizationError, SpecError
from .feasibility import branch_of, branch_partition, classify
from .schurhorn import schur_horn_unitary
from .selector import carpenter, carpenter_field, necessity_oracle, verify_projection
from .seqcore import CellField, DiagonalSpec, ProjectionRep, dumps_canonical, fmt_rat, rat
from .sispectral import SpectralSamples, synthesize_range

USAGE_EXIT = 64


@dataclass(frozen=True)
class RunConfig:
    vectors: int = 16
    tol: float = 1e-9
    seed: int = 1729


DEFAULTS = RunConfig()


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _load_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text + "\n")
    else:
        with open(out, "w") as fh:
            fh.write(text + "\n")


def _load_spec(path: str) -> DiagonalSpec:
    return DiagonalSpec.from_json_dict(_load_json(path))


def _load_rep(path: str) -> ProjectionRep:
    doc = _load_json(path)
    if "projection" in doc:
        doc = doc["projection"]
    return ProjectionRep.from_json_dict(doc)


def _cmd_check(args) -> int:
    spec = _load_spec(args.spec)
    report = classify(spec)
    doc = report.to_json_dict()
    if report.feasible:
        doc["branch"] = list(branch_of(spec).path)
    _emit(dumps_canonical(doc), args.out)
    return 0 if report.feasible else 2


def _cmd_construct(args) -> int:
    spec = _load_spec(args.spec)
    trace: dict = {}
    rep = carpenter(spec, args.vectors, trace)
    doc = {
        "spec": spec.to_json_dict(),
        "branch": trace.get("branch"),
        "settled": trace.get("settled_prefix"),
        "vectors": args.vectors,
        "projection": rep.to_json_dict(),
    }
    _emit(dumps_canonical(doc), args.out)
    if args.trace:
        _emit(dumps_canonical(trace), args.trace)
    return 0


def _cmd_verify(args) -> int:
    spec = _load_spec(args.spec)
    rep_doc = _load_json(args.rep)
    settled = args.settled
    if settled is None and isinstance(rep_doc, dict):
        settled = rep_doc.get("settled")
    rep = ProjectionRep.from_json_dict(rep_doc.get("projection", rep_doc))
    report = verify_projection(rep, spec, args.dim, args.tol, settled)
    _emit(dumps_canonical(report.to_json_dict()), args.out)
    return 0 if report.passed else 1


def _safe_name(cell_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", cell_id)


def _cmd_field(args) -> int:
    doc = _load_json(args.input)
    items = doc["cells"] if isinstance(doc, dict) else doc
    field = CellField.from_json_list(items)
    labels = branch_partition(field)  # raises naming the first infeasible cell
    result = carpenter_field(field, args.vectors)
    os.makedirs(args.out, exist_ok=True)
    files = {}
    for cell in result.cells:
        name = f"cell_{_safe_name(cell.cell_id)}.json"
        files[cell.cell_id] = name
        with open(os.path.join(args.out, name), "w") as fh:
            fh.write(dumps_canonical(cell.to_json_dict()) + "\n")
    with open(os.path.join(args.out, "partition.json"), "w") as fh:
        fh.write(
            dumps_canonical({c: list(l.path) for c, l in labels.items()}) + "\n"
        )
    manifest = {
        "vectors": args.vectors,
        "cells": [
            {"cell": c.cell_id, "file": files[c.cell_id], "settled": c.settled}
            for c in result.cells
        ],
    }
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        fh.write(dumps_canonical(manifest) + "\n")
    return 0


def _parse_rational_list(text: str) -> list:
    return [rat(tok.strip()) for tok in text.split(",") if tok.strip()]


def _cmd_schur_horn(args) -> int:
    lam = _parse_rational_list(args.spectrum)
    target = _parse_rational_list(args.target)
    u = schur_horn_unitary(lam, target)
    diag = np.diag(u.T @ np.diag([float(x) for x in lam]) @ u)
    doc = {
        "spectrum": [fmt_rat(x) for x in lam],
        "target": [fmt_rat(x) for x in target],
        "unitary": [[float(x) for x in row] for row in u],
        "achievedDiagonal": [float(x) for x in diag],
    }
    _emit(dumps_canonical(doc), args.out)
    return 0


def _cmd_si(args) -> int:
    samples = SpectralSamples.from_json_dict(_load_json(args.input))
    rf = synthesize_range(samples, args.vectors, args.tol)
    _emit(dumps_canonical(rf.to_json_dict()), args.out)
    return 0


def _cmd_oracle(args) -> int:
    report = necessity_oracle(args.dim, args.trials, args.seed, args.tol)
    _emit(dumps_canonical(report.to_json_dict()), args.out)
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="carpenter", description="projections with prescribed diagonals")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, vectors=True):
        p.add_argument("--out", help="write JSON here instead of stdout")
        if vectors:
            p.add_argument(
                "--vectors", type=int, default=DEFAULTS.vectors,
                help=f"streamed vectors per subsequence (default {DEFAULTS.vectors})",
            )

    p = sub.add_parser("check", parents=[], help="feasibility of one spec")
    p.add_argument("--spec", required=True, help="JSON file with prefix/tail")
    common(p, vectors=False)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("construct", help="build a projection for one spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--trace", help="write construction bookkeeping here")
    common(p)
    p.set_defaults(func=_cmd_construct)

    p = sub.add_parser("verify", help="re-check a stored representation")
    p.add_argument("--rep", required=True, help="construct output (or bare projection JSON)")
    p.add_argument("--spec", required=True)
    p.add_argument("--dim", type=int, default=DEFAULTS.vectors, help="truncation dimension")
    p.add_argument("--tol", type=float, default=DEFAULTS.tol)
    p.add_argument("--settled", type=int, default=None, help="override the settled prefix")
    common(p, vectors=False)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("field", help="per-cell projections for a field of specs")
    p.add_argument("--input", required=True, help="JSON list of {cell, spec}")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--vectors", type=int, default=DEFAULTS.vectors)
    p.set_defaults(func=_cmd_field)

    p = sub.add_parser("schur-horn", help="finite spectrum-to-diagonal rotation")
    p.add_argument("--spectrum", required=True, help="comma-separated rationals")
    p.add_argument("--target", required=True, help="comma-separated rationals")
    common(p, vectors=False)
    p.set_defaults(func=_cmd_schur_horn)

    p = sub.add_parser("si", help="synthesize a range function from spectral samples")
    p.add_argument("--input", required=True, help="spectral samples JSON")
    p.add_argument("--tol", type=float, default=DEFAULTS.tol)
    common(p)
    p.set_defaults(func=_cmd_si)

    p = sub.add_parser("oracle", help="randomized necessity check")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=DEFAULTS.seed)
    p.add_argument("--tol", type=float, default=DEFAULTS.tol)
    common(p, vectors=False)
    p.set_defaults(func=_cmd_oracle)

    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else USAGE_EXIT
    try:
        return args.func(args)
    except (InfeasibleDiagonalError, MajorizationError, SpecError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (json.JSONDecodeError, FileNotFoundError, KeyError) as e:
        print(f"error: bad input: {e!r}", file=sys.stderr)
        return 2
    except CarpenterError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
