"""Command-line interface.  Every command prints one JSON document on stdout.

Exit status: 0 on success, 1 on a domain error (the JSON then carries an
"error" key), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from scipy.stats import ortho_group, unitary_group

from . import linrel
from .hinge import (
    Hinge, ScalingGrid, diagonal_family, hinge_limit, hinge_of_invertible, hinge_to_sample,
    orbit_closure_sample, validate_hinge,
)
from .linrel import LinearRelation, is_scaling_fixed, matrix_from_json, matrix_to_json
from .metric import ClosedSetSample, hausdorff_distance
from .quotient import QuotientScene, run_scene
from .symspace import congruence_family, pd_boundary_hinge, validate_pd_hinge


class UsageError(Exception):
    pass


def load_json(src: str):
    """A path, '-' for stdin, or an inline JSON document."""
    if src == "-":
        return json.load(sys.stdin)
    if src.lstrip().startswith(("{", "[")):
        return json.loads(src)
    return json.loads(Path(src).read_text())


def parse_probes(text: str) -> list[float]:
    """'1e1..1e6' (one probe per decade), '1e1..1e6:11' (11 log-spaced probes) or '10,100,1000'."""
    if ".." in text:
        ends, _, count = text.partition(":")
        lo, hi = (float(x) for x in ends.split(".."))
        if lo <= 0 or hi <= lo:
            raise UsageError(f"bad probe range {text!r}")
        a, b = np.log10(lo), np.log10(hi)
        m = int(count) if count else int(round(b - a)) + 1
        return [float(x) for x in np.logspace(a, b, max(m, 2))]
    return [float(x) for x in text.split(",") if x]


def parse_grid(moduli: str, phases: int, positive_only: bool = False) -> ScalingGrid:
    """--grid-moduli 'MIN:MAX:COUNT', log-spaced moduli from MIN to MAX."""
    try:
        lo, hi, cnt = moduli.split(":")
        lo, hi = float(lo), float(hi)
        if not 0 < lo <= hi:
            raise ValueError
        return ScalingGrid(np.log10(lo), np.log10(hi), int(cnt), phases, positive_only)
    except ValueError:
        raise UsageError(f"bad --grid-moduli {moduli!r}") from None


def _matrix(obj) -> np.ndarray:
    if isinstance(obj, dict) and "rows" in obj:
        return matrix_from_json(obj)
    return np.asarray(obj)


def _relation(obj) -> LinearRelation:
    if isinstance(obj, dict) and "frame" in obj:
        return LinearRelation.from_json(obj)
    return LinearRelation.graph(_matrix(obj))


def _hinge(obj) -> Hinge:
    return Hinge.from_json(obj.get("hinge", obj))


def _exponents(text: str) -> list[float]:
    return [float(x) for x in text.split(",")]


def _conjugators(args, n, real):
    rng = np.random.default_rng(args.seed)
    left = right = None
    if getattr(args, "left", None):
        left = _matrix(load_json(args.left))
    if getattr(args, "right", None):
        right = _matrix(load_json(args.right))
    if args.random_conj:
        group = ortho_group if real or n == 1 else unitary_group
        if n == 1:
            left = np.ones((1, 1)) if real else np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
            right = np.ones((1, 1)) if real else np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
        else:
            left = group.rvs(n, random_state=rng)
            right = group.rvs(n, random_state=rng)
    return left, right


# -- commands -------------------------------------------------------------------


def cmd_relation_invariants(args):
    V = _relation(load_json(args.input))
    if args.field == "complex" and V.field == "real":
        V = LinearRelation(linrel.Subspace("complex", V.frame), V.n)
    ker, im, dom, indef = V.quadruple
    op = V.induced_operator()
    return {
        "n": V.n,
        "field": V.field,
        "dims": V.dims,
        "ker": matrix_to_json(ker.frame),
        "im": matrix_to_json(im.frame),
        "dom": matrix_to_json(dom.frame),
        "indef": matrix_to_json(indef.frame),
        "induced_operator": {
            "size": op.size,
            "dom_basis": matrix_to_json(op.dom_basis),
            "im_basis": matrix_to_json(op.im_basis),
            "matrix": matrix_to_json(op.matrix),
        },
        "scaling_fixed": is_scaling_fixed(V, args.tol),
    }


def cmd_hinge_validate(args):
    H = _hinge(load_json(args.input))
    if args.pd:
        report = validate_pd_hinge(H, tol=args.tol)
    else:
        report = validate_hinge(H, args.tol)
    return report, 0 if report["passed"] else 1


def cmd_hinge_of_matrix(args):
    A = _matrix(load_json(args.input))
    if args.field == "complex":
        A = A.astype(complex)
    return hinge_of_invertible(A).to_json()


def cmd_hinge_limit(args):
    probes = parse_probes(args.probes)
    real = args.field == "real"
    if args.matrices:
        mats = [_matrix(load_json(m)) for m in args.matrices]
        if len(mats) != len(probes):
            probes = [10.0 ** (j + 1) for j in range(len(mats))]
        table = dict(zip(probes, mats))
        family = table.__getitem__
    else:
        if not args.diag:
            raise UsageError("hinge limit needs --diag or --matrices")
        a = _exponents(args.diag)
        if args.n is not None and args.n != len(a):
            raise UsageError(f"--n {args.n} disagrees with {len(a)} exponents")
        left, right = _conjugators(args, len(a), real)
        family = diagonal_family(a, left, right)
    return hinge_limit(family, probes, args.tol, field=args.field).to_json()


def cmd_hinge_sample(args):
    H = _hinge(load_json(args.input))
    grid = parse_grid(args.grid_moduli, args.grid_phases, args.positive)
    return hinge_to_sample(H, grid).to_json()


def cmd_orbit_sample(args):
    V = _relation(load_json(args.input))
    if args.field == "complex" and V.field == "real":
        V = LinearRelation(linrel.Subspace("complex", V.frame), V.n)
    grid = parse_grid(args.grid_moduli, args.grid_phases, args.positive)
    return orbit_closure_sample(V, grid).to_json()


def cmd_hausdorff(args):
    S = ClosedSetSample.from_json(load_json(args.first))
    T = ClosedSetSample.from_json(load_json(args.second))
    return {"distance": hausdorff_distance(S, T), "resolution": S.resolution + T.resolution}


def cmd_quotient_run(args):
    scene = QuotientScene.from_json(load_json(args.input))
    candidates = load_json(args.candidates) if args.candidates else None
    tol = args.tol if args.tol_given else None
    return run_scene(scene, tol, candidates)


def cmd_symspace_boundary(args):
    a = _exponents(args.diag)
    g = None
    if args.conj:
        g = _matrix(load_json(args.conj))
    elif args.random_conj:
        g = ortho_group.rvs(len(a), random_state=np.random.default_rng(args.seed)) if len(a) > 1 else None
    H = pd_boundary_hinge(congruence_family(a, g), parse_probes(args.probes), args.tol)
    out = H.to_json()
    out["report"] = validate_pd_hinge(H, tol=max(args.tol, 1e-8))
    return out


# -- parser -----------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None,
                        help="gap tolerance (default 1e-6 for limits, 1e-8 for validation)")
    common.add_argument("--rank-tol", type=float, default=1e-9, help="relative singular value cutoff (1e-9)")
    common.add_argument("--grid-moduli", default="1e-8:1e8:33", help="MIN:MAX:COUNT log-spaced scaling moduli (1e-8:1e8:33)")
    common.add_argument("--grid-phases", type=int, default=16, help="phases per modulus, complex field (16)")
    common.add_argument("--probes", default="1e1..1e6", help="probe parameters t (1e1..1e6)")
    common.add_argument("--seed", type=int, default=0, help="seed for any randomness (0)")
    common.add_argument("--field", choices=["real", "complex"], default=None,
                        help="scalar field (complex; real for symspace)")

    p = _Parser(prog="hinges", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def leaf(parent, name, func, help, tol=1e-6, field="complex"):
        sp = parent.add_parser(name, parents=[common], help=help)
        sp.set_defaults(func=func, default_tol=tol, default_field=field)
        return sp

    rel = sub.add_parser("relation").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    sp = leaf(rel, "invariants", cmd_relation_invariants, "Ker/Im/Dom/Indef, <V>, fixed-point flag", 1e-8, None)
    sp.add_argument("input", help="relation JSON or matrix JSON (graph)")

    hg = sub.add_parser("hinge").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    sp = leaf(hg, "validate", cmd_hinge_validate, "check the hinge axioms", 1e-8)
    sp.add_argument("input")
    sp.add_argument("--pd", action="store_true", help="also check Lagrangian and positive-definite blocks")
    sp = leaf(hg, "of-matrix", cmd_hinge_of_matrix, "hinge of an invertible matrix")
    sp.add_argument("input", help="matrix JSON")
    sp = leaf(hg, "limit", cmd_hinge_limit, "limit hinge of a curve of matrices")
    sp.add_argument("--diag", help="exponents a: g(t) = L diag(t^a) R")
    sp.add_argument("--n", type=int)
    sp.add_argument("--left", help="matrix JSON for L")
    sp.add_argument("--right", help="matrix JSON for R")
    sp.add_argument("--random-conj", action="store_true", help="random unitary L, R from --seed")
    sp.add_argument("--matrices", nargs="+", help="matrix JSON files g(t_j), one per probe")
    sp = leaf(hg, "sample", cmd_hinge_sample, "sample the closed set of a hinge")
    sp.add_argument("input")
    sp.add_argument("--positive", action="store_true", help="positive scalars only")

    orb = sub.add_parser("orbit").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    sp = leaf(orb, "sample", cmd_orbit_sample, "sample an orbit closure", field=None)
    sp.add_argument("input", help="relation or matrix JSON")
    sp.add_argument("--positive", action="store_true")

    sp = sub.add_parser("hausdorff", parents=[common], help="Hausdorff distance of two samples")
    sp.set_defaults(func=cmd_hausdorff, default_tol=1e-6, default_field=None)
    sp.add_argument("first")
    sp.add_argument("second")

    qt = sub.add_parser("quotient").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    sp = leaf(qt, "run", cmd_quotient_run, "separated quotient and admissible sets of a scene", None, None)
    sp.add_argument("input", help="scene JSON")
    sp.add_argument("--candidates", help="JSON list of label sequences")

    sy = sub.add_parser("symspace").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    sp = leaf(sy, "boundary", cmd_symspace_boundary, "PD boundary hinge of t -> g^T diag(t^a) g", field="real")
    sp.add_argument("--diag", required=True)
    sp.add_argument("--conj", help="matrix JSON for g")
    sp.add_argument("--random-conj", action="store_true", help="random orthogonal g from --seed")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    args.tol_given = args.tol is not None
    if args.tol is None:
        args.tol = args.default_tol if args.default_tol is not None else 1e-6
    if args.field is None:
        args.field = args.default_field
    old = linrel.RANK_TOL
    linrel.RANK_TOL = args.rank_tol
    try:
        result = args.func(args)
        code = 0
        if isinstance(result, tuple):
            result, code = result
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        result, code = {"error": str(exc)}, 1
        report = getattr(exc, "report", None)
        if isinstance(report, dict):
            result["report"] = report
        print(f"error: {exc}", file=sys.stderr)
    finally:
        linrel.RANK_TOL = old
    json.dump(result, sys.stdout, indent=1)
    sys.stdout.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
