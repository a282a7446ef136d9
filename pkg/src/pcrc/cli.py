"""Batch command-line front end.

Exit status: 0 on success, 2 on validation errors (bad files, flags or
preconditions), 1 on computation failures or failed checks.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io
from .checks import ensemble_checks, matrix_checks
from .core import classify
from .ensemble import LawSpec, sample_ensemble, stochastic_index
from .errors import ComputationError, ValidationError
from .indices import IndexSpec, evaluate_index
from .projections import (
    gmm_project,
    project_cm,
    project_reciprocal,
    project_symmetric,
    ranking,
    weights_from_consistent,
)
from .reduction import OptimizerConfig, derandomize_transport, minimize_index


def _add_index_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--index", choices=["kii", "dist"], default="kii")
    p.add_argument("--target", type=str.lower, choices=["pc", "cpc", "cm"])
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--indicator", action="store_true")


def _index_spec(args) -> IndexSpec:
    target = args.target.upper() if args.target else None
    return IndexSpec(args.index, target if args.index == "dist" else None, args.gamma, args.indicator)


def _emit_matrix(a, out: str | None) -> None:
    if out:
        io.write_matrix(out, a)
    else:
        sys.stdout.write(io.format_matrix_csv(a))


def _emit_json(obj, out: str | None) -> None:
    text = io.dumps(obj) + "\n"
    if out:
        io.write_text(out, text)
    else:
        sys.stdout.write(text)


def cmd_index(args) -> int:
    a = io.read_matrix(args.matrix)
    print(io.fmt(evaluate_index(a, _index_spec(args))))
    return 0


_PROJECTIONS = {
    "pc": project_reciprocal,
    "nr": project_symmetric,
    "cpc": gmm_project,
    "cm": project_cm,
}


def cmd_project(args) -> int:
    a = io.read_matrix(args.matrix)
    _emit_matrix(_PROJECTIONS[args.target](a), args.out)
    return 0


def cmd_weights(args) -> int:
    a = io.read_matrix(args.matrix)
    if args.project:
        a = gmm_project(project_reciprocal(a))
    w = weights_from_consistent(a)
    print(",".join(io.fmt(v) for v in w))
    print("ranking: " + " > ".join(str(i + 1) for i in ranking(w)))
    return 0


def cmd_decompose(args) -> int:
    a = io.read_matrix(args.matrix)
    io.write_matrix(args.out_pc, project_reciprocal(a))
    io.write_matrix(args.out_nr, project_symmetric(a))
    return 0


def cmd_classify(args) -> int:
    a = io.read_matrix(args.matrix)
    c = classify(a, args.tol)
    for flag in ("reciprocal", "pure", "consistent_reciprocal", "consistent_general"):
        res = getattr(c, f"{flag}_residual")
        print(f"{flag}: {str(getattr(c, flag)).lower()} (residual {io.fmt(res)})")
    return 0


def cmd_sample(args) -> int:
    base = io.read_matrix(args.base)
    if args.law == "lognormal":
        disp = args.sigma
        if disp is None:
            raise ValidationError("--sigma is required for the lognormal law")
    else:
        disp = args.halfwidth
        if disp is None:
            raise ValidationError("--halfwidth is required for the uniform_additive law")
    spec = LawSpec(args.law, base, disp, args.count, args.seed, args.coupling)
    x = sample_ensemble(spec)
    if args.out:
        io.write_ensemble(args.out, x)
    else:
        sys.stdout.write(io.format_ensemble_json(x))
    return 0


def cmd_sindex(args) -> int:
    x = io.read_ensemble(args.ensemble)
    print(io.fmt(stochastic_index(x, _index_spec(args))))
    return 0


def cmd_reduce_index(args) -> int:
    a = io.read_matrix(args.matrix)
    spec = _index_spec(args)
    cfg = OptimizerConfig(args.method, args.max_iters, args.f_tol, args.x_tol, args.restarts, args.seed)
    result = minimize_index(spec, args.constraint.upper(), a, cfg)
    _emit_json(
        {
            "minimizer": result,
            "index": spec.label(),
            "start_value": evaluate_index(a, spec),
            "value": evaluate_index(result, spec),
            "constraint": args.constraint.upper(),
        },
        args.out,
    )
    return 0


def cmd_reduce_transport(args) -> int:
    x = io.read_ensemble(args.ensemble)
    res = derandomize_transport(x, args.target.upper(), args.epsilon)
    _emit_json(res.as_dict(), args.out)
    return 0


def cmd_check(args) -> int:
    results = []
    if args.matrix:
        results += matrix_checks(io.read_matrix(args.matrix), seed=args.seed)
    if args.ensemble:
        results += ensemble_checks(io.read_ensemble(args.ensemble))
    if not results:
        raise ValidationError("check needs --matrix and/or --ensemble")
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcrc", description="Pairwise-comparisons matrices, random ensembles and reduction.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("index", help="print an index value")
    p.add_argument("--matrix", required=True)
    _add_index_flags(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("project", help="write a projected matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--target", type=str.lower, choices=sorted(_PROJECTIONS), required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("weights", help="print priority weights and ranking")
    p.add_argument("--matrix", required=True)
    p.add_argument("--project", action="store_true", help="apply the geometric mean method first")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("decompose", help="write the reciprocal and symmetric factors")
    p.add_argument("--matrix", required=True)
    p.add_argument("--out-pc", required=True)
    p.add_argument("--out-nr", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("classify", help="print class flags with residuals")
    p.add_argument("--matrix", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sample", help="write a sampled ensemble as JSON")
    p.add_argument("--base", required=True)
    p.add_argument("--law", choices=["lognormal", "uniform_additive"], default="lognormal")
    p.add_argument("--sigma", type=float)
    p.add_argument("--halfwidth", type=float)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--coupling", choices=["independent", "reciprocal"], default="independent")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("sindex", help="print a stochastic index")
    p.add_argument("--ensemble", required=True)
    _add_index_flags(p)
    p.set_defaults(func=cmd_sindex)

    p = sub.add_parser("reduce", help="inconsistency reduction")
    rsub = p.add_subparsers(dest="mode", required=True)
    r = rsub.add_parser("index", help="minimize an index over a constraint set")
    r.add_argument("--matrix", required=True)
    _add_index_flags(r)
    r.add_argument("--constraint", type=str.lower, choices=["m", "pc", "cm", "cpc"], required=True)
    r.add_argument("--method", choices=["nelder_mead", "projected_gradient"])
    r.add_argument("--max-iters", type=int, default=2000)
    r.add_argument("--f-tol", type=float, default=1e-12)
    r.add_argument("--x-tol", type=float, default=1e-10)
    r.add_argument("--restarts", type=int, default=1)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out")
    r.set_defaults(func=cmd_reduce_index)
    r = rsub.add_parser("transport", help="Wasserstein de-randomization onto a target set")
    r.add_argument("--ensemble", required=True)
    r.add_argument("--target", type=str.lower, choices=["m", "pc", "cm", "cpc"], required=True)
    r.add_argument("--epsilon", type=float, default=0.05)
    r.add_argument("--out")
    r.set_defaults(func=cmd_reduce_transport)

    p = sub.add_parser("check", help="run the invariant and diagram suite")
    p.add_argument("--matrix")
    p.add_argument("--ensemble")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"pcrc: error: {exc}", file=sys.stderr)
        return 2
    except (ComputationError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"pcrc: computation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
