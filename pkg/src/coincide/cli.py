"""Command line interface.

Exit codes: 0 success, 2 validation error, 3 search budget exhausted.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .body import body_from_descriptor, make_ellipsoid, make_perturbed_ball
from .diameters import DirectionParams, PointParams, diameter_in_direction, multiplicity_at
from .errors import CoincideError, ConvergenceFailure
from .harness import ExperimentConfig, aggregate, emit_report, load_trials, run_experiment
from .kappa import bound_table
from .search import SearchParams, refine_certificate, scan_multiplicity, search_concurrent_diameters
from .sections import (
    Hyperplane,
    SelectionParams,
    search_coincident_selections,
    selection_map,
    trace_section,
)

EXIT_VALIDATION = 2
EXIT_BUDGET = 3


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise CoincideError(f"cannot parse vector {text!r}; expected comma-separated numbers")


def _matrix(text: str) -> np.ndarray:
    rows = [r for r in text.split(";") if r.strip()]
    return np.array([_vector(r) for r in rows])


def _load_body(path):
    try:
        return body_from_descriptor(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise CoincideError(f"cannot read body file {path}: {exc}")


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def _emit(args, payload):
    text = json.dumps(payload, indent=2) + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_kappa(args):
    rows = [b.to_dict() for b in bound_table(args.d_from, args.d_to)]
    fmt = args.format or "csv"
    if fmt == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        lines = ["d,theorem_bound,combined_lower,upper,witness"]
        for r in rows:
            w = r["witness"]
            w = f"l={w['l']} m={w['m']} q={w['q']}" if isinstance(w, dict) else w
            lines.append(f"{r['d']},{r['theorem_bound']},{r['combined_lower']},{r['upper']},{w}")
        text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_gen_body(args):
    if args.kind == "ellipsoid":
        B = _matrix(args.matrix) if args.matrix else np.eye(args.d)
        center = _vector(args.center) if args.center else None
        body = make_ellipsoid(B, center)
    else:
        base = _matrix(args.matrix) if args.matrix else None
        body = make_perturbed_ball(args.d, args.degree, args.eps, _seed(args), base=base)
    _emit(args, body.descriptor())
    return 0


def cmd_diameter(args):
    body = _load_body(args.body)
    chord = diameter_in_direction(body, _vector(args.direction), DirectionParams(seed=_seed(args)))
    _emit(args, chord.to_dict() | {"residual": chord.residual})
    return 0


def cmd_through_point(args):
    body = _load_body(args.body)
    res = multiplicity_at(body, _vector(args.point), PointParams(seed=_seed(args)))
    _emit(args, {"count": res.count, "saturated": res.saturated, "chords": [c.to_dict() for c in res.chords]})
    return 0


def cmd_concurrency(args):
    body = _load_body(args.body)
    params = SearchParams(n_starts=args.starts, seed=_seed(args))
    if args.k_max:
        k, cert = scan_multiplicity(body, args.k_max, params)
        if cert is None:
            cert = search_concurrent_diameters(body, 2, params)
    else:
        cert = search_concurrent_diameters(body, args.k, params)
        if cert.accepted:
            cert = refine_certificate(body, cert, params)
    _emit(args, cert.to_dict())
    return 0 if cert.accepted else EXIT_BUDGET


def cmd_sections(args):
    body = _load_body(args.body)
    H = Hyperplane.make(_vector(args.normal), args.offset)
    sel = selection_map(body, H, args.center, args.resolution)
    payload = {"hyperplane": H.to_dict(), "branch": sel.branch, "value": sel.value.tolist()}
    if sel.branch == "section_center":
        payload["boundary"] = trace_section(body, H, args.resolution).points().tolist()
    _emit(args, payload)
    return 0


def cmd_selection_coincidence(args):
    body = _load_body(args.body)
    cert = search_coincident_selections(body, args.k, args.center, SelectionParams(n_starts=args.starts, seed=_seed(args)))
    _emit(args, cert.to_dict() | {"center_kind": args.center})
    return 0 if cert.accepted else EXIT_BUDGET


def cmd_experiment(args):
    config = ExperimentConfig.load(args.config)
    if args.seed is not None:
        config.master_seed = args.seed
    report = run_experiment(config, args.log or config.trial_log)
    out = args.out or config.report_path
    text = emit_report(report, args.format or "json", out)
    if not out:
        sys.stdout.write(text)
    return 0


def cmd_report(args):
    config = ExperimentConfig.load(args.config)
    report = aggregate(load_trials(args.log), config)
    text = emit_report(report, args.format or "csv", args.out)
    if not args.out:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="coincide", description=__doc__.splitlines()[0])
    top.add_argument("--seed", type=int, default=None)
    top.add_argument("--out", default=None)
    top.add_argument("--format", choices=["csv", "json"], default=None)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    common.add_argument("--format", choices=["csv", "json"], default=argparse.SUPPRESS)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kappa", parents=[common], help="tabulate kappa(d) brackets")
    p.add_argument("--from", dest="d_from", type=int, required=True)
    p.add_argument("--to", dest="d_to", type=int, required=True)
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("gen-body", parents=[common], help="write a body descriptor")
    p.add_argument("--kind", choices=["ellipsoid", "perturbed_ball"], default="perturbed_ball")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--matrix", help='rows separated by ";", e.g. "4,0;0,1"')
    p.add_argument("--center")
    p.set_defaults(func=cmd_gen_body)

    p = sub.add_parser("diameter", parents=[common], help="affine diameter in a direction")
    p.add_argument("--body", required=True)
    p.add_argument("--direction", required=True)
    p.set_defaults(func=cmd_diameter)

    p = sub.add_parser("through-point", parents=[common], help="affine diameters through a point")
    p.add_argument("--body", required=True)
    p.add_argument("--point", required=True)
    p.set_defaults(func=cmd_through_point)

    p = sub.add_parser("concurrency", parents=[common], help="search k concurrent diameters")
    p.add_argument("--body", required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--starts", type=int, default=None, help="multistart budget")
    p.set_defaults(func=cmd_concurrency)

    p = sub.add_parser("sections", parents=[common], help="selection map of one hyperplane")
    p.add_argument("--body", required=True)
    p.add_argument("--normal", required=True)
    p.add_argument("--offset", type=float, required=True)
    p.add_argument("--center", choices=["centroid", "steiner"], default="centroid")
    p.add_argument("--resolution", type=int, default=128)
    p.set_defaults(func=cmd_sections)

    p = sub.add_parser("selection-coincidence", parents=[common], help="search k hyperplanes with a common center")
    p.add_argument("--body", required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--center", choices=["centroid", "steiner"], default="centroid")
    p.add_argument("--starts", type=int, default=None, help="multistart budget")
    p.set_defaults(func=cmd_selection_coincidence)

    p = sub.add_parser("experiment", parents=[common], help="run an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--log", default=None)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", parents=[common], help="aggregate a trial log into a report")
    p.add_argument("--config", required=True)
    p.add_argument("--log", required=True)
    p.set_defaults(func=cmd_report)
    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (CoincideError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
