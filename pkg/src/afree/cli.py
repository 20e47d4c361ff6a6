"""Command line entry point.

Exit status: 0 on success or a positive verdict, 1 when a verdict is
negative (non-member, rank violation, failed verification), 2 when the
input could not be processed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2

CATALOG_HELP = (
    "catalog names: curl:d=2,l=2  higher_gradient:d=2,l=1,r=2  saint_venant:d=2  "
    "divergence:d=2  boundary:d=3,k=2"
)


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# inputs


def _catalog_entry(name: str):
    from . import catalog

    kind, _, rest = name.partition(":")
    params = {}
    for part in filter(None, rest.split(",")):
        key, eq, val = part.partition("=")
        if not eq:
            raise CliError(f"catalog parameter {part!r} lacks '='")
        params.setdefault(key.strip(), []).append(int(val))
    get = lambda key, default: params.get(key, [default])[0]  # noqa: E731
    if kind == "curl":
        return catalog.curl_annihilator(get("d", 2), get("l", 1))
    if kind == "higher_gradient":
        return catalog.higher_gradient_annihilator(get("d", 2), get("l", 1), get("r", 2))
    if kind == "saint_venant":
        return catalog.saint_venant(get("d", 2))
    if kind == "divergence":
        return catalog.divergence_operator(get("d", 2))
    if kind == "boundary":
        return catalog.current_boundary_operator(get("d", 3), params.get("k", [1]))
    raise CliError(f"unknown operator {name!r}; pass a spec file or a catalog name ({CATALOG_HELP})")


def load_op(text: str):
    from .operator_core import load_operator

    if Path(text).is_file():
        return load_operator(text)
    return _catalog_entry(text).operator


def parse_numbers(text: str) -> list[float]:
    """Inline ``1,0,0,1`` or a file of numbers separated by commas or blanks."""
    if Path(text).is_file():
        lines = Path(text).read_text(encoding="utf-8").splitlines()
        text = " ".join(line for line in lines if not line.lstrip().startswith("#"))
    toks = text.replace(",", " ").split()
    try:
        return [float(t) for t in toks]
    except ValueError as exc:
        raise CliError(f"bad number list {text!r}: {exc}") from exc


def load_measure(args):
    from .grid import read_gmes
    from .grid_measure import parse_generator

    if args.measure and args.generator:
        raise CliError("give either --measure or --generator, not both")
    if args.measure:
        return read_gmes(args.measure)
    if args.generator:
        return parse_generator(args.generator, cells=args.cells)
    raise CliError("a measure is required: --measure FILE or --generator SPEC")


def _sampling(args):
    from .wavecone import SphereSampling

    return SphereSampling(count=args.samples, seed=args.seed)


# ---------------------------------------------------------------------------
# output


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple, dict)):
        return json.dumps(value)
    if value is None:
        return "n/a"
    return str(value)


def emit(report: dict, as_json: bool, out=None) -> None:
    out = out or sys.stdout
    if as_json:
        out.write(json.dumps(report, indent=2) + "\n")
    else:
        for key, value in report.items():
            out.write(f"{key}: {_fmt(value)}\n")


def _floats(arr) -> list:
    import numpy as np

    arr = np.asarray(arr)
    if np.iscomplexobj(arr):
        return [[[float(z.real), float(z.imag)] for z in row] for row in arr]
    return [float(x) for x in arr.reshape(-1)]


# ---------------------------------------------------------------------------
# subcommands


def cmd_symbol(args) -> int:
    from .operator_core import full_symbol, principal_symbol

    op = load_op(args.op)
    xi = parse_numbers(args.xi)
    fn = full_symbol if args.full else principal_symbol
    sym = fn(op, xi)
    emit(
        {
            "operator": op.label,
            "order": op.order,
            "xi": xi,
            "kind": "full" if args.full else "principal",
            "shape": list(sym.shape),
            "matrix_re_im": _floats(sym),
        },
        args.json,
    )
    return EXIT_OK


def cmd_cone(args) -> int:
    from .wavecone import cone_distance_profile, in_wave_cone, write_profile_csv

    op = load_op(args.op)
    v = parse_numbers(args.vector)
    verdict = in_wave_cone(op, v, tol=args.tol, sampling=_sampling(args))
    report = {"operator": op.label, "tol": args.tol, **verdict.as_dict()}
    emit(report, args.json)
    if args.profile:
        xis, res = cone_distance_profile(op, v, _sampling(args))
        write_profile_csv(xis, res, args.profile)
    return EXIT_OK if verdict.member else EXIT_NEGATIVE


def cmd_constant_rank(args) -> int:
    from .wavecone import constant_rank_check

    op = load_op(args.op)
    prof = constant_rank_check(op, _sampling(args), rel_tol=args.rank_tol)
    pair = None
    if prof.violation_pair is not None:
        pair = [_floats(p) for p in prof.violation_pair]
    emit(
        {
            "operator": op.label,
            "samples": args.samples,
            "min_rank": prof.min_rank,
            "max_rank": prof.max_rank,
            "constant": prof.constant,
            "violation_pair": pair,
        },
        args.json,
    )
    return EXIT_OK if prof.constant else EXIT_NEGATIVE


_CATALOG_FILES = [
    ("curl2.json", "curl:d=2,l=2"),
    ("higher_gradient2.json", "higher_gradient:d=2,l=1,r=2"),
    ("saint_venant2.json", "saint_venant:d=2"),
    ("divergence2.json", "divergence:d=2"),
    ("boundary3.json", "boundary:d=3,k=2"),
]


def cmd_catalog(args) -> int:
    from .operator_core import save_operator

    entries = [(fname, name, _catalog_entry(name)) for fname, name in _CATALOG_FILES]
    if args.write:
        out = Path(args.write)
        out.mkdir(parents=True, exist_ok=True)
        for fname, _, entry in entries:
            save_operator(entry.operator, out / fname)
    if args.json:
        emit(
            {
                "entries": [
                    {
                        "name": name,
                        "file": fname,
                        "label": e.operator.label,
                        "cone": e.cone.kind,
                        "citation": e.citation,
                    }
                    for fname, name, e in entries
                ]
            },
            True,
        )
    else:
        for fname, name, e in entries:
            sys.stdout.write(f"{name}\t{fname}\t{e.operator.label}\t{e.cone.kind}\t{e.citation}\n")
    return EXIT_OK


def cmd_kvector(args) -> int:
    from . import exterior as ex

    def vec(text, cls=ex.KVector):
        if Path(text).is_file():
            text = Path(text).read_text(encoding="utf-8")
        return ex.parse_kvector(text, cls, exact=args.exact)

    action = args.action
    operands = args.operands
    need = {"wedge": 2, "interior": 2, "simple": 1, "norm": 1}
    if action in need and len(operands) != need[action]:
        raise CliError(f"kvector {action} takes {need[action]} operand(s)")
    if action == "annihilator" and not operands:
        raise CliError("kvector annihilator needs at least one operand")
    status = EXIT_OK
    if action == "wedge":
        result = {"result": ex.format_kvector(ex.wedge(vec(operands[0]), vec(operands[1]))).strip()}
    elif action == "interior":
        out = ex.interior_product(vec(operands[0]), vec(operands[1], ex.KCovector))
        result = {"result": ex.format_kvector(out).strip()}
    elif action == "simple":
        simple = ex.is_simple(vec(operands[0]))
        result = {"simple": simple}
        status = EXIT_OK if simple else EXIT_NEGATIVE
    elif action == "norm":
        result = {"norm": vec(operands[0]).norm()}
    else:
        w = ex.annihilator_covector([vec(t) for t in operands])
        result = {"covector": None if w is None else ex.format_kvector(w).strip()}
        status = EXIT_OK if w is not None else EXIT_NEGATIVE
    emit({"action": action, **result}, args.json)
    return status


def cmd_verify(args) -> int:
    from .grid_measure import verify_polar_in_cone

    op = load_op(args.op)
    mu = load_measure(args)
    rep = verify_polar_in_cone(
        op,
        mu,
        density_threshold=args.threshold,
        cone_tol=args.tol,
        sampling=_sampling(args),
        test_count=args.tests,
        seed=args.seed,
    )
    if args.report:
        rep.write_csv(args.report)
    emit(rep.as_dict(), args.json)
    frac = rep.mass_fraction_in_cone
    ok = frac is not None and frac >= args.min_fraction and rep.gate_passed
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_blowup(args) -> int:
    from .grid import write_csv, write_gmes
    from .grid_measure import blowup, unit_ball_mass

    mu = load_measure(args)
    out = blowup(mu, parse_numbers(args.x0), args.r, args.out_cells)
    if args.out:
        if args.out.endswith(".csv"):
            write_csv(out, args.out)
        else:
            write_gmes(out, args.out)
    emit(
        {
            "x0": parse_numbers(args.x0),
            "r": args.r,
            "out_cells": args.out_cells,
            "unit_ball_mass": unit_ball_mass(out),
            "total_mass": out.total_variation,
        },
        args.json,
    )
    return EXIT_OK


def cmd_multiplier(args) -> int:
    from .multiplier import Scenario, regularization_experiment

    op = load_op(args.op)
    p0 = parse_numbers(args.p0)
    raw = {}
    if args.scenario:
        text = Path(args.scenario).read_text(encoding="utf-8") if Path(args.scenario).is_file() else args.scenario
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CliError(f"scenario: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise CliError("scenario: expected a JSON object")
    raw.setdefault("seed", args.seed)
    rep = regularization_experiment(op, p0, Scenario.from_dict(raw))
    rows = rep.pop("rows")
    if args.out:
        keys = list(dict.fromkeys(k for r in rows for k in r))
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(keys) + "\n")
            for r in rows:
                fh.write(",".join(_fmt(r[k]) if k in r else "" for k in keys) + "\n")
    rep["rows"] = rows
    emit(rep, args.json)
    return EXIT_OK


def _version_text() -> str:
    from . import __version__
    from .exterior import KVECTOR_SCHEMA_VERSION
    from .grid import GMES_SCHEMA_VERSION
    from .operator_core import SPEC_SCHEMA_VERSION

    return (
        f"afree {__version__}\n"
        f"operator spec: {SPEC_SCHEMA_VERSION}\n"
        f"k-vector text: {KVECTOR_SCHEMA_VERSION}\n"
        f"grid measure: {GMES_SCHEMA_VERSION}\n"
    )


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None, help="cap BLAS worker threads")

    sampled = argparse.ArgumentParser(add_help=False)
    sampled.add_argument("--samples", type=int, default=4096, help="sphere sample count")

    measured = argparse.ArgumentParser(add_help=False)
    measured.add_argument("--measure", help="GMES1 file")
    measured.add_argument("--generator", help="e.g. 'bd-jump:a=0,1;n=1,0'")
    measured.add_argument("--cells", type=int, default=128)

    p = argparse.ArgumentParser(prog="afree", description="Wave cones and A-free measure checks.",
                                epilog=CATALOG_HELP)
    p.add_argument("--version", action="store_true", help="print file-format schema versions")
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("symbol", parents=[common], help="evaluate the symbol at xi")
    s.add_argument("--op", required=True)
    s.add_argument("--xi", required=True)
    s.add_argument("--full", action="store_true", help="full symbol instead of principal")
    s.set_defaults(func=cmd_symbol)

    s = sub.add_parser("cone", parents=[common, sampled], help="wave cone membership")
    s.add_argument("action", nargs="?", choices=["check"], default="check", help="optional; 'check' is the only action")
    s.add_argument("--op", required=True)
    s.add_argument("--vector", required=True)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--profile", help="write the sampled residual landscape as CSV")
    s.set_defaults(func=cmd_cone)

    s = sub.add_parser("constant-rank", parents=[common, sampled], help="sampled constant-rank check")
    s.add_argument("--op", required=True)
    s.add_argument("--rank-tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_constant_rank)

    s = sub.add_parser("catalog", parents=[common], help="list or write catalog operators")
    s.add_argument("--list", action="store_true")
    s.add_argument("--write", metavar="DIR", help="write operator spec files into DIR")
    s.set_defaults(func=cmd_catalog)

    s = sub.add_parser("kvector", parents=[common], help="exterior algebra on 'd k c1 .. cN' text")
    s.add_argument("action", choices=["wedge", "interior", "simple", "annihilator", "norm"])
    s.add_argument("operands", nargs="+")
    s.add_argument("--exact", action="store_true", help="rational arithmetic")
    s.set_defaults(func=cmd_kvector)

    s = sub.add_parser("verify", parents=[common, sampled, measured], help="polar-in-cone report")
    s.add_argument("--op", required=True)
    s.add_argument("--report", help="per-cell CSV")
    s.add_argument("--threshold", type=float, default=10.0)
    s.add_argument("--tol", type=float, default=1e-4)
    s.add_argument("--tests", type=int, default=32, help="test functions for the weak residual")
    s.add_argument("--min-fraction", type=float, default=0.99)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("blowup", parents=[common, measured], help="normalized blow-up")
    s.add_argument("--x0", required=True)
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--out-cells", type=int, default=64)
    s.add_argument("--out", help=".csv or GMES1 output")
    s.set_defaults(func=cmd_blowup)

    s = sub.add_parser("multiplier", help="Fourier multiplier experiments")
    msub = s.add_subparsers(dest="mode")
    m = msub.add_parser("demo", parents=[common], help="regularization experiment")
    m.add_argument("--op", required=True)
    m.add_argument("--p0", required=True)
    m.add_argument("--scenario", help="JSON file or inline JSON")
    m.add_argument("--out", help="per-term CSV")
    m.set_defaults(func=cmd_multiplier)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.version:
        sys.stdout.write(_version_text())
        return EXIT_OK
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return EXIT_ERROR
    if getattr(args, "threads", None):
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    from .errors import AfreeError

    try:
        return args.func(args)
    except (CliError, AfreeError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
