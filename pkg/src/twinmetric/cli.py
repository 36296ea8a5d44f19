"""Command line front end: ``twinmetric <verb> [options]``.

Verbs: roots, congruence, verify, realify, report.  Exit codes: 0 pass,
1 check failure, 2 domain-level non-result, 64 usage or config error,
70 internal error.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path

import numpy as np

from . import report as R
from .antikahler import holomorphy_check, realify
from .config import Workspace
from .errors import ConfigError, TwinMetricError
from .matrix_core import simultaneous_congruence
from .scalar_root import LagrangianSpec, classify_roots
from .suites import run_suite

EXIT_OK, EXIT_FAIL, EXIT_DOMAIN, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 64, 70


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _tolerance(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {name!r} needs a number, got {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="workspace YAML document")
    common.add_argument("--seed", type=int, help="override the config's default seed")
    common.add_argument("--tolerance", type=_tolerance, action="append", default=[],
                        metavar="NAME=VAL", help="override a named tolerance (repeatable)")
    common.add_argument("--out", type=Path, help="write the report here instead of stdout")
    common.add_argument("--format", choices=("text", "structured"), default="text")

    parser = _Parser(prog="twinmetric", description="Twin metric and K-structure verification.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("roots", parents=[common], help="classify roots of the scalar equation")
    p.add_argument("lagrangian", nargs="?", help="lagrangian name in the config")
    p.add_argument("--coefficients", help="ascending comma-separated coefficients of f")
    p.add_argument("--dim", type=int, help="dimension n (with --coefficients)")

    p = sub.add_parser("congruence", parents=[common], help="simultaneous congruence of a twin pair")
    p.add_argument("h_file", type=Path)
    p.add_argument("g_file", type=Path)

    p = sub.add_parser("verify", parents=[common], help="run a named suite")
    p.add_argument("suite")
    p.add_argument("--timings", action="store_true",
                   help="include wall times (reports are then no longer byte-identical)")

    p = sub.add_parser("realify", parents=[common], help="realify a holomorphic metric")
    p.add_argument("holomorphic", help="holomorphic metric name in the config")
    p.add_argument("--point", help="comma-separated real chart point (default: origin)")

    p = sub.add_parser("report", parents=[common], help="render a structured report file")
    p.add_argument("report_file", type=Path)
    return parser


def read_matrix(path: Path) -> np.ndarray:
    """Plain text: first line n, then n rows of n numbers."""
    try:
        lines = [ln.split("#")[0].split() for ln in path.read_text().splitlines()]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    lines = [ln for ln in lines if ln]
    try:
        n = int(lines[0][0]) if len(lines[0]) == 1 else -1
        rows = [[float(x) for x in ln] for ln in lines[1:]]
    except (IndexError, ValueError):
        raise UsageError(f"{path}: expected n on the first line followed by n rows of numbers") from None
    if n < 1 or len(rows) != n or any(len(r) != n for r in rows):
        raise UsageError(f"{path}: expected {n if n > 0 else 'n'} rows of {n if n > 0 else 'n'} numbers")
    return np.array(rows)


def _workspace(args) -> Workspace:
    if args.config is None:
        raise UsageError(f"{args.verb} needs --config")
    return Workspace.load(args.config, args.seed, dict(args.tolerance))


def _cmd_roots(args) -> tuple[dict, int]:
    if args.coefficients is not None:
        if args.dim is None:
            raise UsageError("--coefficients needs --dim")
        try:
            coeffs = tuple(float(c) for c in args.coefficients.split(","))
            spec = LagrangianSpec(coeffs, args.dim)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        source = "command line"
    else:
        if args.lagrangian is None:
            raise UsageError("roots needs a lagrangian name or --coefficients/--dim")
        spec = _workspace(args).lagrangian(args.lagrangian)
        source = args.lagrangian
    rep = classify_roots(spec)
    doc = {
        "schema": R.SCHEMA,
        "kind": "roots",
        "lagrangian": source,
        "n": spec.n,
        "coefficients": list(spec.coefficients),
        "identically_degenerate": rep.identically_degenerate,
        "roots": [{"c": r.c, "multiplicity": r.multiplicity, "f_prime_at_c": r.f_prime_at_c,
                   "epsilon": r.epsilon, "admissible": r.admissible,
                   "almost_tangent": r.almost_tangent} for r in rep.roots],
        "passed": bool(rep.admissible),
    }
    if rep.identically_degenerate:
        doc["explanation"] = ("f'(S) S - (n/4) f(S) vanishes identically, "
                              "so every S is a root and none is isolated")
    elif not rep.admissible:
        doc["explanation"] = "no simple root with f'(c) != 0 and c != 0"
    return doc, EXIT_OK if rep.admissible else EXIT_DOMAIN


def _cmd_congruence(args) -> tuple[dict, int]:
    h, g = read_matrix(args.h_file), read_matrix(args.g_file)
    if h.shape != g.shape:
        raise UsageError(f"h is {h.shape[0]}x{h.shape[0]} but g is {g.shape[0]}x{g.shape[0]}")
    tol = 1e-9
    if args.tolerance:
        overrides = dict(args.tolerance)
        unknown = set(overrides) - {"congruence"}
        if unknown:
            raise UsageError(f"congruence only accepts the 'congruence' tolerance, got {sorted(unknown)}")
        tol = overrides["congruence"]
    dec = simultaneous_congruence(h, g, tol)
    rh, rg = dec.residuals(h, g)
    doc = {
        "schema": R.SCHEMA,
        "kind": "congruence",
        "case": dec.case_tag,
        "k": dec.k,
        "R": dec.R,
        "D_h": dec.D_h,
        "D_g": dec.D_g,
        "residual_h": rh,
        "residual_g": rg,
        "tolerance": tol,
        "passed": max(rh, rg) <= tol,
    }
    return doc, EXIT_OK if doc["passed"] else EXIT_FAIL


def _cmd_verify(args) -> tuple[dict, int]:
    ws = _workspace(args)
    results = run_suite(ws, args.suite)
    doc = R.verify_document(args.config.name, args.suite, ws.seed, results, timings=args.timings)
    return doc, EXIT_OK if doc["passed"] else EXIT_FAIL


def _cmd_realify(args) -> tuple[dict, int]:
    ws = _workspace(args)
    G = ws.holomorphic(args.holomorphic)
    if args.point is None:
        point = np.zeros(2 * G.m)
    else:
        try:
            point = np.array([float(x) for x in args.point.split(",")])
        except ValueError:
            raise UsageError(f"--point needs comma-separated numbers, got {args.point!r}") from None
        if point.shape != (2 * G.m,):
            raise UsageError(f"--point needs {2 * G.m} coordinates "
                             f"({', '.join(G.real_chart.coords)})")
    plan = G.plan(16, ws.seed)
    dbar = holomorphy_check(G, plan)
    tol = ws.tolerance("holomorphy")
    real = realify(G, plan, check=True, tol=tol)
    doc = {
        "schema": R.SCHEMA,
        "kind": "realify",
        "holomorphic": args.holomorphic,
        "coords": list(real.metric.chart.coords),
        "point": point,
        "metric": real.metric.at(point),
        "J": real.J.at(point),
        "signature": list(real.signature(point)),
        "holomorphy_residual": dbar,
        "tolerance": tol,
        "passed": dbar <= tol and tuple(real.signature(point)) == (G.m, G.m),
    }
    return doc, EXIT_OK if doc["passed"] else EXIT_FAIL


def _cmd_report(args) -> tuple[dict, int]:
    try:
        doc = R.loads(args.report_file.read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {args.report_file}: {exc.strerror}") from None
    except ValueError as exc:
        raise UsageError(f"{args.report_file} is not a structured report: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema") != R.SCHEMA:
        raise UsageError(f"{args.report_file} does not declare schema {R.SCHEMA}")
    return doc, EXIT_OK if doc.get("passed") else EXIT_FAIL


COMMANDS = {
    "roots": _cmd_roots,
    "congruence": _cmd_congruence,
    "verify": _cmd_verify,
    "realify": _cmd_realify,
    "report": _cmd_report,
}

def _emit(doc: dict, args) -> None:
    text = R.dumps(doc) if args.format == "structured" else R.render_text(doc)
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        doc, code = COMMANDS[args.verb](args)
        _emit(doc, args)
        return code
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (UsageError, ConfigError) as exc:
        print(f"twinmetric: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TwinMetricError as exc:  # domain-level non-result
        print(f"twinmetric: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except Exception:  # noqa: BLE001 - last-resort boundary
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
