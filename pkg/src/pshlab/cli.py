from __future__ import annotations

import argparse
import asyncio
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, NoReturn, Sequence

from setproctitle import setproctitle

from pshlab.emit import emit_csv, emit_json, emit_kernel_csv, emit_rows_csv
from pshlab.errors import PshLabError, ScenarioError
from pshlab.runner import Report, run_scenario
from pshlab.scenario import SCHEMA_VERSION, Scenario, load_scenario, parse_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
CLI_FAMILY = "cli"
CLI_INTEGRAND = "cli"
FAMILY_COMMANDS = ("lelong", "lct", "cse", "restriction-scan", "scan", "probe", "bergman")


class _Parser(argparse.ArgumentParser):
    # usage errors share the parse-error exit code
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ##################################################################
# build parser
# one subcommand per operation family plus `run` for scenario files
def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pshlab", description="plurisubharmonic singularity invariants and level sets")
    parser.add_argument("--verbose", "-v", action="store_true", help="log at debug level to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="execute a scenario file")
    run.add_argument("scenario")
    run.add_argument("--threads", type=int, default=None)
    _add_output(run)
    run.add_argument("--csv", default=None, help="also flatten clouds to this csv file")

    for name in ("lelong", "lct", "cse"):
        p = sub.add_parser(name, help=f"{name} at a point")
        _add_family(p, "--config", "--family")
        p.add_argument("--x", nargs="+", required=True, help="point coordinates, e.g. 0 0.5+0.1j")
        p.add_argument("--method", choices=["auto", "radial"] if name == "lelong" else ["auto", "bisection"])
        p.add_argument(
            "--tol",
            type=float,
            default=None,
            help="largest accepted slope uncertainty" if name == "lelong" else "bisection bracket width",
        )
        _add_output(p)

    restriction = sub.add_parser("restriction-scan", help="generic fiber exponent over parameter samples")
    _add_family(restriction, "--config", "--family")
    restriction.add_argument("--tol", type=float, default=None, help="relative size of a vanishing coefficient")
    _add_output(restriction)

    for name in ("scan", "probe"):
        p = sub.add_parser(name, help="level-set cloud" if name == "scan" else "analyticity probe of a cloud")
        _add_family(p, "--family", "--config")
        p.add_argument("--kind", choices=["E", "X", "F", "Y"], required=True)
        p.add_argument("--c", type=float, required=True)
        _add_grid(p)
        if name == "probe":
            p.add_argument("--max-degree", type=int, default=10)
        _add_output(p)

    bergman = sub.add_parser("bergman", help="weighted bergman kernel on the diagonal")
    _add_family(bergman, "--family", "--config")
    bergman.add_argument("--c", type=float, required=True)
    bergman.add_argument("--cap", type=int, default=8, help="total degree cap of the monomial basis")
    bergman.add_argument("--at", nargs="*", default=[], help="z:w pairs, e.g. 0:0.5")
    _add_grid(bergman)
    _add_output(bergman)

    stability = sub.add_parser("stability", help="integral stability checks")
    stability.add_argument("--integrand", default=None, help="integrand config: a JSON file or inline JSON")
    stability.add_argument("--check", choices=["nondeg", "eta", "hyp", "family", "siu", "nb"], required=True)
    stability.add_argument("--params", default="{}", help="check parameters as JSON")
    stability.add_argument("--phi", default=None, help="weight expression as JSON (siu, nb)")
    stability.add_argument("--name", default=None, help="integrand to take from a scenario file")
    stability.add_argument("--n", type=int, default=1)
    stability.add_argument("--m", type=int, default=0)
    _add_output(stability)

    catalog = sub.add_parser("catalog", help="plot-ready rows for the worked counterexamples")
    catalog.add_argument("--example", choices=["wang", "li"], required=True)
    catalog.add_argument("--c", type=float, default=None)
    catalog.add_argument("--depth", type=int, default=None)
    catalog.add_argument("--grid", default=None, help="parameter values: a JSON list or comma-separated")
    _add_output(catalog)
    return parser


# ##################################################################
# add family
# a family config (file or inline JSON) or a bare --phi expression;
# the first flag is the documented one, the second an alias
def _add_family(p: argparse.ArgumentParser, flag: str, alias: str) -> None:
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument(flag, alias, dest="config", help="family config: a JSON file or inline JSON")
    source.add_argument("--phi", help="expression tree as JSON, with --n and --m")
    p.add_argument("--name", default=None, help="family to take from a scenario file with several")
    p.add_argument("--n", type=int, default=None, help="fiber variables")
    p.add_argument("--m", type=int, default=0, help="parameter variables")
    p.add_argument("--seed", type=int, default=0)


def _add_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--grid",
        default=None,
        help='grid spec: points per real axis (21), per-axis values ([[0, 0.5], [0]]) or {"points": 21, "shrink": 0.9}',
    )


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="write the report here (.json or .csv) instead of stdout")


def _complex(text: str) -> list[float]:
    try:
        value = complex(text.replace(" ", ""))
    except ValueError as err:
        raise ScenarioError(f"not a complex number: {text!r}") from err
    return [value.real, value.imag]


def _json_arg(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioError(f"{what} is not valid JSON: {err.msg}", line=err.lineno, column=err.colno) from err


# ##################################################################
# config arg
# inline JSON when the text opens an object, a file path otherwise
def _config_arg(text: str, what: str) -> Any:
    if text.lstrip().startswith("{"):
        return _json_arg(text, what)
    path = Path(text)
    try:
        body = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ScenarioError(f"cannot read {what} {path}: {err}") from err
    return _json_arg(body, f"{what} {path}")


# ##################################################################
# pick
# a scenario-shaped config names its entries under `key`; anything else
# is a single entry
def _pick(raw: Any, key: str, name: str | None, what: str) -> Any:
    if not isinstance(raw, dict) or key not in raw:
        return raw
    entries = raw[key]
    if not isinstance(entries, dict) or not entries:
        raise ScenarioError(f"{what} declares no {key}")
    name = name or next(iter(entries))
    if name not in entries:
        raise ScenarioError(f"unknown {key[:-1]} {name!r} in {what}")
    return entries[name]


def _family_from_args(args: argparse.Namespace) -> Any:
    if args.phi is not None:
        if args.n is None:
            raise ScenarioError("--phi needs --n")
        return {"phi": _json_arg(args.phi, "--phi"), "n": args.n, "m": args.m}
    return _pick(_config_arg(args.config, "family config"), "families", args.name, "family config")


# ##################################################################
# grid arg
# an integer is points per axis, a list is per-axis values, an object
# is taken as it stands
def _grid_arg(text: str) -> Any:
    raw = _json_arg(text, "--grid")
    if isinstance(raw, int) and not isinstance(raw, bool):
        return {"points": raw}
    if isinstance(raw, list):
        return {"axes": raw}
    return raw


def _values_arg(text: str) -> list[float]:
    if text.lstrip().startswith("["):
        return _json_arg(text, "--grid")
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError as err:
        raise ScenarioError(f"--grid is not a list of numbers: {text!r}") from err


# ##################################################################
# scenario from args
# every subcommand except `run` becomes a one-task scenario, validated
# by the same models as a scenario file
def scenario_from_args(args: argparse.Namespace) -> Scenario:
    raw: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "seed": getattr(args, "seed", 0)}
    if args.command in FAMILY_COMMANDS:
        raw["families"] = {CLI_FAMILY: _family_from_args(args)}
    elif args.command == "stability" and args.phi is not None:
        raw["families"] = {CLI_FAMILY: {"phi": _json_arg(args.phi, "--phi"), "n": args.n, "m": args.m}}
    raw["tasks"] = [_task_from_args(args)]
    if getattr(args, "integrand", None) is not None:
        integrand = _config_arg(args.integrand, "integrand config")
        raw["integrands"] = {CLI_INTEGRAND: _pick(integrand, "integrands", args.name, "integrand config")}
    return parse_scenario(json.dumps(raw))


def _task_from_args(args: argparse.Namespace) -> dict[str, Any]:
    command = args.command
    if command in ("lelong", "lct", "cse"):
        task: dict[str, Any] = {"op": command, "family": CLI_FAMILY, "x": [_complex(v) for v in args.x]}
        if args.method:
            task["method"] = args.method
        if args.tol is not None:
            task["tol"] = args.tol
        return task
    if command == "restriction-scan":
        task = {"op": "restriction", "family": CLI_FAMILY}
        if args.tol is not None:
            task["tol"] = args.tol
        return task
    if command in ("scan", "probe"):
        task = {"op": command, "family": CLI_FAMILY, "kind": args.kind, "c": args.c}
        if args.grid is not None:
            task["grid"] = _grid_arg(args.grid)
        if command == "probe":
            task["max_degree"] = args.max_degree
        return task
    if command == "bergman":
        points = []
        for pair in args.at:
            z, _, w = pair.partition(":")
            points.append([[_complex(v) for v in z.split(",")], [_complex(v) for v in w.split(",") if v]])
        task = {"op": "bergman", "family": CLI_FAMILY, "c": args.c, "points": points, "degree_cap": args.cap}
        if args.grid is not None:
            task["grid"] = _grid_arg(args.grid)
        return task
    if command == "stability":
        params = _json_arg(args.params, "--params")
        if args.phi is not None:
            params.setdefault("weight", CLI_FAMILY)
        task = {"op": "stability", "check": args.check, "params": params}
        if args.integrand is not None:
            task["integrand"] = CLI_INTEGRAND
        return task
    if command == "catalog":
        grid = None if args.grid is None else _values_arg(args.grid)
        return {"op": "catalog", "example": args.example, "c": args.c, "depth": args.depth, "grid": grid}
    raise ScenarioError(f"unknown command {command!r}")


# ##################################################################
# emit
# stdout json by default; a .csv target takes the shape of the command:
# kernel samples for bergman, catalog rows, cloud rows otherwise
def _emit(report: Report, out: str | None, command: str, scenario: Scenario) -> None:
    if out is None:
        sys.stdout.write(report.to_json() + "\n")
    elif not out.endswith(".csv"):
        emit_json(report, out)
    elif command == "bergman":
        _emit_kernel(report, out, scenario)
    elif command == "catalog":
        payload = report.results[0].payload or {}
        emit_rows_csv(payload.get("rows", []), out)
    else:
        emit_csv(report, out)


# ##################################################################
# emit kernel
# one row per evaluated point and per scanned grid point; the scan
# stores log K, so K is recovered as exp(log K)
def _emit_kernel(report: Report, path: str, scenario: Scenario) -> None:
    family = scenario.family(CLI_FAMILY)
    if family.n != 1 or family.m > 1:
        raise ScenarioError("kernel csv holds one fiber and at most one parameter coordinate")
    rows = []
    for result in report.results:
        payload = result.payload or {}
        for sample in payload.get("kernel", []):
            w = _plain_complex(sample["w"][0]) if sample["w"] else 0j
            rows.append((_plain_complex(sample["z"][0]), w, float(sample["K"])))
        for point in payload.get("pole_scan", {}).get("points", []):
            z, *rest = point["coords"]
            w = _plain_complex(rest[0]) if rest else 0j
            rows.append((_plain_complex(z), w, math.exp(float(point["value"]))))
    emit_kernel_csv(rows, path)


def _plain_complex(value: dict[str, Any]) -> complex:
    return complex(float(value["re"]), float(value["im"]))


# ##################################################################
# main
# exit 0 when every task succeeded, 2 when some failed or were
# inconclusive, 1 on usage and parse errors
def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setproctitle(f"pshlab {args.command}")
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "run":
            scenario = load_scenario(args.scenario)
            report = asyncio.run(run_scenario(scenario, threads=args.threads))
            out = args.out or scenario.outputs.json_path
            csv_path = args.csv or scenario.outputs.csv_path
        else:
            scenario = scenario_from_args(args)
            report = asyncio.run(run_scenario(scenario, threads=1))
            out, csv_path = args.out, None
        _emit(report, out, args.command, scenario)
        if csv_path:
            emit_csv(report, csv_path)
    except ScenarioError as err:
        where = f" (line {err.line}, column {err.column})" if err.line is not None else ""
        sys.stderr.write(f"pshlab: {err}{where}\n")
        return EXIT_USAGE
    except PshLabError as err:
        sys.stderr.write(f"pshlab: {type(err).__name__}: {err}\n")
        return EXIT_USAGE
    for result in report.results:
        if not result.success:
            logger.warning("task %d (%s) failed: %s", result.index, result.task, result.error)
    return report.exit_code
