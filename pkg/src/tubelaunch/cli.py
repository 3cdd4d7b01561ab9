"""Command-line entry point.

Exit codes: 0 success, 2 bad configuration or input, 3 launch failure,
4 integration fault. Output files go to ``--out``, else ``$TUBELAUNCH_OUT``,
else the working directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from tubelaunch.errors import ConfigError, IntegrationFault, LaunchFailure, TelemetryParseError
from tubelaunch.report import analyze
from tubelaunch.runner import run
from tubelaunch.scaling import scale_scenario
from tubelaunch.scenario import builtin_scenario, dumps_scenario, load_scenario
from tubelaunch.sweep import load_spec, sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_LAUNCH = 3
EXIT_FAULT = 4
OUT_ENV = "TUBELAUNCH_OUT"

log = logging.getLogger("tubelaunch")


def _scenario(ref: str):
    """A TOML path, or the name of a shipped scenario."""
    path = Path(ref)
    if not path.exists() and path.suffix == "":
        path = builtin_scenario(ref)
    return load_scenario(path)


def _out_dir(arg) -> Path:
    out = Path(arg or os.environ.get(OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_simulate(args) -> int:
    scn = _scenario(args.scenario)
    if args.seed is not None:
        scn = scn.override("sim.seed", args.seed)
    for item in args.set or ():
        key, _, raw = item.partition("=")
        scn = scn.override(key, json.loads(raw))
    out = _out_dir(args.out)
    csv_path = out / f"{scn.name}_seed{scn.sim.seed}.csv"
    result = run(scn, csv_path=csv_path)
    summary = result.report.summary()
    summary["csv"] = str(csv_path)
    _print_json(summary)
    return EXIT_OK


def cmd_sweep(args) -> int:
    scn = _scenario(args.scenario)
    spec = load_spec(args.spec)
    result = sweep(scn, spec, n_runs=args.n, jobs=args.jobs)
    out = _out_dir(args.out) / f"{scn.name}_sweep.csv"
    result.write(out)
    stats = result.statistics()
    stats["csv"] = str(out)
    _print_json(stats)
    return EXIT_OK


def cmd_scale(args) -> int:
    scn = scale_scenario(_scenario(args.scenario), args.lam, model_mass=args.model_mass)
    text = dumps_scenario(scn)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_analyze(args) -> int:
    try:
        report = analyze(args.csv)
    except FileNotFoundError:
        raise ConfigError(f"telemetry file not found: {args.csv}") from None
    _print_json(report.summary())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tubelaunch", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v for phase changes, -vv for debug")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one scenario and write its telemetry CSV")
    s.add_argument("scenario", help="scenario TOML, or a shipped name such as 'nominal'")
    s.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    s.add_argument("--seed", type=int)
    s.add_argument("--set", action="append", metavar="TABLE.KEY=VALUE",
                   help="override one scenario value; VALUE is JSON (repeatable)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="grid or Monte Carlo campaign")
    s.add_argument("scenario")
    s.add_argument("--spec", required=True, help="sweep spec TOML")
    s.add_argument("-n", type=int, default=None, help="number of runs (default from the spec)")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("scale", help="emit a Froude-scaled scenario TOML")
    s.add_argument("scenario")
    s.add_argument("--lambda", dest="lam", type=float, required=True, help="length ratio full/model")
    s.add_argument("--model-mass", type=float, help="pin the model's total mass [kg]")
    s.add_argument("-o", "--output", help="write here instead of stdout")
    s.set_defaults(func=cmd_scale)

    s = sub.add_parser("analyze", help="recompute the run report from a telemetry CSV")
    s.add_argument("csv")
    s.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, TelemetryParseError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LaunchFailure as exc:
        print(f"launch failure: {exc}", file=sys.stderr)
        return EXIT_LAUNCH
    except IntegrationFault as exc:
        print(f"integration fault: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
