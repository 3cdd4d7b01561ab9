"""Parameter grids and Monte Carlo campaigns over a base scenario.

A sweep spec is a TOML document::

    [sweep]
    n_runs = 100          # optional for a pure grid (defaults to the grid size)

    [grid]                # cartesian product, cycled over run indices
    "launcher.chamber_pressure_bar" = [5.5, 6.2, 6.9]

    [monte_carlo]         # independent draw per run
    "wind.gust_std" = { uniform = [0.5, 2.0] }
    "launcher.launch_azimuth" = { normal = [0.0, 0.05] }

Run ``i`` simulates with seed ``base + i`` (``base`` is the scenario seed),
so a one-run sweep repeats :func:`tubelaunch.runner.run` exactly. Monte Carlo
draws come from their own stream keyed on ``(base, i)``. Rows are ordered by
run index whatever order the workers finish in, and a failed run still gets
its row.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from tubelaunch.errors import ConfigError, IntegrationFault, LaunchFailure
from tubelaunch.report import RunReport
from tubelaunch.runner import run
from tubelaunch.scenario import Scenario

STATUS_OK = "ok"
STATUS_LAUNCH = "launch_failure"
STATUS_FAULT = "integration_fault"
STATUS_CONFIG = "config_error"

RESULT_COLUMNS = (
    "apogee", "max_tilt_ballistic_deg", "final_horizontal_drift", "reached_position_control",
    "no_tumble", "spool_before_apogee", "success", "tumble", "end_time", "final_phase",
)
DISTRIBUTIONS = ("uniform", "normal")


@dataclass(frozen=True)
class SweepSpec:
    grid: Mapping[str, tuple] = field(default_factory=dict)
    monte_carlo: Mapping[str, tuple] = field(default_factory=dict)  # key -> (dist, a, b)
    n_runs: Optional[int] = None

    def __post_init__(self) -> None:
        for k, vals in self.grid.items():
            if len(vals) == 0:
                raise ConfigError(f"grid axis {k!r} is empty")
        for k, (dist, a, b) in self.monte_carlo.items():
            if dist not in DISTRIBUTIONS:
                raise ConfigError(f"{k}: unknown distribution {dist!r}")
            if dist == "uniform" and not a <= b:
                raise ConfigError(f"{k}: uniform bounds out of order")
            if dist == "normal" and b < 0:
                raise ConfigError(f"{k}: negative standard deviation")
        if set(self.grid) & set(self.monte_carlo):
            raise ConfigError("a key cannot be both gridded and randomised")
        if self.n_runs is not None and self.n_runs < 1:
            raise ConfigError("n_runs must be at least 1")

    @property
    def keys(self) -> tuple:
        return tuple(self.grid) + tuple(self.monte_carlo)

    def grid_points(self) -> list[dict]:
        names = list(self.grid)
        return [dict(zip(names, combo)) for combo in itertools.product(*(self.grid[n] for n in names))]

    def resolve_runs(self, n_runs: Optional[int]) -> int:
        n = n_runs if n_runs is not None else self.n_runs
        if n is None:
            n = len(self.grid_points()) if self.grid else 1
        if n < 1:
            raise ConfigError("n_runs must be at least 1")
        return n


def spec_from_dict(data: Mapping[str, Any]) -> SweepSpec:
    unknown = set(data) - {"sweep", "grid", "monte_carlo"}
    if unknown:
        raise ConfigError(f"unknown sweep table(s): {', '.join(sorted(unknown))}")
    head = dict(data.get("sweep", {}))
    n = head.pop("n_runs", None)
    if head:
        raise ConfigError(f"unknown key(s) in [sweep]: {', '.join(sorted(head))}")
    if n is not None and (isinstance(n, bool) or not isinstance(n, int)):
        raise ConfigError("sweep.n_runs must be an integer")
    grid = {}
    for k, vals in data.get("grid", {}).items():
        if not isinstance(vals, list):
            raise ConfigError(f"grid.{k} must be an array")
        grid[k] = tuple(vals)
    mc = {}
    for k, d in data.get("monte_carlo", {}).items():
        if not isinstance(d, Mapping) or len(d) != 1:
            raise ConfigError(f"monte_carlo.{k} must name exactly one distribution")
        (dist, params), = d.items()
        if not isinstance(params, list) or len(params) != 2:
            raise ConfigError(f"monte_carlo.{k}.{dist} takes two numbers")
        mc[k] = (dist, float(params[0]), float(params[1]))
    return SweepSpec(grid, mc, n)


def load_spec(path) -> SweepSpec:
    try:
        with open(path, "rb") as fh:
            return spec_from_dict(tomllib.load(fh))
    except FileNotFoundError as exc:
        raise ConfigError(f"sweep spec not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def run_overrides(spec: SweepSpec, base_seed: int, index: int) -> dict:
    """Parameter values for run ``index``."""
    values = {}
    if spec.grid:
        points = spec.grid_points()
        values.update(points[index % len(points)])
    if spec.monte_carlo:
        rng = np.random.default_rng(np.random.SeedSequence([int(base_seed), int(index), 1]))
        for k, (dist, a, b) in spec.monte_carlo.items():
            values[k] = float(rng.uniform(a, b)) if dist == "uniform" else float(rng.normal(a, b))
    return values


def report_fields(report: RunReport) -> dict:
    return {
        "apogee": report.apogee,
        "max_tilt_ballistic_deg": report.max_tilt_ballistic_deg,
        "final_horizontal_drift": report.final_horizontal_drift,
        "reached_position_control": report.reached_position_control,
        "no_tumble": report.no_tumble,
        "spool_before_apogee": report.spool_before_apogee,
        "success": report.success,
        "tumble": not report.no_tumble,
        "end_time": report.end_time,
        "final_phase": report.final_phase,
    }


def _one(scn: Scenario, index: int, values: dict) -> dict:
    seed = (scn.sim.seed + index) % 2 ** 64
    row: dict = {"run": index, "seed": seed, **values, "status": STATUS_OK, "error": ""}
    try:
        s = scn
        for k, v in values.items():
            s = s.override(k, v)
        s = s.override("sim.seed", seed)
        row.update(report_fields(run(s).report))
    except LaunchFailure as exc:
        row.update(status=STATUS_LAUNCH, error=str(exc))
    except IntegrationFault as exc:
        row.update(status=STATUS_FAULT, error=str(exc))
    except ConfigError as exc:
        row.update(status=STATUS_CONFIG, error=str(exc))
    return row


def _one_packed(args) -> dict:
    return _one(*args)


@dataclass
class SweepResult:
    keys: tuple
    rows: list  # dicts ordered by run index

    @property
    def columns(self) -> tuple:
        return ("run", "seed") + self.keys + ("status",) + RESULT_COLUMNS + ("error",)

    def statistics(self) -> dict:
        ok = [r for r in self.rows if r["status"] == STATUS_OK]
        apo = np.array([r["apogee"] for r in ok], dtype=float)
        n = len(self.rows)
        return {
            "n_runs": n,
            "n_completed": len(ok),
            "n_failed": n - len(ok),
            "apogee_mean": float(apo.mean()) if len(ok) else math.nan,
            "apogee_std": float(apo.std()) if len(ok) else math.nan,
            "success_fraction": sum(bool(r.get("success")) for r in self.rows) / n,
            "tumble_fraction": sum(bool(r.get("tumble")) for r in self.rows) / n,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = self.columns
        w.writerow(cols)
        for r in self.rows:
            w.writerow([_fmt(r.get(c)) for c in cols])
        buf.write("\n")
        w.writerow(("statistic", "value"))
        for k, v in self.statistics().items():
            w.writerow((k, _fmt(v)))
        return buf.getvalue()

    def write(self, path) -> None:
        Path(path).write_text(self.to_csv())


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def sweep(scn: Scenario, spec: SweepSpec, n_runs: Optional[int] = None, jobs: int = 1) -> SweepResult:
    """Run the campaign; ``jobs > 1`` fans runs out to worker processes."""
    n = spec.resolve_runs(n_runs)
    base = scn.sim.seed
    tasks = [(scn, i, run_overrides(spec, base, i)) for i in range(n)]
    if jobs > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_one_packed, tasks))
    else:
        rows = [_one(*t) for t in tasks]
    rows.sort(key=lambda r: r["run"])
    return SweepResult(spec.keys, rows)
