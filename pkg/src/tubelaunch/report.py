"""Run summary computed from telemetry rows.

:func:`build_report` is the single implementation used both online (rows held
in memory by the runner) and offline (rows parsed back from CSV), which makes
``analyze(run(s).csv) == run(s).report`` hold exactly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from tubelaunch import telemetry
from tubelaunch.dynamics import TUMBLE, SimEvent

DRIFT_WINDOW = 10.0
BALLISTIC = "BallisticPassive"
POSITION_CONTROL = "PositionControl"
MOTORS_ON = "AttitudeStab"


@dataclass(frozen=True)
class RunReport:
    events: tuple  # SimEvent, in order
    phase_timeline: tuple  # (time, phase) at each change, first row included
    apogee: float  # highest COM altitude [m]
    max_tilt_ballistic_deg: float
    final_horizontal_drift: float  # over the last DRIFT_WINDOW seconds [m]
    reached_position_control: bool
    no_tumble: bool
    spool_before_apogee: bool
    complete: bool
    violations: tuple
    end_time: float
    final_phase: str

    @property
    def success(self) -> bool:
        return self.reached_position_control and self.no_tumble and self.spool_before_apogee

    def phase_time(self, phase: str):
        for t, p in self.phase_timeline:
            if p == phase:
                return t
        return None

    def event_time(self, kind: str):
        for e in self.events:
            if e.kind == kind:
                return e.time
        return None

    def summary(self) -> dict:
        d = asdict(self)
        d["events"] = [f"{e.label}@{e.time:.4f}" for e in self.events]
        d["phase_timeline"] = [[t, p] for t, p in self.phase_timeline]
        d["violations"] = list(self.violations)
        d["success"] = self.success
        return d


def build_report(cols: Sequence[str], rows: Sequence[Sequence]) -> RunReport:
    idx = {c: i for i, c in enumerate(cols)}
    events: list[SimEvent] = []
    violations: list[str] = []
    complete = False
    for r in rows:
        for a in telemetry.split_annotations(r[idx["events"]]):
            if a.startswith("phase:"):
                continue
            if a.startswith("violation:"):
                violations.append(a[len("violation:"):])
                continue
            label, _, t = a.rpartition("@")
            if label == telemetry.RUN_END:
                complete = True
                continue
            events.append(SimEvent.parse(label, float(t)))

    if not rows:
        return RunReport(tuple(events), (), 0.0, 0.0, 0.0, False, True, False, complete, tuple(violations), 0.0, "")

    timeline = []
    last = None
    for r in rows:
        p = r[idx["phase"]]
        if p != last:
            timeline.append((r[0], p))
            last = p
    phases = {p for _, p in timeline}

    arr = np.array([[r[idx[c]] for c in ("time", "x", "y", "z", "qx", "qy")] for r in rows], dtype=float)
    t, x, y, z, qx, qy = arr.T
    apogee = float(np.max(z))

    ballistic = np.array([r[idx["phase"]] == BALLISTIC for r in rows])
    if ballistic.any():
        cos_tilt = 1.0 - 2.0 * (qx[ballistic] ** 2 + qy[ballistic] ** 2)
        max_tilt = math.degrees(float(np.max(np.arccos(np.clip(cos_tilt, -1.0, 1.0)))))
    else:
        max_tilt = 0.0

    start = t[-1] - DRIFT_WINDOW
    k0 = int(np.searchsorted(t, start - 1e-9))
    k0 = min(k0, len(t) - 1)
    drift = float(np.max(np.hypot(x[k0:] - x[k0], y[k0:] - y[k0])))

    motors_on = any(p == MOTORS_ON for p in phases)
    spool_ok = motors_on and "spool-up deadline missed" not in violations
    no_tumble = not any(e.kind == TUMBLE for e in events)
    return RunReport(
        events=tuple(events),
        phase_timeline=tuple(timeline),
        apogee=apogee,
        max_tilt_ballistic_deg=max_tilt,
        final_horizontal_drift=drift,
        reached_position_control=POSITION_CONTROL in phases,
        no_tumble=no_tumble,
        spool_before_apogee=spool_ok,
        complete=complete,
        violations=tuple(violations),
        end_time=float(t[-1]),
        final_phase=rows[-1][idx["phase"]],
    )


def analyze(path) -> RunReport:
    """Recompute the report from a telemetry CSV file."""
    cols, rows = telemetry.read(path)
    return build_report(cols, rows)
