"""End-to-end run: tube phase, free flight, sensing and autonomy in one loop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from tubelaunch import rotation, telemetry
from tubelaunch.autonomy import Autopilot
from tubelaunch.constants import GRAVITY
from tubelaunch.dynamics import TUBE_EXIT, ForceModel, RigidBodyState, SimEvent, Simulator, TumbleConfig
from tubelaunch.launcher import simulate_tube_phase, tube_kinematics
from tubelaunch.report import RunReport, build_report
from tubelaunch.scenario import Scenario
from tubelaunch.sensors import SensorSuite
from tubelaunch.vehicle import DeploymentState, mass_properties

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    report: RunReport
    rows: list
    columns: tuple
    csv_path: Optional[Path] = None

    def csv_text(self) -> str:
        return telemetry.dumps(self.rows, len(self.columns) - len(telemetry.columns(0)))


def run_streams(seed: int):
    """Independent generators for sensors, wind gusts and tip-off, all from one seed."""
    children = np.random.SeedSequence(int(seed)).spawn(3)
    return [np.random.default_rng(c) for c in children]


class GustModel:
    """Ornstein-Uhlenbeck gust per axis, exact discretisation."""

    def __init__(self, std: float, tau: float, rng: np.random.Generator):
        self.std = std
        self.tau = tau
        self.rng = rng
        self.value = std * rng.standard_normal(3) if std > 0.0 else np.zeros(3)

    def advance(self, dt: float) -> np.ndarray:
        if self.std > 0.0:
            a = math.exp(-dt / self.tau)
            self.value = a * self.value + self.std * math.sqrt(1.0 - a * a) * self.rng.standard_normal(3)
        return self.value


def run(scn: Scenario, csv_path=None, on_row: Optional[Callable] = None) -> RunResult:
    """Execute one scenario. With ``csv_path`` rows stream to disk as they are produced.

    Raises :class:`LaunchFailure` (after writing the CSV header) when the
    launcher cannot fire, and :class:`IntegrationFault` on a non-finite state
    (rows written so far are kept).
    """
    v = scn.vehicle
    cols = telemetry.columns(v.arm_count)
    writer = telemetry.TelemetryWriter(csv_path, v.arm_count) if csv_path is not None else None
    rows: list = []
    try:
        _loop(scn, rows, writer, on_row)
    finally:
        if writer is not None:
            writer.close()
    return RunResult(build_report(cols, rows), rows, cols, Path(csv_path) if csv_path is not None else None)


def _loop(scn: Scenario, rows: list, writer, on_row) -> None:
    v, L, a, sim_cfg = scn.vehicle, scn.launcher, scn.aero, scn.sim
    exit_state = simulate_tube_phase(L, v)
    rng_sensor, rng_wind, rng_tip = run_streams(sim_cfg.seed)

    folded = DeploymentState.folded(v)
    deployed_inertia = mass_properties(v, DeploymentState.deployed(v)).body_inertia
    ctrl_dt = 1.0 / scn.autonomy.control_rate
    steps = int(round(ctrl_dt / sim_cfg.dt))
    attitude0 = rotation.between([0.0, 0.0, 1.0], L.axis)

    suite = SensorSuite(scn.sensors, launch_time=0.0)
    suite.rng = rng_sensor
    pilot = Autopilot(scn.autonomy, v, deployed_inertia, altitude0=float(tube_kinematics(L, exit_state, 0.0)[0][2]),
                      launch_time=0.0, motors_enabled=sim_cfg.motors_enabled, vio_rate=scn.sensors.vio_rate)
    gust = GustModel(scn.wind.gust_std, scn.wind.gust_tau, rng_wind)
    mean_wind = np.asarray(scn.wind.mean, dtype=float)
    tip = rng_tip.standard_normal(2) * sim_cfg.tipoff_rate_std
    regates = 0

    def emit(t, state, frame, thrusts, notes):
        vio = frame.vio_pose
        row = (
            (t,) + tuple(float(x) for x in state.position) + tuple(float(x) for x in state.velocity)
            + tuple(float(x) for x in state.attitude) + tuple(float(x) for x in state.angular_rate)
            + tuple(float(x) for x in frame.accel) + tuple(float(x) for x in frame.gyro)
            + (frame.baro_altitude, frame.baro_valid, frame.range_distance, frame.range_valid)
            + ((None, None, None, None) if vio is None else tuple(float(x) for x in vio))
            + (frame.vio_variance_xy, pilot.phase.value)
            + tuple(float(x) for x in thrusts) + ("|".join(notes),)
        )
        rows.append(row)
        if writer is not None:
            writer.write(row)
        if on_row is not None:
            on_row(row)

    def notes_for(events, n_hist, n_viol):
        notes = [telemetry.annotation_event(e.kind, e.time, e.index) for e in events]
        notes += [telemetry.annotation_phase(h.source.value, h.target.value, h.guard) for h in pilot.history[n_hist:]]
        notes += [telemetry.annotation_violation(x) for x in pilot.violations[n_viol:]]
        for h in pilot.history[n_hist:]:
            log.info("t=%.3f phase %s -> %s (%s)", h.time, h.source.value, h.target.value, h.guard)
        return notes

    # ---- in the tube: kinematic rails, vehicle folded
    tail_folded = v.body_length - mass_properties(v, folded).com_from_nose
    t = 0.0
    k = 0
    while t < exit_state.time_in_tube:
        pos, vel = tube_kinematics(L, exit_state, t)
        state = RigidBodyState(pos, vel, attitude0, np.zeros(3))
        sf_world = exit_state.peak_acceleration * L.axis + np.array([0.0, 0.0, GRAVITY])
        sf_body = rotation.to_matrix(attitude0).T @ sf_world
        frame = suite.sample(t, state, sf_body, vio_open=False, tail_offset=tail_folded)
        n_hist, n_viol = len(pilot.history), len(pilot.violations)
        thrusts = pilot.tick(frame, t, ())
        emit(t, state, frame, thrusts, notes_for((), n_hist, n_viol))
        k += 1
        t = k * ctrl_dt

    # ---- free flight
    t_exit = exit_state.time_in_tube
    state0 = RigidBodyState(
        exit_state.exit_position,
        exit_state.exit_velocity + np.asarray(sim_cfg.platform_velocity, dtype=float),
        attitude0,
        np.array([tip[0], tip[1], 0.0]),
    )
    model = ForceModel(v, a, wind=mean_wind + gust.value, hinges_free=sim_cfg.hinges_free,
                       include_inertia_rate=sim_cfg.include_inertia_rate)
    sim = Simulator(model, state0, folded, dt=sim_cfg.dt, t0=t_exit, tumble=TumbleConfig())
    pending = [SimEvent(TUBE_EXIT, t_exit)]
    end = sim_cfg.duration
    if not sim_cfg.motors_enabled and sim_cfg.passive_window > 0.0:
        end = min(end, t_exit + sim_cfg.passive_window)
    thrusts = np.zeros(v.arm_count)
    while True:
        tail = v.body_length - sim.mass.com_from_nose
        frame = suite.sample(sim.time, sim.state, sim.specific_force_body(), vio_open=pilot.vio_open, tail_offset=tail)
        n_hist, n_viol = len(pilot.history), len(pilot.violations)
        thrusts = pilot.tick(frame, sim.time, pending)
        if pilot.regate_count != regates:
            regates = pilot.regate_count
            suite.reset_vio()
        notes = notes_for(pending, n_hist, n_viol)
        done = sim.landed or sim.time >= end - 1e-9
        if done:
            notes.append(telemetry.annotation_event(telemetry.RUN_END, sim.time))
        emit(sim.time, sim.state, frame, thrusts, notes)
        if done:
            break
        sim.set_inputs(thrusts=thrusts, wind=mean_wind + gust.advance(ctrl_dt))
        pending = sim.advance(steps)
