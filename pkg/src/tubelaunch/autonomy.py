"""Passive-to-active flight pipeline: phase machine, estimator and controllers.

The phase machine walks a fixed chain and never skips or reverses a phase; a
tumble while powered is the only side exit. Controllers run at the control
rate on sensor data only (never on truth):

* attitude: quaternion-error P on angle feeding a rate PD, torques allocated
  to the rotors by a pseudo-inverse mixer with torque desaturation;
* altitude: PI on altitude plus D on climb rate around hover feed-forward,
  open loop and biased upward while the barometer is blacked out;
* position: PD on horizontal position error mapped to a clamped tilt command.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from tubelaunch import rotation
from tubelaunch.constants import GRAVITY
from tubelaunch.dynamics import APOGEE, ARM_LATCHED, TUMBLE, SimEvent
from tubelaunch.errors import ConfigError
from tubelaunch.sensors import SensorFrame
from tubelaunch.vehicle import VehicleConfig, hover_thrust


class AutonomyPhase(enum.Enum):
    IN_TUBE = "InTube"
    BALLISTIC_PASSIVE = "BallisticPassive"
    ATTITUDE_STAB = "AttitudeStab"
    ALTITUDE_CLOSED = "AltitudeClosed"
    DRIFT_WAIT = "DriftWait"
    VIO_INIT = "VioInit"
    POSITION_CONTROL = "PositionControl"
    FAIL_TUMBLE = "FailTumble"

    def __str__(self) -> str:
        return self.value


CHAIN = (
    AutonomyPhase.IN_TUBE,
    AutonomyPhase.BALLISTIC_PASSIVE,
    AutonomyPhase.ATTITUDE_STAB,
    AutonomyPhase.ALTITUDE_CLOSED,
    AutonomyPhase.DRIFT_WAIT,
    AutonomyPhase.VIO_INIT,
    AutonomyPhase.POSITION_CONTROL,
)
POWERED = frozenset(CHAIN[2:])
_NEXT = {a: b for a, b in zip(CHAIN, CHAIN[1:])}


def is_legal_sequence(phases: Sequence[AutonomyPhase]) -> bool:
    """True iff ``phases`` (consecutive distinct phases) is a chain prefix, optionally ending in FailTumble."""
    seq = list(phases)
    if not seq:
        return True
    if seq[-1] is AutonomyPhase.FAIL_TUMBLE:
        if len(seq) < 2 or seq[-2] not in POWERED:
            return False
        seq = seq[:-1]
    return seq == list(CHAIN[: len(seq)])


@dataclass(frozen=True)
class AutonomyConfig:
    # phase guards
    tube_clearance: float = 1.25  # rangefinder reading that proves the tail left the muzzle [m]
    baro_blackout: float = 3.0
    drift_wait: float = 10.0
    rate_eps: float = 0.2
    vz_eps: float = 0.3
    vio_variance_threshold: float = 0.05
    vio_dropout: float = 0.5
    spool_time: float = 0.3
    open_loop_bias: float = 1.1
    control_rate: float = 250.0
    # attitude loop
    att_kp: float = 8.0  # rad/s per rad
    rate_kp: float = 25.0  # 1/s
    rate_kd: float = 0.02  # s^0
    yaw_rate_kp: float = 8.0
    max_rate_cmd: float = 6.0
    # altitude loop [N/m, N/(m s), N s/m]
    alt_kp: float = 8.0
    alt_ki: float = 1.5
    alt_kd: float = 12.0
    alt_integral_limit: float = 5.0  # N
    # horizontal loop [1/s^2, 1/s]
    pos_kp: float = 0.8
    pos_kd: float = 1.2
    max_tilt: float = math.radians(15.0)

    def __post_init__(self) -> None:
        for name in ("baro_blackout", "drift_wait", "rate_eps", "vz_eps", "vio_variance_threshold",
                     "vio_dropout", "spool_time", "control_rate", "max_tilt", "open_loop_bias"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("att_kp", "rate_kp", "rate_kd", "yaw_rate_kp", "alt_kp", "alt_ki", "alt_kd",
                     "pos_kp", "pos_kd", "alt_integral_limit", "max_rate_cmd"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.max_tilt >= 0.5 * math.pi:
            raise ConfigError("max_tilt must be below 90 deg")

    def with_(self, **changes) -> "AutonomyConfig":
        return replace(self, **changes)


@dataclass
class ControllerSetpoint:
    attitude: Optional[np.ndarray] = None
    climb_rate: Optional[float] = None
    altitude: Optional[float] = None
    position: Optional[np.ndarray] = None
    open_loop_throttle: Optional[float] = None


@dataclass(frozen=True)
class PhaseChange:
    time: float
    source: AutonomyPhase
    target: AutonomyPhase
    guard: str


@dataclass
class FsmMemory:
    """What the phase machine remembers between ticks."""

    arm_count: int = 6
    launch_time: float = 0.0
    motors_on_time: Optional[float] = None
    latched: set = field(default_factory=set)
    apogee_time: Optional[float] = None
    violations: list = field(default_factory=list)
    # latest estimated vertical speed, written by the caller each tick
    vertical_speed: float = 0.0

    @property
    def arms_latched(self) -> bool:
        return len(self.latched) >= self.arm_count


SPOOL_DEADLINE_MISSED = "spool-up deadline missed"


def transition(
    phase: AutonomyPhase,
    frame: SensorFrame,
    clock: float,
    events: Iterable[SimEvent],
    cfg: AutonomyConfig,
    memory: FsmMemory,
) -> tuple[AutonomyPhase, Optional[str]]:
    """Advance at most one phase. Returns the new phase and the guard that fired."""
    tumble = False
    for ev in events:
        if ev.kind == ARM_LATCHED:
            memory.latched.add(ev.index)
        elif ev.kind == APOGEE and memory.apogee_time is None:
            memory.apogee_time = ev.time
            on = memory.motors_on_time
            if on is None or ev.time < on + cfg.spool_time:
                memory.violations.append(SPOOL_DEADLINE_MISSED)
        elif ev.kind == TUMBLE:
            tumble = True
    if tumble and phase in POWERED:
        return AutonomyPhase.FAIL_TUMBLE, "tumble"

    P = AutonomyPhase
    if phase is P.IN_TUBE:
        if frame.range_valid and frame.range_distance > cfg.tube_clearance:
            return P.BALLISTIC_PASSIVE, "tube cleared"
    elif phase is P.BALLISTIC_PASSIVE:
        if memory.arms_latched:
            memory.motors_on_time = clock
            return P.ATTITUDE_STAB, "arms latched"
    elif phase is P.ATTITUDE_STAB:
        if frame.baro_valid and clock - memory.launch_time >= cfg.baro_blackout:
            return P.ALTITUDE_CLOSED, "baro valid"
    elif phase is P.ALTITUDE_CLOSED:
        return P.DRIFT_WAIT, "altitude loop closed"
    elif phase is P.DRIFT_WAIT:
        if (
            clock - memory.motors_on_time >= cfg.drift_wait
            and abs(frame.gyro[0]) < cfg.rate_eps
            and abs(frame.gyro[1]) < cfg.rate_eps
            and abs(memory.vertical_speed) < cfg.vz_eps
        ):
            return P.VIO_INIT, "drift complete"
    elif phase is P.VIO_INIT:
        if frame.vio_variance_xy < cfg.vio_variance_threshold:
            return P.POSITION_CONTROL, "vio variance below threshold"
    return phase, None


# ---------------------------------------------------------------- mixer


def mixer_matrix(vehicle: VehicleConfig) -> np.ndarray:
    """Rows map per-rotor thrust to (collective, roll, pitch, yaw) in body axes."""
    layout = vehicle.rotor_layout()
    return np.vstack([
        np.ones(vehicle.arm_count),
        layout[:, 1],
        -layout[:, 0],
        vehicle.rotor_yaw_coeff * layout[:, 2],
    ])


class Mixer:
    def __init__(self, vehicle: VehicleConfig):
        self.B = mixer_matrix(vehicle)
        self.pinv = np.linalg.pinv(self.B)
        self.per_rotor_max = vehicle.max_total_thrust / vehicle.arm_count
        self.saturated = False

    def allocate(self, collective: float, torque: np.ndarray) -> np.ndarray:
        """Per-rotor thrusts with attitude priority.

        The torque part is shrunk only if its spread alone exceeds the rotor
        range; collective then gives way so nothing needs clipping.
        """
        tmax = self.per_rotor_max
        n = self.B.shape[1]
        collective = min(max(collective, 0.0), tmax * n)
        base = self.pinv @ np.array([collective, 0.0, 0.0, 0.0])
        diff = self.pinv @ np.concatenate([[0.0], torque])
        lo, hi = float(diff.min()), float(diff.max())
        scale = 1.0
        if hi - lo > tmax:
            scale = tmax / (hi - lo)
            diff = diff * scale
            lo, hi = lo * scale, hi * scale
        shift = 0.0
        top = float((base + diff).max())
        bottom = float((base + diff).min())
        if top > tmax:
            shift = tmax - top
        elif bottom < 0.0:
            shift = -bottom
        self.saturated = scale < 1.0 or shift != 0.0
        return np.clip(base + diff + shift, 0.0, tmax)


# ---------------------------------------------------------------- controllers


def level_attitude(q: np.ndarray) -> np.ndarray:
    """Zero roll/pitch with the heading of ``q``."""
    return rotation.from_axis_angle([0.0, 0.0, 1.0], rotation.yaw(q))


def tilted_attitude(q: np.ndarray, tilt_xy: np.ndarray) -> np.ndarray:
    """Attitude whose nose leans by ``tilt_xy`` (world x, y components, rad) at the heading of ``q``."""
    mag = float(np.hypot(tilt_xy[0], tilt_xy[1]))
    lean = rotation.from_axis_angle([-tilt_xy[1], tilt_xy[0], 0.0], mag) if mag > 0.0 else rotation.IDENTITY
    return rotation.multiply(lean, level_attitude(q))


class AttitudeController:
    """Angle P feeding a body-rate PD; yaw is rate-damped only."""

    def __init__(self, cfg: AutonomyConfig, vehicle: VehicleConfig, inertia: np.ndarray):
        self.cfg = cfg
        self.inertia = np.asarray(inertia, dtype=float)
        self.dt = 1.0 / cfg.control_rate
        self._prev_err: Optional[np.ndarray] = None

    def reset(self) -> None:
        self._prev_err = None

    def torque(self, attitude: np.ndarray, gyro: np.ndarray, target: np.ndarray) -> np.ndarray:
        c = self.cfg
        qe = rotation.multiply(rotation.conjugate(attitude), target)
        if qe[0] < 0.0:
            qe = -qe
        vec = qe[1:4]
        s = float(np.linalg.norm(vec))
        angle_err = vec * (2.0 * math.atan2(s, qe[0]) / s) if s > 1e-12 else 2.0 * vec
        w_cmd = c.att_kp * angle_err
        w_cmd[2] = 0.0
        n = float(np.hypot(w_cmd[0], w_cmd[1]))
        if n > c.max_rate_cmd:
            w_cmd[:2] *= c.max_rate_cmd / n
        err = w_cmd - np.asarray(gyro, dtype=float)
        derr = np.zeros(3) if self._prev_err is None else (err - self._prev_err) / self.dt
        self._prev_err = err
        gains = np.array([c.rate_kp, c.rate_kp, c.yaw_rate_kp])
        return self.inertia * (gains * err + c.rate_kd * derr)


def attitude_controller(frame: SensorFrame, setpoint: ControllerSetpoint, cfg: AutonomyConfig,
                        vehicle: VehicleConfig, inertia: np.ndarray, collective: Optional[float] = None) -> np.ndarray:
    """Stateless single evaluation: per-rotor thrusts for ``setpoint.attitude``.

    Collective defaults to hover thrust.
    """
    target = setpoint.attitude if setpoint.attitude is not None else level_attitude(frame.attitude)
    tau = AttitudeController(cfg, vehicle, inertia).torque(frame.attitude, frame.gyro, target)
    coll = hover_thrust(vehicle) if collective is None else collective
    return Mixer(vehicle).allocate(coll, tau)


class AltitudeController:
    def __init__(self, cfg: AutonomyConfig, vehicle: VehicleConfig):
        self.cfg = cfg
        self.hover = hover_thrust(vehicle)
        self.dt = 1.0 / cfg.control_rate
        self.integral = 0.0

    def reset(self) -> None:
        self.integral = 0.0

    def collective(self, baro_valid: bool, altitude: float, climb_rate: float, target_altitude: Optional[float],
                   target_climb: float = 0.0) -> float:
        c = self.cfg
        if not baro_valid:
            return c.open_loop_bias * self.hover
        err = 0.0 if target_altitude is None else target_altitude - altitude
        out = self.hover + c.alt_kp * err + c.alt_ki * self.integral - c.alt_kd * (climb_rate - target_climb)
        if target_altitude is not None and c.alt_ki > 0.0:
            lim = c.alt_integral_limit / c.alt_ki
            self.integral = min(max(self.integral + err * self.dt, -lim), lim)
        return out


def altitude_controller(frame: SensorFrame, setpoint: ControllerSetpoint, cfg: AutonomyConfig,
                        vehicle: VehicleConfig, climb_rate: float = 0.0) -> float:
    """Single evaluation with a fresh integrator; uses the baro reading as altitude."""
    ctl = AltitudeController(cfg, vehicle)
    return ctl.collective(frame.baro_valid, frame.baro_altitude, climb_rate, setpoint.altitude,
                          setpoint.climb_rate or 0.0)


@dataclass(frozen=True)
class PositionCommand:
    tilt: np.ndarray  # lean of the thrust axis toward world (x, y) [rad]
    attitude: np.ndarray


def position_controller(position: np.ndarray, velocity: np.ndarray, target: np.ndarray, attitude: np.ndarray,
                        cfg: AutonomyConfig) -> PositionCommand:
    """Horizontal PD to a tilt command clamped at ``cfg.max_tilt``."""
    err = np.asarray(position[:2], dtype=float) - np.asarray(target[:2], dtype=float)
    accel = -cfg.pos_kp * err - cfg.pos_kd * np.asarray(velocity[:2], dtype=float)
    mag = float(np.hypot(accel[0], accel[1]))
    if mag == 0.0:
        tilt = np.zeros(2)
    else:
        angle = min(math.atan(mag / GRAVITY), cfg.max_tilt)
        tilt = accel / mag * angle
    return PositionCommand(tilt, tilted_attitude(attitude, tilt))


# ---------------------------------------------------------------- estimation


class StateEstimator:
    """Complementary filters: baro + accelerometer vertically, VIO + accelerometer horizontally."""

    def __init__(self, dt: float, altitude0: float = 0.0, vert_bw: float = 1.5, horiz_bw: float = 2.0,
                 vio_rate: float = 30.0):
        self.dt = dt
        self.z = altitude0
        self.vz = 0.0
        self.xy = np.zeros(2)
        self.vxy = np.zeros(2)
        self._l1 = 2.0 * 0.8 * vert_bw * dt
        self._l2 = vert_bw * vert_bw * dt
        self._h1 = 2.0 * 0.8 * horiz_bw / vio_rate
        self._h2 = horiz_bw * horiz_bw / vio_rate
        self.vio_locked = False

    def update(self, frame: SensorFrame) -> None:
        acc = rotation.to_matrix(frame.attitude) @ frame.accel
        acc[2] -= GRAVITY
        self.z += self.vz * self.dt + 0.5 * acc[2] * self.dt * self.dt
        self.vz += acc[2] * self.dt
        self.xy += self.vxy * self.dt + 0.5 * acc[:2] * self.dt * self.dt
        self.vxy += acc[:2] * self.dt
        if frame.baro_valid:
            r = frame.baro_altitude - self.z
            self.z += self._l1 * r
            self.vz += self._l2 * r
        if frame.vio_pose is not None:
            if not self.vio_locked:
                self.xy = frame.vio_pose[:2].copy()
                self.vio_locked = True
            r = frame.vio_pose[:2] - self.xy
            self.xy += self._h1 * r
            self.vxy += self._h2 * r


# ---------------------------------------------------------------- autopilot


class Autopilot:
    """Runs the phase machine and the controller cascade once per control tick."""

    def __init__(self, cfg: AutonomyConfig, vehicle: VehicleConfig, inertia: np.ndarray, altitude0: float = 0.0,
                 launch_time: float = 0.0, motors_enabled: bool = True, vio_rate: float = 30.0):
        self.cfg = cfg
        self.vehicle = vehicle
        self.phase = AutonomyPhase.IN_TUBE
        self.memory = FsmMemory(arm_count=vehicle.arm_count, launch_time=launch_time)
        self.history: list[PhaseChange] = []
        self.estimator = StateEstimator(1.0 / cfg.control_rate, altitude0, vio_rate=vio_rate)
        self.attitude = AttitudeController(cfg, vehicle, inertia)
        self.altitude = AltitudeController(cfg, vehicle)
        self.mixer = Mixer(vehicle)
        self.motors_enabled = motors_enabled
        self.altitude_target: Optional[float] = None
        self.position_target: Optional[np.ndarray] = None
        self.regating = False
        self.regate_count = 0
        self._last_vio: Optional[float] = None

    @property
    def vio_open(self) -> bool:
        return self.phase in (AutonomyPhase.VIO_INIT, AutonomyPhase.POSITION_CONTROL)

    @property
    def violations(self) -> list:
        return self.memory.violations

    def spool(self, clock: float) -> float:
        on = self.memory.motors_on_time
        if on is None:
            return 0.0
        return min(1.0, max(0.0, (clock - on) / self.cfg.spool_time))

    def tick(self, frame: SensorFrame, clock: float, events: Sequence[SimEvent] = ()) -> np.ndarray:
        """Consume one sensor frame; returns per-rotor thrust commands [N]."""
        est = self.estimator
        est.update(frame)
        self.memory.vertical_speed = est.vz
        if frame.vio_pose is not None:
            self._last_vio = clock
        new, guard = transition(self.phase, frame, clock, events, self.cfg, self.memory)
        if new is not self.phase:
            self.history.append(PhaseChange(clock, self.phase, new, guard))
            self.phase = new
            if new is AutonomyPhase.POSITION_CONTROL:
                self.position_target = est.xy.copy()
                self._last_vio = clock
        return self._command(frame, clock)

    def _command(self, frame: SensorFrame, clock: float) -> np.ndarray:
        P = AutonomyPhase
        zero = np.zeros(self.vehicle.arm_count)
        if self.phase not in POWERED or not self.motors_enabled:
            return zero
        est = self.estimator
        target = level_attitude(frame.attitude)
        if self.phase is P.POSITION_CONTROL:
            self._check_dropout(frame, clock)
            if not self.regating:
                cmd = position_controller(est.xy, est.vxy, self.position_target, frame.attitude, self.cfg)
                target = cmd.attitude
        if self.phase is P.ATTITUDE_STAB:
            vertical = self.altitude.collective(False, est.z, est.vz, None)
        else:
            if self.altitude_target is None and abs(est.vz) < self.cfg.vz_eps:
                self.altitude_target = est.z
            vertical = self.altitude.collective(frame.baro_valid, est.z, est.vz, self.altitude_target)
        # hold the vertical component when tilted
        cos_tilt = max(float(rotation.body_z_world(frame.attitude)[2]), 0.5)
        collective = vertical / cos_tilt
        tau = self.attitude.torque(frame.attitude, frame.gyro, target)
        return self.spool(clock) * self.mixer.allocate(collective, tau)

    def _check_dropout(self, frame: SensorFrame, clock: float) -> None:
        if not self.regating:
            if self._last_vio is not None and clock - self._last_vio > self.cfg.vio_dropout:
                # hold altitude and level until the VIO variance gate passes again
                self.regating = True
                self.regate_count += 1
                self._regate_since = clock
        elif frame.vio_variance_xy < self.cfg.vio_variance_threshold and self._last_vio is not None \
                and self._last_vio > self._regate_since:
            self.regating = False
            self.position_target = self.estimator.xy.copy()
