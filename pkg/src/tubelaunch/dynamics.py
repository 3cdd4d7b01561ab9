"""6-DOF rigid-body integration with spring-driven hinge deployment.

Fixed-step RK4. Translational state is world-frame (z up), rotational state is
a body->world quaternion plus body rates. Mass properties follow the hinge
angles quasi-statically: they are refreshed before every step while anything
is still moving, and the rate-of-inertia term can be switched on for A/B
checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from tubelaunch import kernels, rotation
from tubelaunch.aero import AeroConfig, pack_aero
from tubelaunch.constants import GRAVITY
from tubelaunch.errors import IntegrationFault
from tubelaunch.vehicle import HALF_PI, DeploymentState, MassProperties, VehicleConfig, mass_properties

MAX_DT = 5e-3

TUBE_EXIT = "TubeExit"
ARM_LATCHED = "ArmLatched"
FIN_SETTLED = "FinSettled"
APOGEE = "Apogee"
LANDED = "Landed"
TUMBLE = "Tumble"


@dataclass(frozen=True)
class RigidBodyState:
    position: np.ndarray
    velocity: np.ndarray
    attitude: np.ndarray
    angular_rate: np.ndarray

    def __post_init__(self) -> None:
        for name in ("position", "velocity", "attitude", "angular_rate"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @classmethod
    def at_rest(cls, position=(0.0, 0.0, 0.0)) -> "RigidBodyState":
        return cls(np.asarray(position, dtype=float), np.zeros(3), rotation.IDENTITY.copy(), np.zeros(3))

    @classmethod
    def from_vector(cls, y) -> "RigidBodyState":
        y = np.asarray(y, dtype=float)
        return cls(y[0:3].copy(), y[3:6].copy(), y[6:10].copy(), y[10:13].copy())

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity, self.attitude, self.angular_rate])

    @property
    def tilt(self) -> float:
        return rotation.tilt(self.attitude)


@dataclass(frozen=True)
class SimEvent:
    kind: str
    time: float
    index: Optional[int] = None

    @property
    def label(self) -> str:
        return self.kind if self.index is None else f"{self.kind}({self.index})"

    @classmethod
    def parse(cls, label: str, time: float) -> "SimEvent":
        if label.endswith(")") and "(" in label:
            kind, idx = label[:-1].split("(", 1)
            return cls(kind, time, int(idx))
        return cls(label, time)


@dataclass
class ForceModel:
    """Built-in load model: gravity, aerodynamics, rotor thrust and rotor drag."""

    vehicle: VehicleConfig
    aero: AeroConfig
    thrusts: np.ndarray = None
    wind: np.ndarray = field(default_factory=lambda: np.zeros(3))
    hinges_free: bool = True
    include_inertia_rate: bool = False
    gravity: float = GRAVITY

    def __post_init__(self) -> None:
        if self.thrusts is None:
            self.thrusts = np.zeros(self.vehicle.arm_count)
        self.thrusts = np.asarray(self.thrusts, dtype=float)
        self.wind = np.asarray(self.wind, dtype=float)

    def params(self, mass: MassProperties) -> np.ndarray:
        v = self.vehicle
        p = np.zeros(kernels.param_size(v.arm_count))
        pack_aero(p, self.aero)
        p[kernels.P_MASS] = mass.total_mass
        p[kernels.P_IXX:kernels.P_IZZ + 1] = mass.body_inertia
        p[kernels.P_G] = self.gravity
        p[kernels.P_COM] = mass.com_from_nose
        p[kernels.P_BODY_LEN] = v.body_length
        p[kernels.P_ROTOR_YAW] = v.rotor_yaw_coeff
        p[kernels.P_ROTOR_DRAG] = v.rotor_drag_coeff
        p[kernels.P_TAU_CLOSED] = v.hinge_torque_closed
        p[kernels.P_TAU_OPEN] = v.hinge_torque_open
        p[kernels.P_HINGE_DAMP] = v.hinge_damping
        p[kernels.P_N_ARMS] = v.arm_count
        p[kernels.P_N_FINS] = v.fin_count
        p[kernels.P_HINGES_FREE] = 1.0 if self.hinges_free else 0.0
        p[kernels.P_INERTIA_RATE] = 1.0 if self.include_inertia_rate else 0.0
        if v.arm_count:
            p[kernels.P_ROTORS:] = v.rotor_layout().ravel()
        return p

    def inputs(self, inertia_rate=(0.0, 0.0, 0.0)) -> np.ndarray:
        n = self.vehicle.arm_count
        u = np.zeros(kernels.input_size(n))
        u[:n] = self.thrusts
        u[n + kernels.U_WIND:n + kernels.U_WIND + 3] = self.wind
        u[n + kernels.U_IDOT:n + kernels.U_IDOT + 3] = inertia_rate
        return u


# hook(time, state, deploy) -> (non-gravitational force in world axes, moment in body axes)
ForcesHook = Callable[[float, RigidBodyState, DeploymentState], tuple]


def _check_dt(dt: float) -> None:
    if not 0.0 < dt <= MAX_DT:
        raise ValueError(f"dt must lie in (0, {MAX_DT}], got {dt}")


def _deploy_from(angles: np.ndarray, cfg: VehicleConfig) -> DeploymentState:
    a = tuple(float(x) for x in angles[: cfg.arm_count])
    f = tuple(float(x) for x in angles[cfg.arm_count:])
    return DeploymentState(a, f)


def _hinge_events(old: DeploymentState, new: DeploymentState, t: float) -> list[SimEvent]:
    events = [
        SimEvent(ARM_LATCHED, t, i)
        for i, (was, now) in enumerate(zip(old.arm_latched, new.arm_latched))
        if now and not was
    ]
    events += [
        SimEvent(FIN_SETTLED, t, i)
        for i, (was, now) in enumerate(zip(old.fin_settled, new.fin_settled))
        if now and not was
    ]
    return events


def step(
    state: RigidBodyState,
    deploy: DeploymentState,
    forces,
    dt: float,
    *,
    t: float = 0.0,
    vehicle: Optional[VehicleConfig] = None,
    gravity: float = GRAVITY,
) -> tuple[RigidBodyState, DeploymentState, list[SimEvent]]:
    """Advance one RK4 step.

    ``forces`` is either a :class:`ForceModel` (evaluated by the compiled
    kernel) or a hook ``(t, state, deploy) -> (force_world, moment_body)``; the
    hook path needs ``vehicle`` for mass properties and integrates hinges with
    the same spring-damper law.
    """
    _check_dt(dt)
    q_norm = float(np.linalg.norm(state.attitude))
    if abs(q_norm - 1.0) > 1e-6:
        raise ValueError("attitude quaternion must be normalized")
    if isinstance(forces, ForceModel):
        cfg = forces.vehicle
        mass = mass_properties(cfg, deploy)
        y = np.concatenate([state.to_vector(), deploy.as_array()])
        kernels.rk4_chunk(y, forces.params(mass), forces.inputs(), dt, 1)
    else:
        if vehicle is None:
            raise ValueError("a forces hook needs the vehicle config")
        cfg = vehicle
        y = _rk4_hook(np.concatenate([state.to_vector(), deploy.as_array()]), t, dt, forces, cfg, gravity)
    if not np.all(np.isfinite(y)):
        raise IntegrationFault(f"non-finite state after step at t={t + dt:.6f}: {y}")
    new_state = RigidBodyState.from_vector(y[:13])
    new_deploy = _deploy_from(y[13:], cfg)
    events = _hinge_events(deploy, new_deploy, t + dt)
    apo = detect_apogee(state, new_state, t + dt)
    if apo is not None:
        events.append(apo)
    return new_state, new_deploy, events


def _hook_derivs(y, y0, t, hook, cfg, gravity):
    state = RigidBodyState.from_vector(y[:13])
    angles = np.minimum(y[13:], HALF_PI)
    deploy = _deploy_from(np.clip(angles, 0.0, HALF_PI), cfg)
    mass = mass_properties(cfg, deploy)
    force_world, moment_body = hook(t, state, deploy)
    dy = np.zeros_like(y)
    dy[0:3] = y[3:6]
    dy[3:6] = np.asarray(force_world, dtype=float) / mass.total_mass
    dy[5] -= gravity
    w = y[10:13]
    dy[6:10] = 0.5 * rotation.multiply(y[6:10], np.array([0.0, *w]))
    inertia = mass.body_inertia
    dy[10:13] = (np.asarray(moment_body, dtype=float) - np.cross(w, inertia * w)) / inertia
    slope = (cfg.hinge_torque_open - cfg.hinge_torque_closed) / cfg.hinge_travel
    open_ = y0[13:] < HALF_PI
    dy[13:] = np.where(open_, (cfg.hinge_torque_closed + slope * y[13:]) / cfg.hinge_damping, 0.0)
    return dy


def _rk4_hook(y, t, dt, hook, cfg, gravity):
    k1 = _hook_derivs(y, y, t, hook, cfg, gravity)
    k2 = _hook_derivs(y + 0.5 * dt * k1, y, t + 0.5 * dt, hook, cfg, gravity)
    k3 = _hook_derivs(y + 0.5 * dt * k2, y, t + 0.5 * dt, hook, cfg, gravity)
    k4 = _hook_derivs(y + dt * k3, y, t + dt, hook, cfg, gravity)
    out = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out[6:10] /= np.linalg.norm(out[6:10])
    out[13:] = np.minimum(out[13:], HALF_PI)
    return out


def detect_apogee(prev: RigidBodyState, cur: RigidBodyState, t: float = 0.0) -> Optional[SimEvent]:
    """Apogee when vertical velocity crosses zero from above."""
    if prev.velocity[2] > 0.0 and cur.velocity[2] <= 0.0:
        return SimEvent(APOGEE, t)
    return None


@dataclass(frozen=True)
class TumbleConfig:
    tilt_limit: float = HALF_PI
    rate_limit: float = 3.0
    window: float = 0.5


class TumbleDetector:
    """Flags a tumble once the vehicle stays inverted and spinning for ``window``."""

    def __init__(self, cfg: TumbleConfig = TumbleConfig()):
        self.cfg = cfg
        self.since: Optional[float] = None
        self.fired = False

    def update(self, t: float, state: RigidBodyState) -> Optional[SimEvent]:
        return self.update_raw(t, state.tilt, float(np.linalg.norm(state.angular_rate)))

    def update_raw(self, t: float, tilt: float, rate: float) -> Optional[SimEvent]:
        if self.fired:
            return None
        if tilt > self.cfg.tilt_limit and rate > self.cfg.rate_limit:
            if self.since is None:
                self.since = t
            if t - self.since >= self.cfg.window - 1e-12:
                self.fired = True
                return SimEvent(TUMBLE, t)
        else:
            self.since = None
        return None


def detect_tumble(samples: Iterable[tuple[float, RigidBodyState]], cfg: TumbleConfig = TumbleConfig()) -> Optional[SimEvent]:
    """Scan a (time, state) sequence; first Tumble event or None."""
    det = TumbleDetector(cfg)
    for t, s in samples:
        ev = det.update(t, s)
        if ev is not None:
            return ev
    return None


# tap(time, state, deploy, (force_world_non_gravity, moment_body))
TelemetryTap = Callable[[float, RigidBodyState, DeploymentState, tuple], None]


class Simulator:
    """Owns one trajectory: state vector, load model and event bookkeeping."""

    def __init__(
        self,
        model: ForceModel,
        state: RigidBodyState,
        deploy: DeploymentState,
        dt: float = 1e-3,
        t0: float = 0.0,
        tumble: TumbleConfig = TumbleConfig(),
        tap: Optional[TelemetryTap] = None,
        ground_height: float = 0.0,
    ):
        _check_dt(dt)
        self.model = model
        self.vehicle = model.vehicle
        self.dt = dt
        self.time = t0
        self.step_count = 0
        self._t0 = t0
        self.y = np.concatenate([state.to_vector(), deploy.as_array()])
        self._deploy = deploy
        self._mass = mass_properties(self.vehicle, deploy)
        self._p = model.params(self._mass)
        self._u = model.inputs()
        self._idot = np.zeros(3)
        self.tumble = TumbleDetector(tumble)
        self.tap = tap
        self.ground_height = ground_height
        self.apogee_time: Optional[float] = None
        self.landed = False
        self.max_quat_drift = 0.0
        self._trace = np.empty((0, self.y.shape[0]))

    @property
    def state(self) -> RigidBodyState:
        return RigidBodyState.from_vector(self.y[:13])

    @property
    def deploy(self) -> DeploymentState:
        return self._deploy

    @property
    def mass(self) -> MassProperties:
        return self._mass

    @property
    def deploying(self) -> bool:
        return self.model.hinges_free and bool(np.any(self.y[13:] < HALF_PI))

    def set_inputs(self, thrusts=None, wind=None) -> None:
        n = self.vehicle.arm_count
        if thrusts is not None:
            self._u[:n] = thrusts
        if wind is not None:
            self._u[n + kernels.U_WIND:n + kernels.U_WIND + 3] = wind

    @property
    def thrusts(self) -> np.ndarray:
        return self._u[: self.vehicle.arm_count].copy()

    def _refresh_mass(self) -> None:
        deploy = _deploy_from(self.y[13:], self.vehicle)
        mass = mass_properties(self.vehicle, deploy)
        if self.model.include_inertia_rate:
            self._idot = (mass.body_inertia - self._mass.body_inertia) / self.dt
        self._mass = mass
        self._p[kernels.P_MASS] = mass.total_mass
        self._p[kernels.P_IXX:kernels.P_IZZ + 1] = mass.body_inertia
        self._p[kernels.P_COM] = mass.com_from_nose

    def advance(self, n: int) -> list[SimEvent]:
        """Integrate ``n`` steps with the current inputs; returns events in time order."""
        events: list[SimEvent] = []
        done = 0
        while done < n:
            if self.deploying:
                chunk = 1
                self._refresh_mass()
                k = self.vehicle.arm_count
                self._u[k + kernels.U_IDOT:k + kernels.U_IDOT + 3] = self._idot
            else:
                chunk = n - done
                if self._idot.any():
                    self._idot[:] = 0.0
                    k = self.vehicle.arm_count
                    self._u[k + kernels.U_IDOT:k + kernels.U_IDOT + 3] = 0.0
            events.extend(self._run(chunk))
            done += chunk
            if self.landed:
                break
        return events

    def _run(self, n: int) -> list[SimEvent]:
        if self._trace.shape[0] < n:
            self._trace = np.empty((n, self.y.shape[0]))
        trace = self._trace[:n]
        vz0 = float(self.y[5])
        drift = kernels.rk4_chunk(self.y, self._p, self._u, self.dt, n, trace)
        if drift > self.max_quat_drift:
            self.max_quat_drift = drift
        first = self.step_count + 1
        self.step_count += n
        self.time = self._t0 + self.step_count * self.dt
        if not math.isfinite(float(trace.sum())):
            bad = int(np.argmax(~np.all(np.isfinite(trace), axis=1)))
            raise IntegrationFault(f"non-finite state at t={self._t0 + (first + bad) * self.dt:.6f}: {trace[bad]}")
        events: list[SimEvent] = []
        rows = trace[:, :13].tolist()

        new_deploy = self._deploy
        if self.model.hinges_free and n == 1:
            new_deploy = _deploy_from(self.y[13:], self.vehicle)
            events += _hinge_events(self._deploy, new_deploy, self.time)
            self._deploy = new_deploy

        prev_vz = vz0
        landed_at = None
        for i, r in enumerate(rows):
            t = self._t0 + (first + i) * self.dt
            if self.apogee_time is None and prev_vz > 0.0 and r[5] <= 0.0:
                self.apogee_time = t
                events.append(SimEvent(APOGEE, t))
            prev_vz = r[5]
            if not self.tumble.fired:
                cos_tilt = 1.0 - 2.0 * (r[7] * r[7] + r[8] * r[8])
                rate = math.sqrt(r[10] * r[10] + r[11] * r[11] + r[12] * r[12])
                ev = self.tumble.update_raw(t, math.acos(max(-1.0, min(1.0, cos_tilt))), rate)
                if ev is not None:
                    events.append(ev)
            if r[2] <= self.ground_height and r[5] < 0.0:
                landed_at = i
                self.landed = True
                events.append(SimEvent(LANDED, t))
                break

        if landed_at is not None:
            # rewind to the contact step
            self.y[:] = trace[landed_at]
            self.step_count -= n - 1 - landed_at
            self.time = self._t0 + self.step_count * self.dt

        if self.tap is not None:
            last = n if landed_at is None else landed_at + 1
            for i in range(last):
                row = trace[i]
                self.tap(self._t0 + (first + i) * self.dt, RigidBodyState.from_vector(row[:13]), new_deploy,
                         self._wrench(row))
        events.sort(key=lambda e: e.time)
        return events

    def _wrench(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        dy = kernels.derivatives(y, self._p, self._u)
        accel = dy[3:6].copy()
        accel[2] += self._p[kernels.P_G]
        inertia = self._mass.body_inertia
        w = y[10:13]
        moment = inertia * dy[10:13] + np.cross(w, inertia * w)
        return self._mass.total_mass * accel, moment

    def specific_force_body(self) -> np.ndarray:
        """Non-gravitational acceleration in body axes, what an ideal accelerometer reads."""
        dy = kernels.derivatives(self.y, self._p, self._u)
        accel = dy[3:6]
        accel[2] += self._p[kernels.P_G]
        return rotation.to_matrix(self.y[6:10]).T @ accel

    def energy(self) -> float:
        """Mechanical energy: translational + rotational kinetic + potential."""
        m = self._mass.total_mass
        v = self.y[3:6]
        w = self.y[10:13]
        return 0.5 * m * float(v @ v) + 0.5 * float(w @ (self._mass.body_inertia * w)) + m * self._p[kernels.P_G] * self.y[2]
