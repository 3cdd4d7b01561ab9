"""Vehicle description and configuration-dependent mass properties.

Lumped-mass layout, measured as axial distance from the nose tip:

* central body: uniform solid cylinder (folded radius, full body length)
  centred at ``core_com_from_nose``; its mass is whatever the other lumps leave;
* nose battery: small solid cylinder at ``battery_from_nose``;
* arms and fins: point masses at mid-span. Folded, they lie along the body
  pointing tailward from their hinge; open, they stand radially out from it.

The component split and the axial stations are calibration choices (no mass
distribution is published for the airframe): the defaults put the deployed
centre of mass 0.24 m behind the nose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from tubelaunch.constants import GRAVITY
from tubelaunch.errors import ConfigError

HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class VehicleConfig:
    """Physical description of the airframe. SI units throughout."""

    total_mass: float = 3.3
    body_length: float = 0.79
    folded_diameter: float = 0.15
    unfolded_diameter: float = 0.58
    nose_battery_mass: float = 0.58
    arm_count: int = 6
    arm_mass: float = 0.12
    arm_length: float = 0.126
    fin_count: int = 3
    fin_mass: float = 0.08
    fin_length: float = 0.30
    hinge_torque_closed: float = 1.04
    hinge_torque_open: float = 0.52
    hinge_travel: float = HALF_PI
    max_total_thrust: float = 3.3 * GRAVITY / 0.56
    hover_throttle_fraction: float = 0.56
    # calibrated layout
    battery_from_nose: float = 0.06
    core_com_from_nose: float = 0.2665909090909091
    arm_hinge_from_nose: float = 0.25
    fin_hinge_from_nose: float = 0.45
    # viscous hinge damper [N m s/rad]; latches a 90 deg arm in ~80 ms
    hinge_damping: float = 0.0382
    # rotor reaction torque per newton of thrust [m]
    rotor_yaw_coeff: float = 0.016
    # rotor drag and axial thrust loss per newton of thrust per m/s of airspeed [s/m]
    rotor_drag_coeff: float = 0.02

    def __post_init__(self) -> None:
        validate_vehicle(self)

    @property
    def core_mass(self) -> float:
        return self.total_mass - self.nose_battery_mass - self.arm_count * self.arm_mass - self.fin_count * self.fin_mass

    @property
    def body_radius(self) -> float:
        return 0.5 * self.folded_diameter

    @property
    def rotor_radius(self) -> float:
        """Distance from the body axis to each rotor hub when deployed."""
        return self.body_radius + self.arm_length

    def rotor_layout(self) -> np.ndarray:
        """(x, y, spin) per rotor in body axes; X layout, alternating spin."""
        n = self.arm_count
        rows = []
        for i in range(n):
            psi = math.pi / n + 2.0 * math.pi * i / n
            spin = 1.0 if i % 2 == 0 else -1.0
            rows.append((self.rotor_radius * math.cos(psi), self.rotor_radius * math.sin(psi), spin))
        return np.array(rows)

    def with_(self, **changes) -> "VehicleConfig":
        return replace(self, **changes)


def validate_vehicle(cfg: VehicleConfig) -> None:
    if not cfg.total_mass > 0:
        raise ConfigError(f"total_mass must be positive, got {cfg.total_mass}")
    for name in ("body_length", "folded_diameter", "unfolded_diameter", "hinge_damping"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be positive")
    for name in ("nose_battery_mass", "arm_mass", "fin_mass", "arm_length", "fin_length",
                 "rotor_yaw_coeff", "rotor_drag_coeff"):
        if getattr(cfg, name) < 0:
            raise ConfigError(f"{name} must be non-negative")
    if cfg.arm_count < 0 or cfg.fin_count < 0:
        raise ConfigError("arm_count and fin_count must be non-negative")
    if cfg.core_mass < -1e-12 * cfg.total_mass:
        raise ConfigError("component masses exceed total_mass")
    if not cfg.folded_diameter < cfg.unfolded_diameter:
        raise ConfigError("folded_diameter must be smaller than unfolded_diameter")
    if not 0.0 < cfg.hover_throttle_fraction < 1.0:
        raise ConfigError("hover_throttle_fraction must lie in (0, 1)")
    if cfg.hover_throttle_fraction * cfg.max_total_thrust < cfg.total_mass * GRAVITY * (1.0 - 1e-12):
        raise ConfigError("hover is not achievable with max_total_thrust")
    if abs(cfg.hinge_travel - HALF_PI) > 1e-12:
        raise ConfigError("only 90 degree hinge travel is supported")
    if cfg.hinge_torque_closed <= 0 or cfg.hinge_torque_open <= 0:
        raise ConfigError("hinge torques must be positive")
    for name in ("battery_from_nose", "core_com_from_nose", "arm_hinge_from_nose", "fin_hinge_from_nose"):
        if not 0.0 <= getattr(cfg, name) <= cfg.body_length:
            raise ConfigError(f"{name} must lie on the body")


@dataclass(frozen=True)
class DeploymentState:
    """Hinge angles: 0 folded along the body, pi/2 open (radial)."""

    arm_angles: tuple[float, ...]
    fin_angles: tuple[float, ...]
    arm_latched: tuple[bool, ...] = field(default=())
    fin_settled: tuple[bool, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.arm_latched:
            object.__setattr__(self, "arm_latched", tuple(a >= HALF_PI for a in self.arm_angles))
        if not self.fin_settled:
            object.__setattr__(self, "fin_settled", tuple(a >= HALF_PI for a in self.fin_angles))
        for a in self.arm_angles + self.fin_angles:
            if not 0.0 <= a <= HALF_PI:
                raise ValueError(f"hinge angle {a} outside [0, pi/2]")
        if len(self.arm_latched) != len(self.arm_angles) or len(self.fin_settled) != len(self.fin_angles):
            raise ValueError("flag and angle counts differ")
        for a, latched in zip(self.arm_angles, self.arm_latched):
            if latched and a != HALF_PI:
                raise ValueError("a latched arm must be fully open")

    @classmethod
    def folded(cls, cfg: VehicleConfig) -> "DeploymentState":
        return cls((0.0,) * cfg.arm_count, (0.0,) * cfg.fin_count)

    @classmethod
    def deployed(cls, cfg: VehicleConfig) -> "DeploymentState":
        return cls((HALF_PI,) * cfg.arm_count, (HALF_PI,) * cfg.fin_count)

    @classmethod
    def uniform(cls, cfg: VehicleConfig, arm_angle: float, fin_angle: float) -> "DeploymentState":
        return cls((arm_angle,) * cfg.arm_count, (fin_angle,) * cfg.fin_count)

    @property
    def all_latched(self) -> bool:
        return all(self.arm_latched)

    def as_array(self) -> np.ndarray:
        return np.array(self.arm_angles + self.fin_angles, dtype=float)


@dataclass(frozen=True)
class MassProperties:
    com_from_nose: float
    # about the COM: (axial, transverse, transverse)
    inertia_diag: tuple[float, float, float]
    total_mass: float

    @property
    def body_inertia(self) -> np.ndarray:
        """Diagonal inertia in body (x, y, z) order; z is the long axis."""
        axial, tx, ty = self.inertia_diag
        return np.array([tx, ty, axial])


def _lumps(cfg: VehicleConfig, deploy: DeploymentState):
    """Yield (mass, axial station from nose, x, y, own inertia (axial, transverse))."""
    r = cfg.body_radius
    yield cfg.core_mass, cfg.core_com_from_nose, 0.0, 0.0, (
        0.5 * r * r,
        (3.0 * r * r + cfg.body_length ** 2) / 12.0,
    )
    rb = 0.8 * r
    lb = 2.0 * cfg.battery_from_nose
    yield cfg.nose_battery_mass, cfg.battery_from_nose, 0.0, 0.0, (0.5 * rb * rb, (3.0 * rb * rb + lb * lb) / 12.0)
    half = 0.5 * cfg.arm_length
    for i, theta in enumerate(deploy.arm_angles):
        psi = math.pi / cfg.arm_count + 2.0 * math.pi * i / cfg.arm_count
        rad = r + half * math.sin(theta)
        yield cfg.arm_mass, cfg.arm_hinge_from_nose + half * math.cos(theta), rad * math.cos(psi), rad * math.sin(psi), (0.0, 0.0)
    half = 0.5 * cfg.fin_length
    for j, theta in enumerate(deploy.fin_angles):
        phi = 2.0 * math.pi * j / cfg.fin_count
        rad = r + half * math.sin(theta)
        yield cfg.fin_mass, cfg.fin_hinge_from_nose + half * math.cos(theta), rad * math.cos(phi), rad * math.sin(phi), (0.0, 0.0)


def mass_properties(cfg: VehicleConfig, deploy: DeploymentState) -> MassProperties:
    """Centre of mass and principal-axis inertia for a deployment state."""
    if len(deploy.arm_angles) != cfg.arm_count or len(deploy.fin_angles) != cfg.fin_count:
        raise ValueError("deployment state does not match the vehicle's arm/fin counts")
    lumps = list(_lumps(cfg, deploy))
    m_tot = sum(l[0] for l in lumps)
    com = sum(l[0] * l[1] for l in lumps) / m_tot
    tensor = np.zeros((3, 3))
    for m, s, x, y, (own_ax, own_tr) in lumps:
        if m == 0.0:
            continue
        pos = np.array([x, y, com - s])
        tensor += m * (pos @ pos * np.eye(3) - np.outer(pos, pos))
        tensor += m * np.diag([own_tr, own_tr, own_ax])
    return MassProperties(com, (float(tensor[2, 2]), float(tensor[0, 0]), float(tensor[1, 1])), m_tot)


def hover_thrust(cfg: VehicleConfig) -> float:
    """Total thrust that balances weight [N]."""
    if not cfg.total_mass > 0:
        raise ConfigError("total_mass must be positive")
    return cfg.total_mass * GRAVITY


def implied_max_thrust(cfg: VehicleConfig) -> float:
    """Maximum total thrust implied by the hover throttle fraction [N]."""
    return hover_thrust(cfg) / cfg.hover_throttle_fraction


def hinge_torque(cfg: VehicleConfig, angle: float) -> float:
    """Linear torsional spring, closed torque at 0 down to open torque at 90 deg."""
    return cfg.hinge_torque_closed + (cfg.hinge_torque_open - cfg.hinge_torque_closed) * angle / cfg.hinge_travel


def hinge_open_time(cfg: VehicleConfig) -> float:
    """Closed-form time for a free hinge to swing from folded to open.

    The hinge obeys ``c * dtheta/dt = tau(theta)`` with a linear spring, so
    ``theta(t) = (tau_c / k) * (1 - exp(-k t / c))`` with ``k`` the spring rate.
    """
    k = (cfg.hinge_torque_closed - cfg.hinge_torque_open) / cfg.hinge_travel
    if k == 0.0:
        return cfg.hinge_damping * cfg.hinge_travel / cfg.hinge_torque_closed
    return cfg.hinge_damping / k * math.log(cfg.hinge_torque_closed / cfg.hinge_torque_open)
