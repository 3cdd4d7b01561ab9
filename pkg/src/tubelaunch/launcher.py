"""Pneumatic tube launch: gas energy budget, in-tube kinematics and exit state.

The chamber gas expands adiabatically into the tube behind the carriage. The
carriage and vehicle see a constant effective force: the mean gauge pressure
over the stroke times the bore area, scaled by a single efficiency factor that
lumps valve throughput and leakage losses, less the weight component along the
tube and sliding friction. The carriage stops at the muzzle; the vehicle
separates with the stroke-end speed and no impulse exchange.

``tube_length`` is the powered stroke of the carriage. The vehicle's tail sits
on the carriage, so the tail reaches the muzzle exactly at separation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from tubelaunch.constants import ATMOSPHERE, BAR, GRAVITY
from tubelaunch.errors import ConfigError, LaunchFailure
from tubelaunch.vehicle import DeploymentState, VehicleConfig, mass_properties


@dataclass(frozen=True)
class LauncherConfig:
    chamber_pressure: float = 6.9 * BAR  # absolute [Pa]
    chamber_volume: float = 7.0e-3  # [m^3]
    ambient_pressure: float = ATMOSPHERE
    gas_gamma: float = 1.30
    tube_length: float = 0.35  # carriage stroke [m]
    tube_bore: float = 0.1524
    carriage_mass: float = 0.300
    launch_elevation_angle: float = 0.5 * math.pi  # from horizontal
    # calibrated: 12 m/s exit for the default vehicle at 6.9 bar
    efficiency: float = 0.12352600875562346
    friction_coeff: float = 0.02
    # muzzle above ground; also the tail height at separation [m]
    muzzle_height: float = 1.0
    launch_azimuth: float = 0.0  # heading of the tube's horizontal projection, from +x [rad]

    def __post_init__(self) -> None:
        validate_launcher(self)

    @property
    def bore_area(self) -> float:
        return math.pi * 0.25 * self.tube_bore ** 2

    @property
    def axis(self) -> np.ndarray:
        """Unit vector along the tube toward the muzzle, world frame."""
        ce = math.cos(self.launch_elevation_angle)
        return np.array(
            [ce * math.cos(self.launch_azimuth), ce * math.sin(self.launch_azimuth), math.sin(self.launch_elevation_angle)]
        )

    def with_(self, **changes) -> "LauncherConfig":
        return replace(self, **changes)


def validate_launcher(cfg: LauncherConfig) -> None:
    # chamber_pressure <= ambient is a valid config that fails at launch time
    if cfg.chamber_pressure < 0.0:
        raise ConfigError("chamber_pressure must be non-negative")
    for name in ("chamber_volume", "ambient_pressure", "tube_length", "tube_bore", "carriage_mass"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be positive")
    if not cfg.gas_gamma > 1.0:
        raise ConfigError("gas_gamma must exceed 1")
    if not 0.0 <= cfg.efficiency <= 1.0:
        raise ConfigError("efficiency must lie in [0, 1]")
    if cfg.friction_coeff < 0.0:
        raise ConfigError("friction_coeff must be non-negative")
    if not 0.0 < cfg.launch_elevation_angle <= 0.5 * math.pi:
        raise ConfigError("launch_elevation_angle must lie in (0, pi/2]")
    if cfg.muzzle_height < 0.0:
        raise ConfigError("muzzle_height must be non-negative")


@dataclass(frozen=True)
class ExitState:
    exit_speed: float
    peak_acceleration: float
    time_in_tube: float
    exit_position: np.ndarray  # COM, world frame
    exit_velocity: np.ndarray

    @property
    def peak_acceleration_g(self) -> float:
        return self.peak_acceleration / GRAVITY


def adiabatic_energy(cfg: LauncherConfig) -> float:
    """Ideal work of expanding the chamber adiabatically down to ambient [J].

    Net of the work done pushing back the ambient atmosphere. Zero when the
    chamber is not above ambient.
    """
    p1, v1, p2, g = cfg.chamber_pressure, cfg.chamber_volume, cfg.ambient_pressure, cfg.gas_gamma
    if not p1 > 0.0 or not v1 > 0.0:
        raise ConfigError("chamber pressure and volume must be positive")
    if p1 <= p2:
        return 0.0
    v2 = v1 * (p1 / p2) ** (1.0 / g)
    return (p1 * v1 - p2 * v2) / (g - 1.0) - p2 * (v2 - v1)


def stroke_gas_work(cfg: LauncherConfig) -> float:
    """Adiabatic gas work over the stroke volume, before ambient back-pressure [J]."""
    v1 = cfg.chamber_volume
    v2 = v1 + cfg.bore_area * cfg.tube_length
    g = cfg.gas_gamma
    return cfg.chamber_pressure * v1 / (g - 1.0) * (1.0 - (v1 / v2) ** (g - 1.0))


def mean_gauge_pressure(cfg: LauncherConfig) -> float:
    """Stroke-averaged pressure above ambient [Pa]."""
    return stroke_gas_work(cfg) / (cfg.bore_area * cfg.tube_length) - cfg.ambient_pressure


def _net_force(cfg: LauncherConfig, moving_mass: float) -> float:
    s = math.sin(cfg.launch_elevation_angle)
    c = math.cos(cfg.launch_elevation_angle)
    drive = cfg.efficiency * mean_gauge_pressure(cfg) * cfg.bore_area
    return drive - moving_mass * GRAVITY * (s + cfg.friction_coeff * c)


def tail_start(cfg: LauncherConfig) -> np.ndarray:
    """Tail position at ignition: one stroke below the muzzle."""
    return muzzle_point(cfg) - cfg.axis * cfg.tube_length


def muzzle_point(cfg: LauncherConfig) -> np.ndarray:
    return np.array([0.0, 0.0, cfg.muzzle_height])


def simulate_tube_phase(cfg: LauncherConfig, vehicle: VehicleConfig) -> ExitState:
    """Constant-force stroke; raises :class:`LaunchFailure` if the vehicle cannot leave."""
    if cfg.tube_bore < vehicle.folded_diameter:
        raise ConfigError("folded vehicle does not fit the tube bore")
    if cfg.chamber_pressure <= cfg.ambient_pressure:
        raise LaunchFailure("chamber pressure does not exceed ambient")
    moving = vehicle.total_mass + cfg.carriage_mass
    force = _net_force(cfg, moving)
    if not force > 0.0:
        raise LaunchFailure(f"net launch force {force:.3g} N is not positive")
    accel = force / moving
    speed = math.sqrt(2.0 * accel * cfg.tube_length)
    com = mass_properties(vehicle, DeploymentState.folded(vehicle)).com_from_nose
    exit_pos = muzzle_point(cfg) + cfg.axis * (vehicle.body_length - com)
    return ExitState(speed, accel, speed / accel, exit_pos, speed * cfg.axis)


def tube_kinematics(cfg: LauncherConfig, exit: ExitState, t: float) -> tuple[np.ndarray, np.ndarray]:
    """COM position and velocity ``t`` seconds after ignition (0 <= t <= time_in_tube)."""
    t = min(max(t, 0.0), exit.time_in_tube)
    back = exit.time_in_tube - t
    along_v = exit.peak_acceleration * t
    along_s = 0.5 * exit.peak_acceleration * back * back
    return exit.exit_position - cfg.axis * along_s, cfg.axis * along_v


def apogee_bound(exit: ExitState, vehicle_mass: float | None = None) -> float:
    """Drag-free apogee above the exit point, v_z^2 / 2g [m].

    ``vehicle_mass`` does not enter: a point mass in vacuum climbs the same
    height regardless of mass. It is accepted so callers can pass it alongside.
    """
    vz = float(exit.exit_velocity[2])
    return vz * vz / (2.0 * GRAVITY) if vz > 0.0 else 0.0


def potential_energy(mass: float, height: float) -> float:
    return mass * GRAVITY * height


def calibrate_efficiency(cfg: LauncherConfig, vehicle: VehicleConfig, target_speed: float) -> float:
    """Efficiency that yields ``target_speed`` at the muzzle (closed form)."""
    moving = vehicle.total_mass + cfg.carriage_mass
    accel = target_speed * target_speed / (2.0 * cfg.tube_length)
    s = math.sin(cfg.launch_elevation_angle)
    c = math.cos(cfg.launch_elevation_angle)
    need = moving * (accel + GRAVITY * (s + cfg.friction_coeff * c))
    return need / (mean_gauge_pressure(cfg) * cfg.bore_area)
