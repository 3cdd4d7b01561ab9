"""Froude similarity between sub-scale and full-scale vehicles.

A :class:`ScaleMap` with factor ``lam`` takes sub-scale quantities to full
scale: lengths grow by ``lam``, speeds and times by ``sqrt(lam)``. Going the
other way (building a model from a full-size description) divides instead;
see :func:`subscale_config`.

Masses follow a density-consistent ``lam**3`` rule unless a model mass is
pinned, in which case every component mass is scaled by the same ratio and
the force-like quantities (thrust, hinge torque, launcher drive) follow the
mass ratio so accelerations stay Froude-similar. Air density is not scaled,
so aerodynamic coefficients with length dimensions shrink by their own powers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from tubelaunch.aero import AeroConfig
from tubelaunch.constants import GRAVITY
from tubelaunch.errors import ConfigError
from tubelaunch.launcher import LauncherConfig, mean_gauge_pressure

VEHICLE_LENGTHS = (
    "body_length", "folded_diameter", "unfolded_diameter", "arm_length", "fin_length",
    "battery_from_nose", "core_com_from_nose", "arm_hinge_from_nose", "fin_hinge_from_nose",
    "rotor_yaw_coeff",
)
VEHICLE_MASSES = ("total_mass", "nose_battery_mass", "arm_mass", "fin_mass")
AERO_LENGTHS = ("fin_span", "body_ac_from_nose", "fin_ac_from_nose")
AERO_AREAS = ("reference_area", "fin_area", "arm_frontal_area", "fin_frontal_area")


def froude_number(speed: float, length: float) -> float:
    """U / sqrt(g L)."""
    if not length > 0.0:
        raise ConfigError(f"length must be positive, got {length}")
    return speed / math.sqrt(GRAVITY * length)


@dataclass(frozen=True)
class ScaleMap:
    """Sub-scale to full-scale factors for a length ratio ``length_factor``."""

    length_factor: float

    def __post_init__(self) -> None:
        if not self.length_factor > 0.0 or not math.isfinite(self.length_factor):
            raise ConfigError("length_factor must be positive and finite")

    @property
    def velocity_factor(self) -> float:
        return math.sqrt(self.length_factor)

    @property
    def time_factor(self) -> float:
        return math.sqrt(self.length_factor)

    @property
    def mass_factor(self) -> float:
        return self.length_factor ** 3

    def inverse(self) -> "ScaleMap":
        return ScaleMap(1.0 / self.length_factor)

    def speed(self, v: float) -> float:
        return v * self.velocity_factor


def scale_trajectory(traj: Iterable[Sequence], smap: ScaleMap) -> list[tuple[float, np.ndarray, np.ndarray]]:
    """Map ``(t, position, velocity)`` samples through ``smap``."""
    lam, k = smap.length_factor, smap.velocity_factor
    out = []
    for t, pos, vel in traj:
        out.append((float(t) * k, np.asarray(pos, dtype=float) * lam, np.asarray(vel, dtype=float) * k))
    return out


@dataclass(frozen=True)
class ScaledConfigs:
    vehicle: object
    aero: AeroConfig
    launcher: Optional[LauncherConfig]
    mass_ratio: float  # model mass / full mass


def _scaled(obj, factors: dict):
    return replace(obj, **{k: getattr(obj, k) * f for k, f in factors.items()})


def subscale_config(vehicle, aero: AeroConfig, lam: float, launcher: Optional[LauncherConfig] = None,
                    model_mass: Optional[float] = None) -> ScaledConfigs:
    """Shrink full-scale configs by ``lam``.

    ``model_mass`` pins the model's total mass; by default it is
    ``total_mass / lam**3``.
    """
    if not lam > 0.0:
        raise ConfigError("scale factor must be positive")
    mr = lam ** -3 if model_mass is None else model_mass / vehicle.total_mass
    if not mr > 0.0:
        raise ConfigError("model_mass must be positive")
    # forces follow mass (accelerations are scale-free); torques add a length
    force = mr
    torque = mr / lam
    factors = {k: 1.0 / lam for k in VEHICLE_LENGTHS}
    factors.update({k: mr for k in VEHICLE_MASSES})
    factors.update(
        max_total_thrust=force,
        hinge_torque_closed=torque,
        hinge_torque_open=torque,
        # torque per angular rate, rates grow by sqrt(lam)
        hinge_damping=torque / math.sqrt(lam),
        # thrust fraction per unit airspeed
        rotor_drag_coeff=math.sqrt(lam),
    )
    v = _scaled(vehicle, factors)
    a_f = {k: 1.0 / lam for k in AERO_LENGTHS}
    a_f.update({k: lam ** -2 for k in AERO_AREAS})
    # moment = c * omega^2 with c ~ rho L^5
    a_f["yaw_damping_coeff"] = lam ** -5
    a = _scaled(aero, a_f)

    L = None
    if launcher is not None:
        L = _scale_launcher(launcher, lam, mr)
    return ScaledConfigs(v, a, L, mr)


def _scale_launcher(cfg: LauncherConfig, lam: float, mr: float) -> LauncherConfig:
    # drive force must scale with mass; bore area shrinks by lam^2
    pressure = mr * lam * lam
    gauge = (cfg.chamber_pressure - cfg.ambient_pressure) * pressure
    out = replace(
        cfg,
        chamber_pressure=cfg.ambient_pressure + gauge,
        chamber_volume=cfg.chamber_volume / lam ** 3,
        tube_length=cfg.tube_length / lam,
        tube_bore=cfg.tube_bore / lam,
        carriage_mass=cfg.carriage_mass * mr,
        muzzle_height=cfg.muzzle_height / lam,
    )
    if gauge <= 0.0:
        return out
    # the stroke-mean pressure is not linear in chamber pressure, so fix the
    # product efficiency * mean gauge to its exact Froude value
    target = cfg.efficiency * mean_gauge_pressure(cfg) * pressure
    return replace(out, efficiency=target / mean_gauge_pressure(out))


def scale_scenario(scn, lam: float, model_mass: Optional[float] = None):
    """Sub-scale copy of a whole scenario.

    Winds, speeds and times follow the Froude map. Sensor and autonomy timing
    are properties of the electronics, not the airframe, and stay as given;
    so does the physics step.
    """
    cfg = subscale_config(scn.vehicle, scn.aero, lam, scn.launcher, model_mass)
    k = math.sqrt(lam)
    w = scn.wind
    wind = replace(w, mean=tuple(x / k for x in w.mean), gust_std=w.gust_std / k, gust_tau=w.gust_tau / k)
    s = scn.sim
    sim = replace(
        s,
        duration=s.duration / k,
        tipoff_rate_std=s.tipoff_rate_std * k,
        platform_velocity=tuple(x / k for x in s.platform_velocity),
        passive_window=s.passive_window / k,
    )
    name = f"{scn.name}-1:{lam:g}"
    return replace(scn, vehicle=cfg.vehicle, aero=cfg.aero, launcher=cfg.launcher, wind=wind, sim=sim, name=name)
