"""Aerodynamic loads and static stability as functions of deployment.

Normal force uses a linear lift slope saturated at the stall angle; the body
and the (deployed fraction of the) fins each contribute a weight
``slope * area`` and the aerodynamic centre is the weight-averaged station.
Three or more fins spaced evenly around the body present, on average, half
their total planform to any crossflow plane, hence the 0.5 factor per fin.

The wrench itself is evaluated by the integration kernel so that the
integrator and this module can never disagree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from tubelaunch import kernels
from tubelaunch.constants import AIR_DENSITY, GRAVITY
from tubelaunch.errors import ConfigError
from tubelaunch.vehicle import DeploymentState, VehicleConfig, mass_properties

FIN_PLANFORM_FACTOR = 0.5


def low_aspect_ratio_slope(span: float, area: float) -> float:
    """Finite-wing lift slope 2*pi*AR/(AR+2) [1/rad]."""
    ar = span * span / area
    return 2.0 * math.pi * ar / (ar + 2.0)


@dataclass(frozen=True)
class AeroConfig:
    body_drag_coeff_nosecone: float = 0.45
    body_drag_coeff_bluff: float = 0.90
    reference_area: float = math.pi * 0.075 ** 2
    fin_span: float = 0.30
    fin_area: float = 0.30 * 0.08
    fin_lift_slope: float = low_aspect_ratio_slope(0.30, 0.30 * 0.08)
    yaw_damping_coeff: float = 2.0e-3
    air_density: float = AIR_DENSITY
    # slender-body normal-force slope on the reference area [1/rad]
    body_lift_slope: float = 2.0
    # body-alone AC sits near the nose; calibrated so the deployed AC is 0.38 m
    body_ac_from_nose: float = 0.04608695652173917
    fin_ac_from_nose: float = 0.46
    stall_angle: float = math.radians(25.0)
    nosecone: bool = True
    appendage_drag_coeff: float = 1.2
    arm_frontal_area: float = 0.004
    fin_frontal_area: float = 0.0015

    def __post_init__(self) -> None:
        for name in ("reference_area", "fin_span", "body_drag_coeff_bluff",
                     "body_drag_coeff_nosecone", "stall_angle"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        # zero air density is a vacuum run
        for name in ("air_density", "fin_area", "fin_lift_slope", "yaw_damping_coeff", "body_lift_slope",
                     "appendage_drag_coeff", "arm_frontal_area", "fin_frontal_area"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if not self.stall_angle <= 0.5 * math.pi:
            raise ConfigError("stall_angle must not exceed 90 deg")

    @property
    def front_drag_coeff(self) -> float:
        return self.body_drag_coeff_nosecone if self.nosecone else self.body_drag_coeff_bluff

    @property
    def body_weight(self) -> float:
        return self.body_lift_slope * self.reference_area

    @property
    def fin_weight(self) -> float:
        """Normal-force weight of one fully open fin."""
        return FIN_PLANFORM_FACTOR * self.fin_lift_slope * self.fin_area

    def with_(self, **changes) -> "AeroConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class StabilityReport:
    ac_from_nose: float
    com_from_nose: float
    static_margin: float

    @property
    def stable(self) -> bool:
        return self.static_margin > 0.0


@dataclass(frozen=True)
class AeroWrench:
    force: np.ndarray  # body axes [N]
    moment: np.ndarray  # body axes about the COM [N m]
    angle_of_attack: float  # [rad]
    drag: np.ndarray  # drag part of ``force``
    normal: np.ndarray  # normal-force part of ``force``


def aerodynamic_center(aero: AeroConfig, vehicle: VehicleConfig, deploy: DeploymentState) -> float:
    """Station of the aerodynamic centre behind the nose in nose-first flow [m].

    Off this condition the kernel slides the body-alone centre with
    ``(1 - cos alpha) / 2`` toward its mirror image about the body midpoint,
    since slender-body lift gathers at whichever end leads.
    """
    w_body = aero.body_weight
    w_fin = aero.fin_weight * sum(math.sin(a) for a in deploy.fin_angles)
    total = w_body + w_fin
    if total <= 0.0:
        return aero.body_ac_from_nose
    return (w_body * aero.body_ac_from_nose + w_fin * aero.fin_ac_from_nose) / total


def static_stability(aero: AeroConfig, vehicle: VehicleConfig, deploy: DeploymentState) -> StabilityReport:
    ac = aerodynamic_center(aero, vehicle, deploy)
    com = mass_properties(vehicle, deploy).com_from_nose
    return StabilityReport(ac, com, ac - com)


def pack_aero(p: np.ndarray, aero: AeroConfig) -> None:
    """Write the aerodynamic entries of a kernel parameter vector."""
    p[kernels.P_RHO] = aero.air_density
    p[kernels.P_BODY_AC] = aero.body_ac_from_nose
    p[kernels.P_FIN_AC] = aero.fin_ac_from_nose
    p[kernels.P_W_BODY] = aero.body_weight
    p[kernels.P_W_FIN] = aero.fin_weight
    p[kernels.P_STALL] = aero.stall_angle
    p[kernels.P_AREF] = aero.reference_area
    p[kernels.P_CD_FRONT] = aero.front_drag_coeff
    p[kernels.P_CD_BASE] = aero.body_drag_coeff_bluff
    p[kernels.P_CD_APP] = aero.appendage_drag_coeff
    p[kernels.P_ARM_FRONTAL] = aero.arm_frontal_area
    p[kernels.P_FIN_FRONTAL] = aero.fin_frontal_area
    p[kernels.P_YAW_DAMP] = aero.yaw_damping_coeff


def _params(aero: AeroConfig, vehicle: VehicleConfig, deploy: DeploymentState) -> np.ndarray:
    p = np.zeros(kernels.param_size(vehicle.arm_count))
    pack_aero(p, aero)
    p[kernels.P_COM] = mass_properties(vehicle, deploy).com_from_nose
    p[kernels.P_BODY_LEN] = vehicle.body_length
    p[kernels.P_G] = GRAVITY
    p[kernels.P_N_ARMS] = vehicle.arm_count
    p[kernels.P_N_FINS] = vehicle.fin_count
    return p


def aero_wrench(aero: AeroConfig, vehicle: VehicleConfig, deploy: DeploymentState, state, wind) -> AeroWrench:
    """Aerodynamic force and moment on the vehicle in body axes.

    ``state`` is a :class:`~tubelaunch.dynamics.RigidBodyState`; ``wind`` is
    the world-frame air velocity. Apparent wind is ``state.velocity - wind``.
    """
    from tubelaunch import rotation

    rel_world = np.asarray(state.velocity, dtype=float) - np.asarray(wind, dtype=float)
    rel_body = rotation.to_matrix(state.attitude).T @ rel_world
    p = _params(aero, vehicle, deploy)
    w = kernels.aero_wrench_body(rel_body, state.angular_rate, deploy.as_array(), p)
    force = w[:3]
    speed = float(np.linalg.norm(rel_body))
    if speed == 0.0:
        zero = np.zeros(3)
        return AeroWrench(force, w[3:], 0.0, zero, zero.copy())
    alpha = math.atan2(math.hypot(rel_body[0], rel_body[1]), rel_body[2])
    qbar = 0.5 * aero.air_density * speed * speed
    drag = -qbar * drag_area(aero, deploy, alpha) * rel_body / speed
    return AeroWrench(force, w[3:], alpha, drag, force - drag)


def drag_area(aero: AeroConfig, deploy: DeploymentState, alpha: float) -> float:
    """Drag coefficient times area [m^2] at angle of attack ``alpha``.

    The body term blends the nose coefficient (nose-first) into the bluff base
    coefficient (tail-first) with cos^2; open arms and fins add frontal area.
    """
    c = math.cos(alpha)
    front = max(c, 0.0)
    back = max(-c, 0.0)
    body = aero.reference_area * (aero.front_drag_coeff * front * front + aero.body_drag_coeff_bluff * back * back)
    appendages = aero.appendage_drag_coeff * (
        aero.arm_frontal_area * sum(math.sin(a) for a in deploy.arm_angles)
        + aero.fin_frontal_area * sum(math.sin(a) for a in deploy.fin_angles)
    )
    return body + appendages
