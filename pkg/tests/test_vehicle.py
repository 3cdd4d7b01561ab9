from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tubelaunch.constants import GRAVITY
from tubelaunch.errors import ConfigError
from tubelaunch.vehicle import (
    DeploymentState,
    VehicleConfig,
    hinge_open_time,
    hinge_torque,
    hover_thrust,
    implied_max_thrust,
    mass_properties,
)

V = VehicleConfig()
angle = st.floats(0.0, math.pi / 2)


def test_table_values():
    assert V.total_mass == 3.3
    assert V.folded_diameter == 0.15
    assert V.hinge_torque_closed == 1.04
    assert V.hinge_torque_open == V.hinge_torque_closed / 2
    assert V.hover_throttle_fraction == 0.56


def test_hover_thrust():
    assert math.isclose(hover_thrust(V), 3.3 * 9.81, rel_tol=1e-12)
    assert math.isclose(hover_thrust(V), 32.373, rel_tol=1e-12)
    assert math.isclose(implied_max_thrust(V), 32.373 / 0.56, rel_tol=1e-12)


def test_hinge_spring_is_linear():
    assert hinge_torque(V, 0.0) == 1.04
    assert math.isclose(hinge_torque(V, math.pi / 2), 0.52)
    assert math.isclose(hinge_torque(V, math.pi / 4), 0.78)


def test_hinge_open_time_against_quadrature():
    # t = integral of c / tau(theta) over the travel, midpoint rule
    n = 200_000
    th = (np.arange(n) + 0.5) * (math.pi / 2) / n
    exact = hinge_open_time(V)
    tau = V.hinge_torque_closed + (V.hinge_torque_open - V.hinge_torque_closed) * th / (math.pi / 2)
    assert math.isclose(float(np.sum(V.hinge_damping / tau)) * (math.pi / 2) / n, exact, rel_tol=1e-9)
    assert exact < 0.1


def test_deployed_com_and_folded_com():
    dep = mass_properties(V, DeploymentState.deployed(V))
    fold = mass_properties(V, DeploymentState.folded(V))
    assert math.isclose(dep.com_from_nose, 0.24, abs_tol=1e-12)
    assert math.isclose(dep.total_mass, 3.3, rel_tol=1e-12)
    # opening moves arm and fin mass forward
    assert dep.com_from_nose < fold.com_from_nose


def test_opening_increases_axial_inertia():
    dep = mass_properties(V, DeploymentState.deployed(V))
    fold = mass_properties(V, DeploymentState.folded(V))
    assert dep.inertia_diag[0] > fold.inertia_diag[0]


def test_com_oracle_by_hand():
    # recompute the lumped COM without the library's generator
    r = V.body_radius
    stations = [(V.core_mass, V.core_com_from_nose), (V.nose_battery_mass, V.battery_from_nose)]
    stations += [(V.arm_mass, V.arm_hinge_from_nose)] * V.arm_count
    stations += [(V.fin_mass, V.fin_hinge_from_nose)] * V.fin_count
    com = sum(m * s for m, s in stations) / sum(m for m, _ in stations)
    assert math.isclose(mass_properties(V, DeploymentState.deployed(V)).com_from_nose, com, rel_tol=1e-12)
    assert r > 0


@given(st.lists(angle, min_size=6, max_size=6), st.lists(angle, min_size=3, max_size=3))
def test_mass_property_invariants(arms, fins):
    mp = mass_properties(V, DeploymentState(tuple(arms), tuple(fins)))
    assert 0.0 < mp.com_from_nose < V.body_length
    a, b, c = mp.inertia_diag
    assert a > 0 and b > 0 and c > 0
    assert a + b >= c * (1 - 1e-9) and b + c >= a * (1 - 1e-9) and a + c >= b * (1 - 1e-9)


def test_latched_means_fully_open():
    d = DeploymentState.deployed(V)
    assert all(d.arm_latched) and all(a == math.pi / 2 for a in d.arm_angles)
    with pytest.raises(ValueError):
        DeploymentState((0.5,) * 6, (0.0,) * 3, arm_latched=(True,) * 6)


@pytest.mark.parametrize("change", [
    {"total_mass": 0.0},
    {"folded_diameter": 0.6},
    {"hover_throttle_fraction": 1.2},
    {"max_total_thrust": 10.0},
    {"arm_mass": 1.0},
])
def test_invalid_configs_rejected(change):
    with pytest.raises(ConfigError):
        V.with_(**change)


def test_hover_is_achievable():
    assert V.hover_throttle_fraction * V.max_total_thrust >= V.total_mass * GRAVITY * (1 - 1e-12)
