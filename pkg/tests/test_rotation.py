from __future__ import annotations

import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from tubelaunch import rotation

unit = st.floats(-1.0, 1.0, allow_nan=False)


@given(unit, unit, unit, unit)
def test_matrix_is_orthonormal(a, b, c, d):
    q = np.array([a, b, c, d])
    if np.linalg.norm(q) < 1e-3:
        return
    R = rotation.to_matrix(rotation.normalize(q))
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert math.isclose(np.linalg.det(R), 1.0, abs_tol=1e-12)


def test_rotate_matches_matrix():
    q = rotation.from_axis_angle([1.0, 2.0, -0.5], 0.7)
    v = np.array([0.3, -1.0, 2.0])
    assert np.allclose(rotation.rotate(q, v), rotation.to_matrix(q) @ v)


def test_between_maps_a_onto_b():
    a, b = np.array([0.0, 0.0, 1.0]), np.array([1.0, 1.0, 0.2])
    q = rotation.between(a, b)
    assert np.allclose(rotation.rotate(q, a), b / np.linalg.norm(b))


def test_tilt_and_yaw():
    q = rotation.from_axis_angle([0.0, 1.0, 0.0], math.radians(30.0))
    assert math.isclose(rotation.tilt(q), math.radians(30.0), rel_tol=1e-12)
    assert math.isclose(rotation.yaw(rotation.from_axis_angle([0, 0, 1], 1.2)), 1.2, rel_tol=1e-12)
