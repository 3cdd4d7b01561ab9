from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tubelaunch import rotation
from tubelaunch.constants import GRAVITY
from tubelaunch.dynamics import RigidBodyState
from tubelaunch.errors import ConfigError
from tubelaunch.sensors import (
    SensorConfig,
    SensorSuite,
    VioVarianceWindow,
    baro_valid,
    clip_accel,
    rangefinder,
    sample,
    vio_variance_tracker,
)

CFG = SensorConfig()


def test_baro_blackout_edges():
    assert not baro_valid(2.9, 0.0, 3.0)
    assert baro_valid(3.1, 0.0, 3.0)
    assert not baro_valid(0.0, 0.0, 3.0)
    assert baro_valid(3.0, 0.0, 3.0)
    assert baro_valid(-0.1, 0.0, 3.0)


def test_baro_blackout_in_suite():
    state = RigidBodyState.at_rest((0.0, 0.0, 10.0))
    f = sample(state, np.array([0, 0, GRAVITY]), CFG, 2.9, 0.0)
    assert not f.baro_valid and math.isnan(f.baro_altitude)
    f = sample(state, np.array([0, 0, GRAVITY]), CFG, 3.1, 0.0)
    assert f.baro_valid and abs(f.baro_altitude - 10.0) < 0.5


def test_vio_variance_alternating():
    samples = [(0.1 if i % 2 == 0 else -0.1, 0.1 if i % 2 else -0.1) for i in range(30)]
    assert vio_variance_tracker(samples) == pytest.approx(0.01, rel=1e-12)


def test_vio_variance_needs_two_samples():
    with pytest.raises(ValueError):
        vio_variance_tracker([(0.0, 0.0)])


def test_vio_window_fills_then_slides():
    w = VioVarianceWindow(1.0)
    period = 1.0 / 30.0
    for i in range(20):
        w.add(i * period, (-1) ** i * 0.1, 0.0)
    assert not w.full and math.isnan(w.variance())
    for i in range(20, 90):
        w.add(i * period, (-1) ** i * 0.1, 0.0)
    assert w.full
    assert w.samples[-1][0] - w.samples[0][0] <= 1.0 + 1e-9
    assert w.variance() == pytest.approx(0.01, rel=0.05)


def test_at_rest_reads_gravity_up():
    state = RigidBodyState.at_rest((0.0, 0.0, 5.0))
    f = sample(state, np.array([0.0, 0.0, GRAVITY]), CFG.noiseless(), 10.0, 0.0)
    assert np.array_equal(f.accel, [0.0, 0.0, GRAVITY])
    assert np.array_equal(f.gyro, np.zeros(3))
    assert np.allclose(f.attitude, rotation.IDENTITY)


def test_accelerometer_saturates_at_16g():
    state = RigidBodyState.at_rest()
    for seed in range(5):
        f = sample(state, np.array([0.0, 0.0, 22.0 * GRAVITY]), CFG.with_(rng_seed=seed), 0.05, 0.0)
        assert f.accel[2] == 16.0 * GRAVITY


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e4, 1e4), min_size=3, max_size=3))
def test_clip_bounds(a):
    out = clip_accel(np.array(a), 16 * GRAVITY)
    assert np.all(np.abs(out) <= 16 * GRAVITY)
    inside = np.abs(a) <= 16 * GRAVITY
    assert np.array_equal(out[inside], np.array(a)[inside])


def test_rangefinder_vertical_and_tilted():
    d, ok = rangefinder(np.array([0, 0, 10.0]), rotation.IDENTITY, CFG)
    assert ok and d == pytest.approx(10.0)
    q = rotation.from_axis_angle([1, 0, 0], math.radians(30))
    d, ok = rangefinder(np.array([0, 0, 10.0]), q, CFG)
    assert ok and d == pytest.approx(10.0 / math.cos(math.radians(30)), rel=1e-12)
    q = rotation.from_axis_angle([1, 0, 0], math.radians(70))
    assert not rangefinder(np.array([0, 0, 10.0]), q, CFG)[1]
    assert not rangefinder(np.array([0, 0, 100.0]), rotation.IDENTITY, CFG)[1]


def test_suite_range_uses_tail():
    state = RigidBodyState.at_rest((0.0, 0.0, 2.0))
    f = sample(state, np.zeros(3), CFG.noiseless(), 0.0, 0.0, tail_offset=0.5)
    assert f.range_valid and f.range_distance == pytest.approx(1.5)


def test_vio_gate_and_rate():
    suite = SensorSuite(CFG)
    state = RigidBodyState.at_rest((1.0, 2.0, 3.0))
    assert suite.sample(0.0, state, np.zeros(3)).vio_pose is None
    poses = [suite.sample(k * 0.004, state, np.zeros(3), vio_open=True).vio_pose for k in range(250)]
    n = sum(p is not None for p in poses)
    assert n == pytest.approx(30, abs=1)


def test_vio_dropout_window():
    suite = SensorSuite(CFG.with_(vio_dropouts=((0.5, 1.0),)))
    state = RigidBodyState.at_rest()
    times = [k * 0.004 for k in range(375)]
    got = [t for t in times if suite.sample(t, state, np.zeros(3), vio_open=True).vio_pose is not None]
    assert not any(0.5 <= t < 1.0 for t in got)
    assert any(t >= 1.0 for t in got)


def test_seeded_stream_is_deterministic():
    state = RigidBodyState.at_rest((0.0, 0.0, 5.0))
    a = SensorSuite(CFG.with_(rng_seed=7))
    b = SensorSuite(CFG.with_(rng_seed=7))
    for k in range(50):
        fa = a.sample(k * 0.004, state, np.array([0, 0, GRAVITY]), vio_open=k > 10)
        fb = b.sample(k * 0.004, state, np.array([0, 0, GRAVITY]), vio_open=k > 10)
        assert np.array_equal(fa.accel, fb.accel) and np.array_equal(fa.gyro, fb.gyro)


def test_invalid_config():
    with pytest.raises(ConfigError):
        SensorConfig(accel_saturation=0.0)
    with pytest.raises(ConfigError):
        SensorConfig(gyro_noise_std=-1.0)


def test_hover_vio_variance_settles_within_two_seconds():
    state = RigidBodyState.at_rest((0.0, 0.0, 5.0))
    for seed in range(20):
        suite = SensorSuite(CFG.with_(rng_seed=seed))
        t_pass = None
        for k in range(751):
            t = k * 0.004
            f = suite.sample(t, state, np.array([0.0, 0.0, GRAVITY]), vio_open=True)
            if f.vio_variance_xy < 0.05:
                t_pass = t
                break
        assert t_pass is not None and t_pass <= 2.0


def test_constant_pose_has_zero_variance():
    assert vio_variance_tracker([(1.5, -2.0)] * 10) == 0.0
