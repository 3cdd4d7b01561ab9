"""Onboard sensor emulation.

Accelerometer (with per-axis saturation), gyroscope, attitude estimate,
barometer with a post-launch blackout, downward rangefinder mounted on the
tail, and an abstract visual-inertial odometry (VIO) source that only produces
poses once the autonomy layer opens its gate.

Every call to :meth:`SensorSuite.sample` draws the same number of normal
variates whatever the validity flags, so the random stream (and therefore the
whole run) depends only on the seed and the sequence of calls.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np

from tubelaunch import rotation
from tubelaunch.constants import GRAVITY
from tubelaunch.errors import ConfigError


@dataclass(frozen=True)
class SensorConfig:
    accel_saturation: float = 16.0 * GRAVITY
    baro_blackout: float = 3.0
    baro_noise_std: float = 0.05
    gyro_noise_std: float = 0.002
    accel_noise_std: float = 0.05
    range_max: float = 60.0
    vio_rate: float = 30.0
    vio_noise_std: float = 0.02
    rng_seed: int = 0
    range_noise_std: float = 0.005
    range_max_nadir_angle: float = math.radians(60.0)
    attitude_noise_std: float = 0.002
    vio_window: float = 1.0
    # injected VIO outages as (start, end) times [s]
    vio_dropouts: tuple = ()

    def __post_init__(self) -> None:
        for name in ("baro_noise_std", "gyro_noise_std", "accel_noise_std", "vio_noise_std",
                     "range_noise_std", "attitude_noise_std", "baro_blackout"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        for name in ("accel_saturation", "range_max", "vio_rate", "vio_window", "range_max_nadir_angle"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 <= int(self.rng_seed) < 2 ** 64:
            raise ConfigError("rng_seed must be a 64-bit unsigned integer")

    def noiseless(self) -> "SensorConfig":
        return replace(self, baro_noise_std=0.0, gyro_noise_std=0.0, accel_noise_std=0.0, vio_noise_std=0.0,
                       range_noise_std=0.0, attitude_noise_std=0.0)

    def with_(self, **changes) -> "SensorConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class SensorFrame:
    time: float
    accel: np.ndarray  # body specific force [m/s^2], clipped
    gyro: np.ndarray  # body rates [rad/s]
    baro_altitude: float
    baro_valid: bool
    range_distance: float
    range_valid: bool
    vio_pose: Optional[np.ndarray]  # (x, y, z, yaw) or None
    vio_variance_xy: float  # nan until a full window of VIO samples exists
    attitude: np.ndarray  # attitude estimate, body->world


def baro_valid(t: float, launch_time: float, blackout: float) -> bool:
    """False exactly on [launch_time, launch_time + blackout)."""
    return not (launch_time <= t < launch_time + blackout)


def clip_accel(accel: np.ndarray, saturation: float) -> np.ndarray:
    return np.clip(accel, -saturation, saturation)


def rangefinder(position_tail: np.ndarray, attitude: np.ndarray, cfg: SensorConfig) -> tuple[float, bool]:
    """Slant range along body -z from the tail to the ground plane z = 0."""
    # beam direction is -body_z; its angle from nadir has cosine body_z_world[2]
    cos_nadir = float(rotation.body_z_world(attitude)[2])
    h = float(position_tail[2])
    if cos_nadir < math.cos(cfg.range_max_nadir_angle) or h < 0.0:
        return math.nan, False
    d = h / cos_nadir
    return d, d <= cfg.range_max


def vio_variance_tracker(samples: Iterable) -> float:
    """Population variance of x and of y over the samples; returns the larger.

    Each sample is an (x, y, ...) sequence.
    """
    arr = np.asarray([(s[0], s[1]) for s in samples], dtype=float)
    if arr.shape[0] < 2:
        raise ValueError("need at least two VIO samples")
    return float(np.max(np.var(arr, axis=0)))


class VioVarianceWindow:
    """Sliding-window version of :func:`vio_variance_tracker`."""

    def __init__(self, window: float):
        self.window = window
        self.samples: deque = deque()

    def reset(self) -> None:
        self.samples.clear()

    def add(self, t: float, x: float, y: float) -> None:
        self.samples.append((t, x, y))
        while self.samples and self.samples[0][0] < t - self.window - 1e-9:
            self.samples.popleft()

    @property
    def full(self) -> bool:
        """True once the retained samples span the window (to one sample period)."""
        if len(self.samples) < 2:
            return False
        span = self.samples[-1][0] - self.samples[0][0]
        period = span / (len(self.samples) - 1)
        return span >= self.window - period - 1e-9

    def variance(self) -> float:
        if not self.full:
            return math.nan
        return vio_variance_tracker([(x, y) for _, x, y in self.samples])


class SensorSuite:
    """Stateful sampler: owns the RNG stream, VIO timing and variance window."""

    def __init__(self, cfg: SensorConfig, launch_time: float = 0.0, tail_offset: float = 0.5):
        self.cfg = cfg
        self.launch_time = launch_time
        self.tail_offset = tail_offset
        self.rng = np.random.default_rng(int(cfg.rng_seed))
        self.vio_window = VioVarianceWindow(cfg.vio_window)
        self._next_vio = -math.inf
        self.vio_started: Optional[float] = None
        self.last_vio_time: Optional[float] = None

    def vio_available(self, t: float) -> bool:
        return not any(a <= t < b for a, b in self.cfg.vio_dropouts)

    def reset_vio(self) -> None:
        self.vio_window.reset()
        self._next_vio = -math.inf
        self.vio_started = None

    def sample(self, t: float, state, specific_force_body: np.ndarray, vio_open: bool = False,
               tail_offset: Optional[float] = None) -> SensorFrame:
        cfg = self.cfg
        nz = self.rng.standard_normal(15).tolist()
        sat = cfg.accel_saturation
        sf = specific_force_body
        an = cfg.accel_noise_std
        accel = np.array([min(max(sf[i] + an * nz[i], -sat), sat) for i in range(3)])
        w = state.angular_rate
        gn = cfg.gyro_noise_std
        gyro = np.array([w[0] + gn * nz[3], w[1] + gn * nz[4], w[2] + gn * nz[5]])
        qw, qx, qy, qz = state.attitude.tolist()
        h = 0.5 * cfg.attitude_noise_std
        att = rotation.normalize(rotation.multiply(state.attitude, np.array([1.0, h * nz[6], h * nz[7], h * nz[8]])))

        b_ok = baro_valid(t, self.launch_time, cfg.baro_blackout)
        baro = float(state.position[2]) + cfg.baro_noise_std * nz[9] if b_ok else math.nan

        off = self.tail_offset if tail_offset is None else tail_offset
        cos_nadir = 1.0 - 2.0 * (qx * qx + qy * qy)
        tail_z = float(state.position[2]) - cos_nadir * off
        r_ok = False
        rng_d = math.nan
        if cos_nadir >= math.cos(cfg.range_max_nadir_angle) and tail_z >= 0.0:
            d = tail_z / cos_nadir
            if d <= cfg.range_max:
                r_ok = True
                rng_d = d + cfg.range_noise_std * nz[10]

        pose = None
        if vio_open and self.vio_available(t):
            if self.vio_started is None:
                self.vio_started = t
            if t >= self._next_vio - 1e-9:
                vn = cfg.vio_noise_std
                pos = state.position
                yaw = math.atan2(2 * (qw * qz + qx * qy), 1 - 2 * (qy * qy + qz * qz))
                pose = np.array([pos[0] + vn * nz[11], pos[1] + vn * nz[12], pos[2] + vn * nz[13], yaw + vn * nz[14]])
                period = 1.0 / cfg.vio_rate
                nxt = self._next_vio + period
                self._next_vio = nxt if nxt > t else t + period
                self.vio_window.add(t, float(pose[0]), float(pose[1]))
                self.last_vio_time = t
        var = self.vio_window.variance() if vio_open else math.nan
        return SensorFrame(float(t), accel, gyro, baro, b_ok, float(rng_d), r_ok, pose, var, att)


def sample(truth, specific_force_body, cfg: SensorConfig, t: float, launch_time: float,
           rng: Optional[np.random.Generator] = None, tail_offset: float = 0.5) -> SensorFrame:
    """One-shot sample with a throwaway suite (VIO gate closed)."""
    suite = SensorSuite(cfg, launch_time, tail_offset)
    if rng is not None:
        suite.rng = rng
    return suite.sample(t, truth, specific_force_body)
