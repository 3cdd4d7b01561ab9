"""Shared builders for phase-machine tests."""

from __future__ import annotations

import math

import numpy as np

from tubelaunch import rotation
from tubelaunch.autonomy import AutonomyConfig, AutonomyPhase, FsmMemory, transition
from tubelaunch.constants import GRAVITY
from tubelaunch.dynamics import APOGEE, ARM_LATCHED, TUMBLE, SimEvent
from tubelaunch.sensors import SensorFrame

P = AutonomyPhase
CFG = AutonomyConfig()


def frame(t, rng=math.nan, baro=False, gyro=(0.0, 0.0, 0.0), var=math.nan, att=None, alt=math.nan):
    return SensorFrame(
        time=t,
        accel=np.array([0.0, 0.0, GRAVITY]),
        gyro=np.asarray(gyro, dtype=float),
        baro_altitude=alt,
        baro_valid=baro,
        range_distance=rng,
        range_valid=not math.isnan(rng),
        vio_pose=None,
        vio_variance_xy=var,
        attitude=rotation.IDENTITY.copy() if att is None else att,
    )


def random_trace(rng: np.random.Generator, steps: int = 40) -> list:
    mem = FsmMemory()
    phase = P.IN_TUBE
    seq = [phase]
    clock = 0.0
    for _ in range(steps):
        clock += float(rng.choice([0.004, 0.1, 1.0, 3.0]))
        events = []
        r = rng.random()
        if r < 0.15:
            events.append(SimEvent(ARM_LATCHED, clock, int(rng.integers(6))))
        elif r < 0.2:
            events.append(SimEvent(APOGEE, clock))
        elif r < 0.23:
            events.append(SimEvent(TUMBLE, clock))
        elif r < 0.3:
            events.extend(SimEvent(ARM_LATCHED, clock, i) for i in range(6))
        rng_d = float(rng.uniform(0.0, 3.0)) if rng.random() < 0.8 else math.nan
        f = frame(clock, rng_d, bool(rng.random() < 0.7), (float(rng.normal(0, 0.2)), 0.0, 0.0),
                  float(rng.uniform(0.0, 0.1)) if rng.random() < 0.7 else math.nan)
        mem.vertical_speed = float(rng.normal(0.0, 0.3))
        new, guard = transition(phase, f, clock, events, CFG, mem)
        if new is not phase:
            assert guard is not None
            seq.append(new)
            phase = new
        if phase is P.FAIL_TUMBLE:
            break
    return seq
