"""Compare the compiled and pure-Python integration kernels.

Integrates the same passive crosswind flight (folded start, hinges free) with
both backends, checks that the trajectories agree bit for bit and reports
steps per second. Run with ``python benchmarks/bench_kernels.py [steps]``.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from tubelaunch import _core_py
from tubelaunch.dynamics import ForceModel, RigidBodyState
from tubelaunch.scenario import Scenario
from tubelaunch.vehicle import DeploymentState, mass_properties

try:
    from tubelaunch import _core
except ImportError:  # pragma: no cover - source checkout without a build
    _core = None


def initial(scn: Scenario):
    v = scn.vehicle
    model = ForceModel(v, scn.aero, wind=np.array([17.0, 0.0, 0.0]))
    folded = DeploymentState.folded(v)
    state = RigidBodyState(np.array([0.0, 0.0, 1.5]), np.array([0.0, 0.0, 12.0]),
                           np.array([1.0, 0.0, 0.0, 0.0]), np.array([0.3, -0.2, 0.0]))
    y = np.concatenate([state.to_vector(), folded.as_array()])
    return y, model.params(mass_properties(v, folded)), model.inputs()


def time_backend(impl, y0, p, u, dt, steps, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        y = y0.copy()
        t0 = time.perf_counter()
        impl.rk4_chunk(y, p, u, dt, steps)
        best = min(best, time.perf_counter() - t0)
        out = y
    return best, out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("steps", type=int, nargs="?", default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    y0, p, u = initial(Scenario())
    dt = 1.0e-3
    t_py, y_py = time_backend(_core_py, y0, p, u, dt, args.steps, args.repeat)
    print(f"python : {args.steps / t_py:12.0f} steps/s")
    if _core is None:
        print("cython : not built")
        return
    t_cy, y_cy = time_backend(_core, y0, p, u, dt, args.steps, args.repeat)
    print(f"cython : {args.steps / t_cy:12.0f} steps/s")
    print(f"speedup: {t_py / t_cy:8.1f}x")
    print(f"max |difference| after {args.steps} steps: {float(np.max(np.abs(y_py - y_cy))):.3g}")


if __name__ == "__main__":
    main()
