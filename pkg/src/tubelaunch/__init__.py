"""Deterministic 6-DOF simulation of a tube-launched, self-unfolding multirotor."""

from tubelaunch.kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
