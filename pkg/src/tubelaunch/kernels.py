"""Backend selection for the integration kernel.

The compiled ``_core`` extension is used when importable; otherwise, or when
``TUBELAUNCH_PURE_PYTHON`` is set to a non-empty value other than ``0``, the
pure-Python twin in ``_core_py`` is loaded. Both expose ``derivatives``,
``rk4_chunk`` and ``aero_wrench_body`` with identical signatures.
"""

from __future__ import annotations

import os

from tubelaunch import _core_py

_force_pure = os.environ.get("TUBELAUNCH_PURE_PYTHON", "") not in ("", "0")

if _force_pure:
    _impl = _core_py
    BACKEND = "python"
else:
    try:
        from tubelaunch import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _core_py
        BACKEND = "python"

derivatives = _impl.derivatives
rk4_chunk = _impl.rk4_chunk
aero_wrench_body = _impl.aero_wrench_body

# layout constants live in the pure module; the extension hard-codes the same values
P_MASS = _core_py.P_MASS
P_IXX = _core_py.P_IXX
P_IYY = _core_py.P_IYY
P_IZZ = _core_py.P_IZZ
P_G = _core_py.P_G
P_RHO = _core_py.P_RHO
P_COM = _core_py.P_COM
P_BODY_AC = _core_py.P_BODY_AC
P_FIN_AC = _core_py.P_FIN_AC
P_W_BODY = _core_py.P_W_BODY
P_W_FIN = _core_py.P_W_FIN
P_STALL = _core_py.P_STALL
P_AREF = _core_py.P_AREF
P_CD_FRONT = _core_py.P_CD_FRONT
P_CD_BASE = _core_py.P_CD_BASE
P_CD_APP = _core_py.P_CD_APP
P_ARM_FRONTAL = _core_py.P_ARM_FRONTAL
P_FIN_FRONTAL = _core_py.P_FIN_FRONTAL
P_YAW_DAMP = _core_py.P_YAW_DAMP
P_ROTOR_YAW = _core_py.P_ROTOR_YAW
P_ROTOR_DRAG = _core_py.P_ROTOR_DRAG
P_TAU_CLOSED = _core_py.P_TAU_CLOSED
P_TAU_OPEN = _core_py.P_TAU_OPEN
P_HINGE_DAMP = _core_py.P_HINGE_DAMP
P_N_ARMS = _core_py.P_N_ARMS
P_N_FINS = _core_py.P_N_FINS
P_HINGES_FREE = _core_py.P_HINGES_FREE
P_INERTIA_RATE = _core_py.P_INERTIA_RATE
P_BODY_LEN = _core_py.P_BODY_LEN
P_ROTORS = _core_py.P_ROTORS
U_WIND = _core_py.U_WIND
U_IDOT = _core_py.U_IDOT
U_TAIL = _core_py.U_TAIL


def param_size(n_arms: int) -> int:
    return P_ROTORS + 3 * n_arms


def input_size(n_arms: int) -> int:
    return n_arms + U_TAIL
