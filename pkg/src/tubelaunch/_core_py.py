"""Pure-Python rigid-body kernel.

Mirror of ``_core.pyx``; imported when the compiled extension is missing or
``TUBELAUNCH_PURE_PYTHON`` is set. Both implementations evaluate the same
floating-point operations in the same order.

State vector layout (``y``)::

    0:3    position, world frame, z up [m]
    3:6    velocity, world frame [m/s]
    6:10   attitude quaternion body->world, scalar first
    10:13  angular rate, body frame [rad/s]
    13:    arm hinge angles, then fin hinge angles [rad]

Body frame: +z runs along the long axis toward the nose (thrust direction).
"""

from __future__ import annotations

import math

import numpy as np

HALF_PI = 0.5 * math.pi

# parameter vector indices
P_MASS = 0
P_IXX = 1
P_IYY = 2
P_IZZ = 3
P_G = 4
P_RHO = 5
P_COM = 6
P_BODY_AC = 7
P_FIN_AC = 8
P_W_BODY = 9
P_W_FIN = 10
P_STALL = 11
P_AREF = 12
P_CD_FRONT = 13
P_CD_BASE = 14
P_CD_APP = 15
P_ARM_FRONTAL = 16
P_FIN_FRONTAL = 17
P_YAW_DAMP = 18
P_ROTOR_YAW = 19
P_ROTOR_DRAG = 20
P_TAU_CLOSED = 21
P_TAU_OPEN = 22
P_HINGE_DAMP = 23
P_N_ARMS = 24
P_N_FINS = 25
P_HINGES_FREE = 26
P_INERTIA_RATE = 27
P_BODY_LEN = 28
P_ROTORS = 29  # (x, y, spin) per rotor, n_arms rotors

# input vector indices: rotor thrusts first (n_arms), then these offsets
U_WIND = 0
U_IDOT = 3
U_TAIL = 6


def _aero(bx, by, bz, wx, wy, wz, y, p, n_arms, n_fins):
    v2 = bx * bx + by * by + bz * bz
    if v2 == 0.0:
        return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    v = math.sqrt(v2)
    rho = p[P_RHO]
    qbar = 0.5 * rho * v2
    lat = math.sqrt(bx * bx + by * by)
    alpha = math.atan2(lat, bz)
    # slender-body lift gathers at the leading end: the body AC slides from its
    # nose-first station through mid-body (broadside) to the mirrored station
    x_body = p[P_BODY_AC] + (p[P_BODY_LEN] - 2.0 * p[P_BODY_AC]) * 0.5 * (1.0 - bz / v)

    sf = 0.0
    for i in range(n_fins):
        sf += math.sin(y[13 + n_arms + i])
    sa = 0.0
    for i in range(n_arms):
        sa += math.sin(y[13 + i])

    w_body = p[P_W_BODY]
    w_fin = p[P_W_FIN] * sf
    w_tot = w_body + w_fin
    com = p[P_COM]
    x_fin = p[P_FIN_AC]
    if w_tot > 0.0:
        x_ac = (w_body * x_body + w_fin * x_fin) / w_tot
    else:
        x_ac = x_body

    alpha_e = alpha if alpha <= HALF_PI else math.pi - alpha
    if alpha_e > p[P_STALL]:
        alpha_e = p[P_STALL]
    normal = qbar * w_tot * alpha_e
    if lat > 0.0:
        fnx = -normal * bx / lat
        fny = -normal * by / lat
    else:
        fnx = 0.0
        fny = 0.0

    c = bz / v
    cp = c if c > 0.0 else 0.0
    cm = -c if c < 0.0 else 0.0
    drag_area = p[P_AREF] * (p[P_CD_FRONT] * cp * cp + p[P_CD_BASE] * cm * cm) + p[P_CD_APP] * (
        p[P_ARM_FRONTAL] * sa + p[P_FIN_FRONTAL] * sf
    )
    drag = qbar * drag_area

    fx = fnx - drag * bx / v
    fy = fny - drag * by / v
    fz = -drag * bz / v

    rz = com - x_ac
    mx = -rz * fny
    my = rz * fnx

    lb = x_body - com
    lf = x_fin - com
    kd = 0.5 * rho * v * (w_body * lb * lb + w_fin * lf * lf)
    mx -= kd * wx
    my -= kd * wy
    if n_fins > 0:
        mz = -p[P_YAW_DAMP] * (sf / n_fins) * abs(wz) * wz
    else:
        mz = 0.0
    return fx, fy, fz, mx, my, mz


def _derivs(y, y0, p, u, dy, n_arms, n_fins):
    # hinges open or locked according to the step-start state ``y0``, so a
    # stage that overshoots the stop still sees the smooth spring law
    vx, vy, vz = y[3], y[4], y[5]
    qw, qx, qy, qz = y[6], y[7], y[8], y[9]
    wx, wy, wz = y[10], y[11], y[12]

    r00 = 1.0 - 2.0 * (qy * qy + qz * qz)
    r01 = 2.0 * (qx * qy - qw * qz)
    r02 = 2.0 * (qx * qz + qw * qy)
    r10 = 2.0 * (qx * qy + qw * qz)
    r11 = 1.0 - 2.0 * (qx * qx + qz * qz)
    r12 = 2.0 * (qy * qz - qw * qx)
    r20 = 2.0 * (qx * qz - qw * qy)
    r21 = 2.0 * (qy * qz + qw * qx)
    r22 = 1.0 - 2.0 * (qx * qx + qy * qy)

    k = n_arms
    ax = vx - u[k + U_WIND]
    ay = vy - u[k + U_WIND + 1]
    az = vz - u[k + U_WIND + 2]
    bx = r00 * ax + r10 * ay + r20 * az
    by = r01 * ax + r11 * ay + r21 * az
    bz = r02 * ax + r12 * ay + r22 * az

    fx, fy, fz, mx, my, mz = _aero(bx, by, bz, wx, wy, wz, y, p, n_arms, n_fins)

    thrust = 0.0
    kyaw = p[P_ROTOR_YAW]
    for i in range(n_arms):
        t = u[i]
        if t != 0.0:
            j = P_ROTORS + 3 * i
            thrust += t
            mx += p[j + 1] * t
            my -= p[j] * t
            mz += kyaw * p[j + 2] * t
    fz += thrust
    if thrust != 0.0:
        cr = p[P_ROTOR_DRAG] * thrust
        fx -= cr * bx
        fy -= cr * by
        fz -= cr * bz

    m = p[P_MASS]
    dy[0] = vx
    dy[1] = vy
    dy[2] = vz
    dy[3] = (r00 * fx + r01 * fy + r02 * fz) / m
    dy[4] = (r10 * fx + r11 * fy + r12 * fz) / m
    dy[5] = (r20 * fx + r21 * fy + r22 * fz) / m - p[P_G]

    dy[6] = -0.5 * (qx * wx + qy * wy + qz * wz)
    dy[7] = 0.5 * (qw * wx + qy * wz - qz * wy)
    dy[8] = 0.5 * (qw * wy + qz * wx - qx * wz)
    dy[9] = 0.5 * (qw * wz + qx * wy - qy * wx)

    ixx, iyy, izz = p[P_IXX], p[P_IYY], p[P_IZZ]
    hx = ixx * wx
    hy = iyy * wy
    hz = izz * wz
    gx = mx - (wy * hz - wz * hy)
    gy = my - (wz * hx - wx * hz)
    gz = mz - (wx * hy - wy * hx)
    if p[P_INERTIA_RATE] != 0.0:
        gx -= u[k + U_IDOT] * wx
        gy -= u[k + U_IDOT + 1] * wy
        gz -= u[k + U_IDOT + 2] * wz
    dy[10] = gx / ixx
    dy[11] = gy / iyy
    dy[12] = gz / izz

    free = p[P_HINGES_FREE] != 0.0
    tc = p[P_TAU_CLOSED]
    slope = (p[P_TAU_OPEN] - tc) / HALF_PI
    c = p[P_HINGE_DAMP]
    for i in range(13, 13 + n_arms + n_fins):
        th = y[i]
        if free and y0[i] < HALF_PI:
            dy[i] = (tc + slope * th) / c
        else:
            dy[i] = 0.0


def _step(y, p, u, dt, n_arms, n_fins, ny):
    """One RK4 step on list ``y``; returns (new state, |q|-1 before renormalizing)."""
    k1 = [0.0] * ny
    k2 = [0.0] * ny
    k3 = [0.0] * ny
    k4 = [0.0] * ny
    h = 0.5 * dt
    _derivs(y, y, p, u, k1, n_arms, n_fins)
    tmp = [y[i] + h * k1[i] for i in range(ny)]
    _derivs(tmp, y, p, u, k2, n_arms, n_fins)
    tmp = [y[i] + h * k2[i] for i in range(ny)]
    _derivs(tmp, y, p, u, k3, n_arms, n_fins)
    tmp = [y[i] + dt * k3[i] for i in range(ny)]
    _derivs(tmp, y, p, u, k4, n_arms, n_fins)
    s = dt / 6.0
    out = [y[i] + s * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(ny)]

    norm = math.sqrt(out[6] * out[6] + out[7] * out[7] + out[8] * out[8] + out[9] * out[9])
    for i in range(6, 10):
        out[i] = out[i] / norm
    for i in range(13, ny):
        if out[i] > HALF_PI:
            out[i] = HALF_PI
    return out, norm - 1.0


def derivatives(y, p, u):
    p = np.asarray(p, dtype=np.float64).tolist()
    n_arms = int(p[P_N_ARMS])
    n_fins = int(p[P_N_FINS])
    dy = [0.0] * len(y)
    yl = np.asarray(y, dtype=np.float64).tolist()
    _derivs(yl, yl, p, np.asarray(u, dtype=np.float64).tolist(), dy, n_arms, n_fins)
    return np.array(dy)


def rk4_chunk(y, p, u, dt, n, trace=None):
    """Advance ``y`` in place by ``n`` RK4 steps of ``dt``.

    Row ``i`` of ``trace`` (if given) receives the state after step ``i + 1``.
    Returns the largest quaternion norm deviation seen before renormalization.
    """
    pl = p.tolist()
    ul = u.tolist()
    n_arms = int(pl[P_N_ARMS])
    n_fins = int(pl[P_N_FINS])
    ny = y.shape[0]
    cur = y.tolist()
    worst = 0.0
    for i in range(n):
        cur, dev = _step(cur, pl, ul, dt, n_arms, n_fins, ny)
        if abs(dev) > worst:
            worst = abs(dev)
        if trace is not None:
            trace[i, :] = cur
    y[:] = cur
    return worst


def aero_wrench_body(v_body, omega, y_hinges, p):
    """Aerodynamic force and moment in body axes for apparent velocity ``v_body``.

    ``y_hinges`` holds arm angles followed by fin angles.
    """
    pl = np.asarray(p, dtype=np.float64).tolist()
    n_arms = int(pl[P_N_ARMS])
    n_fins = int(pl[P_N_FINS])
    y = [0.0] * 13 + [float(a) for a in y_hinges]
    out = _aero(
        float(v_body[0]), float(v_body[1]), float(v_body[2]),
        float(omega[0]), float(omega[1]), float(omega[2]),
        y, pl, n_arms, n_fins,
    )
    return np.array(out)
