# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled rigid-body kernel. Same layout and arithmetic as ``_core_py``."""

import numpy as np

from libc.math cimport sqrt, sin, atan2, fabs, M_PI

cdef double HALF_PI = 0.5 * M_PI

cdef enum:
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
    P_ROTORS = 29
    U_WIND = 0
    U_IDOT = 3


cdef void _aero(double bx, double by, double bz, double wx, double wy, double wz,
                const double* y, const double* p, int n_arms, int n_fins,
                double* out) noexcept nogil:
    cdef double v2 = bx * bx + by * by + bz * bz
    cdef int i
    if v2 == 0.0:
        for i in range(6):
            out[i] = 0.0
        return
    cdef double v = sqrt(v2)
    cdef double rho = p[P_RHO]
    cdef double qbar = 0.5 * rho * v2
    cdef double lat = sqrt(bx * bx + by * by)
    cdef double alpha = atan2(lat, bz)
    # slender-body lift gathers at the leading end: the body AC slides from its
    # nose-first station through mid-body (broadside) to the mirrored station
    cdef double x_body = p[P_BODY_AC] + (p[P_BODY_LEN] - 2.0 * p[P_BODY_AC]) * 0.5 * (1.0 - bz / v)

    cdef double sf = 0.0
    for i in range(n_fins):
        sf += sin(y[13 + n_arms + i])
    cdef double sa = 0.0
    for i in range(n_arms):
        sa += sin(y[13 + i])

    cdef double w_body = p[P_W_BODY]
    cdef double w_fin = p[P_W_FIN] * sf
    cdef double w_tot = w_body + w_fin
    cdef double com = p[P_COM]
    cdef double x_fin = p[P_FIN_AC]
    cdef double x_ac
    if w_tot > 0.0:
        x_ac = (w_body * x_body + w_fin * x_fin) / w_tot
    else:
        x_ac = x_body

    cdef double alpha_e = alpha if alpha <= HALF_PI else M_PI - alpha
    if alpha_e > p[P_STALL]:
        alpha_e = p[P_STALL]
    cdef double normal = qbar * w_tot * alpha_e
    cdef double fnx, fny
    if lat > 0.0:
        fnx = -normal * bx / lat
        fny = -normal * by / lat
    else:
        fnx = 0.0
        fny = 0.0

    cdef double c = bz / v
    cdef double cp = c if c > 0.0 else 0.0
    cdef double cm = -c if c < 0.0 else 0.0
    cdef double drag_area = p[P_AREF] * (p[P_CD_FRONT] * cp * cp + p[P_CD_BASE] * cm * cm) + p[P_CD_APP] * (
        p[P_ARM_FRONTAL] * sa + p[P_FIN_FRONTAL] * sf
    )
    cdef double drag = qbar * drag_area

    out[0] = fnx - drag * bx / v
    out[1] = fny - drag * by / v
    out[2] = -drag * bz / v

    cdef double rz = com - x_ac
    cdef double mx = -rz * fny
    cdef double my = rz * fnx

    cdef double lb = x_body - com
    cdef double lf = x_fin - com
    cdef double kd = 0.5 * rho * v * (w_body * lb * lb + w_fin * lf * lf)
    mx -= kd * wx
    my -= kd * wy
    out[3] = mx
    out[4] = my
    if n_fins > 0:
        out[5] = -p[P_YAW_DAMP] * (sf / n_fins) * fabs(wz) * wz
    else:
        out[5] = 0.0


cdef void _derivs(const double* y, const double* y0, const double* p, const double* u, double* dy,
                  int n_arms, int n_fins) noexcept nogil:
    # hinges open or locked according to the step-start state ``y0``, so a
    # stage that overshoots the stop still sees the smooth spring law
    cdef double vx = y[3], vy = y[4], vz = y[5]
    cdef double qw = y[6], qx = y[7], qy = y[8], qz = y[9]
    cdef double wx = y[10], wy = y[11], wz = y[12]

    cdef double r00 = 1.0 - 2.0 * (qy * qy + qz * qz)
    cdef double r01 = 2.0 * (qx * qy - qw * qz)
    cdef double r02 = 2.0 * (qx * qz + qw * qy)
    cdef double r10 = 2.0 * (qx * qy + qw * qz)
    cdef double r11 = 1.0 - 2.0 * (qx * qx + qz * qz)
    cdef double r12 = 2.0 * (qy * qz - qw * qx)
    cdef double r20 = 2.0 * (qx * qz - qw * qy)
    cdef double r21 = 2.0 * (qy * qz + qw * qx)
    cdef double r22 = 1.0 - 2.0 * (qx * qx + qy * qy)

    cdef int k = n_arms
    cdef double ax = vx - u[k + U_WIND]
    cdef double ay = vy - u[k + U_WIND + 1]
    cdef double az = vz - u[k + U_WIND + 2]
    cdef double bx = r00 * ax + r10 * ay + r20 * az
    cdef double by = r01 * ax + r11 * ay + r21 * az
    cdef double bz = r02 * ax + r12 * ay + r22 * az

    cdef double w[6]
    _aero(bx, by, bz, wx, wy, wz, y, p, n_arms, n_fins, w)
    cdef double fx = w[0], fy = w[1], fz = w[2], mx = w[3], my = w[4], mz = w[5]

    cdef double thrust = 0.0
    cdef double kyaw = p[P_ROTOR_YAW]
    cdef double t
    cdef int i, j
    for i in range(n_arms):
        t = u[i]
        if t != 0.0:
            j = P_ROTORS + 3 * i
            thrust += t
            mx += p[j + 1] * t
            my -= p[j] * t
            mz += kyaw * p[j + 2] * t
    fz += thrust
    cdef double cr
    if thrust != 0.0:
        cr = p[P_ROTOR_DRAG] * thrust
        fx -= cr * bx
        fy -= cr * by
        fz -= cr * bz

    cdef double m = p[P_MASS]
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

    cdef double ixx = p[P_IXX], iyy = p[P_IYY], izz = p[P_IZZ]
    cdef double hx = ixx * wx
    cdef double hy = iyy * wy
    cdef double hz = izz * wz
    cdef double gx = mx - (wy * hz - wz * hy)
    cdef double gy = my - (wz * hx - wx * hz)
    cdef double gz = mz - (wx * hy - wy * hx)
    if p[P_INERTIA_RATE] != 0.0:
        gx -= u[k + U_IDOT] * wx
        gy -= u[k + U_IDOT + 1] * wy
        gz -= u[k + U_IDOT + 2] * wz
    dy[10] = gx / ixx
    dy[11] = gy / iyy
    dy[12] = gz / izz

    cdef bint free = p[P_HINGES_FREE] != 0.0
    cdef double tc = p[P_TAU_CLOSED]
    cdef double slope = (p[P_TAU_OPEN] - tc) / HALF_PI
    cdef double c = p[P_HINGE_DAMP]
    cdef double th
    for i in range(13, 13 + n_arms + n_fins):
        th = y[i]
        if free and y0[i] < HALF_PI:
            dy[i] = (tc + slope * th) / c
        else:
            dy[i] = 0.0


cdef double _step(double* y, const double* p, const double* u, double dt,
                  int n_arms, int n_fins, int ny,
                  double* k1, double* k2, double* k3, double* k4, double* tmp) noexcept nogil:
    cdef int i
    cdef double h = 0.5 * dt
    _derivs(y, y, p, u, k1, n_arms, n_fins)
    for i in range(ny):
        tmp[i] = y[i] + h * k1[i]
    _derivs(tmp, y, p, u, k2, n_arms, n_fins)
    for i in range(ny):
        tmp[i] = y[i] + h * k2[i]
    _derivs(tmp, y, p, u, k3, n_arms, n_fins)
    for i in range(ny):
        tmp[i] = y[i] + dt * k3[i]
    _derivs(tmp, y, p, u, k4, n_arms, n_fins)
    cdef double s = dt / 6.0
    for i in range(ny):
        y[i] = y[i] + s * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])

    cdef double norm = sqrt(y[6] * y[6] + y[7] * y[7] + y[8] * y[8] + y[9] * y[9])
    for i in range(6, 10):
        y[i] = y[i] / norm
    for i in range(13, ny):
        if y[i] > HALF_PI:
            y[i] = HALF_PI
    return norm - 1.0


def derivatives(y, p, u):
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    out = np.zeros(yv.shape[0])
    cdef double[::1] dv = out
    _derivs(&yv[0], &yv[0], &pv[0], &uv[0], &dv[0], <int>pv[P_N_ARMS], <int>pv[P_N_FINS])
    return out


def rk4_chunk(double[::1] y, const double[::1] p, const double[::1] u, double dt, int n, trace=None):
    """Advance ``y`` in place by ``n`` RK4 steps of ``dt``.

    Row ``i`` of ``trace`` (if given) receives the state after step ``i + 1``.
    Returns the largest quaternion norm deviation seen before renormalization.
    """
    cdef int ny = y.shape[0]
    cdef int n_arms = <int>p[P_N_ARMS]
    cdef int n_fins = <int>p[P_N_FINS]
    scratch = np.empty(5 * ny)
    cdef double[::1] s = scratch
    cdef double[:, ::1] tr
    cdef bint record = trace is not None
    if record:
        tr = trace
    cdef double worst = 0.0, dev
    cdef int i, j
    with nogil:
        for i in range(n):
            dev = _step(&y[0], &p[0], &u[0], dt, n_arms, n_fins, ny,
                        &s[0], &s[ny], &s[2 * ny], &s[3 * ny], &s[4 * ny])
            if fabs(dev) > worst:
                worst = fabs(dev)
            if record:
                for j in range(ny):
                    tr[i, j] = y[j]
    return worst


def aero_wrench_body(v_body, omega, y_hinges, p):
    """Aerodynamic force and moment in body axes for apparent velocity ``v_body``.

    ``y_hinges`` holds arm angles followed by fin angles.
    """
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    hinges = np.asarray(y_hinges, dtype=np.float64)
    yfull = np.zeros(13 + hinges.shape[0])
    yfull[13:] = hinges
    cdef double[::1] yv = yfull
    out = np.zeros(6)
    cdef double[::1] ov = out
    _aero(float(v_body[0]), float(v_body[1]), float(v_body[2]),
          float(omega[0]), float(omega[1]), float(omega[2]),
          &yv[0], &pv[0], <int>pv[P_N_ARMS], <int>pv[P_N_FINS], &ov[0])
    return out
