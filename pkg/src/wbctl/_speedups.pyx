# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled rigid-body kernels.

Same five entry points as ``_kernels_py`` (the pure-numpy reference), same
algorithms, same operation order; only the loop bodies are C. Keep the two
modules in lockstep when changing either.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

BACKEND_NAME = "compiled"


cdef inline void _m33mul(double* c, const double* a, const double* b) noexcept nogil:
    cdef int i, j, k
    for i in range(3):
        for j in range(3):
            c[3 * i + j] = 0.0
            for k in range(3):
                c[3 * i + j] += a[3 * i + k] * b[3 * k + j]


cdef inline void _m33vec(double* out, const double* m, const double* v) noexcept nogil:
    cdef int i
    for i in range(3):
        out[i] = m[3 * i] * v[0] + m[3 * i + 1] * v[1] + m[3 * i + 2] * v[2]


cdef inline void _cross(double* out, const double* a, const double* b) noexcept nogil:
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


cdef inline double _dot(const double* a, const double* b) noexcept nogil:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


cdef inline void _copy3(double* out, const double* a) noexcept nogil:
    out[0] = a[0]
    out[1] = a[1]
    out[2] = a[2]


cdef inline void _copy9(double* out, const double* a) noexcept nogil:
    cdef int i
    for i in range(9):
        out[i] = a[i]


cdef inline void _rodrigues(double* rot, const double* axis, double angle) noexcept nogil:
    cdef double c = cos(angle)
    cdef double s = sin(angle)
    cdef double t = 1.0 - c
    cdef double kx = axis[0], ky = axis[1], kz = axis[2]
    rot[0] = c + t * kx * kx
    rot[1] = -s * kz + t * kx * ky
    rot[2] = s * ky + t * kx * kz
    rot[3] = s * kz + t * ky * kx
    rot[4] = c + t * ky * ky
    rot[5] = -s * kx + t * ky * kz
    rot[6] = -s * ky + t * kz * kx
    rot[7] = s * kx + t * kz * ky
    rot[8] = c + t * kz * kz


cdef void _link_frames(int n, const double* axes, const double* fixed_rots,
                       const double* trans, const double* q,
                       double* rots, double* origins, double* axes_w) noexcept nogil:
    cdef double r_prev[9]
    cdef double p_prev[3]
    cdef double r_joint[9]
    cdef double rot_axis[9]
    cdef double tmp[3]
    cdef int k
    r_prev[0] = 1.0; r_prev[1] = 0.0; r_prev[2] = 0.0
    r_prev[3] = 0.0; r_prev[4] = 1.0; r_prev[5] = 0.0
    r_prev[6] = 0.0; r_prev[7] = 0.0; r_prev[8] = 1.0
    p_prev[0] = 0.0; p_prev[1] = 0.0; p_prev[2] = 0.0
    for k in range(n):
        _m33mul(r_joint, r_prev, fixed_rots + 9 * k)
        _m33vec(tmp, r_prev, trans + 3 * k)
        origins[3 * k] = p_prev[0] + tmp[0]
        origins[3 * k + 1] = p_prev[1] + tmp[1]
        origins[3 * k + 2] = p_prev[2] + tmp[2]
        _m33vec(axes_w + 3 * k, r_joint, axes + 3 * k)
        _rodrigues(rot_axis, axes + 3 * k, q[k])
        _m33mul(rots + 9 * k, r_joint, rot_axis)
        _copy9(r_prev, rots + 9 * k)
        _copy3(p_prev, origins + 3 * k)


cdef void _world_inertials(int n, const double* rots, const double* origins,
                           const double* coms, const double* inertias,
                           double* coms_w, double* inertias_w) noexcept nogil:
    cdef double tmp[3]
    cdef double ri[9]
    cdef int k, i, j
    for k in range(n):
        _m33vec(tmp, rots + 9 * k, coms + 3 * k)
        coms_w[3 * k] = origins[3 * k] + tmp[0]
        coms_w[3 * k + 1] = origins[3 * k + 1] + tmp[1]
        coms_w[3 * k + 2] = origins[3 * k + 2] + tmp[2]
        _m33mul(ri, rots + 9 * k, inertias + 9 * k)
        # inertias_w = ri @ rots.T
        for i in range(3):
            for j in range(3):
                inertias_w[9 * k + 3 * i + j] = (
                    ri[3 * i] * rots[9 * k + 3 * j]
                    + ri[3 * i + 1] * rots[9 * k + 3 * j + 1]
                    + ri[3 * i + 2] * rots[9 * k + 3 * j + 2]
                )


def ee_pose(packed, double[::1] q):
    """End-effector rotation and position in the arm-root frame."""
    cdef double[:, ::1] axes = packed.axes
    cdef double[:, :, ::1] fixed_rots = packed.rots
    cdef double[:, ::1] trans = packed.trans
    cdef double[:, ::1] ee_rot = packed.ee_rot
    cdef double[::1] ee_trans = packed.ee_trans
    cdef int n = axes.shape[0]
    rots_np = np.empty((n, 3, 3))
    origins_np = np.empty((n, 3))
    axes_w_np = np.empty((n, 3))
    cdef double[:, :, ::1] rots = rots_np
    cdef double[:, ::1] origins = origins_np
    cdef double[:, ::1] axes_w = axes_w_np
    _link_frames(n, &axes[0, 0], &fixed_rots[0, 0, 0], &trans[0, 0], &q[0],
                 &rots[0, 0, 0], &origins[0, 0], &axes_w[0, 0])
    r_np = np.empty((3, 3))
    p_np = np.empty(3)
    cdef double[:, ::1] r = r_np
    cdef double[::1] p = p_np
    cdef double tmp[3]
    _m33mul(&r[0, 0], &rots[n - 1, 0, 0], &ee_rot[0, 0])
    _m33vec(tmp, &rots[n - 1, 0, 0], &ee_trans[0])
    p[0] = origins[n - 1, 0] + tmp[0]
    p[1] = origins[n - 1, 1] + tmp[1]
    p[2] = origins[n - 1, 2] + tmp[2]
    return r_np, p_np


def com_positions(packed, double[::1] q):
    """Centre-of-mass positions of every link in the arm-root frame."""
    cdef double[:, ::1] axes = packed.axes
    cdef double[:, :, ::1] fixed_rots = packed.rots
    cdef double[:, ::1] trans = packed.trans
    cdef double[:, ::1] coms = packed.coms
    cdef int n = axes.shape[0]
    rots_np = np.empty((n, 3, 3))
    origins_np = np.empty((n, 3))
    axes_w_np = np.empty((n, 3))
    out_np = np.empty((n, 3))
    cdef double[:, :, ::1] rots = rots_np
    cdef double[:, ::1] origins = origins_np
    cdef double[:, ::1] axes_w = axes_w_np
    cdef double[:, ::1] out = out_np
    cdef double tmp[3]
    cdef int k
    _link_frames(n, &axes[0, 0], &fixed_rots[0, 0, 0], &trans[0, 0], &q[0],
                 &rots[0, 0, 0], &origins[0, 0], &axes_w[0, 0])
    for k in range(n):
        _m33vec(tmp, &rots[k, 0, 0], &coms[k, 0])
        out[k, 0] = origins[k, 0] + tmp[0]
        out[k, 1] = origins[k, 1] + tmp[1]
        out[k, 2] = origins[k, 2] + tmp[2]
    return out_np


def jacobian_arm(packed, double[::1] q):
    """Geometric Jacobian of the EE point, arm columns only (6 x n)."""
    cdef double[:, ::1] axes = packed.axes
    cdef double[:, :, ::1] fixed_rots = packed.rots
    cdef double[:, ::1] trans = packed.trans
    cdef double[::1] ee_trans = packed.ee_trans
    cdef int n = axes.shape[0]
    rots_np = np.empty((n, 3, 3))
    origins_np = np.empty((n, 3))
    axes_w_np = np.empty((n, 3))
    jac_np = np.empty((6, n))
    cdef double[:, :, ::1] rots = rots_np
    cdef double[:, ::1] origins = origins_np
    cdef double[:, ::1] axes_w = axes_w_np
    cdef double[:, ::1] jac = jac_np
    cdef double p_ee[3]
    cdef double rel[3]
    cdef double lin[3]
    cdef double tmp[3]
    cdef int k
    _link_frames(n, &axes[0, 0], &fixed_rots[0, 0, 0], &trans[0, 0], &q[0],
                 &rots[0, 0, 0], &origins[0, 0], &axes_w[0, 0])
    _m33vec(tmp, &rots[n - 1, 0, 0], &ee_trans[0])
    p_ee[0] = origins[n - 1, 0] + tmp[0]
    p_ee[1] = origins[n - 1, 1] + tmp[1]
    p_ee[2] = origins[n - 1, 2] + tmp[2]
    for k in range(n):
        rel[0] = p_ee[0] - origins[k, 0]
        rel[1] = p_ee[1] - origins[k, 1]
        rel[2] = p_ee[2] - origins[k, 2]
        _cross(lin, &axes_w[k, 0], rel)
        jac[0, k] = lin[0]
        jac[1, k] = lin[1]
        jac[2, k] = lin[2]
        jac[3, k] = axes_w[k, 0]
        jac[4, k] = axes_w[k, 1]
        jac[5, k] = axes_w[k, 2]
    return jac_np


def mass_matrix_arm(packed, double[::1] q):
    """Arm joint-space inertia by composite-rigid-body accumulation."""
    cdef double[:, ::1] axes = packed.axes
    cdef double[:, :, ::1] fixed_rots = packed.rots
    cdef double[:, ::1] trans = packed.trans
    cdef double[::1] masses = packed.masses
    cdef double[:, ::1] coms = packed.coms
    cdef double[:, :, ::1] inertias = packed.inertias
    cdef int n = axes.shape[0]
    rots_np = np.empty((n, 3, 3))
    origins_np = np.empty((n, 3))
    axes_w_np = np.empty((n, 3))
    coms_w_np = np.empty((n, 3))
    inertias_w_np = np.empty((n, 3, 3))
    comp_m_np = np.empty(n)
    comp_c_np = np.empty((n, 3))
    comp_i_np = np.empty((n, 3, 3))
    mass_np = np.zeros((n, n))
    cdef double[:, :, ::1] rots = rots_np
    cdef double[:, ::1] origins = origins_np
    cdef double[:, ::1] axes_w = axes_w_np
    cdef double[:, ::1] coms_w = coms_w_np
    cdef double[:, :, ::1] inertias_w = inertias_w_np
    cdef double[::1] comp_m = comp_m_np
    cdef double[:, ::1] comp_c = comp_c_np
    cdef double[:, :, ::1] comp_i = comp_i_np
    cdef double[:, ::1] mass = mass_np
    cdef double m_child, m_tot, dd1, dd2, val
    cdef double c_tot[3]
    cdef double d1[3]
    cdef double d2[3]
    cdef double f[3]
    cdef double n_com[3]
    cdef double rel[3]
    cdef double mom[3]
    cdef double tmp[3]
    cdef int i, j, k, a, b

    _link_frames(n, &axes[0, 0], &fixed_rots[0, 0, 0], &trans[0, 0], &q[0],
                 &rots[0, 0, 0], &origins[0, 0], &axes_w[0, 0])
    _world_inertials(n, &rots[0, 0, 0], &origins[0, 0], &coms[0, 0],
                     &inertias[0, 0, 0], &coms_w[0, 0], &inertias_w[0, 0, 0])

    comp_m[n - 1] = masses[n - 1]
    _copy3(&comp_c[n - 1, 0], &coms_w[n - 1, 0])
    _copy9(&comp_i[n - 1, 0, 0], &inertias_w[n - 1, 0, 0])
    for k in range(n - 2, -1, -1):
        m_child = comp_m[k + 1]
        m_tot = masses[k] + m_child
        for a in range(3):
            c_tot[a] = (masses[k] * coms_w[k, a] + m_child * comp_c[k + 1, a]) / m_tot
            d1[a] = coms_w[k, a] - c_tot[a]
            d2[a] = comp_c[k + 1, a] - c_tot[a]
        dd1 = _dot(d1, d1)
        dd2 = _dot(d2, d2)
        for a in range(3):
            for b in range(3):
                val = inertias_w[k, a, b] + comp_i[k + 1, a, b]
                val += masses[k] * ((dd1 if a == b else 0.0) - d1[a] * d1[b])
                val += m_child * ((dd2 if a == b else 0.0) - d2[a] * d2[b])
                comp_i[k, a, b] = val
        comp_m[k] = m_tot
        _copy3(&comp_c[k, 0], c_tot)

    for i in range(n):
        for a in range(3):
            rel[a] = comp_c[i, a] - origins[i, a]
        _cross(tmp, &axes_w[i, 0], rel)
        for a in range(3):
            f[a] = comp_m[i] * tmp[a]
        _m33vec(n_com, &comp_i[i, 0, 0], &axes_w[i, 0])
        for j in range(i + 1):
            for a in range(3):
                rel[a] = comp_c[i, a] - origins[j, a]
            _cross(tmp, rel, f)
            for a in range(3):
                mom[a] = n_com[a] + tmp[a]
            val = _dot(&axes_w[j, 0], mom)
            mass[i, j] = val
            mass[j, i] = val
    return mass_np


def rnea_arm(packed, double[::1] q, double[::1] qd, double[::1] qdd, double[::1] gravity):
    """Recursive Newton-Euler inverse dynamics for the arm."""
    cdef double[:, ::1] axes = packed.axes
    cdef double[:, :, ::1] fixed_rots = packed.rots
    cdef double[:, ::1] trans = packed.trans
    cdef double[::1] masses = packed.masses
    cdef double[:, ::1] coms = packed.coms
    cdef double[:, :, ::1] inertias = packed.inertias
    cdef int n = axes.shape[0]
    rots_np = np.empty((n, 3, 3))
    origins_np = np.empty((n, 3))
    axes_w_np = np.empty((n, 3))
    coms_w_np = np.empty((n, 3))
    inertias_w_np = np.empty((n, 3, 3))
    omega_np = np.empty((n, 3))
    alpha_np = np.empty((n, 3))
    acc_com_np = np.empty((n, 3))
    tau_np = np.empty(n)
    cdef double[:, :, ::1] rots = rots_np
    cdef double[:, ::1] origins = origins_np
    cdef double[:, ::1] axes_w = axes_w_np
    cdef double[:, ::1] coms_w = coms_w_np
    cdef double[:, :, ::1] inertias_w = inertias_w_np
    cdef double[:, ::1] omega = omega_np
    cdef double[:, ::1] alpha = alpha_np
    cdef double[:, ::1] acc_com = acc_com_np
    cdef double[::1] tau = tau_np
    cdef double w_prev[3]
    cdef double a_prev[3]
    cdef double acc_prev[3]
    cdef double p_prev[3]
    cdef double d[3]
    cdef double a_joint[3]
    cdef double r[3]
    cdef double t1[3]
    cdef double t2[3]
    cdef double f_child[3]
    cdef double n_child[3]
    cdef double p_child[3]
    cdef double f_net[3]
    cdef double n_net[3]
    cdef double f_k[3]
    cdef double n_k[3]
    cdef int k, a

    _link_frames(n, &axes[0, 0], &fixed_rots[0, 0, 0], &trans[0, 0], &q[0],
                 &rots[0, 0, 0], &origins[0, 0], &axes_w[0, 0])
    _world_inertials(n, &rots[0, 0, 0], &origins[0, 0], &coms[0, 0],
                     &inertias[0, 0, 0], &coms_w[0, 0], &inertias_w[0, 0, 0])

    for a in range(3):
        w_prev[a] = 0.0
        a_prev[a] = 0.0
        acc_prev[a] = -gravity[a]
        p_prev[a] = 0.0
    for k in range(n):
        for a in range(3):
            d[a] = origins[k, a] - p_prev[a]
        _cross(t1, a_prev, d)
        _cross(t2, w_prev, d)
        _cross(r, w_prev, t2)           # w x (w x d)
        for a in range(3):
            a_joint[a] = acc_prev[a] + t1[a] + r[a]
        _cross(t1, w_prev, &axes_w[k, 0])
        for a in range(3):
            omega[k, a] = w_prev[a] + axes_w[k, a] * qd[k]
            alpha[k, a] = a_prev[a] + axes_w[k, a] * qdd[k] + t1[a] * qd[k]
        for a in range(3):
            r[a] = coms_w[k, a] - origins[k, a]
        _cross(t1, &alpha[k, 0], r)
        _cross(t2, &omega[k, 0], r)
        _cross(d, &omega[k, 0], t2)     # w x (w x r)
        for a in range(3):
            acc_com[k, a] = a_joint[a] + t1[a] + d[a]
            w_prev[a] = omega[k, a]
            a_prev[a] = alpha[k, a]
            acc_prev[a] = a_joint[a]
            p_prev[a] = origins[k, a]

    for a in range(3):
        f_child[a] = 0.0
        n_child[a] = 0.0
        p_child[a] = 0.0
    for k in range(n - 1, -1, -1):
        for a in range(3):
            f_net[a] = masses[k] * acc_com[k, a]
        _m33vec(t1, &inertias_w[k, 0, 0], &alpha[k, 0])
        _m33vec(t2, &inertias_w[k, 0, 0], &omega[k, 0])
        _cross(n_net, &omega[k, 0], t2)
        for a in range(3):
            n_net[a] += t1[a]
        for a in range(3):
            r[a] = coms_w[k, a] - origins[k, a]
            d[a] = p_child[a] - origins[k, a]
        _cross(t1, r, f_net)
        _cross(t2, d, f_child)
        for a in range(3):
            f_k[a] = f_net[a] + f_child[a]
            n_k[a] = n_net[a] + t1[a] + n_child[a] + t2[a]
        tau[k] = _dot(&axes_w[k, 0], n_k)
        for a in range(3):
            f_child[a] = f_k[a]
            n_child[a] = n_k[a]
            p_child[a] = origins[k, a]
    return tau_np
