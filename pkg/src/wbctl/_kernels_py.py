"""Pure-numpy rigid-body kernels (reference backend).

Algorithms follow Featherstone, "Rigid Body Dynamics Algorithms" (2008):
composite-rigid-body accumulation for the joint-space inertia and a
recursive Newton-Euler pass for inverse dynamics, both written with world
(arm-root) frame vectors. The compiled backend in ``_speedups`` mirrors this
module operation for operation so the two stay numerically interchangeable.

All functions take the chain's packed arrays (see ``chain._PackedChain``) and
arm joint vectors only; the planar base is composed at the ``dynamics``
layer. The per-configuration kinematic quantities (link frames, world COMs
and inertias) are shared between kernels through a one-slot memo, since the
controller and the plant evaluate several kernels at the same q every tick.
"""

import numpy as np

BACKEND_NAME = "python"

_frames_memo = {"packed": None, "key": None, "value": None}


def _link_frames(packed, q):
    """World rotation, joint origin, axis, COM, and COM inertia per link."""
    key = q.tobytes()
    if _frames_memo["packed"] is packed and _frames_memo["key"] == key:
        return _frames_memo["value"]
    n = packed.masses.shape[0]
    rots = np.empty((n, 3, 3))
    origins = np.empty((n, 3))
    axes_w = np.empty((n, 3))
    r_prev = np.eye(3)
    p_prev = np.zeros(3)
    eye = np.eye(3)
    for k in range(n):
        r_joint = r_prev @ packed.rots[k]
        origins[k] = p_prev + r_prev @ packed.trans[k]
        axis = packed.axes[k]
        axes_w[k] = r_joint @ axis
        c = np.cos(q[k])
        s = np.sin(q[k])
        kx, ky, kz = axis
        cross = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
        rot_axis = c * eye + s * cross + (1.0 - c) * np.outer(axis, axis)
        rots[k] = r_joint @ rot_axis
        r_prev = rots[k]
        p_prev = origins[k]
    coms_w = origins + np.einsum("kij,kj->ki", rots, packed.coms)
    inertias_w = rots @ packed.inertias @ rots.transpose(0, 2, 1)
    value = (rots, origins, axes_w, coms_w, inertias_w)
    _frames_memo["packed"] = packed
    _frames_memo["key"] = key
    _frames_memo["value"] = value
    return value


def ee_pose(packed, q):
    """End-effector rotation and position in the arm-root frame."""
    rots, origins, _, _, _ = _link_frames(packed, q)
    r = rots[-1] @ packed.ee_rot
    p = origins[-1] + rots[-1] @ packed.ee_trans
    return r, p


def com_positions(packed, q):
    """Centre-of-mass positions of every link in the arm-root frame."""
    return _link_frames(packed, q)[3].copy()


def jacobian_arm(packed, q):
    """Geometric Jacobian of the EE point, arm columns only (6 x n).

    Rows 0:3 are linear, rows 3:6 angular, all in the arm-root frame.
    """
    rots, origins, axes_w, _, _ = _link_frames(packed, q)
    p_ee = origins[-1] + rots[-1] @ packed.ee_trans
    jac = np.empty((6, q.shape[0]))
    jac[:3] = np.cross(axes_w, p_ee - origins).T
    jac[3:] = axes_w.T
    return jac


def mass_matrix_arm(packed, q):
    """Arm joint-space inertia by composite-rigid-body accumulation."""
    _, origins, axes_w, coms_w, inertias_w = _link_frames(packed, q)
    n = q.shape[0]
    masses = packed.masses

    # composite body of links k..n-1: mass, COM, inertia about the COM
    comp_m = np.empty(n)
    comp_c = np.empty((n, 3))
    comp_i = np.empty((n, 3, 3))
    comp_m[n - 1] = masses[n - 1]
    comp_c[n - 1] = coms_w[n - 1]
    comp_i[n - 1] = inertias_w[n - 1]
    eye = np.eye(3)
    for k in range(n - 2, -1, -1):
        m_child = comp_m[k + 1]
        m_tot = masses[k] + m_child
        c_tot = (masses[k] * coms_w[k] + m_child * comp_c[k + 1]) / m_tot
        d1 = coms_w[k] - c_tot
        d2 = comp_c[k + 1] - c_tot
        comp_i[k] = (
            inertias_w[k]
            + masses[k] * (np.dot(d1, d1) * eye - np.outer(d1, d1))
            + comp_i[k + 1]
            + m_child * (np.dot(d2, d2) * eye - np.outer(d2, d2))
        )
        comp_m[k] = m_tot
        comp_c[k] = c_tot

    mass = np.zeros((n, n))
    for i in range(n):
        z_i = axes_w[i]
        # spatial force from unit acceleration of joint i on its composite body
        f = comp_m[i] * np.cross(z_i, comp_c[i] - origins[i])
        n_com = comp_i[i] @ z_i
        # project onto each ancestor joint: moment about that joint's origin
        moments = n_com + np.cross(comp_c[i] - origins[: i + 1], f)
        mass[i, : i + 1] = np.einsum("kj,kj->k", axes_w[: i + 1], moments)
        mass[: i + 1, i] = mass[i, : i + 1]
    return mass


def rnea_arm(packed, q, qd, qdd, gravity):
    """Recursive Newton-Euler inverse dynamics for the arm.

    Returns tau with M qdd + C qd + g folded in; pass a zero gravity vector
    to drop the gravity term. The gravity field is emulated by accelerating
    the root frame by -gravity.
    """
    _, origins, axes_w, coms_w, inertias_w = _link_frames(packed, q)
    n = q.shape[0]
    masses = packed.masses

    omega = np.empty((n, 3))
    alpha = np.empty((n, 3))
    acc_com = np.empty((n, 3))
    w_prev = np.zeros(3)
    a_prev = np.zeros(3)
    acc_prev = -np.asarray(gravity, dtype=float)
    p_prev = np.zeros(3)
    for k in range(n):
        z = axes_w[k]
        d = origins[k] - p_prev
        a_joint = acc_prev + np.cross(a_prev, d) + np.cross(w_prev, np.cross(w_prev, d))
        omega[k] = w_prev + z * qd[k]
        alpha[k] = a_prev + z * qdd[k] + np.cross(w_prev, z) * qd[k]
        r = coms_w[k] - origins[k]
        acc_com[k] = a_joint + np.cross(alpha[k], r) + np.cross(omega[k], np.cross(omega[k], r))
        w_prev = omega[k]
        a_prev = alpha[k]
        acc_prev = a_joint
        p_prev = origins[k]

    tau = np.empty(n)
    f_child = np.zeros(3)
    n_child = np.zeros(3)       # moment about the child joint origin
    p_child = np.zeros(3)
    for k in range(n - 1, -1, -1):
        f_net = masses[k] * acc_com[k]
        n_net = inertias_w[k] @ alpha[k] + np.cross(omega[k], inertias_w[k] @ omega[k])
        f_k = f_net + f_child
        n_k = (
            n_net
            + np.cross(coms_w[k] - origins[k], f_net)
            + n_child
            + np.cross(p_child - origins[k], f_child)
        )
        tau[k] = np.dot(axes_w[k], n_k)
        f_child = f_k
        n_child = n_k
        p_child = origins[k]
    return tau
