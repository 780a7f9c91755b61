"""Kinematics and dynamics of the composite base + arm system.

The model is deliberately decoupled: the base rows carry the virtual
inertia/damping configured on the chain, the arm rows carry the real serial
arm dynamics, and the off-diagonal inertia blocks are zero. Base gravity is
zero (planar base). All functions are pure; a one-slot memo per quantity
makes the controller/plant pattern of calling with the same state twice per
tick cheap without changing semantics.
"""

import numpy as np

from . import kernels
from .chain import BASE_DOFS, JointState, KinematicChain, SpatialState
from .errors import ContractError
from .transforms import quat_from_matrix, rot_z


def _check_state(chain: KinematicChain, state: JointState) -> None:
    if state.q.shape[0] != chain.dofs:
        raise ContractError(
            f"state has {state.q.shape[0]} dofs, chain expects {chain.dofs}"
        )


class _OneSlotMemo:
    """Caches the most recent (chain, key) -> value pair.

    Holds a strong reference to the chain so identity comparison stays valid.
    """

    __slots__ = ("chain", "key", "value")

    def __init__(self):
        self.chain = None
        self.key = None
        self.value = None

    def get(self, chain, key):
        if self.chain is chain and self.key == key:
            return self.value
        return None

    def put(self, chain, key, value):
        self.chain = chain
        self.key = key
        self.value = value
        return value


_memo_pose_jac = _OneSlotMemo()
_memo_arm_mass = _OneSlotMemo()
_memo_coriolis_gravity = _OneSlotMemo()


def _pose_and_jacobian(chain: KinematicChain, q: np.ndarray):
    """World EE position, quaternion, and full 6x(3+n) Jacobian for q."""
    key = q.tobytes()
    hit = _memo_pose_jac.get(chain, key)
    if hit is not None:
        return hit
    q_arm = q[BASE_DOFS:]
    r_arm, p_arm = kernels.ee_pose(chain.packed, q_arm)
    j_arm = kernels.jacobian_arm(chain.packed, q_arm)
    r_base = rot_z(q[2])
    p_base = np.array([q[0], q[1], 0.0])
    p_ee = p_base + r_base @ p_arm
    r_ee = r_base @ r_arm

    jac = np.empty((6, chain.dofs))
    jac[:, 0] = (1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    jac[:, 1] = (0.0, 1.0, 0.0, 0.0, 0.0, 0.0)
    rel = p_ee - p_base
    jac[:3, 2] = (-rel[1], rel[0], 0.0)            # z x (p_ee - p_base)
    jac[3:, 2] = (0.0, 0.0, 1.0)
    jac[:3, BASE_DOFS:] = r_base @ j_arm[:3]
    jac[3:, BASE_DOFS:] = r_base @ j_arm[3:]
    return _memo_pose_jac.put(chain, key, (p_ee, quat_from_matrix(r_ee), jac))


def forward_kinematics(chain: KinematicChain, state: JointState) -> SpatialState:
    """EE pose (base transform ∘ arm chain ∘ ee offset) and twist J(q) qd."""
    _check_state(chain, state)
    pos, quat, jac = _pose_and_jacobian(chain, state.q)
    return SpatialState(pos, quat, jac @ state.qd)


def jacobian_ee(chain: KinematicChain, state: JointState) -> np.ndarray:
    """Geometric Jacobian of the EE frame, 6 x (3+n), world frame.

    Base columns treat the platform as prismatic x, prismatic y, revolute
    yaw about the base origin.
    """
    _check_state(chain, state)
    return _pose_and_jacobian(chain, state.q)[2]


def mass_matrix(chain: KinematicChain, state: JointState) -> np.ndarray:
    """Block-diagonal joint-space inertia: virtual base block, CRBA arm block."""
    _check_state(chain, state)
    q_arm = state.arm_q
    key = q_arm.tobytes()
    m_arm = _memo_arm_mass.get(chain, key)
    if m_arm is None:
        m_arm = _memo_arm_mass.put(chain, key, kernels.mass_matrix_arm(chain.packed, q_arm))
    m = np.zeros((chain.dofs, chain.dofs))
    m[:BASE_DOFS, :BASE_DOFS] = np.diag(chain.base_inertia)
    m[BASE_DOFS:, BASE_DOFS:] = m_arm
    return m


def _coriolis_and_gravity_arm(chain: KinematicChain, q_arm: np.ndarray, qd_arm: np.ndarray) -> np.ndarray:
    key = (q_arm.tobytes(), qd_arm.tobytes())
    hit = _memo_coriolis_gravity.get(chain, key)
    if hit is not None:
        return hit
    zero = np.zeros_like(q_arm)
    value = kernels.rnea_arm(chain.packed, q_arm, qd_arm, zero, chain.gravity)
    return _memo_coriolis_gravity.put(chain, key, value)


def bias_forces(chain: KinematicChain, state: JointState) -> np.ndarray:
    """Coriolis/centrifugal generalized force C(q, qd) qd.

    Arm rows from inverse dynamics with qdd = 0 and gravity off; base rows
    are the virtual damping force D qd.
    """
    _check_state(chain, state)
    out = np.empty(chain.dofs)
    out[:BASE_DOFS] = chain.base_damping * state.base_qd
    zero = np.zeros(chain.arm_dofs)
    out[BASE_DOFS:] = kernels.rnea_arm(
        chain.packed, state.arm_q, state.arm_qd, zero, np.zeros(3)
    )
    return out


def gravity_vector(chain: KinematicChain, state: JointState) -> np.ndarray:
    """Generalized gravity force; base rows are zero (planar base)."""
    _check_state(chain, state)
    out = np.zeros(chain.dofs)
    zero = np.zeros(chain.arm_dofs)
    out[BASE_DOFS:] = kernels.rnea_arm(chain.packed, state.arm_q, zero, zero, chain.gravity)
    return out


def inverse_dynamics(chain: KinematicChain, state: JointState, qdd: np.ndarray) -> np.ndarray:
    """Exact M qdd + C qd + g for the decoupled model."""
    _check_state(chain, state)
    qdd = np.asarray(qdd, dtype=float)
    if qdd.shape != (chain.dofs,):
        raise ContractError(f"qdd must have shape ({chain.dofs},)")
    out = np.empty(chain.dofs)
    out[:BASE_DOFS] = chain.base_inertia * qdd[:BASE_DOFS] + chain.base_damping * state.base_qd
    out[BASE_DOFS:] = kernels.rnea_arm(
        chain.packed, state.arm_q, state.arm_qd, qdd[BASE_DOFS:], chain.gravity
    )
    return out


def potential_energy(chain: KinematicChain, state: JointState) -> float:
    """Gravitational potential of the arm links (base height is constant)."""
    _check_state(chain, state)
    coms = kernels.com_positions(chain.packed, state.arm_q)
    return float(-np.sum(chain.packed.masses * (coms @ chain.gravity)))


def kinetic_energy(chain: KinematicChain, state: JointState) -> float:
    """0.5 qd' M qd including the base's virtual inertia."""
    m = mass_matrix(chain, state)
    return float(0.5 * state.qd @ m @ state.qd)


def mechanical_energy(chain: KinematicChain, state: JointState) -> float:
    return kinetic_energy(chain, state) + potential_energy(chain, state)
