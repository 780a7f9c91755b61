"""Weighted whole-body Cartesian impedance controller.

The torque reference combines a Cartesian impedance task with a null-space
posture task through an inertia- and priority-weighted distribution:

    tau = W^-1 M^-1 J' Lw Li F + (I - W^-1 M^-1 J' Lw J M^-1) tau_0
    W   = H' M^-1 H,  H = diag(eta_b * I_3, eta_a * I_n)
    Li  = (J M^-1 J')^-1                     (task-space inertia, "Lambda")
    Lw  = (J M^-1 W^-1 M^-1 J')^-1           (weighted task-space inertia)

Derivation note for Lw: the torque must satisfy the force consistency
identity Jbar' tau = F with Jbar = M^-1 J' Li. Substituting the task term
gives Li (J M^-1 W^-1 M^-1 J') Lw Li^-1 F, which collapses to F exactly when
Lw is the inverse written above; the same choice annihilates the projected
posture term (J M^-1 applied to the projector is zero). For a square
invertible J the expression factors into J^-T (M^-1 W^-1 M^-1)^-1 J^-1 =
J^-T M W M J^-1, i.e. the familiar square-system weighted inertia, so the
generalized form is the unique redundant-chain extension of it.

A larger eta penalizes motion of that block: eta_b > eta_a favours arm
motion (manipulation), eta_b < eta_a favours base motion (locomotion).

Near singularities the weighted Gram matrix is Tikhonov-damped and the
output flagged; an outright rank loss raises ``SingularityError``. Gravity
and Coriolis/centrifugal compensation is applied on the arm rows only — the
base rows are virtual torques consumed by the base admittance mapping, which
provides its own damping.
"""

from dataclasses import dataclass

import numpy as np

from .admittance import AdmittanceState
from .chain import BASE_DOFS, JointState, KinematicChain, SpatialState
from .dynamics import _coriolis_and_gravity_arm, _pose_and_jacobian, mass_matrix
from .errors import ContractError, SingularityError
from .transforms import quat_error_vector

MODE_MANIPULATION = "manipulation"
MODE_LOCOMOTION = "locomotion"

SINGULAR_FLOOR = 1e-12      # below this the task is rank-deficient: raise
DAMPING_THRESHOLD = 1e-8    # below this apply Tikhonov damping and flag
TIKHONOV_LAMBDA = 1e-6

ETA_MANIPULATION = (5.0, 1.0)
ETA_LOCOMOTION = (1.0, 3.0)


@dataclass
class PriorityWeights:
    """Base/arm priority scalars, optionally tagged with the mode they serve."""

    eta_b: float
    eta_a: float
    mode: str | None = None

    def __post_init__(self):
        self.eta_b = float(self.eta_b)
        self.eta_a = float(self.eta_a)
        if not (self.eta_b > 0.0 and self.eta_a > 0.0):
            raise ContractError("priority weights must be > 0")
        if self.mode == MODE_MANIPULATION and not self.eta_b > self.eta_a:
            raise ContractError("manipulation mode requires eta_b > eta_a")
        if self.mode == MODE_LOCOMOTION and not self.eta_b < self.eta_a:
            raise ContractError("locomotion mode requires eta_b < eta_a")
        if self.mode not in (None, MODE_MANIPULATION, MODE_LOCOMOTION):
            raise ContractError(f"unknown priority mode '{self.mode}'")

    @classmethod
    def manipulation(cls, eta_b: float = ETA_MANIPULATION[0], eta_a: float = ETA_MANIPULATION[1]):
        return cls(eta_b, eta_a, MODE_MANIPULATION)

    @classmethod
    def locomotion(cls, eta_b: float = ETA_LOCOMOTION[0], eta_a: float = ETA_LOCOMOTION[1]):
        return cls(eta_b, eta_a, MODE_LOCOMOTION)

    def diagonal(self, dofs: int) -> np.ndarray:
        h = np.empty(dofs)
        h[:BASE_DOFS] = self.eta_b
        h[BASE_DOFS:] = self.eta_a
        return h


@dataclass
class ImpedanceGains:
    """Diagonal Cartesian and joint impedance gains plus the rest posture."""

    k_cart: np.ndarray   # 6: N/m (3) + N m/rad (3)
    d_cart: np.ndarray   # 6
    k_joint: np.ndarray  # m+n
    d_joint: np.ndarray  # m+n
    q_0: np.ndarray      # m+n posture reference

    def __post_init__(self):
        self.k_cart = np.asarray(self.k_cart, dtype=float)
        self.d_cart = np.asarray(self.d_cart, dtype=float)
        self.k_joint = np.asarray(self.k_joint, dtype=float)
        self.d_joint = np.asarray(self.d_joint, dtype=float)
        self.q_0 = np.asarray(self.q_0, dtype=float)
        if self.k_cart.shape != (6,) or self.d_cart.shape != (6,):
            raise ContractError("Cartesian gains must have 6 diagonal entries")
        if not (self.k_joint.shape == self.d_joint.shape == self.q_0.shape):
            raise ContractError("joint gain/posture lengths must match")
        if np.any(self.k_cart < 0.0) or np.any(self.d_cart < 0.0) or \
           np.any(self.k_joint < 0.0) or np.any(self.d_joint < 0.0):
            raise ContractError("impedance gains must be >= 0")
        if np.any(self.k_cart[:3] <= 0.0):
            raise ContractError("translational Cartesian stiffness must be > 0")

    @classmethod
    def default(cls, chain: KinematicChain, q_0: np.ndarray,
                k_cart=None, k_joint: float = 10.0, d_joint: float = 2.0) -> "ImpedanceGains":
        """Stock gains: k_cart diag(500 x3, 50 x3), damping near critical.

        The Cartesian damping is matched to the task inertia at the posture,
        d = 2 sqrt(k * diag(Lambda)).
        """
        q_0 = np.asarray(q_0, dtype=float)
        if k_cart is None:
            k_cart = np.array([500.0] * 3 + [50.0] * 3)
        state = JointState(q_0, np.zeros_like(q_0))
        jac = _pose_and_jacobian(chain, state.q)[2]
        m = mass_matrix(chain, state)
        lam = task_inertias(jac, m, np.linalg.inv(m))[0]
        d_cart = 2.0 * np.sqrt(np.asarray(k_cart) * np.abs(np.diag(lam)))
        dofs = chain.dofs
        return cls(k_cart, d_cart, np.full(dofs, float(k_joint)), np.full(dofs, float(d_joint)), q_0)


@dataclass
class ControlOutput:
    """Torque reference split base/arm plus the Cartesian force it realizes."""

    tau: np.ndarray
    f_cartesian: np.ndarray
    near_singular: bool = False

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.f_cartesian = np.asarray(self.f_cartesian, dtype=float)
        if not np.all(np.isfinite(self.tau)) or not np.all(np.isfinite(self.f_cartesian)):
            raise ContractError("control output must be finite")

    @property
    def tau_base(self) -> np.ndarray:
        return self.tau[:BASE_DOFS]

    @property
    def tau_arm(self) -> np.ndarray:
        return self.tau[BASE_DOFS:]


def weight_matrix(weights: PriorityWeights, mass: np.ndarray) -> np.ndarray:
    """W = H' M^-1 H with block-diagonal H = diag(eta_b I, eta_a I)."""
    mass = np.asarray(mass, dtype=float)
    if mass.ndim != 2 or mass.shape[0] != mass.shape[1]:
        raise ContractError("mass matrix must be square")
    h = weights.diagonal(mass.shape[0])
    m_inv = np.linalg.inv(mass)
    w = m_inv * np.outer(h, h)
    return 0.5 * (w + w.T)


def _weight_inverse(weights: PriorityWeights, mass: np.ndarray) -> np.ndarray:
    # W^-1 = H^-1 M H^-1, exact for diagonal H; avoids inverting W
    h = weights.diagonal(mass.shape[0])
    return mass / np.outer(h, h)


def task_inertias(jac: np.ndarray, mass: np.ndarray, weight: np.ndarray):
    """Task-space inertia and its priority-weighted counterpart.

    Returns (Lambda, Lambda_W) = ((J M^-1 J')^-1, (J M^-1 W^-1 M^-1 J')^-1).
    Raises ``SingularityError`` when J has lost row rank; inside the damping
    band the weighted Gram matrix gets a Tikhonov diagonal before inversion.
    """
    jac = np.asarray(jac, dtype=float)
    mass = np.asarray(mass, dtype=float)
    weight = np.asarray(weight, dtype=float)
    m_inv = np.linalg.inv(mass)
    a = jac @ m_inv
    gram = a @ jac.T
    gram = 0.5 * (gram + gram.T)
    gram_w = a @ np.linalg.inv(weight) @ a.T
    gram_w = 0.5 * (gram_w + gram_w.T)
    sv_min = float(np.linalg.eigvalsh(gram_w)[0])
    if sv_min < SINGULAR_FLOOR:
        raise SingularityError("task Jacobian is rank deficient", max(sv_min, 0.0))
    if sv_min < DAMPING_THRESHOLD:
        gram_w = gram_w + TIKHONOV_LAMBDA * np.eye(gram_w.shape[0])
        gram = gram + TIKHONOV_LAMBDA * np.eye(gram.shape[0])
    lam = np.linalg.inv(gram)
    lam_w = np.linalg.inv(gram_w)
    return 0.5 * (lam + lam.T), 0.5 * (lam_w + lam_w.T)


def cartesian_impedance_force(x: SpatialState, x_d: AdmittanceState, gains: ImpedanceGains) -> np.ndarray:
    """F = -D ẋ - K (x - x_d); damps the absolute twist, not the twist error.

    The orientation rows of (x - x_d) use twice the vector part of the error
    quaternion.
    """
    err = np.empty(6)
    err[:3] = x.position - x_d.position
    err[3:] = quat_error_vector(x.quaternion, x_d.quaternion)
    return -gains.d_cart * x.twist - gains.k_cart * err


def nullspace_torque(state: JointState, gains: ImpedanceGains) -> np.ndarray:
    """Posture task tau_0 = -D_0 qd - K_0 (q - q_0)."""
    if state.q.shape != gains.q_0.shape:
        raise ContractError("posture reference length does not match the state")
    return -gains.d_joint * state.qd - gains.k_joint * (state.q - gains.q_0)


def compute_torques(chain: KinematicChain, state: JointState, x_d: AdmittanceState,
                    gains: ImpedanceGains, weights: PriorityWeights) -> ControlOutput:
    """Whole-body torque reference for one control tick.

    Task torque, projected posture torque, and arm-side gravity/Coriolis
    compensation. The returned ``f_cartesian`` is the impedance force the
    task torque realizes at the end-effector.
    """
    if state.q.shape[0] != chain.dofs:
        raise ContractError(f"state has {state.q.shape[0]} dofs, chain expects {chain.dofs}")
    pos, quat, jac = _pose_and_jacobian(chain, state.q)
    twist = jac @ state.qd
    x = SpatialState(pos, quat, twist)
    force = cartesian_impedance_force(x, x_d, gains)
    tau_0 = nullspace_torque(state, gains)

    mass = mass_matrix(chain, state)
    m_inv = np.linalg.inv(mass)
    w_inv = _weight_inverse(weights, mass)
    a = jac @ m_inv                      # 6 x (m+n)
    gram = a @ jac.T                     # Lambda^-1
    gram_w = a @ w_inv @ a.T             # Lambda_W^-1
    gram_w = 0.5 * (gram_w + gram_w.T)
    sv_min = float(np.linalg.eigvalsh(gram_w)[0])
    if sv_min < SINGULAR_FLOOR:
        raise SingularityError("task Jacobian is rank deficient", max(sv_min, 0.0))
    near = sv_min < DAMPING_THRESHOLD
    if near:
        gram_w = gram_w + TIKHONOV_LAMBDA * np.eye(6)

    wa = w_inv @ a.T                     # W^-1 M^-1 J'
    tau_task = wa @ np.linalg.solve(gram_w, gram @ force)
    tau_null = tau_0 - wa @ np.linalg.solve(gram_w, a @ tau_0)

    comp = np.zeros(chain.dofs)
    comp[BASE_DOFS:] = _coriolis_and_gravity_arm(chain, state.arm_q, state.arm_qd)

    return ControlOutput(tau_task + tau_null + comp, force, near)
