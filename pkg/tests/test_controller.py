"""Whole-body controller tests: algebraic identities of the weighted torque
distribution, impedance force conventions, and singularity handling."""

import numpy as np
import pytest

from conftest import random_state
from wbctl.admittance import AdmittanceState
from wbctl.chain import JointState, SpatialState, default_posture, named_chain
from wbctl.controller import (
    ControlOutput,
    ImpedanceGains,
    PriorityWeights,
    _weight_inverse,
    cartesian_impedance_force,
    compute_torques,
    nullspace_torque,
    task_inertias,
    weight_matrix,
)
from wbctl.dynamics import bias_forces, gravity_vector, jacobian_ee, mass_matrix
from wbctl.errors import ContractError, SingularityError

IDENTITY_Q = np.array([1.0, 0.0, 0.0, 0.0])


def pose_ref(position, quaternion=IDENTITY_Q):
    return AdmittanceState.from_pose(np.asarray(position, dtype=float), quaternion)


def random_spd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + n * np.eye(n)


class TestPriorityWeights:
    def test_mode_consistency_enforced(self):
        PriorityWeights.manipulation()
        PriorityWeights.locomotion()
        with pytest.raises(ContractError):
            PriorityWeights(1.0, 3.0, "manipulation")
        with pytest.raises(ContractError):
            PriorityWeights(5.0, 1.0, "locomotion")
        with pytest.raises(ContractError):
            PriorityWeights(-1.0, 1.0)

    def test_unlabeled_weights_allowed(self):
        w = PriorityWeights(1.0, 1.0)
        assert w.mode is None


class TestWeightMatrix:
    def test_identity_weights_give_mass_inverse(self, rng):
        m = random_spd(rng, 10)
        w = weight_matrix(PriorityWeights(1.0, 1.0), m)
        assert np.max(np.abs(w - np.linalg.inv(m))) < 1e-10

    def test_identity_mass_diagonal_etas(self):
        w = weight_matrix(PriorityWeights(5.0, 1.0, "manipulation"), np.eye(10))
        assert np.allclose(np.diag(w), [25.0] * 3 + [1.0] * 7)
        assert np.allclose(w, np.diag(np.diag(w)))

    def test_symmetric_positive_definite(self, rng):
        for _ in range(200):
            m = random_spd(rng, 10)
            w = weight_matrix(PriorityWeights(rng.uniform(0.5, 6), rng.uniform(0.5, 6)), m)
            assert np.max(np.abs(w - w.T)) < 1e-10
            np.linalg.cholesky(w)

    def test_weight_inverse_consistency(self, rng):
        m = random_spd(rng, 10)
        weights = PriorityWeights(3.0, 0.7)
        w = weight_matrix(weights, m)
        w_inv = _weight_inverse(weights, m)
        assert np.max(np.abs(w @ w_inv - np.eye(10))) < 1e-9


class TestTaskInertias:
    def test_square_jacobian_matches_direct_formula(self, six_dof):
        state = JointState(np.array([0.2, -0.1, 0.3, 0.3, 0.5, -0.4]), np.zeros(6))
        jac = jacobian_ee(six_dof, state)
        mass = mass_matrix(six_dof, state)
        weight = weight_matrix(PriorityWeights(2.0, 0.7), mass)
        _, lam_w = task_inertias(jac, mass, weight)
        j_inv = np.linalg.inv(jac)
        direct = j_inv.T @ mass @ weight @ mass @ j_inv
        assert np.max(np.abs(lam_w - direct)) / np.max(np.abs(direct)) < 1e-9

    def test_identity_weights_collapse_to_task_inertia(self, chain, rng):
        state = random_state(chain, rng)
        jac = jacobian_ee(chain, state)
        mass = mass_matrix(chain, state)
        lam, lam_w = task_inertias(jac, mass, np.linalg.inv(mass))
        assert np.max(np.abs(lam - lam_w)) < 1e-9 * np.max(np.abs(lam))

    def test_outputs_symmetric_positive_definite(self, chain, rng):
        for _ in range(50):
            state = random_state(chain, rng)
            jac = jacobian_ee(chain, state)
            mass = mass_matrix(chain, state)
            weight = weight_matrix(PriorityWeights(5.0, 1.0, "manipulation"), mass)
            lam, lam_w = task_inertias(jac, mass, weight)
            for out in (lam, lam_w):
                assert np.max(np.abs(out - out.T)) < 1e-9 * max(np.max(np.abs(out)), 1.0)
                np.linalg.cholesky(out)

    def test_rank_deficient_jacobian_raises(self, chain):
        state = JointState(np.zeros(10), np.zeros(10))  # straight-up arm: singular
        jac = jacobian_ee(chain, state)
        mass = mass_matrix(chain, state)
        weight = weight_matrix(PriorityWeights(1.0, 1.0), mass)
        with pytest.raises(SingularityError) as info:
            task_inertias(jac, mass, weight)
        assert info.value.smallest_sv < 1e-12


class TestImpedanceForce:
    def test_equilibrium(self, chain):
        gains = ImpedanceGains.default(chain, default_posture())
        x = SpatialState(np.array([1.0, 0, 0.5]), IDENTITY_Q, np.zeros(6))
        force = cartesian_impedance_force(x, pose_ref([1.0, 0, 0.5]), gains)
        assert np.allclose(force, 0.0)

    def test_stiffness_sign_convention(self, chain):
        gains = ImpedanceGains(
            np.array([100.0] * 3 + [10.0] * 3), np.zeros(6),
            np.zeros(10), np.zeros(10), np.zeros(10))
        # actual ahead of desired by +0.1 -> restoring force is negative
        x = SpatialState(np.array([0.1, 0, 0]), IDENTITY_Q, np.zeros(6))
        force = cartesian_impedance_force(x, pose_ref([0.0, 0, 0]), gains)
        assert force[0] == pytest.approx(-10.0)
        # desired ahead of actual by +0.1 -> force pulls forward
        force = cartesian_impedance_force(x, pose_ref([0.2, 0, 0]), gains)
        assert force[0] == pytest.approx(+10.0)

    def test_pure_damping_on_absolute_twist(self, chain):
        gains = ImpedanceGains(
            np.array([100.0] * 3 + [10.0] * 3), np.full(6, 20.0),
            np.zeros(10), np.zeros(10), np.zeros(10))
        twist = np.array([1.0, 0, 0, 0, 0, 0])
        x = SpatialState(np.zeros(3), IDENTITY_Q, twist)
        force = cartesian_impedance_force(x, pose_ref([0.0, 0, 0]), gains)
        assert force[0] == pytest.approx(-20.0)


class TestNullspaceTorque:
    def make_gains(self, dofs=10, k=10.0, d=2.0, q0=None):
        return ImpedanceGains(
            np.array([500.0] * 3 + [50.0] * 3), np.full(6, 10.0),
            np.full(dofs, k), np.full(dofs, d),
            np.zeros(dofs) if q0 is None else q0)

    def test_at_rest_posture(self):
        gains = self.make_gains()
        tau = nullspace_torque(JointState(np.zeros(10), np.zeros(10)), gains)
        assert np.allclose(tau, 0.0)

    def test_stiffness_term(self):
        gains = self.make_gains(k=10.0, d=0.0)
        q = np.zeros(10)
        q[4] = 0.5
        tau = nullspace_torque(JointState(q, np.zeros(10)), gains)
        expected = np.zeros(10)
        expected[4] = -5.0
        assert np.allclose(tau, expected)

    def test_damping_term(self):
        gains = self.make_gains(k=0.0, d=2.0)
        qd = np.zeros(10)
        qd[6] = 1.0
        tau = nullspace_torque(JointState(np.zeros(10), qd), gains)
        expected = np.zeros(10)
        expected[6] = -2.0
        assert np.allclose(tau, expected)


class TestComputeTorques:
    def test_zero_task_outputs_pure_compensation(self, chain):
        q0 = np.array([0.0, 0.0, 0.0, 0.0, 0.45, 0.0, -1.10, 0.0, 0.85, 0.0])
        gains = ImpedanceGains.default(chain, q0)
        state = JointState(q0, np.zeros(10))
        from wbctl.dynamics import forward_kinematics
        x = forward_kinematics(chain, state)
        out = compute_torques(chain, state, AdmittanceState.from_pose(x.position, x.quaternion),
                              gains, PriorityWeights.manipulation())
        comp = np.zeros(10)
        comp[3:] = (bias_forces(chain, state) + gravity_vector(chain, state))[3:]
        assert np.allclose(out.f_cartesian, 0.0, atol=1e-12)
        assert np.allclose(out.tau, comp, atol=1e-9)
        assert np.allclose(out.tau_base, 0.0)

    def test_cartesian_consistency(self, chain, rng):
        """Jbar' tau_task = F for the weighted distribution."""
        gains = ImpedanceGains.default(chain, default_posture())
        for _ in range(100):
            state = random_state(chain, rng)
            x_d = pose_ref(rng.uniform(-0.5, 0.5, 3))
            for weights in (PriorityWeights.manipulation(), PriorityWeights.locomotion()):
                out = compute_torques(chain, state, x_d, gains, weights)
                jac = jacobian_ee(chain, state)
                mass = mass_matrix(chain, state)
                m_inv = np.linalg.inv(mass)
                lam = np.linalg.inv(jac @ m_inv @ jac.T)
                jbar = m_inv @ jac.T @ lam
                comp = np.zeros(10)
                comp[3:] = (bias_forces(chain, state) + gravity_vector(chain, state))[3:]
                tau_task_plus_null = out.tau - comp
                resid = jbar.T @ tau_task_plus_null - out.f_cartesian
                # the null component vanishes under Jbar', so the identity
                # holds for the combined task + null torque
                assert np.linalg.norm(resid) <= 1e-9 * max(np.linalg.norm(out.f_cartesian), 1.0)

    def test_nullspace_decoupling(self, chain, rng):
        for _ in range(100):
            state = random_state(chain, rng)
            mass = mass_matrix(chain, state)
            jac = jacobian_ee(chain, state)
            m_inv = np.linalg.inv(mass)
            weights = PriorityWeights.locomotion()
            w_inv = _weight_inverse(weights, mass)
            a = jac @ m_inv
            gram_w = a @ w_inv @ a.T
            lam = np.linalg.inv(a @ jac.T)
            tau_0 = rng.uniform(-10, 10, 10)
            projected = tau_0 - w_inv @ a.T @ np.linalg.solve(gram_w, a @ tau_0)
            assert np.linalg.norm(lam @ a @ projected) < 1e-9

    def test_priority_switching_redistributes(self, chain, rng):
        """Manipulation weights move the base strictly less; the arm motion
        comparison uses the kinetic-energy metric (qdd' M qdd per block),
        which is the quantity the weighted distribution provably orders."""
        for _ in range(100):
            state = random_state(chain, rng, qd_scale=0.0)
            force = rng.uniform(-30, 30, 6)
            mass = mass_matrix(chain, state)
            jac = jacobian_ee(chain, state)
            m_inv = np.linalg.inv(mass)
            acc = {}
            for weights in (PriorityWeights.manipulation(), PriorityWeights.locomotion()):
                w_inv = _weight_inverse(weights, mass)
                a = jac @ m_inv
                tau_task = w_inv @ a.T @ np.linalg.solve(a @ w_inv @ a.T, (a @ jac.T) @ force)
                acc[weights.mode] = m_inv @ tau_task
            base_m = np.linalg.norm(acc["manipulation"][:3])
            base_l = np.linalg.norm(acc["locomotion"][:3])
            arm_m = acc["manipulation"][3:] @ mass[3:, 3:] @ acc["manipulation"][3:]
            arm_l = acc["locomotion"][3:] @ mass[3:, 3:] @ acc["locomotion"][3:]
            assert base_m < base_l
            assert arm_m > arm_l

    def test_common_eta_scaling_invariance(self, chain, rng):
        gains = ImpedanceGains.default(chain, default_posture())
        state = random_state(chain, rng)
        x_d = pose_ref([0.2, -0.1, 0.3])
        out1 = compute_torques(chain, state, x_d, gains, PriorityWeights(5.0, 1.0, "manipulation"))
        out2 = compute_torques(chain, state, x_d, gains, PriorityWeights(50.0, 10.0, "manipulation"))
        assert np.max(np.abs(out1.tau - out2.tau)) < 1e-9 * max(np.max(np.abs(out1.tau)), 1.0)

    def test_identity_weights_recover_classical_projector(self, chain, rng):
        state = random_state(chain, rng)
        mass = mass_matrix(chain, state)
        jac = jacobian_ee(chain, state)
        m_inv = np.linalg.inv(mass)
        w_inv = _weight_inverse(PriorityWeights(1.0, 1.0), mass)
        a = jac @ m_inv
        gram_w = a @ w_inv @ a.T
        ours = np.eye(10) - w_inv @ a.T @ np.linalg.solve(gram_w, a)
        lam = np.linalg.inv(a @ jac.T)
        jbar = m_inv @ jac.T @ lam
        classical = np.eye(10) - jac.T @ jbar.T
        assert np.max(np.abs(ours - classical)) < 1e-9

    def test_singularity_propagates(self, chain):
        gains = ImpedanceGains.default(chain, default_posture())
        state = JointState(np.zeros(10), np.zeros(10))
        with pytest.raises(SingularityError):
            compute_torques(chain, state, pose_ref([0, 0, 1.0]), gains,
                            PriorityWeights.manipulation())

    def test_output_partition(self, chain, rng):
        gains = ImpedanceGains.default(chain, default_posture())
        state = random_state(chain, rng)
        out = compute_torques(chain, state, pose_ref([0.1, 0, 0.2]), gains,
                              PriorityWeights.locomotion())
        assert out.tau_base.shape == (3,)
        assert out.tau_arm.shape == (7,)
        assert np.array_equal(np.concatenate([out.tau_base, out.tau_arm]), out.tau)
        assert isinstance(out, ControlOutput)
        assert out.near_singular is False
