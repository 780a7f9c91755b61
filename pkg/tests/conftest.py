import numpy as np
import pytest

from wbctl.chain import JointState, default_posture, named_chain
from wbctl.dynamics import jacobian_ee


@pytest.fixture(scope="session")
def chain():
    return named_chain("default")


@pytest.fixture(scope="session")
def two_link():
    return named_chain("two_link")


@pytest.fixture(scope="session")
def six_dof():
    return named_chain("six_dof")


@pytest.fixture()
def rng():
    return np.random.default_rng(42)


def random_state(chain, rng, qd_scale=0.5, sigma_min=0.02):
    """Random full-rank state: resamples until the Jacobian is well away
    from singular so property tolerances are meaningful."""
    while True:
        q = np.concatenate([
            rng.uniform(-1.0, 1.0, 3),
            rng.uniform(-1.4, 1.4, chain.arm_dofs),
        ])
        state = JointState(q, rng.uniform(-qd_scale, qd_scale, chain.dofs))
        jac = jacobian_ee(chain, state)
        if np.linalg.svd(jac, compute_uv=False).min() > sigma_min:
            return state


@pytest.fixture(scope="session")
def rest_state(chain):
    q0 = default_posture()
    return JointState(q0, np.zeros_like(q0))
