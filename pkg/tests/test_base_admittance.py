"""Virtual torque -> base velocity mapping: first-order response checks."""

import numpy as np
import pytest

from wbctl.base_admittance import BaseAdmittanceParams, BaseVelocityCommand, step
from wbctl.chain import named_chain
from wbctl.errors import ContractError

DT = 0.02  # base rate period


def default_params():
    return BaseAdmittanceParams(np.array([60.0, 60.0, 14.0]), np.array([120.0, 120.0, 28.0]))


def test_rest_stays_at_rest():
    out = step(np.zeros(3), default_params(), np.zeros(3), DT)
    assert np.allclose(out.qd_m, 0.0)


def test_steady_state_matches_analytic():
    """Constant torque settles to D^-1 tau within 1% after five time constants."""
    params = default_params()
    tau = np.array([24.0, -12.0, 7.0])
    qd = np.zeros(3)
    t_settle = 5.0 * np.max(params.m_adm / params.d_adm)
    t = 0.0
    while t < t_settle:
        qd = step(qd, params, tau, DT).qd_m
        t += DT
    assert np.allclose(qd, tau / params.d_adm, rtol=0.01)


def test_tracks_analytic_curve():
    """v(t) = (tau/d)(1 - exp(-t d/m)) within 1% of the final value."""
    params = default_params()
    tau = np.array([30.0, 0.0, 0.0])
    v_ss = tau[0] / params.d_adm[0]
    qd = np.zeros(3)
    for k in range(1, 201):
        qd = step(qd, params, tau, DT).qd_m
        t = k * DT
        analytic = v_ss * (1.0 - np.exp(-t * params.d_adm[0] / params.m_adm[0]))
        assert abs(qd[0] - analytic) < 0.01 * v_ss


def test_doubling_damping_halves_steady_speed():
    tau = np.array([30.0, 0.0, 0.0])
    finals = []
    for scale in (1.0, 2.0):
        params = BaseAdmittanceParams(np.array([60.0, 60.0, 14.0]),
                                      np.array([120.0, 120.0, 28.0]) * scale)
        qd = np.zeros(3)
        for _ in range(2000):
            qd = step(qd, params, tau, DT).qd_m
        finals.append(qd[0])
    assert finals[0] == pytest.approx(2.0 * finals[1], rel=1e-9)


def test_higher_damping_is_pointwise_slower():
    """More damping gives a pointwise smaller speed for the same torque."""
    tau = np.array([30.0, 10.0, 4.0])
    params_lo = default_params()
    params_hi = BaseAdmittanceParams(params_lo.m_adm, params_lo.d_adm * 1.8)
    qd_lo = np.zeros(3)
    qd_hi = np.zeros(3)
    for _ in range(300):
        qd_lo = step(qd_lo, params_lo, tau, DT).qd_m
        qd_hi = step(qd_hi, params_hi, tau, DT).qd_m
        assert np.all(np.abs(qd_hi) <= np.abs(qd_lo) + 1e-15)


def test_command_stamp():
    out = step(np.zeros(3), default_params(), np.zeros(3), DT, stamp=1.24)
    assert out.stamp == 1.24


def test_from_chain_uses_chain_values():
    chain = named_chain("default")
    params = BaseAdmittanceParams.from_chain(chain)
    assert np.array_equal(params.m_adm, chain.base_inertia)
    assert np.array_equal(params.d_adm, chain.base_damping)


def test_bad_inputs():
    with pytest.raises(ContractError):
        step(np.zeros(3), default_params(), np.zeros(3), 0.0)
    with pytest.raises(ContractError):
        step(np.zeros(4), default_params(), np.zeros(3), DT)
    with pytest.raises(ContractError):
        BaseAdmittanceParams(np.zeros(3), np.ones(3))
    with pytest.raises(ContractError):
        BaseVelocityCommand(np.array([np.nan, 0, 0]))
