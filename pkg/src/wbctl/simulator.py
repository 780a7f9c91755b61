"""Deterministic multi-rate closed-loop simulation.

Single-threaded fixed-step scheduler at the 1 ms control period:

    every 5 ms   HMI messages are delivered and applied
    every 1 ms   admittance interface + whole-body controller run
    every 20 ms  the base admittance updates the velocity command (ZOH)
    every 1 ms   plant integration (semi-implicit Euler)

The plant is the decoupled model itself: the arm integrates its rigid-body
dynamics under the commanded torques plus the human wrench mapped through
the arm Jacobian columns; the base follows the zero-order-held velocity
command exactly (the wheel velocity loop is assumed stiff, so external
base torques are rejected rather than fed into the admittance mapping).
The human is a wrench source; the controller force at the EE is known
exactly, so the interface wrench is computed algebraically as
f_m = f_h - f_a with f_a from the previous tick (one-tick sensor delay
breaks the algebraic loop).

Identical scenarios produce bit-identical traces.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import base_admittance
from .admittance import FRAME_EE, AdmittanceState, WrenchReading, step as admittance_step
from .base_admittance import BaseAdmittanceParams
from .chain import BASE_DOFS, JointState
from .controller import compute_torques
from .dynamics import _coriolis_and_gravity_arm, _pose_and_jacobian, mass_matrix
from .errors import SingularityError
from .hmi import InterfaceState, decode, encode, poll_loop
from .kernels import backend_name
from .scenarios import Scenario

log = logging.getLogger(__name__)

_HMI_COLUMNS = ("hmi_active", "hmi_level", "hmi_gripper", "hmi_mode")


def trace_columns(dofs: int) -> list:
    """CSV column order: documented contract for trace files."""
    cols = ["t"]
    cols += [f"q{i}" for i in range(dofs)]
    cols += [f"qd{i}" for i in range(dofs)]
    cols += ["ee_x", "ee_y", "ee_z", "ee_qw", "ee_qx", "ee_qy", "ee_qz"]
    cols += ["tw_vx", "tw_vy", "tw_vz", "tw_wx", "tw_wy", "tw_wz"]
    cols += [f"tau{i}" for i in range(dofs)]
    cols += ["fm_fx", "fm_fy", "fm_fz", "fm_tx", "fm_ty", "fm_tz"]
    cols += ["F_fx", "F_fy", "F_fz", "F_tx", "F_ty", "F_tz"]
    cols += list(_HMI_COLUMNS)
    return cols


@dataclass
class SimTrace:
    """Uniformly sampled log of one run, one record per control period."""

    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    ee_position: np.ndarray
    ee_quaternion: np.ndarray
    ee_twist: np.ndarray
    tau: np.ndarray
    f_m: np.ndarray
    f_cartesian: np.ndarray
    hmi: np.ndarray                 # int columns: active, level, gripper, mode
    events: list = field(default_factory=list)
    truncated: bool = False
    truncation: dict | None = None
    scenario: Scenario | None = None
    backend: str = ""

    def __len__(self) -> int:
        return self.t.shape[0]

    def as_matrix(self) -> np.ndarray:
        return np.hstack([
            self.t[:, None], self.q, self.qd, self.ee_position, self.ee_quaternion,
            self.ee_twist, self.tau, self.f_m, self.f_cartesian, self.hmi.astype(float),
        ])

    def to_csv(self, path) -> None:
        dofs = self.q.shape[1]
        header = ",".join(trace_columns(dofs))
        np.savetxt(path, self.as_matrix(), fmt="%.17g", delimiter=",",
                   header=header, comments="")

    def path_rms_error(self) -> float | None:
        """RMS distance of the EE to the scenario path polyline, measured
        from the first admittance activation onward. None without a path."""
        if self.scenario is None or self.scenario.path.shape[0] == 0 or len(self) == 0:
            return None
        active = self.hmi[:, 0] == 1
        points = self.ee_position[active] if np.any(active) else self.ee_position
        return float(np.sqrt(np.mean(_distance_to_polyline(points, self.scenario.path) ** 2)))

    def summary(self) -> dict:
        out = {
            "name": self.scenario.name if self.scenario is not None else "",
            "backend": self.backend,
            "records": len(self),
            "truncated": self.truncated,
            "truncation": self.truncation,
            "events": self.events,
            "path_rms_error": self.path_rms_error(),
        }
        if self.scenario is not None:
            out["seed"] = self.scenario.seed
            out["duration"] = self.scenario.duration
            out["effective_config"] = {
                "priority": {m: list(p) for m, p in self.scenario.priority.items()},
                "payload_mass": self.scenario.payload_mass,
                "admittance_presets": [
                    {"lambda": lam.tolist(), "damping": d.tolist()}
                    for lam, d in self.scenario.admittance.level_presets
                ],
                "base_admittance": {
                    "m_adm": self.scenario.chain.base_inertia.tolist(),
                    "d_adm": self.scenario.chain.base_damping.tolist(),
                },
                "k_cart": self.scenario.gains.k_cart.tolist(),
                "d_cart": self.scenario.gains.d_cart.tolist(),
            }
        if len(self) > 0:
            out["final"] = {
                "t": float(self.t[-1]),
                "ee_position": self.ee_position[-1].tolist(),
                "ee_quaternion": self.ee_quaternion[-1].tolist(),
                "base_pose": self.q[-1, :BASE_DOFS].tolist(),
            }
        return out

    def write_summary(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2)
            fh.write("\n")


def _distance_to_polyline(points: np.ndarray, path: np.ndarray) -> np.ndarray:
    if path.shape[0] == 1:
        return np.linalg.norm(points - path[0], axis=1)
    best = np.full(points.shape[0], np.inf)
    for a, b in zip(path[:-1], path[1:]):
        ab = b - a
        denom = float(ab @ ab)
        if denom == 0.0:
            d = np.linalg.norm(points - a, axis=1)
        else:
            s = np.clip((points - a) @ ab / denom, 0.0, 1.0)
            d = np.linalg.norm(points - (a[None, :] + s[:, None] * ab[None, :]), axis=1)
        best = np.minimum(best, d)
    return best


def _changed_button(prev: InterfaceState, new: InterfaceState) -> int:
    if prev.admittance_active != new.admittance_active:
        return 1
    if prev.admittance_level != new.admittance_level:
        return 2
    if prev.gripper_closed != new.gripper_closed:
        return 3
    return 4


def run(scenario: Scenario) -> SimTrace:
    """Execute a scenario and return its trace.

    A controller singularity does not raise: the trace is truncated at the
    offending tick and flagged in ``truncation``.
    """
    opt = scenario.options
    dt = opt.control_dt
    steps = int(round(scenario.duration / dt))
    dofs = scenario.chain.dofs

    chain_bare = scenario.chain
    chain_loaded = chain_bare.with_point_mass(scenario.payload_mass) \
        if scenario.payload_mass > 0.0 else chain_bare
    chain = chain_bare

    base_params = BaseAdmittanceParams.from_chain(chain_bare)
    hmi_messages = poll_loop(scenario.buttons, loop_rate=opt.hmi_rate,
                             debounce_s=opt.debounce_s)
    msg_index = 0

    hmi_state = InterfaceState.default()
    weights = scenario.weights_for(hmi_state.priority_mode)
    adm_params = scenario.admittance    # presets apply on the first level event

    q = scenario.initial_q.copy()
    qd = scenario.initial_qd.copy()
    pos0, quat0, _ = _pose_and_jacobian(chain, q)
    x_d = AdmittanceState.from_pose(pos0, quat0)

    times = np.arange(steps + 1) * dt
    f_h_all = scenario.wrench_at(times)

    n_rows = steps + 1
    tr_q = np.empty((n_rows, dofs))
    tr_qd = np.empty((n_rows, dofs))
    tr_pos = np.empty((n_rows, 3))
    tr_quat = np.empty((n_rows, 4))
    tr_twist = np.empty((n_rows, 6))
    tr_tau = np.empty((n_rows, dofs))
    tr_fm = np.empty((n_rows, 6))
    tr_force = np.empty((n_rows, 6))
    tr_hmi = np.empty((n_rows, 4), dtype=np.int64)

    events = []
    truncated = False
    truncation = None
    base_cmd = np.zeros(BASE_DOFS)
    f_cart_prev = np.zeros(6)
    hmi_period = 1.0 / opt.hmi_rate
    rows = 0

    log.debug("run '%s': %d steps, backend %s", scenario.name, steps, backend_name())
    for k in range(n_rows):
        t = times[k]

        # HMI tick: deliver messages stamped at this boundary
        if abs(t / hmi_period - round(t / hmi_period)) < 1e-6:
            while msg_index < len(hmi_messages) and hmi_messages[msg_index].stamp <= t + 1e-9:
                msg = hmi_messages[msg_index]
                msg_index += 1
                new_state = decode(msg)
                button = _changed_button(hmi_state, new_state)
                if button == 1:
                    # bumpless transfer on both activation and deactivation
                    pos_now, quat_now, _ = _pose_and_jacobian(chain, q)
                    x_d = AdmittanceState.from_pose(pos_now, quat_now)
                if button == 2:
                    adm_params = scenario.admittance.at_level(new_state.admittance_level)
                if button == 3:
                    chain = chain_loaded if new_state.gripper_closed else chain_bare
                if button == 4:
                    weights = scenario.weights_for(new_state.priority_mode)
                hmi_state = new_state
                events.append({"t": float(t), "button": button, "values": list(msg.values)})
                log.debug("t=%.3f button %d -> %s", t, button, msg.values)

        f_h = f_h_all[k]
        f_m = f_h - f_cart_prev
        if hmi_state.admittance_active:
            reading = WrenchReading(f_m[:3], f_m[3:], FRAME_EE)
            x_d = admittance_step(x_d, adm_params, reading, dt)

        state = JointState(q, qd)
        if opt.controller_enabled:
            try:
                out = compute_torques(chain, state, x_d, scenario.gains, weights)
            except SingularityError as exc:
                truncated = True
                truncation = {"t": float(t), "reason": str(exc),
                              "smallest_sv": exc.smallest_sv}
                log.warning("run '%s' truncated at t=%.3f: %s", scenario.name, t, exc)
                break
            tau = out.tau
            f_cart_prev = out.f_cartesian
            if not opt.gravity_compensation:
                tau = tau.copy()
                tau[BASE_DOFS:] -= _coriolis_and_gravity_arm(chain, q[BASE_DOFS:], qd[BASE_DOFS:])
        else:
            tau = np.zeros(dofs)
            f_cart_prev = np.zeros(6)

        if abs(t / opt.base_period - round(t / opt.base_period)) < 1e-6:
            base_cmd = base_admittance.step(base_cmd, base_params, tau[:BASE_DOFS],
                                            opt.base_period, stamp=t).qd_m

        pos, quat, jac = _pose_and_jacobian(chain, q)
        tr_q[k] = q
        tr_qd[k] = qd
        tr_pos[k] = pos
        tr_quat[k] = quat
        tr_twist[k] = jac @ qd
        tr_tau[k] = tau
        tr_fm[k] = f_m
        tr_force[k] = f_cart_prev
        tr_hmi[k] = encode(hmi_state).values
        rows = k + 1
        if k == steps:
            break

        # plant integration to t + dt
        m_arm = mass_matrix(chain, state)[BASE_DOFS:, BASE_DOFS:]
        cg = _coriolis_and_gravity_arm(chain, q[BASE_DOFS:], qd[BASE_DOFS:])
        rhs = tau[BASE_DOFS:] + jac[:, BASE_DOFS:].T @ f_h - cg
        qdd_arm = np.linalg.solve(m_arm, rhs)
        qd = qd.copy()
        q = q.copy()
        qd[BASE_DOFS:] += qdd_arm * dt
        q[BASE_DOFS:] += qd[BASE_DOFS:] * dt
        qd[:BASE_DOFS] = base_cmd
        q[:BASE_DOFS] += base_cmd * dt

    return SimTrace(
        t=times[:rows], q=tr_q[:rows], qd=tr_qd[:rows], ee_position=tr_pos[:rows],
        ee_quaternion=tr_quat[:rows], ee_twist=tr_twist[:rows], tau=tr_tau[:rows],
        f_m=tr_fm[:rows], f_cartesian=tr_force[:rows], hmi=tr_hmi[:rows],
        events=events, truncated=truncated, truncation=truncation,
        scenario=scenario, backend=backend_name(),
    )
