"""End-effector admittance interface.

Human interaction wrenches measured at the handle sensor are transformed to
the end-effector frame, netted against the controller's own Cartesian force,
and integrated through a first-order admittance

    lambda_d * xdd_d + d_d * xd_d = f_m

to produce the desired EE velocity and pose references. Integration is
semi-implicit (velocity first), unconditionally stable for this law at the
1 kHz control rate.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError

FRAME_FT = "ft"
FRAME_EE = "ee"

# level presets: ~0.5 s time constant, steady-state speed per unit force
# increasing with the level index (0 low, 1 medium, 2 high admittance)
_PRESET_GAINS_LIN = (0.02, 0.05, 0.10)   # m/s per N
_PRESET_GAINS_ANG = (0.05, 0.125, 0.25)  # rad/s per N m
_PRESET_TIME_CONSTANT = 0.5


def _default_presets():
    presets = []
    for gl, ga in zip(_PRESET_GAINS_LIN, _PRESET_GAINS_ANG):
        d = np.array([1.0 / gl] * 3 + [1.0 / ga] * 3)
        presets.append((_PRESET_TIME_CONSTANT * d, d))
    return tuple(presets)


@dataclass
class AdmittanceParams:
    """Diagonal inertia/damping of the interface plus the three HMI presets."""

    lambda_d: np.ndarray                       # 6 diagonal entries, kg / kg m^2
    d_d: np.ndarray                            # 6 diagonal entries, N s/m / N m s/rad
    level_presets: tuple = field(default_factory=_default_presets)

    def __post_init__(self):
        self.lambda_d = np.asarray(self.lambda_d, dtype=float)
        self.d_d = np.asarray(self.d_d, dtype=float)
        if self.lambda_d.shape != (6,) or self.d_d.shape != (6,):
            raise ContractError("admittance diagonals must have 6 entries")
        if np.any(self.lambda_d <= 0.0) or np.any(self.d_d <= 0.0):
            raise ContractError("admittance diagonals must be > 0")
        presets = []
        for i, (lam, d) in enumerate(self.level_presets):
            lam = np.asarray(lam, dtype=float)
            d = np.asarray(d, dtype=float)
            if lam.shape != (6,) or d.shape != (6,):
                raise ContractError(f"preset {i}: diagonals must have 6 entries")
            if np.any(lam <= 0.0) or np.any(d <= 0.0):
                raise ContractError(f"preset {i}: diagonals must be > 0")
            presets.append((lam, d))
        if len(presets) != 3:
            raise ContractError("exactly three admittance presets required")
        gains = [np.linalg.norm(1.0 / d) for _, d in presets]
        if not (gains[0] < gains[1] < gains[2]):
            raise ContractError("presets must have increasing steady-state gain")
        self.level_presets = tuple(presets)

    @classmethod
    def default(cls, level: int = 0) -> "AdmittanceParams":
        presets = _default_presets()
        lam, d = presets[level]
        return cls(lam.copy(), d.copy(), presets)

    def at_level(self, level: int) -> "AdmittanceParams":
        if level not in (0, 1, 2):
            raise ContractError("admittance level must be 0, 1 or 2")
        lam, d = self.level_presets[level]
        return AdmittanceParams(lam.copy(), d.copy(), self.level_presets)


@dataclass
class AdmittanceState:
    """Desired EE pose and twist produced by the interface."""

    position: np.ndarray       # m
    quaternion: np.ndarray     # (w, x, y, z) unit
    xd_d: np.ndarray           # desired twist, 6

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.quaternion = np.asarray(self.quaternion, dtype=float)
        self.xd_d = np.asarray(self.xd_d, dtype=float)
        if self.position.shape != (3,) or self.quaternion.shape != (4,) or self.xd_d.shape != (6,):
            raise ContractError("admittance state shapes must be (3,), (4,), (6,)")
        if abs(self.quaternion @ self.quaternion - 1.0) > 2e-9:
            raise ContractError("quaternion must be unit norm (1e-9)")

    @classmethod
    def from_pose(cls, position, quaternion) -> "AdmittanceState":
        return cls(np.array(position, dtype=float), np.array(quaternion, dtype=float), np.zeros(6))


@dataclass
class WrenchReading:
    """Force/moment sample tagged with the frame it is expressed in."""

    f: np.ndarray
    tau: np.ndarray
    frame: str = FRAME_EE

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        self.tau = np.asarray(self.tau, dtype=float)
        if self.f.shape != (3,) or self.tau.shape != (3,):
            raise ContractError("wrench components must be 3-vectors")
        if not (np.all(np.isfinite(self.f)) and np.all(np.isfinite(self.tau))):
            raise ContractError("wrench entries must be finite")
        if self.frame not in (FRAME_FT, FRAME_EE):
            raise ContractError(f"unknown wrench frame '{self.frame}'")
        self._vec6 = np.concatenate([self.f, self.tau])

    @property
    def as6(self) -> np.ndarray:
        return self._vec6


@dataclass
class FrameOffset:
    """Pose of the sensor frame in the end-effector frame."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.translation = np.asarray(self.translation, dtype=float)
        if self.rotation.shape != (3, 3) or self.translation.shape != (3,):
            raise ContractError("offset must be a 3x3 rotation and 3-vector")
        if np.max(np.abs(self.rotation.T @ self.rotation - np.eye(3))) > 1e-9:
            raise ContractError("offset rotation must be orthonormal (1e-9)")
        if np.linalg.det(self.rotation) < 0.0:
            raise ContractError("offset rotation must have det +1")


def transform_wrench(w: WrenchReading, offset: FrameOffset) -> WrenchReading:
    """Express a sensor-frame wrench at the end-effector frame origin."""
    if w.frame != FRAME_FT:
        raise ContractError("transform_wrench expects a sensor-frame reading")
    f_ee = offset.rotation @ w.f
    tau_ee = offset.rotation @ w.tau + np.cross(offset.translation, f_ee)
    return WrenchReading(f_ee, tau_ee, FRAME_EE)


def measured_force(f_h: WrenchReading, f_a: WrenchReading) -> WrenchReading:
    """Net interaction wrench: human wrench minus the controller's force."""
    if f_h.frame != FRAME_EE or f_a.frame != FRAME_EE:
        raise ContractError("measured_force expects both wrenches in the EE frame")
    return WrenchReading(f_h.f - f_a.f, f_h.tau - f_a.tau, FRAME_EE)


def step(state: AdmittanceState, params: AdmittanceParams, f_m: WrenchReading, dt: float) -> AdmittanceState:
    """One admittance integration step.

    Velocity update is explicit in the force, the pose integrates the new
    velocity (semi-implicit Euler); orientation advances by the quaternion
    exponential of the angular velocity and is renormalized.
    """
    if not dt > 0.0:
        raise ContractError("dt must be > 0")
    if f_m.frame != FRAME_EE:
        raise ContractError("admittance step expects the wrench in the EE frame")
    acc = (f_m.as6 - params.d_d * state.xd_d) / params.lambda_d
    xd = state.xd_d + acc * dt
    pos = state.position + xd[:3] * dt
    # incremental rotation by the angular velocity, scalarized for speed
    rx = xd[3] * dt
    ry = xd[4] * dt
    rz = xd[5] * dt
    angle = math.sqrt(rx * rx + ry * ry + rz * rz)
    if angle < 1e-12:
        dw, s = 1.0, 0.5
    else:
        half = 0.5 * angle
        dw = math.cos(half)
        s = math.sin(half) / angle
    dx = s * rx
    dy = s * ry
    dz = s * rz
    qw, qx, qy, qz = state.quaternion
    quat = np.array([
        dw * qw - dx * qx - dy * qy - dz * qz,
        dw * qx + dx * qw + dy * qz - dz * qy,
        dw * qy - dx * qz + dy * qw + dz * qx,
        dw * qz + dx * qy - dy * qx + dz * qw,
    ])
    quat /= math.sqrt(float(quat @ quat))
    return AdmittanceState(pos, quat, xd)
