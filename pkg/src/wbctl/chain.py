"""Geometry and inertia description of the mobile manipulator.

The robot is a 3-DoF planar base (prismatic x, prismatic y, revolute yaw)
carrying an n-DoF serial arm of revolute joints. The base is modelled with a
diagonal virtual inertia/damping pair rather than wheel-level dynamics; the
arm follows the usual serial-chain convention:

    frame(link k) = frame(parent) @ fixed_transform(k) @ Rot(axis_k, q_k)

Link centres of mass and rotational inertias (about the COM) are expressed in
the link frame. The end-effector frame hangs off the last link through a
fixed offset.
"""

from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ConfigError, ContractError
from .transforms import rpy_matrix

BASE_DOFS = 3

_GRAVITY_DEFAULT = (0.0, 0.0, -9.81)


def _as_array(value, shape, what: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        raise ConfigError(f"{what}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{what}: entries must be finite")
    return arr


def _check_rotation(r: np.ndarray, what: str, tol: float = 1e-9) -> None:
    if np.max(np.abs(r.T @ r - np.eye(3))) > tol:
        raise ConfigError(f"{what}: rotation must be orthonormal")
    if np.linalg.det(r) < 0.0:
        raise ConfigError(f"{what}: rotation must be proper (det +1)")


@dataclass
class ArmLink:
    """One revolute link: joint placement, axis, and inertial data."""

    axis: np.ndarray          # unit joint axis, joint frame
    rotation: np.ndarray      # fixed parent-to-joint rotation
    translation: np.ndarray   # fixed parent-to-joint offset, m
    mass: float               # kg
    com: np.ndarray           # centre of mass, link frame, m
    inertia: np.ndarray       # 3x3 about the COM, link frame, kg m^2

    def __post_init__(self):
        self.axis = _as_array(self.axis, (3,), "link axis")
        if abs(np.linalg.norm(self.axis) - 1.0) > 1e-9:
            raise ConfigError("link axis must be unit norm")
        self.rotation = _as_array(self.rotation, (3, 3), "link rotation")
        _check_rotation(self.rotation, "link rotation")
        self.translation = _as_array(self.translation, (3,), "link translation")
        self.mass = float(self.mass)
        if not self.mass > 0.0:
            raise ConfigError("link mass must be > 0")
        self.com = _as_array(self.com, (3,), "link com")
        self.inertia = _as_array(self.inertia, (3, 3), "link inertia")
        if np.max(np.abs(self.inertia - self.inertia.T)) > 1e-12:
            raise ConfigError("link inertia must be symmetric")
        try:
            np.linalg.cholesky(self.inertia)
        except np.linalg.LinAlgError:
            raise ConfigError("link inertia must be positive definite") from None


class _PackedChain:
    """Contiguous arrays consumed by the numeric kernels."""

    __slots__ = ("axes", "rots", "trans", "masses", "coms", "inertias", "ee_rot", "ee_trans")

    def __init__(self, links, ee_rotation, ee_translation):
        n = len(links)
        self.axes = np.ascontiguousarray([l.axis for l in links]).reshape(n, 3)
        self.rots = np.ascontiguousarray([l.rotation for l in links]).reshape(n, 3, 3)
        self.trans = np.ascontiguousarray([l.translation for l in links]).reshape(n, 3)
        self.masses = np.ascontiguousarray([l.mass for l in links], dtype=float)
        self.coms = np.ascontiguousarray([l.com for l in links]).reshape(n, 3)
        self.inertias = np.ascontiguousarray([l.inertia for l in links]).reshape(n, 3, 3)
        self.ee_rot = np.ascontiguousarray(ee_rotation, dtype=float)
        self.ee_trans = np.ascontiguousarray(ee_translation, dtype=float)


@dataclass
class KinematicChain:
    """Planar base plus serial arm, with the base's virtual inertia/damping."""

    links: list
    ee_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    ee_translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gravity: np.ndarray = field(default_factory=lambda: np.array(_GRAVITY_DEFAULT))
    base_inertia: np.ndarray = field(default_factory=lambda: np.array([60.0, 60.0, 14.0]))
    base_damping: np.ndarray = field(default_factory=lambda: np.array([120.0, 120.0, 28.0]))

    def __post_init__(self):
        if len(self.links) < 2:
            raise ConfigError("chain needs at least two arm links")
        for i, link in enumerate(self.links):
            if not isinstance(link, ArmLink):
                raise ConfigError(f"link {i}: expected ArmLink")
        self.ee_rotation = _as_array(self.ee_rotation, (3, 3), "ee rotation")
        _check_rotation(self.ee_rotation, "ee rotation")
        self.ee_translation = _as_array(self.ee_translation, (3,), "ee translation")
        self.gravity = _as_array(self.gravity, (3,), "gravity")
        self.base_inertia = _as_array(self.base_inertia, (3,), "base inertia")
        self.base_damping = _as_array(self.base_damping, (3,), "base damping")
        if np.any(self.base_inertia <= 0.0) or np.any(self.base_damping <= 0.0):
            raise ConfigError("base inertia/damping diagonals must be > 0")
        self._packed = _PackedChain(self.links, self.ee_rotation, self.ee_translation)

    @property
    def arm_dofs(self) -> int:
        return len(self.links)

    @property
    def dofs(self) -> int:
        return BASE_DOFS + len(self.links)

    @property
    def packed(self) -> _PackedChain:
        return self._packed

    def with_point_mass(self, mass: float, position=None) -> "KinematicChain":
        """New chain with a point mass rigidly attached to the last link.

        Used for payload pickup. `position` is in the last link's frame and
        defaults to the end-effector offset. Mass zero returns an equivalent
        copy.
        """
        if mass < 0.0:
            raise ContractError("point mass must be >= 0")
        if position is None:
            position = self.ee_rotation @ np.zeros(3) + self.ee_translation
        position = _as_array(position, (3,), "point mass position")
        last = self.links[-1]
        m_new = last.mass + mass
        com_new = (last.mass * last.com + mass * position) / m_new
        d_old = last.com - com_new
        d_p = position - com_new

        def _shift(m, d):
            return m * (np.dot(d, d) * np.eye(3) - np.outer(d, d))

        inertia_new = last.inertia + _shift(last.mass, d_old) + _shift(mass, d_p)
        links = list(self.links[:-1]) + [
            ArmLink(last.axis, last.rotation, last.translation, m_new, com_new, inertia_new)
        ]
        return KinematicChain(
            links,
            ee_rotation=self.ee_rotation,
            ee_translation=self.ee_translation,
            gravity=self.gravity,
            base_inertia=self.base_inertia,
            base_damping=self.base_damping,
        )


@dataclass
class JointState:
    """Generalized positions/velocities, base first (x, y, yaw) then arm."""

    q: np.ndarray
    qd: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.qd = np.asarray(self.qd, dtype=float)
        if self.q.ndim != 1 or self.q.shape != self.qd.shape:
            raise ContractError("q and qd must be 1-d and the same length")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.qd))):
            raise ContractError("joint state entries must be finite")

    @property
    def base_q(self) -> np.ndarray:
        return self.q[:BASE_DOFS]

    @property
    def arm_q(self) -> np.ndarray:
        return self.q[BASE_DOFS:]

    @property
    def base_qd(self) -> np.ndarray:
        return self.qd[:BASE_DOFS]

    @property
    def arm_qd(self) -> np.ndarray:
        return self.qd[BASE_DOFS:]


@dataclass
class SpatialState:
    """End-effector pose and twist in the world frame."""

    position: np.ndarray      # m
    quaternion: np.ndarray    # (w, x, y, z), unit
    twist: np.ndarray         # (vx, vy, vz, wx, wy, wz)

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.quaternion = np.asarray(self.quaternion, dtype=float)
        self.twist = np.asarray(self.twist, dtype=float)
        if self.position.shape != (3,) or self.quaternion.shape != (4,) or self.twist.shape != (6,):
            raise ContractError("spatial state shapes must be (3,), (4,), (6,)")
        if abs(np.linalg.norm(self.quaternion) - 1.0) > 1e-9:
            raise ContractError("quaternion must be unit norm (1e-9)")


# ---------------------------------------------------------------------------
# bundled chains


def default_chain() -> KinematicChain:
    """7-DoF arm with alternating z/y axes on the holonomic base."""
    table = [
        # axis,        xyz offset,          mass, com,                inertia diag
        # first joint sits off the yaw axis so its column is independent
        ((0, 0, 1), (0.10, 0.0, 0.30), 3.5, (0.0, 0.0, 0.12), (0.030, 0.030, 0.010)),
        ((0, 1, 0), (0.0, 0.0, 0.25), 3.0, (0.0, 0.04, 0.10), (0.025, 0.025, 0.008)),
        ((0, 0, 1), (0.0, 0.0, 0.25), 2.5, (0.0, 0.0, 0.10), (0.020, 0.020, 0.006)),
        ((0, 1, 0), (0.05, 0.0, 0.22), 2.5, (-0.04, 0.0, 0.08), (0.018, 0.018, 0.006)),
        ((0, 0, 1), (-0.05, 0.0, 0.20), 2.0, (0.0, 0.0, 0.10), (0.015, 0.015, 0.005)),
        ((0, 1, 0), (0.0, 0.0, 0.18), 1.5, (0.0, 0.03, 0.06), (0.008, 0.008, 0.003)),
        ((0, 0, 1), (0.0, 0.05, 0.12), 1.0, (0.0, 0.0, 0.05), (0.004, 0.004, 0.002)),
    ]
    links = [
        ArmLink(np.array(a, dtype=float), np.eye(3), np.array(t), m, np.array(c), np.diag(i))
        for a, t, m, c, i in table
    ]
    return KinematicChain(links, ee_translation=np.array([0.0, 0.0, 0.10]))


def default_posture() -> np.ndarray:
    """Elbow-bent rest posture for the default chain (full 3+7 vector)."""
    return np.array([0.0, 0.0, 0.0, 0.0, 0.45, 0.0, -1.10, 0.0, 0.85, 0.0])


def planar_two_link(l1: float = 0.5, l2: float = 0.6, m1: float = 2.0, m2: float = 1.5) -> KinematicChain:
    """Two-link arm swinging in the vertical x-z plane (both axes +y)."""
    i1 = np.diag([0.002, m1 * l1 * l1 / 12.0, m1 * l1 * l1 / 12.0])
    i2 = np.diag([0.002, m2 * l2 * l2 / 12.0, m2 * l2 * l2 / 12.0])
    links = [
        ArmLink(np.array([0.0, 1.0, 0.0]), np.eye(3), np.zeros(3), m1, np.array([l1 / 2, 0.0, 0.0]), i1),
        ArmLink(np.array([0.0, 1.0, 0.0]), np.eye(3), np.array([l1, 0.0, 0.0]), m2, np.array([l2 / 2, 0.0, 0.0]), i2),
    ]
    return KinematicChain(links, ee_translation=np.array([l2, 0.0, 0.0]))


def six_dof_chain() -> KinematicChain:
    """3-DoF arm on the base: 6 DoF total, so the task Jacobian is square.

    No arm joint may be vertical: a z-axis arm joint is always linearly
    dependent with the base's planar columns, which would make the square
    Jacobian structurally singular.
    """
    links = [
        ArmLink(np.array([0.0, 1.0, 0.0]), np.eye(3), np.array([0.12, 0.0, 0.25]),
                2.0, np.array([0.0, 0.0, 0.10]), np.diag([0.02, 0.02, 0.01])),
        ArmLink(np.array([1.0, 0.0, 0.0]), np.eye(3), np.array([0.0, 0.0, 0.25]),
                2.0, np.array([0.15, 0.0, 0.0]), np.diag([0.002, 0.03, 0.03])),
        ArmLink(np.array([0.0, 1.0, 0.0]), np.eye(3), np.array([0.30, 0.0, 0.0]),
                1.5, np.array([0.12, 0.0, 0.0]), np.diag([0.002, 0.02, 0.02])),
    ]
    return KinematicChain(links, ee_translation=np.array([0.25, 0.0, 0.0]))


_NAMED_CHAINS = {
    "default": default_chain,
    "two_link": planar_two_link,
    "six_dof": six_dof_chain,
}


def named_chain(name: str) -> KinematicChain:
    try:
        return _NAMED_CHAINS[name]()
    except KeyError:
        raise ConfigError(f"unknown chain name '{name}' (choose from {sorted(_NAMED_CHAINS)})") from None


# ---------------------------------------------------------------------------
# config file I/O


def _inertia_from_config(value, where: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape == (3,):
        return np.diag(arr)
    if arr.shape == (3, 3):
        return arr
    raise ConfigError(f"{where}: inertia must be 3 diagonal entries or a 3x3 matrix")


def chain_from_dict(data: dict) -> KinematicChain:
    """Build a chain from the key/value + link-list config layout (SI units)."""
    if not isinstance(data, dict):
        raise ConfigError("chain config must be a mapping")
    raw_links = data.get("links")
    if not isinstance(raw_links, list) or not raw_links:
        raise ConfigError("chain config needs a non-empty 'links' list")
    links = []
    for i, entry in enumerate(raw_links):
        where = f"link {i}"
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}: expected a mapping")
        try:
            rpy = entry.get("rpy", (0.0, 0.0, 0.0))
            links.append(
                ArmLink(
                    axis=np.asarray(entry["axis"], dtype=float),
                    rotation=rpy_matrix(*[float(v) for v in rpy]),
                    translation=np.asarray(entry.get("xyz", (0.0, 0.0, 0.0)), dtype=float),
                    mass=entry["mass"],
                    com=np.asarray(entry.get("com", (0.0, 0.0, 0.0)), dtype=float),
                    inertia=_inertia_from_config(entry["inertia"], where),
                )
            )
        except KeyError as exc:
            raise ConfigError(f"{where}: missing field {exc}") from None
        except ConfigError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    ee = data.get("ee_offset", {})
    base = data.get("base", {})
    kwargs = {}
    if "gravity" in data:
        kwargs["gravity"] = np.asarray(data["gravity"], dtype=float)
    if "inertia" in base:
        kwargs["base_inertia"] = np.asarray(base["inertia"], dtype=float)
    if "damping" in base:
        kwargs["base_damping"] = np.asarray(base["damping"], dtype=float)
    return KinematicChain(
        links,
        ee_rotation=rpy_matrix(*[float(v) for v in ee.get("rpy", (0.0, 0.0, 0.0))]),
        ee_translation=np.asarray(ee.get("xyz", (0.0, 0.0, 0.0)), dtype=float),
        **kwargs,
    )


def chain_to_dict(chain: KinematicChain) -> dict:
    def _rpy_of(r: np.ndarray):
        # inverse of rpy_matrix (fixed-axis xyz), pitch in (-pi/2, pi/2) branch
        pitch = float(np.arcsin(np.clip(-r[2, 0], -1.0, 1.0)))
        roll = float(np.arctan2(r[2, 1], r[2, 2]))
        yaw = float(np.arctan2(r[1, 0], r[0, 0]))
        return [roll, pitch, yaw]

    return {
        "base": {
            "inertia": chain.base_inertia.tolist(),
            "damping": chain.base_damping.tolist(),
        },
        "gravity": chain.gravity.tolist(),
        "ee_offset": {"xyz": chain.ee_translation.tolist(), "rpy": _rpy_of(chain.ee_rotation)},
        "links": [
            {
                "axis": l.axis.tolist(),
                "xyz": l.translation.tolist(),
                "rpy": _rpy_of(l.rotation),
                "mass": l.mass,
                "com": l.com.tolist(),
                "inertia": l.inertia.tolist(),
            }
            for l in chain.links
        ],
    }


def load_chain(path) -> KinematicChain:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{path}: invalid YAML{line}: {exc}") from None
    try:
        return chain_from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
