"""Virtual torque to base velocity mapping.

The platform only accepts velocity commands, so the controller's virtual
base torques pass through a first-order admittance with diagonal virtual
inertia and damping. Runs at the base rate (50 Hz); the simulator holds the
output between updates.
"""

from dataclasses import dataclass

import numpy as np

from .chain import BASE_DOFS, KinematicChain
from .errors import ContractError


@dataclass
class BaseAdmittanceParams:
    m_adm: np.ndarray   # diagonal virtual inertia (kg, kg, kg m^2)
    d_adm: np.ndarray   # diagonal virtual damping

    def __post_init__(self):
        self.m_adm = np.asarray(self.m_adm, dtype=float)
        self.d_adm = np.asarray(self.d_adm, dtype=float)
        if self.m_adm.shape != (BASE_DOFS,) or self.d_adm.shape != (BASE_DOFS,):
            raise ContractError(f"base admittance diagonals must have {BASE_DOFS} entries")
        if np.any(self.m_adm <= 0.0) or np.any(self.d_adm <= 0.0):
            raise ContractError("base admittance diagonals must be > 0")

    @classmethod
    def from_chain(cls, chain: KinematicChain) -> "BaseAdmittanceParams":
        return cls(chain.base_inertia.copy(), chain.base_damping.copy())


@dataclass
class BaseVelocityCommand:
    qd_m: np.ndarray    # m/s, m/s, rad/s
    stamp: float = 0.0  # simulation time, s

    def __post_init__(self):
        self.qd_m = np.asarray(self.qd_m, dtype=float)
        if self.qd_m.shape != (BASE_DOFS,):
            raise ContractError(f"base command must have {BASE_DOFS} entries")
        if not np.all(np.isfinite(self.qd_m)):
            raise ContractError("base command must be finite")

    @classmethod
    def zero(cls, stamp: float = 0.0) -> "BaseVelocityCommand":
        return cls(np.zeros(BASE_DOFS), stamp)


def step(qd_m: np.ndarray, params: BaseAdmittanceParams, tau_vir: np.ndarray,
         dt: float, stamp: float = 0.0) -> BaseVelocityCommand:
    """Advance m_adm qdd + d_adm qd = tau_vir by one step of length dt."""
    if not dt > 0.0:
        raise ContractError("dt must be > 0")
    qd_m = np.asarray(qd_m, dtype=float)
    tau_vir = np.asarray(tau_vir, dtype=float)
    if qd_m.shape != (BASE_DOFS,) or tau_vir.shape != (BASE_DOFS,):
        raise ContractError(f"base admittance expects {BASE_DOFS}-vectors")
    acc = (tau_vir - params.d_adm * qd_m) / params.m_adm
    return BaseVelocityCommand(qd_m + acc * dt, stamp)
