"""Whole-body impedance control stack for a holonomic mobile manipulator.

The package covers the full desk-scale control stack: the rigid-body model
of the planar base + serial arm, the force-guided end-effector admittance
interface, the priority-weighted whole-body Cartesian impedance controller,
the virtual base admittance, the button-board HMI, a deterministic
multi-rate simulator, and the signal-analysis pipeline used to evaluate
runs. A compiled kernel core is used when available; set
``WBCTL_PURE_PYTHON=1`` before import to force the numpy fallback.
"""

from .admittance import AdmittanceParams, AdmittanceState, FrameOffset, WrenchReading
from .base_admittance import BaseAdmittanceParams, BaseVelocityCommand
from .chain import ArmLink, JointState, KinematicChain, SpatialState, named_chain
from .controller import ControlOutput, ImpedanceGains, PriorityWeights
from .errors import ConfigError, ContractError, DecodeError, SingularityError, WbctlError
from .hmi import ButtonMessage, InterfaceState
from .kernels import backend_name
from .scenarios import Scenario, SimOptions, bundled_scenario, scripted_phase1, scripted_phase2
from .simulator import SimTrace, run

__version__ = "0.1.0"

__all__ = [
    "AdmittanceParams", "AdmittanceState", "ArmLink", "BaseAdmittanceParams",
    "BaseVelocityCommand", "ButtonMessage", "ConfigError",
    "ContractError", "ControlOutput", "DecodeError", "FrameOffset",
    "ImpedanceGains", "InterfaceState", "JointState", "KinematicChain",
    "PriorityWeights", "Scenario", "SimOptions", "SimTrace", "SingularityError",
    "SpatialState", "WbctlError", "WrenchReading", "backend_name",
    "bundled_scenario", "named_chain", "run", "scripted_phase1",
    "scripted_phase2", "__version__",
]
