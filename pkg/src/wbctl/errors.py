"""Exception types shared across the package."""


class WbctlError(Exception):
    """Base class for all package errors."""


class ContractError(WbctlError, ValueError):
    """A call violated a documented precondition (dimension, frame, range)."""


class ConfigError(WbctlError, ValueError):
    """A configuration file or override is malformed; message names the spot."""


class DecodeError(WbctlError, ValueError):
    """A button message or serial frame failed validation."""


class SingularityError(WbctlError, RuntimeError):
    """The task Jacobian lost rank; carries the smallest singular value."""

    def __init__(self, message: str, smallest_sv: float):
        super().__init__(f"{message} (smallest singular value {smallest_sv:.3e})")
        self.smallest_sv = smallest_sv
