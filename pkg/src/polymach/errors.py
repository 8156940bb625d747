"""Exception types shared across the solver modules."""


class SimulationError(Exception):
    """Base class for runtime failures of a solver component."""


class CFLError(SimulationError):
    """Time step exceeds a stability bound; carries a suggested dt."""

    def __init__(self, message, suggested_dt=None):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class DensityFloorError(SimulationError):
    """Density dropped to the vacuum floor."""


class PositivityError(SimulationError):
    """Configuration density developed negativity beyond clipping tolerance."""


class ProjectionError(SimulationError):
    """Helmholtz projection residual exceeded tolerance."""


class ConfigError(Exception):
    """Malformed or inconsistent run-configuration file."""
