"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for all simulator-specific failures."""


class ConfigError(SimulationError):
    """Bad or unknown configuration input."""


class AliasingError(SimulationError):
    """Spectral tail carries too much mass for the grid to be trusted."""


class NumericOverflowError(SimulationError):
    """A field or matrix stopped being finite."""


class DegenerateDistributionError(SimulationError):
    """Attempted to sample from an all-zero density."""


class DomainEscapeError(SimulationError):
    """A trajectory left the grid interior."""


class DomainError(SimulationError):
    """Field support reached the grid boundary (periodic images would alias)."""


class NullSliceError(SimulationError):
    """Conditioning point sits on a node of the joint wave function."""


class CollapseToNullError(SimulationError):
    """Localization center so far outside support that the state vanished."""


class IntegratorToleranceError(SimulationError):
    """A watchdog tolerance (trace drift, norm drift) was exceeded."""


class GridResolutionError(SimulationError):
    """Grid cannot resolve the requested structure."""


class ResourceLimitError(SimulationError):
    """Request exceeds the desk-scale resource bounds."""
