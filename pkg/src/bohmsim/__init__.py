"""Stochastic quantum dynamics on a line: guided trajectories, spontaneous
localization, bath collisions, and the classical limit, with a scenario
runner and verification suite."""

__version__ = "0.1.0"

from .errors import (
    AliasingError,
    CollapseToNullError,
    ConfigError,
    DegenerateDistributionError,
    DomainError,
    DomainEscapeError,
    GridResolutionError,
    IntegratorToleranceError,
    NullSliceError,
    NumericOverflowError,
    ResourceLimitError,
    SimulationError,
)
from .grids import (
    NATURAL,
    ComplexField1D,
    Grid1D,
    JointField2D,
    PotentialSpec,
    RealField1D,
    UnitsContext,
    read_field_csv,
    write_field_csv,
)
from .rng import stream, substreams

__all__ = [
    "__version__",
    "AliasingError",
    "CollapseToNullError",
    "ConfigError",
    "DegenerateDistributionError",
    "DomainError",
    "DomainEscapeError",
    "GridResolutionError",
    "IntegratorToleranceError",
    "NullSliceError",
    "NumericOverflowError",
    "ResourceLimitError",
    "SimulationError",
    "NATURAL",
    "ComplexField1D",
    "Grid1D",
    "JointField2D",
    "PotentialSpec",
    "RealField1D",
    "UnitsContext",
    "read_field_csv",
    "write_field_csv",
    "stream",
    "substreams",
]
