"""Uniform periodic grids, sampled wave functions, potentials, unit systems.

Wrap convention, declared once and used everywhere: a Grid1D covers
[x_min, x_max) with n points x_j = x_min + j*dx, dx = (x_max - x_min)/n,
and x_max identified with x_min.  Quadrature is the Riemann sum
sum(f)*dx, which on a periodic grid equals the trapezoid rule.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GridResolutionError

__all__ = [
    "Grid1D",
    "UnitsContext",
    "PotentialSpec",
    "RealField1D",
    "ComplexField1D",
    "JointField2D",
    "write_field_csv",
    "read_field_csv",
]

NORM_TOL = 1e-12


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass
class Grid1D:
    """Uniform periodic grid on [x_min, x_max)."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not (self.x_max > self.x_min):
            raise ValueError("x_max must exceed x_min")
        if not (_is_pow2(self.n) and self.n >= 8):
            raise ValueError("n must be a power of two, at least 8")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT layout."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @property
    def k_nyquist(self) -> float:
        return np.pi / self.dx


@dataclass(frozen=True)
class UnitsContext:
    """hbar and particle mass; mode is a label (natural or si)."""

    hbar: float = 1.0
    mass: float = 1.0
    mode: str = "natural"

    def __post_init__(self):
        if self.hbar <= 0 or self.mass <= 0:
            raise ValueError("hbar and mass must be positive")
        if self.mode not in ("natural", "si"):
            raise ValueError("mode must be 'natural' or 'si'")

    @classmethod
    def natural(cls) -> "UnitsContext":
        return cls(1.0, 1.0, "natural")

    @classmethod
    def si(cls, mass: float) -> "UnitsContext":
        import scipy.constants as const

        return cls(const.hbar, mass, "si")


NATURAL = UnitsContext.natural()


@dataclass
class PotentialSpec:
    """External potential: free, linear(slope), harmonic(k), or tabulated."""

    kind: str
    slope: float = 0.0
    spring: float = 0.0
    samples: np.ndarray | None = None

    @classmethod
    def free(cls) -> "PotentialSpec":
        return cls("free")

    @classmethod
    def linear(cls, slope: float) -> "PotentialSpec":
        return cls("linear", slope=slope)

    @classmethod
    def harmonic(cls, spring: float) -> "PotentialSpec":
        if spring < 0:
            raise ValueError("spring constant must be non-negative")
        return cls("harmonic", spring=spring)

    @classmethod
    def tabulated(cls, samples: np.ndarray) -> "PotentialSpec":
        return cls("tabulated", samples=np.asarray(samples, dtype=float))

    def values(self, grid: Grid1D) -> np.ndarray:
        x = grid.x()
        if self.kind == "free":
            return np.zeros(grid.n)
        if self.kind == "linear":
            return self.slope * x
        if self.kind == "harmonic":
            return 0.5 * self.spring * x * x
        if self.kind == "tabulated":
            if self.samples is None or len(self.samples) != grid.n:
                raise GridResolutionError(
                    "tabulated potential has %s samples, grid has %d points"
                    % (None if self.samples is None else len(self.samples), grid.n)
                )
            return self.samples
        raise ValueError(f"unknown potential kind {self.kind!r}")

    def grad(self, x):
        """dV/dx at arbitrary positions (smooth kinds only)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "free":
            return np.zeros_like(x)
        if self.kind == "linear":
            return np.full_like(x, self.slope)
        if self.kind == "harmonic":
            return self.spring * x
        raise ValueError("gradient requires a smooth potential kind")


@dataclass
class RealField1D:
    """Real samples on a grid (densities, velocity profiles)."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise ValueError("values shape does not match grid")

    def integral(self) -> float:
        return float(np.sum(self.values) * self.grid.dx)


@dataclass
class ComplexField1D:
    """Complex wave function samples on a grid.

    Operations elsewhere treat fields as immutable and return new ones.
    """

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.n,):
            raise ValueError("values shape does not match grid")

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.dx))

    def normalized(self) -> "ComplexField1D":
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize a zero field")
        out = ComplexField1D(self.grid, self.values / nrm)
        assert abs(out.norm() - 1.0) < NORM_TOL
        return out

    def density(self) -> RealField1D:
        return RealField1D(self.grid, np.abs(self.values) ** 2)

    @classmethod
    def gaussian(
        cls,
        grid: Grid1D,
        center: float = 0.0,
        sigma: float = 1.0,
        momentum: float = 0.0,
        hbar: float = 1.0,
    ) -> "ComplexField1D":
        """Normalized packet: |psi|^2 has standard deviation sigma."""
        x = grid.x()
        vals = np.exp(-((x - center) ** 2) / (4.0 * sigma**2) + 1j * momentum * x / hbar)
        return cls(grid, vals).normalized()

    @classmethod
    def interference_pair(
        cls,
        grid: Grid1D,
        separation: float,
        sigma: float,
        speed: float,
        units: UnitsContext = NATURAL,
    ) -> "ComplexField1D":
        """Two packets at -/+ separation moving toward each other at `speed`."""
        p = units.mass * speed
        x = grid.x()
        left = np.exp(-((x + separation) ** 2) / (4 * sigma**2) + 1j * p * x / units.hbar)
        right = np.exp(-((x - separation) ** 2) / (4 * sigma**2) - 1j * p * x / units.hbar)
        return cls(grid, left + right).normalized()


@dataclass
class JointField2D:
    """System (x) times single environment particle (y) wave function."""

    grid_x: Grid1D
    grid_y: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid_x.n, self.grid_y.n):
            raise ValueError("values shape does not match grids")

    def norm(self) -> float:
        w = self.grid_x.dx * self.grid_y.dx
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * w))

    def normalized(self) -> "JointField2D":
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize a zero field")
        return JointField2D(self.grid_x, self.grid_y, self.values / nrm)

    def marginal_y(self) -> RealField1D:
        """Density of the environment coordinate, integrated over x."""
        dens = np.sum(np.abs(self.values) ** 2, axis=0) * self.grid_x.dx
        return RealField1D(self.grid_y, dens)

    @classmethod
    def from_product(cls, fx: ComplexField1D, fy: ComplexField1D) -> "JointField2D":
        return cls(fx.grid, fy.grid, np.outer(fx.values, fy.values)).normalized()


def write_field_csv(field_: ComplexField1D, path) -> Path:
    """Snapshot as x,re,im,density rows with 17 significant digits."""
    path = Path(path)
    x = field_.grid.x()
    v = field_.values
    dens = np.abs(v) ** 2
    with open(path, "w") as fh:
        fh.write("x,re,im,density\n")
        for i in range(field_.grid.n):
            fh.write(
                f"{x[i]:.17g},{v[i].real:.17g},{v[i].imag:.17g},{dens[i]:.17g}\n"
            )
    return path


def read_field_csv(path, grid: Grid1D | None = None) -> ComplexField1D:
    """Read a snapshot written by write_field_csv."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    x, re, im = data[:, 0], data[:, 1], data[:, 2]
    if grid is None:
        n = len(x)
        dx = x[1] - x[0]
        grid = Grid1D(float(x[0]), float(x[0] + n * dx), n)
    return ComplexField1D(grid, re + 1j * im)
