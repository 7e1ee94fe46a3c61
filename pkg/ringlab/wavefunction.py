import math
from dataclasses import dataclass

import numpy as np
from scipy import fft

from ringlab.exceptions import GridError
from ringlab.schemas import is_power_of_two

MIN_GRID_SIZE = 16


def ring_grid(grid_size: int) -> np.ndarray:
    """Angles phi_j = 2 pi j / N"""
    return 2.0 * np.pi * np.arange(grid_size) / grid_size


def wavenumbers(grid_size: int) -> np.ndarray:
    """Integer Fourier modes in FFT order, -N/2 .. N/2 - 1"""
    return fft.fftfreq(grid_size, d=1.0 / grid_size)


@dataclass(frozen=True, eq=False)
class RingWavefunction:
    """Complex samples of psi at phi_j = 2 pi j / N; read-only"""

    samples: np.ndarray

    def __post_init__(self):
        samples = np.array(self.samples, dtype=complex)
        if samples.ndim != 1:
            raise GridError("wavefunction samples must be one-dimensional")
        size = samples.shape[0]
        if size < MIN_GRID_SIZE or not is_power_of_two(size):
            raise GridError(f"grid size must be a power of two >= {MIN_GRID_SIZE}, got {size}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("wavefunction samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def grid_size(self) -> int:
        return self.samples.shape[0]

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi / self.grid_size

    @property
    def grid(self) -> np.ndarray:
        return ring_grid(self.grid_size)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    @property
    def norm(self) -> float:
        return math.sqrt(self.spacing * float(np.sum(self.density)))

    def integrate(self, values: np.ndarray) -> float:
        """Trapezoid (equivalently rectangle) rule for a periodic integrand on this grid"""
        return self.spacing * float(np.sum(values))

    def normalized(self) -> "RingWavefunction":
        norm = self.norm
        if norm == 0.0:
            raise ValueError("cannot normalize a wavefunction with zero norm")
        return RingWavefunction(self.samples / norm)

    def modes(self) -> np.ndarray:
        return fft.fft(self.samples)

    @classmethod
    def from_modes(cls, coefficients: np.ndarray) -> "RingWavefunction":
        return cls(fft.ifft(coefficients))
