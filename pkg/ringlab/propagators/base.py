from abc import ABC, abstractmethod

import numpy as np
from scipy import fft

from ringlab.schemas import EvolutionConfig, EvolutionMode
from ringlab.wavefunction import RingWavefunction, wavenumbers


def kinetic_symbol(grid_size: int, alpha: float) -> np.ndarray:
    """(l - alpha)^2 / 2 for every grid mode"""
    return 0.5 * (wavenumbers(grid_size) - alpha) ** 2


class BasePropagator(ABC):
    """Strang split-step propagator for the mean-field equation on the ring"""

    mode: EvolutionMode

    @abstractmethod
    def advance(self, modes: np.ndarray, cfg: EvolutionConfig, steps: int) -> np.ndarray:
        """
        Advance Fourier coefficients by a number of steps

        Args:
            modes: FFT coefficients of psi (not modified)
            cfg: step size, flux and coupling
            steps: number of split steps

        Returns:
            FFT coefficients after the steps
        """
        pass

    def supports_mode(self, mode: EvolutionMode) -> bool:
        return mode == self.mode

    def step(self, psi: RingWavefunction, cfg: EvolutionConfig) -> RingWavefunction:
        return self.run(psi, cfg, 1)

    def run(self, psi: RingWavefunction, cfg: EvolutionConfig, steps: int) -> RingWavefunction:
        if steps < 0:
            raise ValueError("steps must be non-negative")
        if steps == 0:
            return psi
        return RingWavefunction(fft.ifft(self.advance(psi.modes(), cfg, steps)))
