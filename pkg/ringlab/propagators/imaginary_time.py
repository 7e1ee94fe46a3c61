import math

import numpy as np
from scipy import fft

from ringlab.schemas import EvolutionConfig, EvolutionMode

from .base import BasePropagator, kinetic_symbol


def modes_norm(modes: np.ndarray) -> float:
    """L2 norm of psi computed from its FFT coefficients (Parseval)"""
    grid_size = modes.shape[0]
    return math.sqrt(2.0 * math.pi * float(np.sum(np.abs(modes) ** 2)) / grid_size ** 2)


def _unit(modes: np.ndarray) -> np.ndarray:
    norm = modes_norm(modes)
    if norm == 0.0:
        raise ValueError("imaginary-time step annihilated the state")
    return modes / norm


class ImaginaryTimePropagator(BasePropagator):
    """
    Split step with dt -> -i dtau, renormalized to unit norm after every step

    The nonlinear potential of a step is frozen at the density of the
    normalized state entering it, so a converged state is an eigenvector of
    the symmetric splitting of H[psi] and deviates from the true stationary
    state by O(dtau^2).
    """

    mode = EvolutionMode.IMAGINARY_TIME

    def advance(self, modes: np.ndarray, cfg: EvolutionConfig, steps: int) -> np.ndarray:
        half_kinetic = np.exp(-0.5 * cfg.dt * kinetic_symbol(modes.shape[0], cfg.alpha))
        modes = _unit(np.array(modes, dtype=complex))
        for _ in range(steps):
            potential = cfg.dt * cfg.coupling * np.abs(fft.ifft(modes)) ** 2
            modes = modes * half_kinetic
            if cfg.coupling:
                modes = fft.fft(fft.ifft(modes) * np.exp(potential))
            modes = _unit(modes * half_kinetic)
        return modes
