import numpy as np
from scipy import fft

from ringlab.schemas import EvolutionConfig, EvolutionMode

from .base import BasePropagator, kinetic_symbol


class RealTimePropagator(BasePropagator):
    """Unitary kinetic / nonlinear / kinetic splitting of i psi_t = H psi"""

    mode = EvolutionMode.REAL_TIME

    def advance(self, modes: np.ndarray, cfg: EvolutionConfig, steps: int) -> np.ndarray:
        half_kinetic = np.exp(-0.5j * cfg.dt * kinetic_symbol(modes.shape[0], cfg.alpha))
        modes = np.array(modes, dtype=complex)
        for _ in range(steps):
            modes *= half_kinetic
            psi = fft.ifft(modes)
            if cfg.coupling:
                psi *= np.exp(1j * cfg.dt * cfg.coupling * np.abs(psi) ** 2)
            modes = fft.fft(psi)
            modes *= half_kinetic
        return modes
