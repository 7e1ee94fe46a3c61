import math

import numpy as np
import pytest

from ringlab.gpe_dynamics import make_seed, relax_ground_state
from ringlab.schemas import EvolutionConfig, EvolutionMode, StationarySolution, SweepConfig
from ringlab.soliton_analytic import sample_profile, solve_soliton_branch
from ringlab.wavefunction import RingWavefunction, ring_grid


@pytest.fixture
def soliton_three() -> StationarySolution:
    """Analytic soliton at lambda = 3"""
    return solve_soliton_branch(3.0)


@pytest.fixture
def plane_wave():
    """Factory for normalized plane waves e^{il phi}/sqrt(2 pi)"""

    def build(l: int, grid_size: int = 64) -> RingWavefunction:
        phi = ring_grid(grid_size)
        return RingWavefunction(np.exp(1j * l * phi) / math.sqrt(2.0 * math.pi))

    return build


@pytest.fixture
def perturbed_soliton(soliton_three) -> RingWavefunction:
    """Smooth non-stationary lump on 64 points"""
    profile = sample_profile(soliton_three, 64)
    return RingWavefunction(profile.samples * (1.0 + 0.1 * np.cos(profile.grid))).normalized()


@pytest.fixture(scope="session")
def relaxed_lump():
    """Imaginary-time lump at lambda = 3, alpha = 0 on a coarse grid"""
    cfg = EvolutionConfig(dt=2e-3, steps=400000, alpha=0.0, coupling=3.0, mode=EvolutionMode.IMAGINARY_TIME)
    return relax_ground_state(make_seed("uniform+0.01cos", 64, 3.0), cfg, 1e-11)


@pytest.fixture(scope="session")
def fine_relaxed_lump():
    """Imaginary-time lump at lambda = 3, alpha = 0 on 256 points"""
    cfg = EvolutionConfig(dt=5e-4, steps=400000, alpha=0.0, coupling=3.0, mode=EvolutionMode.IMAGINARY_TIME)
    return relax_ground_state(make_seed("uniform+0.01cos", 256, 3.0), cfg, 1e-12)


@pytest.fixture
def fast_sweep() -> SweepConfig:
    """Coarse sweep settings that keep each record well under a second"""
    return SweepConfig(grid_size=64, dt=4e-3, tol=1e-10, max_steps=400000, t_final=10.0, snapshot_every=25)
