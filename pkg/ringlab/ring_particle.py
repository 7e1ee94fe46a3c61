"""
Charged particle on a ring threaded by flux alpha.

Levels are the integer eigenvalues l of the canonical angular momentum;
energies are (l - alpha)^2 / 2.
"""

import math
from typing import List, Optional, Tuple

from ringlab.config import settings
from ringlab.exceptions import NonIntegerImageError
from ringlab.schemas import GroundLevelResult, LevelInfo

# 2*alpha must lie this close to an integer for the modified time reversal
IMAGE_TOL = 1e-12


def level_energy(l: int, alpha: float) -> float:
    return 0.5 * (l - alpha) ** 2


def level_velocity(l: int, alpha: float) -> float:
    """Expectation of the angular velocity in level l"""
    return l - alpha


def ground_level(alpha: float, tie_tol: Optional[float] = None) -> GroundLevelResult:
    """
    Level(s) minimizing |l - alpha|.

    Two levels are returned when alpha sits within tie_tol of a half odd
    integer.
    """
    if tie_tol is None:
        tie_tol = settings.TIE_TOL
    if tie_tol < 0:
        raise ValueError("tie_tol must be non-negative")

    lower = math.floor(alpha)
    fraction = alpha - lower
    if abs(fraction - 0.5) <= tie_tol:
        levels = [lower, lower + 1]
    elif fraction < 0.5:
        levels = [lower]
    else:
        levels = [lower + 1]

    return GroundLevelResult(
        levels=levels,
        energy=level_energy(levels[0], alpha),
        degenerate=len(levels) == 2,
    )


def gauge_shift(l: int, alpha: float, k: int) -> Tuple[int, float]:
    """Action of G_k: multiply by e^{ik phi} and move the flux to alpha + k"""
    return l + k, alpha + k


def time_reversal(l: int, alpha: float) -> Tuple[int, float]:
    return -l, -alpha


def modified_time_reversal(l: int, alpha: float) -> int:
    """
    Time reversal followed by the gauge shift G_{2 alpha}; maps l to 2 alpha - l.

    Raises:
        NonIntegerImageError: 2 alpha is not an integer, so the image is
            not a level
    """
    two_alpha = 2.0 * alpha
    shift = round(two_alpha)
    if abs(two_alpha - shift) > IMAGE_TOL:
        raise NonIntegerImageError(
            f"modified time reversal needs integer 2*alpha, got 2*alpha={two_alpha!r}"
        )
    reversed_l, reversed_alpha = time_reversal(l, alpha)
    image, _ = gauge_shift(reversed_l, reversed_alpha, int(shift))
    return image


def spectrum(alpha: float, l_min: int, l_max: int) -> List[LevelInfo]:
    """Levels l_min..l_max with their energies and velocities"""
    if l_min > l_max:
        raise ValueError(f"empty level window [{l_min}, {l_max}]")
    return [
        LevelInfo(l=l, energy=level_energy(l, alpha), velocity=level_velocity(l, alpha))
        for l in range(l_min, l_max + 1)
    ]


# Classical ring particle: L = v^2/2 + alpha v, p = v + alpha, H = (p - alpha)^2/2
def lagrangian(velocity: float, alpha: float) -> float:
    return 0.5 * velocity ** 2 + alpha * velocity


def canonical_momentum(velocity: float, alpha: float) -> float:
    return velocity + alpha


def hamiltonian(momentum: float, alpha: float) -> float:
    return 0.5 * (momentum - alpha) ** 2
