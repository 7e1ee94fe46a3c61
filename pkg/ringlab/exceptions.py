"""Error hierarchy shared by the numerical modules and the CLI."""

from typing import Optional


class RingLabError(Exception):
    """Base class for every error raised by ringlab"""


class EllipticDomainError(RingLabError, ValueError):
    """Elliptic parameter outside the supported range"""


class InfeasibleTargetError(RingLabError, ValueError):
    """E(m)K(m) target below its minimum pi^2/4"""


class BelowCriticalError(RingLabError):
    """Soliton branch requested below the critical coupling pi/2"""


class NonIntegerImageError(RingLabError, ValueError):
    """Modified time reversal applied where 2*alpha is not an integer"""


class GridError(RingLabError, ValueError):
    """Grid size is not a power of two >= 16"""


class NoConvergenceError(RingLabError):
    """Imaginary-time relaxation hit its step cap before reaching tolerance"""

    def __init__(self, steps: int, last_delta_mu: float, chem_potential: float, tol: float):
        self.steps = steps
        self.last_delta_mu = last_delta_mu
        self.chem_potential = chem_potential
        self.tol = tol
        super().__init__(
            f"relaxation did not converge after {steps} steps: "
            f"|delta mu|={last_delta_mu:.3e} > tol={tol:.3e}, mu={chem_potential:.15g}"
        )


class NoLumpError(RingLabError):
    """Drift requested for snapshots without a discernible lump"""

    def __init__(self, message: str, min_magnitude: Optional[float] = None):
        self.min_magnitude = min_magnitude
        super().__init__(message)


# Errors that mean "the numbers did not work out" rather than "bad input"
NUMERICAL_ERRORS = (BelowCriticalError, InfeasibleTargetError, NoConvergenceError, NoLumpError)
