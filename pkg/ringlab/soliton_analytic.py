"""
Closed-form stationary states of the attractive mean-field equation at alpha = 0.

Two branches exist:

* uniform: |psi|^2 = 1/(2 pi), chemical potential -lambda/(2 pi), any coupling
* soliton: psi = r dn(r sqrt(lambda) (phi + beta), m), for lambda >= pi/2,
  with m fixed by E(m) K(m) = pi lambda / 2 and r = K(m) / (pi sqrt(lambda))

The chemical potential is the phase frequency of the stationary state. The
branch verdict compares the energy functional
E[psi] = integral of |psi'|^2/2 - (lambda/2)|psi|^4, which is a different
quantity.
"""

import logging
import math
from typing import Optional

import numpy as np

from ringlab.config import settings
from ringlab.elliptic import EllipticParameter, complete_K, invert_product, jacobi_sn_cn_dn
from ringlab.exceptions import BelowCriticalError
from ringlab.schemas import Branch, StationarySolution
from ringlab.wavefunction import RingWavefunction, ring_grid

logger = logging.getLogger(__name__)

CRITICAL_COUPLING = math.pi / 2

# Relative window below pi/2 that is treated as the critical point itself
CRITICAL_TOL = 1e-7


def critical_coupling() -> float:
    return CRITICAL_COUPLING


def _check_coupling(coupling: float) -> None:
    if not math.isfinite(coupling) or coupling <= 0:
        raise ValueError(f"coupling must be positive and finite, got {coupling}")


def uniform_branch(coupling: float) -> StationarySolution:
    _check_coupling(coupling)
    return StationarySolution(
        branch=Branch.UNIFORM,
        coupling=coupling,
        chem_potential=-coupling / (2.0 * math.pi),
    )


def solve_soliton_branch(
    coupling: float,
    offset: float = 0.0,
    critical_tol: float = CRITICAL_TOL,
) -> StationarySolution:
    """
    The dn-soliton solution at coupling lambda.

    Couplings within a relative critical_tol below pi/2 are taken as the
    critical point and give m = 0.

    Raises:
        BelowCriticalError: lambda < pi/2
    """
    _check_coupling(coupling)
    if coupling < CRITICAL_COUPLING * (1.0 - critical_tol):
        raise BelowCriticalError(
            f"no soliton branch at lambda={coupling}: critical coupling is pi/2={CRITICAL_COUPLING}"
        )

    if coupling <= CRITICAL_COUPLING:
        param = EllipticParameter.from_m(0.0)
    else:
        param = invert_product(math.pi * coupling / 2.0)

    r = complete_K(param) / (math.pi * math.sqrt(coupling))
    # -r^2 lambda (1 - m/2), written with the complement to keep precision near m = 1
    chem_potential = -r * r * coupling * (1.0 + param.complement) / 2.0

    logger.debug(f"soliton branch lambda={coupling}: m={param.m!r}, r={r!r}, mu={chem_potential!r}")
    return StationarySolution(
        branch=Branch.SOLITON,
        coupling=coupling,
        m=param.m,
        m_complement=param.complement,
        r=r,
        chem_potential=chem_potential,
        offset=offset,
    )


def elliptic_parameter(sol: StationarySolution) -> EllipticParameter:
    if sol.branch != Branch.SOLITON:
        raise ValueError("only the soliton branch carries an elliptic parameter")
    return EllipticParameter(m=sol.m, complement=sol.m_complement)


def profile_values(sol: StationarySolution, phi) -> np.ndarray:
    """psi_0(phi + beta) at arbitrary angles"""
    phi = np.asarray(phi, dtype=float)
    if sol.branch == Branch.UNIFORM:
        return np.full(phi.shape, 1.0 / math.sqrt(2.0 * math.pi))
    scale = sol.r * math.sqrt(sol.coupling)
    _, _, dn = jacobi_sn_cn_dn(scale * (phi + sol.offset), elliptic_parameter(sol))
    return sol.r * np.asarray(dn)


def profile_derivative(sol: StationarySolution, phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if sol.branch == Branch.UNIFORM:
        return np.zeros(phi.shape)
    scale = sol.r * math.sqrt(sol.coupling)
    sn, cn, _ = jacobi_sn_cn_dn(scale * (phi + sol.offset), elliptic_parameter(sol))
    return -sol.r * scale * sol.m * np.asarray(sn) * np.asarray(cn)


def sample_profile(sol: StationarySolution, grid_size: int) -> RingWavefunction:
    """Samples of psi_0(phi_j + beta) on the N-point ring grid"""
    return RingWavefunction(profile_values(sol, ring_grid(grid_size)).astype(complex))


def _quadrature_grid(points: Optional[int]) -> np.ndarray:
    return ring_grid(points or settings.QUADRATURE_GRID)


def profile_norm(sol: StationarySolution, points: Optional[int] = None) -> float:
    """Integral of |psi_0|^2 over the ring by the periodic trapezoid rule"""
    phi = _quadrature_grid(points)
    values = profile_values(sol, phi)
    return 2.0 * math.pi * float(np.mean(values ** 2))


def energy_functional(sol: StationarySolution, points: Optional[int] = None) -> float:
    """E[psi_0] = integral of psi_0'^2/2 - (lambda/2) psi_0^4, periodic trapezoid rule"""
    phi = _quadrature_grid(points)
    values = profile_values(sol, phi)
    slope = profile_derivative(sol, phi)
    integrand = 0.5 * slope ** 2 - 0.5 * sol.coupling * values ** 4
    return 2.0 * math.pi * float(np.mean(integrand))


def select_ground_branch(coupling: float, tie_tol: Optional[float] = None) -> StationarySolution:
    """Branch of lower energy; the uniform branch wins below pi/2 and on ties"""
    if tie_tol is None:
        tie_tol = settings.TIE_TOL
    uniform = uniform_branch(coupling)
    try:
        soliton = solve_soliton_branch(coupling)
    except BelowCriticalError:
        return uniform
    if soliton.m == 0.0:
        return uniform

    uniform_energy = energy_functional(uniform)
    soliton_energy = energy_functional(soliton)
    if soliton_energy >= uniform_energy - tie_tol:
        return uniform
    return soliton
