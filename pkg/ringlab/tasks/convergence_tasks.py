"""
Discretization checks against the analytic soliton.

Spatial rows: stationary residual of the sampled analytic profile on each
grid. Temporal rows: energy drift of a perturbed lump on the coarsest grid
for each time step, from which the order of the splitting is measured.
"""

import logging
import math
from functools import partial
from typing import List, Sequence

import numpy as np

from ringlab.exceptions import BelowCriticalError
from ringlab.gpe_dynamics import eigen_residual, evolve, measure
from ringlab.schemas import (
    ConvergenceTable,
    EvolutionConfig,
    EvolutionMode,
    ScanRecord,
    StationarySolution,
    check_grid_size,
)
from ringlab.soliton_analytic import sample_profile, solve_soliton_branch, uniform_branch
from ringlab.wavefunction import RingWavefunction

from .pool import run_jobs

logger = logging.getLogger(__name__)

CHECKPOINTS = 10
PERTURBATION = 0.1
PERTURBED_SEED = "soliton*(1+0.1cos)"


def _reference_solution(coupling: float) -> StationarySolution:
    try:
        return solve_soliton_branch(coupling)
    except BelowCriticalError:
        return uniform_branch(coupling)


def spatial_row(grid_size: int, solution: StationarySolution) -> ScanRecord:
    psi = sample_profile(solution, grid_size)
    observables = measure(psi, 0.0, solution.coupling)
    return ScanRecord(
        coupling=solution.coupling,
        alpha=0.0,
        N=grid_size,
        seed="analytic",
        m=solution.m,
        r=solution.r,
        mu_analytic=solution.chem_potential,
        mu_numeric=observables.chem_potential / observables.norm ** 2,
        branch=solution.branch,
        residual=eigen_residual(psi, 0.0, solution.coupling, solution.chem_potential),
    )


def perturbed_lump(solution: StationarySolution, grid_size: int) -> RingWavefunction:
    profile = sample_profile(solution, grid_size)
    return RingWavefunction(profile.samples * (1.0 + PERTURBATION * np.cos(profile.grid))).normalized()


def temporal_row(
    dt: float,
    solution: StationarySolution,
    alpha: float,
    grid_size: int,
    t_final: float,
) -> ScanRecord:
    """Largest |E(t) - E(0)| over checkpoints spaced t_final / 10"""
    steps_between = max(1, round(t_final / CHECKPOINTS / dt))
    cfg = EvolutionConfig(
        dt=dt,
        steps=steps_between * CHECKPOINTS,
        alpha=alpha,
        coupling=solution.coupling,
        mode=EvolutionMode.REAL_TIME,
    )
    snapshots = evolve(perturbed_lump(solution, grid_size), cfg, steps_between)
    energies = [measure(psi, alpha, solution.coupling).energy for _, psi in snapshots]
    return ScanRecord(
        coupling=solution.coupling,
        alpha=alpha,
        N=grid_size,
        dt=dt,
        seed=PERTURBED_SEED,
        m=solution.m,
        r=solution.r,
        branch=solution.branch,
        residual=max(abs(energy - energies[0]) for energy in energies[1:]),
    )


def observed_orders(errors: Sequence[float], steps: Sequence[float]) -> List[float]:
    """log(e_i / e_{i+1}) / log(h_i / h_{i+1}) for successive refinements"""
    orders = []
    for (e0, e1), (h0, h1) in zip(zip(errors, errors[1:]), zip(steps, steps[1:])):
        if e0 > 0 and e1 > 0:
            orders.append(math.log(e0 / e1) / math.log(h0 / h1))
        else:
            orders.append(math.nan)
    return orders


def convergence_table(
    coupling: float,
    alpha: float,
    grid_sizes: Sequence[int],
    dts: Sequence[float],
    t_final: float = 1.0,
) -> ConvergenceTable:
    """
    Spatial and temporal convergence against the analytic solution at lambda

    Args:
        coupling: lambda
        alpha: flux used for the temporal rows
        grid_sizes: powers of two for the spatial rows
        dts: strictly descending time steps for the temporal rows
        t_final: length of each temporal run

    Returns:
        ConvergenceTable with spatial rows first, then temporal rows
    """
    grid_sizes = [check_grid_size(size) for size in grid_sizes]
    if not grid_sizes or not dts:
        raise ValueError("convergence table needs at least one grid size and one dt")
    if any(dt <= 0 for dt in dts) or any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValueError("dts must be positive and strictly descending")

    solution = _reference_solution(coupling)
    coarsest = min(grid_sizes)

    spatial = run_jobs(partial(spatial_row, solution=solution), grid_sizes)
    temporal = run_jobs(
        partial(temporal_row, solution=solution, alpha=alpha, grid_size=coarsest, t_final=t_final),
        list(dts),
    )

    spatial_errors = [row.residual for row in spatial]
    decay = [later / earlier if earlier > 0 else math.nan for earlier, later in zip(spatial_errors, spatial_errors[1:])]
    orders = observed_orders([row.residual for row in temporal], dts)
    logger.info(f"Convergence table lambda={coupling}: spatial decay {decay}, temporal orders {orders}")
    return ConvergenceTable(records=spatial + temporal, spatial_decay=decay, temporal_orders=orders)
