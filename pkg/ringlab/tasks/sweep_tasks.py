import logging
import math
from collections import Counter
from functools import partial
from typing import List, Optional, Sequence, Tuple

from ringlab.exceptions import BelowCriticalError, NoConvergenceError, NoLumpError
from ringlab.gpe_dynamics import (
    boost_energy,
    boost_levels,
    default_seed_descriptor,
    fit_drift,
    make_seed,
    measure,
    relax_ground_state,
    track_moving_lump,
)
from ringlab.schemas import (
    Branch,
    EvolutionConfig,
    EvolutionMode,
    Observables,
    RecordStatus,
    ScanRecord,
    SweepConfig,
)
from ringlab.soliton_analytic import (
    CRITICAL_COUPLING,
    energy_functional,
    select_ground_branch,
    solve_soliton_branch,
    uniform_branch,
)
from ringlab.wavefunction import RingWavefunction

from .pool import run_jobs

logger = logging.getLogger(__name__)

RelaxedLump = Tuple[RingWavefunction, Observables]


def flux_distance(alpha: float) -> float:
    """Distance from alpha to the nearest integer"""
    return abs(alpha - round(alpha))


def uniform_energy_at_flux(coupling: float, alpha: float) -> float:
    """Energy of the best uniform state e^{il phi}/sqrt(2 pi) at flux alpha"""
    return 0.5 * flux_distance(alpha) ** 2 - coupling / (4.0 * math.pi)


def _relaxation_config(coupling: float, sweep: SweepConfig) -> EvolutionConfig:
    return EvolutionConfig(
        dt=sweep.dt,
        steps=sweep.max_steps,
        alpha=0.0,
        coupling=coupling,
        mode=EvolutionMode.IMAGINARY_TIME,
    )


def _log_summary(kind: str, records: Sequence[ScanRecord]) -> None:
    counts = Counter(record.status.value for record in records)
    logger.info(f"{kind} scan complete: {len(records)} records, {dict(counts)}")


def lambda_record(coupling: float, sweep: SweepConfig) -> ScanRecord:
    """
    One row of the lambda sweep: analytic branches, relaxed state and their gap

    Failures become the record status; dependent fields stay empty.
    """
    seed = sweep.seed or default_seed_descriptor(coupling)
    record = ScanRecord(
        coupling=coupling,
        alpha=0.0,
        N=sweep.grid_size,
        dt=sweep.dt,
        seed=seed,
        E_uniform=energy_functional(uniform_branch(coupling)),
    )

    try:
        soliton = solve_soliton_branch(coupling)
        record.m = soliton.m
        record.r = soliton.r
        record.E_soliton = energy_functional(soliton)
    except BelowCriticalError:
        record.status = RecordStatus.BELOW_CRITICAL

    selected = select_ground_branch(coupling)
    record.branch = selected.branch
    record.mu_analytic = selected.chem_potential

    try:
        psi0 = make_seed(seed, sweep.grid_size, coupling)
        _, observables = relax_ground_state(psi0, _relaxation_config(coupling, sweep), sweep.tol)
    except NoConvergenceError as e:
        logger.warning(f"lambda={coupling}: {e}")
        record.status = RecordStatus.NO_CONVERGE
        return record

    record.mu_numeric = observables.chem_potential
    record.residual = abs(observables.chem_potential - selected.chem_potential)
    return record


def scan_lambda(lambdas: Sequence[float], sweep: Optional[SweepConfig] = None) -> List[ScanRecord]:
    """Phase diagram over the coupling, one independent record per lambda"""
    sweep = sweep or SweepConfig()
    if any(value <= 0 for value in lambdas):
        raise ValueError("couplings must be positive")
    if list(lambdas) != sorted(lambdas):
        raise ValueError("couplings must be sorted")
    records = run_jobs(partial(lambda_record, sweep=sweep), list(lambdas))
    _log_summary("lambda", records)
    return records


def relax_lump(coupling: float, sweep: SweepConfig) -> RelaxedLump:
    """Flux-free lump by imaginary-time relaxation"""
    seed = sweep.seed or default_seed_descriptor(coupling)
    psi0 = make_seed(seed, sweep.grid_size, coupling)
    return relax_ground_state(psi0, _relaxation_config(coupling, sweep), sweep.tol)


def alpha_record(alpha: float, coupling: float, sweep: SweepConfig, lump: RelaxedLump) -> ScanRecord:
    """
    One row of the flux sweep: boost the relaxed lump into the winding that
    minimizes |l + alpha| and fit the drift of its real-time evolution.
    """
    psi_tilde, rest = lump
    level = boost_levels(alpha)[0]
    seed = sweep.seed or default_seed_descriptor(coupling)
    soliton = solve_soliton_branch(coupling)
    speed = level + alpha

    record = ScanRecord(
        coupling=coupling,
        alpha=alpha,
        N=sweep.grid_size,
        dt=sweep.dt,
        seed=f"{seed}@l={level}",
        m=soliton.m,
        r=soliton.r,
        mu_analytic=soliton.chem_potential + 0.5 * speed ** 2,
        E_uniform=uniform_energy_at_flux(coupling, alpha),
        E_soliton=boost_energy(rest.energy, level, alpha),
    )
    record.branch = Branch.SOLITON if record.E_soliton < record.E_uniform else Branch.UNIFORM

    steps = max(1, round(sweep.t_final / sweep.dt))
    snapshots = track_moving_lump(
        psi_tilde,
        level,
        alpha,
        coupling,
        rest.chem_potential,
        sweep.dt,
        steps,
        min(sweep.snapshot_every, steps),
    )
    record.mu_numeric = measure(snapshots[-1][1], alpha, coupling).chem_potential

    try:
        fit = fit_drift(snapshots)
    except NoLumpError as e:
        logger.warning(f"alpha={alpha}: {e}")
        record.status = RecordStatus.NO_LUMP
        return record

    record.drift_rate = fit.rate
    record.residual = abs(abs(fit.rate) - flux_distance(alpha))
    return record


def _unfinished(alphas: Sequence[float], coupling: float, sweep: SweepConfig, status: RecordStatus) -> List[ScanRecord]:
    seed = sweep.seed or default_seed_descriptor(coupling)
    return [
        ScanRecord(
            coupling=coupling,
            alpha=alpha,
            N=sweep.grid_size,
            dt=sweep.dt,
            seed=seed,
            E_uniform=uniform_energy_at_flux(coupling, alpha),
            branch=Branch.UNIFORM if status == RecordStatus.BELOW_CRITICAL else None,
            status=status,
        )
        for alpha in alphas
    ]


def scan_alpha(
    alphas: Sequence[float],
    coupling: float,
    sweep: Optional[SweepConfig] = None,
) -> List[ScanRecord]:
    """Drift-rate curve over the flux at fixed coupling"""
    sweep = sweep or SweepConfig()
    alphas = list(alphas)
    if coupling <= CRITICAL_COUPLING:
        logger.warning(f"lambda={coupling} is not above pi/2: no lump to boost")
        return _unfinished(alphas, coupling, sweep, RecordStatus.BELOW_CRITICAL)
    if not alphas:
        return []

    try:
        lump = relax_lump(coupling, sweep)
    except NoConvergenceError as e:
        logger.warning(f"lambda={coupling}: {e}")
        return _unfinished(alphas, coupling, sweep, RecordStatus.NO_CONVERGE)

    records = run_jobs(partial(alpha_record, coupling=coupling, sweep=sweep, lump=lump), alphas)
    _log_summary("alpha", records)
    return records
