"""
Mean-field dynamics on the flux-threaded ring.

States are sampled on N equally spaced angles and differentiated
spectrally. The equation is

    i psi_t = (1/2)(-i d/dphi - alpha)^2 psi - lambda |psi|^2 psi

Real-time and imaginary-time evolution use the split-step propagators in
ringlab.propagators.
"""

import logging
import math
import os
import re
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft

from ringlab.config import settings
from ringlab.exceptions import GridError, NoConvergenceError, NoLumpError
from ringlab.propagators.base import kinetic_symbol
from ringlab.propagators.factory import propagator_factory
from ringlab.ring_particle import ground_level
from ringlab.schemas import (
    DriftFit,
    EvolutionConfig,
    EvolutionMode,
    Observables,
    ProfileAlignment,
    StationarySolution,
    check_grid_size,
)
from ringlab.soliton_analytic import CRITICAL_COUPLING, sample_profile, solve_soliton_branch
from ringlab.storage import atomic_write_text, read_json, sidecar_path, write_json
from ringlab.wavefunction import RingWavefunction, ring_grid, wavenumbers

logger = logging.getLogger(__name__)

Snapshot = Tuple[float, RingWavefunction]

# Centroid magnitude below which no lump position is defined
LUMP_THRESHOLD = 0.1

_SEED_PATTERNS = {
    "uniform": re.compile(r"^uniform$"),
    "perturbed": re.compile(r"^uniform\+(?P<eps>[0-9.eE+-]+)cos$"),
    "plane": re.compile(r"^plane:(?P<l>-?\d+)$"),
    "random": re.compile(r"^random:(?P<seed>\d+)$"),
    "soliton": re.compile(r"^soliton(:(?P<offset>[0-9.eE+-]+))?$"),
}


def _require_integer(value, name: str) -> int:
    if int(value) != value:
        raise ValueError(f"{name} must be an integer, got {value}")
    return int(value)


# Operators and observables
def apply_hamiltonian(psi: RingWavefunction, alpha: float, coupling: float) -> RingWavefunction:
    """(1/2)(-i d/dphi - alpha)^2 psi - lambda |psi|^2 psi with a spectral derivative"""
    kinetic = fft.ifft(kinetic_symbol(psi.grid_size, alpha) * psi.modes())
    return RingWavefunction(kinetic - coupling * psi.density * psi.samples)


def _kinetic_energy(modes: np.ndarray, alpha: float) -> float:
    grid_size = modes.shape[0]
    weights = kinetic_symbol(grid_size, alpha) * np.abs(modes) ** 2
    return 2.0 * math.pi * float(np.sum(weights)) / grid_size ** 2


def _chem_potential(modes: np.ndarray, alpha: float, coupling: float) -> float:
    density = np.abs(fft.ifft(modes)) ** 2
    quartic = 2.0 * math.pi * float(np.mean(density ** 2))
    return _kinetic_energy(modes, alpha) - coupling * quartic


def centroid(psi: RingWavefunction) -> complex:
    """Circular centroid Z = integral of e^{i phi} |psi|^2"""
    return complex(psi.spacing * np.sum(np.exp(1j * psi.grid) * psi.density))


def measure(psi: RingWavefunction, alpha: float, coupling: float) -> Observables:
    modes = psi.modes()
    grid_size = psi.grid_size
    density = psi.density
    norm_sq = psi.integrate(density)
    quartic = psi.integrate(density ** 2)
    kinetic = _kinetic_energy(modes, alpha)
    angular = 2.0 * math.pi * float(np.sum(wavenumbers(grid_size) * np.abs(modes) ** 2)) / grid_size ** 2
    z = centroid(psi)
    return Observables(
        norm=math.sqrt(norm_sq),
        energy=kinetic - 0.5 * coupling * quartic,
        chem_potential=kinetic - coupling * quartic,
        current=angular - alpha * norm_sq,
        centroid_angle=math.atan2(z.imag, z.real),
        centroid_magnitude=abs(z),
    )


def eigen_residual(
    psi: RingWavefunction,
    alpha: float,
    coupling: float,
    chem_potential: Optional[float] = None,
) -> float:
    """Sup norm of H psi - mu psi; mu defaults to the Rayleigh quotient"""
    if chem_potential is None:
        chem_potential = _chem_potential(psi.modes(), alpha, coupling) / psi.norm ** 2
    h_psi = apply_hamiltonian(psi, alpha, coupling)
    return float(np.max(np.abs(h_psi.samples - chem_potential * psi.samples)))


# State construction
def gauge_transform(psi: RingWavefunction, k: int) -> RingWavefunction:
    """G_k on sampled states: multiply by e^{ik phi}"""
    k = _require_integer(k, "k")
    return RingWavefunction(np.exp(1j * k * psi.grid) * psi.samples)


def default_seed_descriptor(coupling: float) -> str:
    """Above pi/2 the uniform state is a saddle, so relaxation starts from a perturbed one"""
    return "uniform+0.01cos" if coupling > CRITICAL_COUPLING else "uniform"


def make_seed(descriptor: str, grid_size: int, coupling: Optional[float] = None) -> RingWavefunction:
    """
    Normalized initial state from a seed descriptor

    Args:
        descriptor: one of "uniform", "uniform+<eps>cos", "plane:<l>",
            "random:<int>", "soliton" or "soliton:<offset>"
        grid_size: number of grid points
        coupling: lambda, needed by the soliton seed

    Returns:
        RingWavefunction with unit norm
    """
    phi = ring_grid(check_grid_size(grid_size))

    for kind, pattern in _SEED_PATTERNS.items():
        match = pattern.match(descriptor.strip())
        if not match:
            continue
        if kind == "uniform":
            samples = np.ones(grid_size, dtype=complex)
        elif kind == "perturbed":
            samples = (1.0 + float(match.group("eps")) * np.cos(phi)).astype(complex)
        elif kind == "plane":
            samples = np.exp(1j * int(match.group("l")) * phi)
        elif kind == "random":
            # band-limited so no energy sits near the Nyquist mode
            rng = np.random.default_rng(int(match.group("seed")))
            coefficients = np.zeros(grid_size, dtype=complex)
            band = np.abs(wavenumbers(grid_size)) <= grid_size // 8
            coefficients[band] = rng.normal(size=band.sum()) + 1j * rng.normal(size=band.sum())
            samples = fft.ifft(coefficients)
        else:
            if coupling is None:
                raise ValueError("the soliton seed needs a coupling")
            offset = float(match.group("offset") or 0.0)
            samples = sample_profile(solve_soliton_branch(coupling, offset=offset), grid_size).samples
        return RingWavefunction(samples).normalized()

    raise ValueError(f"unknown seed descriptor: {descriptor!r}")


# Evolution
def step_real(psi: RingWavefunction, cfg: EvolutionConfig) -> RingWavefunction:
    """One Strang step of real-time evolution"""
    if cfg.mode != EvolutionMode.REAL_TIME:
        raise ValueError("step_real needs a real_time configuration")
    cfg.check_grid(psi.grid_size)
    return propagator_factory.get(cfg.mode).step(psi, cfg)


def evolve(
    psi: RingWavefunction,
    cfg: EvolutionConfig,
    snapshot_every: Optional[int] = None,
) -> List[Snapshot]:
    """
    Run cfg.steps steps of the configured propagator

    Returns:
        (t, psi) pairs at t = 0, every snapshot_every steps and at the end
    """
    cfg.check_grid(psi.grid_size)
    propagator = propagator_factory.get(cfg.mode)
    every = snapshot_every or cfg.steps
    if every <= 0:
        raise ValueError("snapshot_every must be positive")

    snapshots: List[Snapshot] = [(0.0, psi)]
    modes = psi.modes()
    done = 0
    while done < cfg.steps:
        chunk = min(every, cfg.steps - done)
        modes = propagator.advance(modes, cfg, chunk)
        done += chunk
        snapshots.append((done * cfg.dt, RingWavefunction(fft.ifft(modes))))
    logger.debug(f"Evolved {cfg.steps} {cfg.mode.value} steps, {len(snapshots)} snapshots")
    return snapshots


def relax_ground_state(
    psi0: RingWavefunction,
    cfg: EvolutionConfig,
    tol: Optional[float] = None,
) -> Tuple[RingWavefunction, Observables]:
    """
    Imaginary-time relaxation to the lowest state reachable from psi0

    Stops once the chemical potential changes by less than tol in one step;
    cfg.steps caps the number of steps. The converged state is then passed
    through polish_stationary_state.

    Raises:
        NoConvergenceError: step cap reached first
    """
    if cfg.mode != EvolutionMode.IMAGINARY_TIME:
        raise ValueError("relax_ground_state needs an imaginary_time configuration")
    if tol is None:
        tol = settings.TOL
    if tol <= 0:
        raise ValueError("tol must be positive")
    cfg.check_grid(psi0.grid_size)

    propagator = propagator_factory.get(cfg.mode)
    modes = psi0.normalized().modes()
    mu = _chem_potential(modes, cfg.alpha, cfg.coupling)
    delta = math.inf
    for step in range(1, cfg.steps + 1):
        modes = propagator.advance(modes, cfg, 1)
        next_mu = _chem_potential(modes, cfg.alpha, cfg.coupling)
        delta = abs(next_mu - mu)
        mu = next_mu
        if delta < tol:
            psi, residual = polish_stationary_state(RingWavefunction(fft.ifft(modes)), cfg.alpha, cfg.coupling)
            observables = measure(psi, cfg.alpha, cfg.coupling)
            logger.info(
                f"Relaxation converged after {step} steps "
                f"(lambda={cfg.coupling}, alpha={cfg.alpha}, mu={observables.chem_potential:.15g}, "
                f"residual={residual:.3e})"
            )
            return psi, observables
        if step % 20000 == 0:
            logger.debug(f"relaxation step {step}: mu={mu:.15g}, |delta mu|={delta:.3e}")

    logger.warning(f"Relaxation hit the step cap {cfg.steps} with |delta mu|={delta:.3e}")
    raise NoConvergenceError(cfg.steps, delta, mu, tol)


def polish_stationary_state(
    psi: RingWavefunction,
    alpha: float,
    coupling: float,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> Tuple[RingWavefunction, float]:
    """
    Drive a nearly stationary state onto an exact stationary state of the grid equation

    Preconditioned residual iteration psi <- psi - (c + T)^{-1} (H psi - mu psi)
    followed by renormalization, with mu the Rayleigh quotient and
    c = max(-mu, 0) + 1/2. Its fixed points have zero residual, so the
    time-step bias of the split-step relaxation drops out. The step is halved
    whenever the residual grows past twice the best one seen.

    Args:
        psi: state to polish, typically the output of imaginary-time relaxation
        alpha: flux
        coupling: lambda
        tol: target sup norm of H psi - mu psi (default settings.POLISH_TOL)
        max_iter: iteration cap (default settings.POLISH_MAX_ITER)

    Returns:
        (state, sup norm of its residual); at the cap the state with the
        smallest residual seen
    """
    tol = settings.POLISH_TOL if tol is None else tol
    max_iter = settings.POLISH_MAX_ITER if max_iter is None else max_iter
    if tol <= 0:
        raise ValueError("tol must be positive")

    kinetic = kinetic_symbol(psi.grid_size, alpha)
    spacing = psi.spacing
    samples = psi.normalized().samples
    best, best_residual = samples, math.inf
    step = 1.0
    for iteration in range(max_iter + 1):
        h_psi = fft.ifft(kinetic * fft.fft(samples)) - coupling * np.abs(samples) ** 2 * samples
        mu = spacing * float(np.real(np.vdot(samples, h_psi)))
        residual = h_psi - mu * samples
        worst = float(np.max(np.abs(residual)))
        if worst < best_residual:
            best, best_residual = samples, worst
        elif worst > 2.0 * best_residual:
            # overshoot: retry from the best state with half the step
            samples, step = best, 0.5 * step
            continue
        if worst < tol:
            logger.debug(f"Polish reached residual {worst:.3e} after {iteration} iterations")
            break
        shift = max(-mu, 0.0) + 0.5
        samples = samples - step * fft.ifft(fft.fft(residual) / (kinetic + shift))
        samples = samples / math.sqrt(spacing * float(np.sum(np.abs(samples) ** 2)))
    else:
        logger.warning(f"Polish stopped at the cap {max_iter} with residual {best_residual:.3e}")
    return RingWavefunction(best), best_residual


# Moving lumps
def boost_levels(alpha: float, tie_tol: Optional[float] = None) -> List[int]:
    """Integer(s) l minimizing |l + alpha|; two at half odd integer alpha"""
    return ground_level(-alpha, tie_tol).levels


def boost_energy(energy: float, l: int, alpha: float) -> float:
    """Energy of the boosted state built from a unit-norm state of energy E0"""
    return energy + 0.5 * (l + alpha) ** 2


def boost(psi_tilde: RingWavefunction, l: int, alpha: float, t: float, e0: float) -> RingWavefunction:
    """
    e^{-il phi} e^{-i(e0 + s^2/2) t} psi_tilde(phi + s t) with s = l + alpha.

    psi_tilde must be a stationary alpha = 0 state with chemical potential
    e0. The translation is applied exactly in mode space.
    """
    l = _require_integer(l, "l")
    speed = l + alpha
    shifted = fft.ifft(psi_tilde.modes() * np.exp(1j * wavenumbers(psi_tilde.grid_size) * speed * t))
    phase = np.exp(-1j * (e0 + 0.5 * speed ** 2) * t)
    return RingWavefunction(np.exp(-1j * l * psi_tilde.grid) * phase * shifted)


def boost_residual(
    psi_tilde: RingWavefunction,
    l: int,
    alpha: float,
    coupling: float,
    e0: float,
    t: float = 0.0,
    h: float = 1e-4,
) -> float:
    """Sup norm of i psi_t - H psi for the boosted state, central difference in t"""
    forward = boost(psi_tilde, l, alpha, t + h, e0).samples
    backward = boost(psi_tilde, l, alpha, t - h, e0).samples
    current = boost(psi_tilde, l, alpha, t, e0)
    time_derivative = 1j * (forward - backward) / (2.0 * h)
    return float(np.max(np.abs(time_derivative - apply_hamiltonian(current, alpha, coupling).samples)))


def track_moving_lump(
    psi_tilde: RingWavefunction,
    l: int,
    alpha: float,
    coupling: float,
    e0: float,
    dt: float,
    steps: int,
    snapshot_every: int,
) -> List[Snapshot]:
    """Boost a flux-free lump into level l and follow it in real time under flux alpha"""
    cfg = EvolutionConfig(dt=dt, steps=steps, alpha=alpha, coupling=coupling, mode=EvolutionMode.REAL_TIME)
    start = boost(psi_tilde, l, alpha, 0.0, e0)
    return evolve(start, cfg, snapshot_every)


def fit_drift(snapshots: Sequence[Snapshot], min_magnitude: float = LUMP_THRESHOLD) -> DriftFit:
    """
    Angular velocity of the lump from a linear fit of its unwrapped centroid angle

    Raises:
        NoLumpError: fewer than 3 snapshots or a centroid magnitude below threshold
    """
    if len(snapshots) < 3:
        raise NoLumpError(f"drift needs at least 3 snapshots, got {len(snapshots)}")
    times = np.array([t for t, _ in snapshots], dtype=float)
    centroids = np.array([centroid(psi) for _, psi in snapshots])
    magnitudes = np.abs(centroids)
    weakest = float(magnitudes.min())
    if weakest < min_magnitude:
        raise NoLumpError(
            f"centroid magnitude {weakest:.3e} is below {min_magnitude}: no discernible lump",
            min_magnitude=weakest,
        )
    angles = np.unwrap(np.angle(centroids))
    rate, intercept = np.polyfit(times, angles, 1)
    residuals = angles - (rate * times + intercept)
    return DriftFit(
        rate=float(rate),
        intercept=float(intercept),
        rms_residual=float(np.sqrt(np.mean(residuals ** 2))),
        samples=len(snapshots),
    )


def drift_rate(snapshots: Sequence[Snapshot]) -> float:
    return fit_drift(snapshots).rate


def align_to_profile(psi: RingWavefunction, solution: StationarySolution) -> ProfileAlignment:
    """
    Place the analytic profile on the lump of psi and match the global phase

    The offset is minus the centroid angle of psi; the phase is the argument
    of the overlap. distance is the L2 distance after both are applied.
    """
    z = centroid(psi)
    offset = -math.atan2(z.imag, z.real) if abs(z) > 0.0 else 0.0
    reference = sample_profile(solution.with_offset(offset), psi.grid_size)
    overlap = complex(np.vdot(reference.samples, psi.samples))
    phase = math.atan2(overlap.imag, overlap.real) if abs(overlap) > 0.0 else 0.0
    difference = psi.samples * np.exp(-1j * phase) - reference.samples
    distance = math.sqrt(psi.integrate(np.abs(difference) ** 2))
    return ProfileAlignment(offset=offset, phase=phase, distance=distance)


# Snapshot files
def write_snapshot(
    path: str,
    psi: RingWavefunction,
    t: float,
    alpha: float,
    coupling: float,
    dt: Optional[float] = None,
    config: Optional[Dict[str, Any]] = None,
) -> Dict[str, str]:
    """
    Write "phi re im" lines plus a JSON sidecar with the state's observables

    Returns:
        Dict with the snapshot and sidecar paths
    """
    lines = [
        f"{phi:.16e} {value.real:.16e} {value.imag:.16e}"
        for phi, value in zip(psi.grid, psi.samples)
    ]
    observables = measure(psi, alpha, coupling)
    metadata = {
        "N": psi.grid_size,
        "alpha": alpha,
        "lambda": coupling,
        "dt": dt,
        "t": t,
        "norm": observables.norm,
        "energy": observables.energy,
        "chem_potential": observables.chem_potential,
        "centroid_angle": observables.centroid_angle,
    }
    if config is not None:
        metadata["config"] = config
    return {
        "snapshot": atomic_write_text(path, "\n".join(lines) + "\n"),
        "sidecar": write_json(sidecar_path(path), metadata),
    }


def read_snapshot(path: str) -> Tuple[RingWavefunction, Dict[str, Any]]:
    """Load a snapshot file and, when present, its sidecar"""
    table = np.loadtxt(path, ndmin=2)
    if table.shape[1] != 3:
        raise ValueError(f"{path}: expected 'phi re im' columns, got {table.shape[1]}")
    psi = RingWavefunction(table[:, 1] + 1j * table[:, 2])
    if not np.allclose(table[:, 0], psi.grid, rtol=0.0, atol=1e-12):
        raise GridError(f"{path}: angles do not form the uniform ring grid")
    metadata = read_json(sidecar_path(path)) if os.path.exists(sidecar_path(path)) else {}
    return psi, metadata
