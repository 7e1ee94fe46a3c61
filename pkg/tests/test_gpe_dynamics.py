import math

import numpy as np
import pytest
from scipy import fft

from ringlab.exceptions import GridError, NoConvergenceError, NoLumpError
from ringlab.gpe_dynamics import (
    align_to_profile,
    apply_hamiltonian,
    boost,
    boost_energy,
    boost_levels,
    boost_residual,
    drift_rate,
    eigen_residual,
    evolve,
    fit_drift,
    gauge_transform,
    make_seed,
    measure,
    polish_stationary_state,
    read_snapshot,
    relax_ground_state,
    step_real,
    track_moving_lump,
    write_snapshot,
)
from ringlab.propagators.base import BasePropagator, kinetic_symbol
from ringlab.propagators.factory import PropagatorFactory, propagator_factory
from ringlab.propagators.imaginary_time import ImaginaryTimePropagator
from ringlab.propagators.real_time import RealTimePropagator
from ringlab.schemas import EvolutionConfig, EvolutionMode
from ringlab.soliton_analytic import profile_values, sample_profile, solve_soliton_branch
from ringlab.wavefunction import RingWavefunction, wavenumbers


def real_time(dt: float, steps: int, alpha: float = 0.0, coupling: float = 0.0) -> EvolutionConfig:
    return EvolutionConfig(dt=dt, steps=steps, alpha=alpha, coupling=coupling, mode=EvolutionMode.REAL_TIME)


def imaginary_time(dt: float, steps: int, alpha: float = 0.0, coupling: float = 0.0) -> EvolutionConfig:
    return EvolutionConfig(dt=dt, steps=steps, alpha=alpha, coupling=coupling, mode=EvolutionMode.IMAGINARY_TIME)


class TestWavefunction:
    """Test the sampled wavefunction container"""

    def test_rejects_bad_grids(self):
        """Test sizes that are not powers of two >= 16 are refused"""
        with pytest.raises(GridError):
            RingWavefunction(np.ones(8))
        with pytest.raises(GridError):
            RingWavefunction(np.ones(48))
        with pytest.raises(GridError):
            RingWavefunction(np.ones((16, 2)))

    def test_samples_read_only(self):
        """Test the samples cannot be modified in place"""
        psi = RingWavefunction(np.ones(16))
        with pytest.raises(ValueError):
            psi.samples[0] = 2.0

    def test_modes_round_trip(self, perturbed_soliton):
        """Test from_modes inverts modes"""
        rebuilt = RingWavefunction.from_modes(perturbed_soliton.modes())
        assert np.allclose(rebuilt.samples, perturbed_soliton.samples, rtol=0, atol=1e-14)


class TestSeeds:
    """Test initial states built from seed descriptors"""

    @pytest.mark.parametrize("descriptor", ["uniform", "uniform+0.01cos", "plane:3", "random:5", "soliton", "soliton:0.5"])
    def test_seeds_normalized(self, descriptor):
        """Test every descriptor gives a unit-norm state"""
        assert make_seed(descriptor, 64, 3.0).norm == pytest.approx(1.0, abs=1e-13)

    def test_random_seed_reproducible(self):
        """Test the same integer seed gives the same state"""
        first = make_seed("random:42", 64).samples
        second = make_seed("random:42", 64).samples
        assert np.array_equal(first, second)

    def test_plane_seed(self, plane_wave):
        """Test plane:l is the normalized plane wave"""
        assert np.allclose(make_seed("plane:-2", 64).samples, plane_wave(-2).samples, rtol=0, atol=1e-14)

    def test_invalid_descriptors(self):
        """Test unknown descriptors, missing coupling and bad grids"""
        with pytest.raises(ValueError):
            make_seed("gaussian", 64)
        with pytest.raises(ValueError):
            make_seed("soliton", 64)
        with pytest.raises(GridError):
            make_seed("uniform", 100)


class TestHamiltonian:
    """Test the spectral Hamiltonian and observables"""

    def test_plane_wave_eigenstate(self, plane_wave):
        """Test H e^{il phi} = ((l - alpha)^2/2 - lambda/(2 pi)) e^{il phi}"""
        for l, alpha, coupling in ((0, 0.0, 1.0), (2, 0.3, 1.0), (-3, 2.5, 4.0)):
            psi = plane_wave(l)
            expected = (0.5 * (l - alpha) ** 2 - coupling / (2 * math.pi)) * psi.samples
            assert np.allclose(apply_hamiltonian(psi, alpha, coupling).samples, expected, rtol=0, atol=1e-12)

    def test_measure_plane_wave(self, plane_wave):
        """Test observables of a plane wave at flux 0.3"""
        obs = measure(plane_wave(2), 0.3, 1.0)
        assert obs.norm == pytest.approx(1.0, abs=1e-14)
        assert obs.energy == pytest.approx(0.5 * 1.7 ** 2 - 1 / (4 * math.pi), abs=1e-12)
        assert obs.chem_potential == pytest.approx(0.5 * 1.7 ** 2 - 1 / (2 * math.pi), abs=1e-12)
        assert obs.current == pytest.approx(1.7, abs=1e-12)
        assert obs.centroid_magnitude < 1e-14

    def test_eigen_residual_of_plane_wave(self, plane_wave):
        """Test the Rayleigh-quotient residual vanishes on an eigenstate"""
        assert eigen_residual(plane_wave(1), 0.4, 2.0) < 1e-12

    def test_kinetic_symbol(self):
        """Test (l - alpha)^2 / 2 in FFT order"""
        symbol = kinetic_symbol(16, 0.5)
        assert symbol[0] == pytest.approx(0.125)
        assert symbol[1] == pytest.approx(0.125)
        assert symbol[8] == pytest.approx(0.5 * 8.5 ** 2)


class TestRealTimeEvolution:
    """Test the split-step real-time propagator"""

    def test_step_plane_wave(self, plane_wave):
        """Test one step rotates a plane wave by its eigenvalue"""
        psi = plane_wave(2)
        cfg = real_time(0.01, 1, alpha=0.3, coupling=1.0)
        energy = 0.5 * 1.7 ** 2 - 1 / (2 * math.pi)
        expected = psi.samples * np.exp(-1j * energy * 0.01)
        assert np.allclose(step_real(psi, cfg).samples, expected, rtol=0, atol=1e-12)

    def test_step_real_rejects_imaginary_config(self, plane_wave):
        """Test step_real refuses an imaginary-time configuration"""
        with pytest.raises(ValueError):
            step_real(plane_wave(0), imaginary_time(0.01, 1))

    def test_norm_conserved(self):
        """Test unitarity over 10^4 steps"""
        psi = make_seed("random:7", 64)
        final = evolve(psi, real_time(1e-3, 10000, alpha=0.3, coupling=3.0))[-1][1]
        assert abs(final.norm - psi.norm) < 1e-12

    def test_linear_oracle(self):
        """Test lambda = 0 matches the exact modal phases"""
        psi = make_seed("random:11", 64)
        t = 0.5
        final = evolve(psi, real_time(1e-3, 500, alpha=0.3))[-1][1]
        exact = fft.ifft(psi.modes() * np.exp(-1j * kinetic_symbol(64, 0.3) * t))
        assert np.allclose(final.samples, exact, rtol=0, atol=1e-10)

    def test_analytic_soliton_stationary(self, soliton_three):
        """Test |psi| of the analytic soliton is preserved up to t = 10"""
        psi = sample_profile(soliton_three, 256)
        final = evolve(psi, real_time(1e-3, 10000, coupling=3.0))[-1][1]
        assert np.max(np.abs(np.abs(final.samples) - np.abs(psi.samples))) < 1e-6
        assert abs(final.norm - psi.norm) < 1e-12

    def test_snapshot_times(self, plane_wave):
        """Test snapshots at t = 0, every k steps and at the end"""
        snapshots = evolve(plane_wave(0), real_time(0.01, 25, coupling=1.0), snapshot_every=10)
        times = [t for t, _ in snapshots]
        assert times == pytest.approx([0.0, 0.1, 0.2, 0.25])

    def test_rejects_unstable_step(self, plane_wave):
        """Test a kinetic phase above the limit is refused"""
        with pytest.raises(ValueError):
            evolve(plane_wave(0, 1024), real_time(0.1, 1))

    def test_gauge_covariance(self, perturbed_soliton):
        """Test evolving G_k psi at alpha + k equals G_k of psi evolved at alpha"""
        k, alpha = 1, 0.3
        direct = evolve(perturbed_soliton, real_time(1e-3, 200, alpha=alpha, coupling=3.0))[-1][1]
        shifted = evolve(gauge_transform(perturbed_soliton, k), real_time(1e-3, 200, alpha=alpha + k, coupling=3.0))[-1][1]
        assert np.allclose(shifted.samples, gauge_transform(direct, k).samples, rtol=0, atol=1e-10)

    def test_gauge_transform_needs_integer(self, perturbed_soliton):
        """Test non-integer gauge shifts are refused"""
        with pytest.raises(ValueError):
            gauge_transform(perturbed_soliton, 0.5)


class TestRelaxation:
    """Test imaginary-time relaxation"""

    def test_matches_analytic_soliton(self, fine_relaxed_lump, soliton_three):
        """Test the relaxed lump at lambda = 3 reproduces the dn profile and mu"""
        psi, obs = fine_relaxed_lump
        alignment = align_to_profile(psi, soliton_three)
        assert alignment.distance < 1e-6
        assert abs(obs.chem_potential - soliton_three.chem_potential) < 1e-6
        assert eigen_residual(psi, 0.0, 3.0) < 1e-9
        assert obs.norm == pytest.approx(1.0, abs=1e-12)

    def test_accuracy_independent_of_step(self, soliton_three):
        """Test relaxed mu does not depend on dtau once the state is polished"""
        gaps = []
        for dt in (4e-3, 2e-3):
            _, obs = relax_ground_state(make_seed("uniform+0.01cos", 64, 3.0), imaginary_time(dt, 400000, coupling=3.0), 1e-11)
            gaps.append(abs(obs.chem_potential - soliton_three.chem_potential))
        assert max(gaps) < 1e-8

    def test_below_critical_relaxes_to_uniform(self):
        """Test lambda = 1 relaxes a random state onto the constant density"""
        psi, obs = relax_ground_state(make_seed("random:3", 64), imaginary_time(2e-3, 400000, coupling=1.0), 1e-12)
        assert np.max(np.abs(psi.density - 1 / (2 * math.pi))) < 1e-3
        assert obs.chem_potential == pytest.approx(-1 / (2 * math.pi), abs=1e-8)

    def test_free_particle_at_flux(self):
        """Test lambda = 0 keeps the uniform seed with energy (0 - 0.3)^2 / 2"""
        _, obs = relax_ground_state(make_seed("uniform", 64), imaginary_time(1e-3, 100, alpha=0.3), 1e-12)
        assert obs.energy == pytest.approx(0.045, abs=1e-14)
        assert obs.current == pytest.approx(-0.3, abs=1e-14)

    def test_step_cap(self):
        """Test hitting the step cap raises with the last delta mu"""
        with pytest.raises(NoConvergenceError) as excinfo:
            relax_ground_state(make_seed("uniform+0.01cos", 64), imaginary_time(2e-3, 5, coupling=3.0), 1e-12)
        assert excinfo.value.steps == 5
        assert excinfo.value.last_delta_mu > 1e-12

    def test_requires_imaginary_time(self, plane_wave):
        """Test a real-time configuration is refused"""
        with pytest.raises(ValueError):
            relax_ground_state(plane_wave(0), real_time(1e-3, 10, coupling=1.0))

    def test_relaxing_at_flux_lowers_energy(self, relaxed_lump):
        """Test relaxation at alpha = 0.3 undercuts the boosted lump"""
        _, rest = relaxed_lump
        cfg = imaginary_time(2e-3, 400000, alpha=0.3, coupling=3.0)
        _, obs = relax_ground_state(make_seed("soliton", 64, 3.0), cfg, 1e-8)
        assert obs.energy < boost_energy(rest.energy, 0, 0.3) - 0.02


class TestPolish:
    """Test the preconditioned polish of nearly stationary states"""

    def test_recovers_analytic_soliton(self, soliton_three):
        """Test a slightly deformed lump is driven onto the dn profile"""
        profile = sample_profile(soliton_three, 64)
        start = RingWavefunction(profile.samples * (1.0 + 1e-3 * np.cos(profile.grid)))
        psi, residual = polish_stationary_state(start, 0.0, 3.0)
        assert residual < 1e-10
        assert align_to_profile(psi, soliton_three).distance < 1e-8
        assert measure(psi, 0.0, 3.0).chem_potential == pytest.approx(soliton_three.chem_potential, abs=1e-9)
        assert psi.norm == pytest.approx(1.0, abs=1e-13)

    def test_plane_wave_untouched(self, plane_wave):
        """Test an exact eigenstate comes back unchanged"""
        psi = plane_wave(1)
        polished, residual = polish_stationary_state(psi, 0.4, 2.0)
        assert residual < 1e-12
        assert np.allclose(polished.samples, psi.samples, rtol=0, atol=1e-14)

    def test_cap_keeps_input(self, perturbed_soliton):
        """Test a zero iteration cap returns the input and its residual"""
        psi, residual = polish_stationary_state(perturbed_soliton, 0.0, 3.0, max_iter=0)
        assert np.allclose(psi.samples, perturbed_soliton.samples, rtol=0, atol=1e-14)
        assert residual == pytest.approx(eigen_residual(perturbed_soliton, 0.0, 3.0), rel=1e-9)

    def test_rejects_bad_tolerance(self, perturbed_soliton):
        """Test a non-positive tolerance is refused"""
        with pytest.raises(ValueError):
            polish_stationary_state(perturbed_soliton, 0.0, 3.0, tol=0.0)


class TestBoost:
    """Test the moving-lump construction"""

    def test_boost_levels(self):
        """Test the winding minimizing |l + alpha|"""
        assert boost_levels(0.3) == [0]
        assert boost_levels(0.7) == [-1]
        assert boost_levels(-1.2) == [1]
        assert boost_levels(0.5) == [-1, 0]

    def test_boost_energy(self):
        """Test E0 + (l + alpha)^2 / 2"""
        assert boost_energy(-1.0, 0, 0.3) == pytest.approx(-0.955)
        assert boost_energy(-1.0, -1, 0.5) == pytest.approx(-0.875)

    def test_boost_at_zero_time(self, soliton_three):
        """Test at t = 0 the boost only winds the phase"""
        psi = sample_profile(soliton_three, 64)
        boosted = boost(psi, 2, 0.3, 0.0, soliton_three.chem_potential)
        assert np.allclose(boosted.samples, np.exp(-2j * psi.grid) * psi.samples, rtol=0, atol=1e-14)

    def test_boost_translates_profile(self, soliton_three):
        """Test the envelope is the profile shifted by (l + alpha) t"""
        l, alpha = 1, 0.3
        t = 0.3 / (l + alpha)
        psi = sample_profile(soliton_three, 256)
        e0 = soliton_three.chem_potential
        boosted = boost(psi, l, alpha, t, e0)
        envelope = boosted.samples * np.exp(1j * l * psi.grid) * np.exp(1j * (e0 + 0.5 * (l + alpha) ** 2) * t)
        assert np.allclose(envelope, profile_values(soliton_three, psi.grid + 0.3), rtol=0, atol=1e-8)

    def test_boosted_state_solves_equation(self, soliton_three):
        """Test the boosted analytic soliton satisfies the flux equation"""
        psi = sample_profile(soliton_three, 256)
        for l in (0, 1, -2):
            for t in (0.0, 0.7):
                residual = boost_residual(psi, l, 0.3, 3.0, soliton_three.chem_potential, t=t)
                assert residual < 1e-6

    def test_boosted_degenerate_level_solves_equation(self, soliton_three):
        """Test l = -1 at alpha = 0.5 satisfies the flux equation"""
        psi = sample_profile(soliton_three, 256)
        for t in (0.0, 0.7):
            assert boost_residual(psi, -1, 0.5, 3.0, soliton_three.chem_potential, t=t) < 1e-6

    def test_boost_needs_integer_level(self, soliton_three):
        """Test the winding must be an integer"""
        with pytest.raises(ValueError):
            boost(sample_profile(soliton_three, 64), 0.5, 0.0, 0.0, soliton_three.chem_potential)


class TestDrift:
    """Test drift-rate measurement on moving lumps"""

    def _drift(self, lump, l, alpha):
        psi, rest = lump
        snapshots = track_moving_lump(psi, l, alpha, 3.0, rest.chem_potential, 1e-3, 10000, 100)
        return fit_drift(snapshots)

    def test_drift_matches_winding(self, relaxed_lump):
        """Test drift -(l + alpha) at alpha = 0.3"""
        fit = self._drift(relaxed_lump, 0, 0.3)
        assert fit.rate == pytest.approx(-0.3, abs=1e-3)
        assert fit.samples == 101

    def test_drift_rate_is_fitted_slope(self, relaxed_lump):
        """Test drift_rate returns the slope of the centroid fit"""
        psi, rest = relaxed_lump
        snapshots = track_moving_lump(psi, 1, 0.3, 3.0, rest.chem_potential, 1e-3, 2000, 100)
        assert drift_rate(snapshots) == fit_drift(snapshots).rate
        assert drift_rate(snapshots) == pytest.approx(-1.3, abs=1e-3)

    def test_degenerate_pair_moves_oppositely(self, relaxed_lump):
        """Test at alpha = 0.5 the two windings drift at +0.5 and -0.5"""
        assert self._drift(relaxed_lump, -1, 0.5).rate == pytest.approx(0.5, abs=1e-3)
        assert self._drift(relaxed_lump, 0, 0.5).rate == pytest.approx(-0.5, abs=1e-3)

    def test_lump_at_rest_without_flux(self, relaxed_lump):
        """Test alpha = 0 leaves the lump in place"""
        assert abs(self._drift(relaxed_lump, 0, 0.0).rate) < 1e-6

    def test_no_lump_in_uniform_state(self):
        """Test a uniform state has no centroid to track"""
        snapshots = evolve(make_seed("uniform", 64), real_time(1e-3, 30, coupling=1.0), snapshot_every=10)
        with pytest.raises(NoLumpError) as excinfo:
            fit_drift(snapshots)
        assert excinfo.value.min_magnitude < 1e-10

    def test_too_few_snapshots(self, relaxed_lump):
        """Test two snapshots are not enough for a fit"""
        psi, _ = relaxed_lump
        with pytest.raises(NoLumpError):
            fit_drift([(0.0, psi), (1.0, psi)])


class TestProfileAlignment:
    """Test placing the analytic profile onto a sampled lump"""

    def test_recovers_offset_and_phase(self, soliton_three):
        """Test a rotated and phased profile is matched exactly"""
        psi = RingWavefunction(sample_profile(soliton_three.with_offset(0.7), 128).samples * np.exp(0.4j))
        alignment = align_to_profile(psi, soliton_three)
        assert alignment.offset == pytest.approx(0.7, abs=1e-10)
        assert alignment.phase == pytest.approx(0.4, abs=1e-10)
        assert alignment.distance < 1e-10


class TestSnapshots:
    """Test snapshot files and their sidecars"""

    def test_write_and_read(self, tmp_path, perturbed_soliton):
        """Test samples and metadata survive a write and read"""
        path = str(tmp_path / "out" / "snap_0001.dat")
        written = write_snapshot(path, perturbed_soliton, 0.5, 0.3, 3.0, dt=1e-3, config={"seed": "soliton"})
        assert written["sidecar"] == path + ".json"

        psi, metadata = read_snapshot(path)
        assert np.allclose(psi.samples, perturbed_soliton.samples, rtol=1e-15, atol=0)
        assert metadata["N"] == 64
        assert metadata["alpha"] == 0.3
        assert metadata["lambda"] == 3.0
        assert metadata["t"] == 0.5
        assert metadata["config"] == {"seed": "soliton"}
        assert metadata["norm"] == pytest.approx(1.0, abs=1e-12)

    def test_line_format(self, tmp_path, plane_wave):
        """Test one 'phi re im' line per grid point"""
        path = str(tmp_path / "snap.dat")
        write_snapshot(path, plane_wave(1, 16), 0.0, 0.0, 1.0)
        with open(path) as handle:
            lines = handle.read().splitlines()
        assert len(lines) == 16
        assert lines[0].split()[0] == f"{0.0:.16e}"
        assert len(lines[5].split()) == 3

    def test_rejects_non_uniform_angles(self, tmp_path):
        """Test a file whose angles are not the ring grid is refused"""
        path = tmp_path / "bad.dat"
        path.write_text("".join(f"{0.1 * j:.16e} 1.0 0.0\n" for j in range(16)))
        with pytest.raises(GridError):
            read_snapshot(str(path))

    def test_missing_sidecar(self, tmp_path, plane_wave):
        """Test a snapshot without sidecar reads with empty metadata"""
        psi = plane_wave(0, 16)
        path = tmp_path / "plain.dat"
        path.write_text("".join(f"{phi:.16e} {v.real:.16e} {v.imag:.16e}\n" for phi, v in zip(psi.grid, psi.samples)))
        _, metadata = read_snapshot(str(path))
        assert metadata == {}


class TestPropagatorFactory:
    """Test the propagator registry"""

    def test_global_factory_modes(self):
        """Test both evolution modes are served by the built-in propagators"""
        assert isinstance(propagator_factory.get(EvolutionMode.REAL_TIME), RealTimePropagator)
        assert isinstance(propagator_factory.get(EvolutionMode.IMAGINARY_TIME), ImaginaryTimePropagator)

    def test_priority_registration(self):
        """Test priority 0 puts a propagator ahead of the built-in one"""

        class FrozenPropagator(BasePropagator):
            mode = EvolutionMode.REAL_TIME

            def advance(self, modes, cfg, steps):
                return np.array(modes)

        factory = PropagatorFactory()
        custom = FrozenPropagator()
        factory.add_propagator(custom, priority=0)
        assert factory.get(EvolutionMode.REAL_TIME) is custom

        fallback = PropagatorFactory()
        fallback.add_propagator(FrozenPropagator(), priority=1)
        assert isinstance(fallback.get(EvolutionMode.REAL_TIME), RealTimePropagator)

    def test_missing_mode(self):
        """Test an empty registry raises"""
        factory = PropagatorFactory()
        factory.propagators = []
        with pytest.raises(ValueError):
            factory.get(EvolutionMode.REAL_TIME)

    def test_run_zero_steps(self, plane_wave):
        """Test running no steps returns the input"""
        psi = plane_wave(1)
        assert RealTimePropagator().run(psi, real_time(1e-3, 1), 0) is psi

    def test_wavenumbers_fft_order(self):
        """Test integer modes in FFT order"""
        assert list(wavenumbers(16)[:3]) == [0, 1, 2]
        assert wavenumbers(16)[8] == -8
