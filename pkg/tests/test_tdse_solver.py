from __future__ import annotations

import math

import numpy as np
import pytest

from app.core.constants import SPEED_OF_LIGHT
from app.core.errors import HamiltonianError, SolverAbort
from app.services.analysis import momentum_spectrum, sideband_populations
from app.services.fields import FieldFrame, FieldProfile
from app.services.physics import kinetic_alpha
from app.services.tdse_solver import (
    Boundary,
    CrankNicolsonPropagator,
    EvolutionConfig,
    assemble_hamiltonian,
    cn_step,
    evolve,
    suggest_n_steps,
)
from app.services.wavepacket import (
    Grid,
    Wavepacket,
    WavepacketSpec,
    apply_chirp,
    as_momentum,
    free_gaussian_width,
    make_gaussian,
    moments,
    to_position,
)

from tests.oracles import dense_cayley_step, spectral_free_drift


@pytest.fixture
def small_grid() -> Grid:
    return Grid.centered(64e-9, 64)


@pytest.fixture
def small_state(small_grid, rng) -> np.ndarray:
    psi = rng.normal(size=64) + 1j * rng.normal(size=64)
    return psi / math.sqrt(np.vdot(psi, psi).real * small_grid.d_xi)


def test_symmetrized_hamiltonian_is_hermitian(small_grid, electron_100ev, laser_4nm) -> None:
    profile = FieldProfile.linear_gradient(-20e-9, 20e-9, 0.0, 2e8)
    h = assemble_hamiltonian(small_grid, electron_100ev, laser_4nm, profile).to_dense()
    np.testing.assert_allclose(h, h.conj().T, atol=1e-12 * np.abs(h).max())


def test_raw_stencil_differs_from_its_symmetrized_form(small_grid, electron_100ev, laser_4nm) -> None:
    profile = FieldProfile.uniform(1e8)
    raw = assemble_hamiltonian(small_grid, electron_100ev, laser_4nm, profile, symmetrize=False)
    sym = assemble_hamiltonian(small_grid, electron_100ev, laser_4nm, profile)
    assert not raw.symmetrized
    assert np.abs(raw.to_dense() - sym.to_dense()).max() > 0


def test_apply_matches_the_dense_matrix(small_grid, small_state, electron_100ev, laser_4nm) -> None:
    for boundary in Boundary:
        h = assemble_hamiltonian(
            small_grid, electron_100ev, laser_4nm, FieldProfile.uniform(1e8), boundary=boundary
        )
        dense = h.to_dense() @ small_state
        np.testing.assert_allclose(h.apply(small_state), dense, atol=1e-12 * np.abs(dense).max())


def test_dirichlet_cuts_the_wrap_around_bond(small_grid, electron_100ev, laser_4nm) -> None:
    h = assemble_hamiltonian(
        small_grid, electron_100ev, laser_4nm, FieldProfile.uniform(1e8), boundary=Boundary.dirichlet
    )
    dense = h.to_dense()
    assert dense[0, -1] == 0 and dense[-1, 0] == 0
    assert h.upper[-1] == 0 and h.lower[-1] == 0


def test_non_finite_coefficients_are_rejected(small_grid, electron_100ev, laser_4nm) -> None:
    with pytest.raises(HamiltonianError):
        assemble_hamiltonian(
            small_grid, electron_100ev, laser_4nm, FieldProfile.uniform(1e8), advection_beta=float("nan")
        )


def test_cn_step_matches_dense_cayley(small_grid, small_state, electron_100ev, laser_4nm) -> None:
    d_tau = 1e-6
    for boundary in Boundary:
        h = assemble_hamiltonian(
            small_grid, electron_100ev, laser_4nm, FieldProfile.uniform(1e8), boundary=boundary
        )
        fast = CrankNicolsonPropagator(h, d_tau).step(small_state)
        expected = dense_cayley_step(h, small_state, d_tau)
        np.testing.assert_allclose(fast, expected, atol=1e-10 * np.abs(expected).max())


def test_cn_step_conserves_the_norm(small_grid, small_state, electron_100ev, laser_4nm) -> None:
    wp = Wavepacket(small_grid, small_state)
    h = assemble_hamiltonian(small_grid, electron_100ev, laser_4nm, FieldProfile.uniform(1e8))
    stepped = wp
    for _ in range(50):
        stepped = cn_step(stepped, h, 1e-5)
    assert stepped.norm == pytest.approx(1.0, abs=1e-12)


def test_non_positive_time_step_is_rejected(small_grid, electron_100ev, laser_4nm) -> None:
    h = assemble_hamiltonian(small_grid, electron_100ev, laser_4nm, FieldProfile.uniform(0.0))
    with pytest.raises(HamiltonianError):
        CrankNicolsonPropagator(h, 0.0)


def test_evolution_config_is_validated() -> None:
    with pytest.raises(ValueError):
        EvolutionConfig(total_time=0.0)
    with pytest.raises(ValueError):
        EvolutionConfig(total_time=1e-12, n_steps=0)
    with pytest.raises(ValueError):
        EvolutionConfig(total_time=1e-12, observe_every=0)


def _free_packet(electron, laser, length=512e-9, n_points=4096, delta_k=0.1):
    grid = Grid.centered(length, n_points)
    return make_gaussian(grid, electron, laser, WavepacketSpec(delta_k=delta_k, dk_offset=0.0))


def test_free_propagation_spreads_like_a_gaussian(electron_100ev, laser_4nm) -> None:
    initial = _free_packet(electron_100ev, laser_4nm)
    total_time = 5.3e-4 / SPEED_OF_LIGHT
    config = EvolutionConfig(total_time=total_time, n_steps=500, snapshot_every=500)
    record = evolve(initial, electron_100ev, laser_4nm, FieldProfile.uniform(0.0), config)

    assert record.completed
    assert record.max_norm_drift < 1e-10
    sigma_k = 0.1 * laser_4nm.q
    expected = free_gaussian_width(1 / (2 * sigma_k), sigma_k, 5.3e-4, kinetic_alpha(electron_100ev))
    _, var = moments(record.final)
    assert math.sqrt(var) == pytest.approx(expected, rel=0.01)

    before = as_momentum(initial).density
    after = as_momentum(record.final).density
    assert np.abs(after - before).max() < 1e-9 * before.max()


def test_free_propagation_tracks_the_spectral_propagator(electron_100ev, laser_4nm) -> None:
    initial = _free_packet(electron_100ev, laser_4nm, delta_k=0.05)
    total_time = 2e-4 / SPEED_OF_LIGHT
    config = EvolutionConfig(total_time=total_time, n_steps=2000, snapshot_every=2000)
    record = evolve(initial, electron_100ev, laser_4nm, FieldProfile.uniform(0.0), config)
    reference = spectral_free_drift(initial, electron_100ev, total_time)
    error = np.abs(record.final.amplitudes - reference.amplitudes).max()
    assert error < 1e-3 * np.abs(reference.amplitudes).max()


def test_chirp_equals_field_free_drift(electron_100ev, laser_4nm) -> None:
    grid = Grid.centered(200e-9, 4096)
    initial = make_gaussian(grid, electron_100ev, laser_4nm, WavepacketSpec(delta_k=0.05, dk_offset=0.0))
    tau = 2.1e-4
    drift = tau * electron_100ev.beta
    chirped = to_position(apply_chirp(initial, drift, electron_100ev))

    config = EvolutionConfig(total_time=tau / SPEED_OF_LIGHT, n_steps=2000, snapshot_every=2000)
    record = evolve(initial, electron_100ev, laser_4nm, FieldProfile.uniform(0.0), config)
    overlap = np.vdot(record.final.amplitudes, chirped.amplitudes)
    aligned = record.final.amplitudes * np.exp(1j * np.angle(overlap))
    error = np.abs(aligned - chirped.amplitudes).max()
    assert error < 1e-3 * np.abs(chirped.amplitudes).max()


def test_unnormalized_state_aborts_with_a_partial_record(electron_100ev, laser_4nm) -> None:
    initial = _free_packet(electron_100ev, laser_4nm)
    inflated = initial.with_amplitudes(initial.amplitudes * 1.1)
    config = EvolutionConfig(total_time=1e-15, n_steps=10, snapshot_every=5)
    with pytest.raises(SolverAbort) as excinfo:
        evolve(inflated, electron_100ev, laser_4nm, FieldProfile.uniform(1e8), config)
    record = excinfo.value.record
    assert excinfo.value.exit_code == 2
    assert not record.completed
    assert record.norm_history.size == 2
    assert len(record.snapshots) == 2


def test_observers_and_snapshots_follow_their_cadence(electron_100ev, laser_4nm) -> None:
    initial = _free_packet(electron_100ev, laser_4nm)
    seen: list[float] = []
    config = EvolutionConfig(total_time=1e-15, n_steps=20, snapshot_every=8, observe_every=5)
    record = evolve(
        initial, electron_100ev, laser_4nm, FieldProfile.uniform(1e8), config,
        observers=[lambda t, wp: seen.append(t)],
    )
    # steps 0, 8, 16 and the final one
    assert len(record.snapshots) == 4
    assert record.times[-1] == pytest.approx(1e-15)
    # steps 0, 5, 10, 15, 20
    assert len(seen) == 5
    assert record.norm_history.size == 21


def test_lab_frame_gradient_evolves_with_a_moving_window(electron_100ev, laser_4nm) -> None:
    initial = _free_packet(electron_100ev, laser_4nm)
    profile = FieldProfile.linear_gradient(-100e-9, 100e-9, 0.0, 2e8, frame=FieldFrame.lab)
    config = EvolutionConfig(total_time=2e-15, n_steps=40, snapshot_every=40)
    record = evolve(initial, electron_100ev, laser_4nm, profile, config)
    assert record.max_norm_drift < 1e-10


def test_suggested_step_count_grows_with_time(electron_100ev, laser_4nm) -> None:
    initial = _free_packet(electron_100ev, laser_4nm)
    profile = FieldProfile.uniform(1e8)
    short = suggest_n_steps(initial, electron_100ev, laser_4nm, profile, 1e-13)
    long = suggest_n_steps(initial, electron_100ev, laser_4nm, profile, 1e-12)
    assert short >= 1
    assert long == pytest.approx(10 * short, rel=0.01)


@pytest.mark.parametrize("periods", [8, -13])
def test_shifting_the_origin_by_whole_periods_leaves_the_spectrum_alone(
    electron_100ev, laser_4nm, periods: int
) -> None:
    profile = FieldProfile.uniform(1e8)
    config = EvolutionConfig(total_time=0.05e-12, n_steps=200, snapshot_every=200)
    spec = WavepacketSpec(delta_k=0.05, dk_offset=0.5)
    base = Grid.centered(256e-9, 2048)
    shift = periods * laser_4nm.grating_period
    shifted = Grid(base.xi_min + shift, base.xi_max + shift, base.n_points)

    finals = []
    for grid in (base, shifted):
        initial = make_gaussian(grid, electron_100ev, laser_4nm, spec)
        finals.append(evolve(initial, electron_100ev, laser_4nm, profile, config).final)

    _, reference = momentum_spectrum(finals[0])
    _, density = momentum_spectrum(finals[1])
    np.testing.assert_allclose(density, reference, atol=1e-6 * reference.max())
    expected = sideband_populations(finals[0], laser_4nm.q).populations
    for order, population in sideband_populations(finals[1], laser_4nm.q).populations.items():
        assert population == pytest.approx(expected[order], abs=1e-6)
