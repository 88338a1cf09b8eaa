from __future__ import annotations

import math

import numpy as np
import pytest

from app.core.constants import HBAR
from app.core.errors import DomainError, NoPeakError
from app.schemas.analysis import RegimeName, RegimeThresholds
from app.services.analysis import (
    classify,
    classify_regime,
    detect_peaks,
    fit_rabi_coupling,
    measure_split,
    momentum_spectrum,
    sideband_populations,
    total_variation,
    usg_prediction,
    wigner,
    wigner_marginals,
    wigner_negativity,
)
from app.services.dirac_model import DiracParams, SpinorLattice, dirac_evolve, lattice_orders
from app.services.fields import FieldFrame, FieldProfile
from app.services.physics import rabi_gradient_factor, tdse_coefficients
from app.services.presets import preset_params
from app.services.runner import summarize
from app.services.wavepacket import (
    Grid,
    Representation,
    Superposition,
    Wavepacket,
    WavepacketSpec,
    make_gaussian,
    to_position,
)


def _lobes(grid: Grid, q: float, centres: list[float], sigma: float) -> Wavepacket:
    """Momentum-space sum of Gaussians (centres and width in units of q)."""
    dk = grid.dk_axis
    amplitudes = sum(np.exp(-((dk - c * q) ** 2) / (4 * (sigma * q) ** 2)) for c in centres)
    return Wavepacket(grid, amplitudes, Representation.momentum).normalized()


@pytest.fixture
def wide_grid() -> Grid:
    return Grid.centered(4096e-9, 8192)


def test_packet_at_plus_half_q_fills_its_window(electron_100ev, laser_4nm) -> None:
    grid = Grid.centered(512e-9, 4096)
    wp = make_gaussian(grid, electron_100ev, laser_4nm, WavepacketSpec(delta_k=0.02, dk_offset=0.5))
    report = sideband_populations(wp, laser_4nm.q)
    assert report.window(0.5).population == pytest.approx(1.0, abs=1e-9)
    assert report.window(-0.5).population == pytest.approx(0.0, abs=1e-9)
    assert report.leakage == pytest.approx(0.0, abs=1e-9)
    assert report.tail == pytest.approx(0.0, abs=1e-9)
    assert report.window(0.5).mean_offset == pytest.approx(0.0, abs=1e-6 * laser_4nm.q)
    assert len(report.window(0.5).peaks) == 1


def _single_bin(grid: Grid, dk: float) -> Wavepacket:
    amplitudes = np.zeros(grid.n_points, dtype=complex)
    amplitudes[grid.n_points // 2 + int(round(dk / grid.d_k))] = 1.0
    return Wavepacket(grid, amplitudes, Representation.momentum).normalized()


def test_window_edges_are_half_open(laser_4nm) -> None:
    grid = Grid.centered(512e-9, 4096)
    q = laser_4nm.q
    # lower edge of the +3/2 window
    report = sideband_populations(_single_bin(grid, 1.25 * q), q)
    assert report.window(1.5).population == pytest.approx(1.0)
    # upper edge of the +1/2 window belongs to no window
    report = sideband_populations(_single_bin(grid, 0.75 * q), q)
    assert sum(report.populations.values()) == 0.0
    assert report.tail == pytest.approx(1.0)
    assert report.leakage == pytest.approx(1.0)


@pytest.mark.parametrize("halfwidth", [0.0, -0.1, 0.3])
def test_window_halfwidth_is_bounded(laser_4nm, halfwidth: float) -> None:
    grid = Grid.centered(512e-9, 4096)
    wp = _lobes(grid, laser_4nm.q, [0.5], 0.02)
    with pytest.raises(DomainError):
        sideband_populations(wp, laser_4nm.q, window_halfwidth=halfwidth)


def test_split_of_two_lobes(wide_grid: Grid, laser_4nm) -> None:
    q = laser_4nm.q
    wp = _lobes(wide_grid, q, [0.45, 0.55], 0.01)
    measurement = measure_split(sideband_populations(wp, q), 0.5)
    assert not measurement.single_lobe
    assert measurement.split == pytest.approx(0.1 * q, rel=0.01)


def test_single_lobe_is_flagged(wide_grid: Grid, laser_4nm) -> None:
    wp = _lobes(wide_grid, laser_4nm.q, [0.5], 0.01)
    measurement = measure_split(sideband_populations(wp, laser_4nm.q), 0.5)
    assert measurement.single_lobe
    assert measurement.split == 0.0


def test_empty_window_has_no_peaks(wide_grid: Grid, laser_4nm) -> None:
    wp = _lobes(wide_grid, laser_4nm.q, [-0.5], 0.01)
    with pytest.raises(NoPeakError):
        measure_split(sideband_populations(wp, laser_4nm.q), 0.5)


def test_every_window_reports_its_split_and_mean(wide_grid: Grid, laser_4nm) -> None:
    q = laser_4nm.q
    wp = _lobes(wide_grid, q, [0.45, 0.55, -0.42, -0.58], 0.01)
    report = sideband_populations(wp, q)
    assert report.window(0.5).split == pytest.approx(0.1 * q, rel=0.01)
    assert report.window(-0.5).split == pytest.approx(0.16 * q, rel=0.01)
    assert report.window(1.5).peaks == []
    assert report.window(1.5).split == 0.0
    assert report.mean_dk(0.5) == pytest.approx(0.5 * q, rel=1e-3)
    assert report.mean_dk(-0.5) == pytest.approx(-0.5 * q, rel=1e-3)
    assert measure_split(report, -0.5).split == report.window(-0.5).split


def test_lobe_on_the_window_edge_is_counted(wide_grid: Grid, laser_4nm) -> None:
    q = laser_4nm.q
    # the lower edge 0.25 q is the first sample of the +q/2 window
    wp = _lobes(wide_grid, q, [0.25, 0.5], 0.01)
    measurement = measure_split(sideband_populations(wp, q), 0.5)
    assert not measurement.single_lobe
    assert measurement.split == pytest.approx(0.25 * q, rel=1e-3)


def test_detect_peaks_reports_maxima_at_both_ends() -> None:
    axis = np.linspace(0.0, 1.0, 201)
    density = np.exp(-((axis / 0.1) ** 2)) + 0.5 * np.exp(-(((axis - 0.6) / 0.05) ** 2))
    peaks = detect_peaks(axis, density)
    assert [p.position for p in peaks] == pytest.approx([0.0, 0.6], abs=1e-3)
    rising = detect_peaks(axis, axis**2)
    assert len(rising) == 1
    assert rising[0].position == 1.0


def test_detect_peaks_ignores_small_bumps() -> None:
    axis = np.linspace(-1.0, 1.0, 401)
    density = np.exp(-((axis - 0.3) ** 2) / 0.002) + 0.02 * np.exp(-((axis + 0.5) ** 2) / 0.002)
    peaks = detect_peaks(axis, density)
    assert len(peaks) == 1
    assert peaks[0].position == pytest.approx(0.3, abs=1e-4)
    assert detect_peaks(axis, np.zeros_like(axis)) == []


def test_total_variation() -> None:
    p = np.array([1.0, 0.0])
    r = np.array([0.0, 1.0])
    assert total_variation(p, r, 1.0) == pytest.approx(1.0)
    assert total_variation(p, p, 1.0) == 0.0


def test_momentum_spectrum_is_normalized(electron_100ev, laser_4nm) -> None:
    grid = Grid.centered(512e-9, 4096)
    wp = to_position(make_gaussian(grid, electron_100ev, laser_4nm, WavepacketSpec(delta_k=0.05)))
    dk, density = momentum_spectrum(wp)
    assert np.sum(density) * grid.d_k == pytest.approx(1.0, abs=1e-12)
    assert dk[int(np.argmax(density))] == pytest.approx(0.5 * laser_4nm.q, abs=grid.d_k)


def test_usg_prediction_in_the_co_moving_frame(electron_100ev, laser_4nm) -> None:
    ramp = FieldProfile.linear_gradient(-100e-9, 100e-9, 0.0, 2e8)
    total = 0.25e-12
    expected = 1e15 * rabi_gradient_factor(electron_100ev, laser_4nm) * total / HBAR
    assert usg_prediction(ramp, electron_100ev, laser_4nm, total) == pytest.approx(expected, rel=1e-12)
    assert expected / laser_4nm.q == pytest.approx(0.076, rel=0.02)


def test_usg_prediction_in_the_lab_frame_is_one_crossing(electron_100ev, laser_4nm) -> None:
    ramp = FieldProfile.linear_gradient(-100e-9, 100e-9, 0.0, 2e8, frame=FieldFrame.lab)
    factor = rabi_gradient_factor(electron_100ev, laser_4nm) / HBAR
    # from the ramp centre (1e8 V/m) to the clamped top (2e8 V/m)
    expected = factor * 1e8 / electron_100ev.velocity
    for total in (10e-15, 0.25e-12, 25.9e-12):
        crossed = min(total * electron_100ev.velocity, 100e-9)
        partial = factor * 1e15 * crossed / electron_100ev.velocity
        assert usg_prediction(ramp, electron_100ev, laser_4nm, total) == pytest.approx(partial, rel=1e-9)
    assert usg_prediction(ramp, electron_100ev, laser_4nm, 25.9e-12) == pytest.approx(expected, rel=1e-9)
    assert 2 * expected / laser_4nm.q == pytest.approx(0.01, rel=0.1)


def test_usg_prediction_without_gradient_is_zero(electron_100ev, laser_4nm) -> None:
    assert usg_prediction(FieldProfile.uniform(1e8), electron_100ev, laser_4nm, 1e-12) == 0.0


def test_fit_rabi_coupling_recovers_omega() -> None:
    omega = 5.0e-21
    times = np.linspace(0.0, 1.0e-13, 2001)
    transferred = np.sin(omega * times / HBAR) ** 2
    assert fit_rabi_coupling(times, transferred) == pytest.approx(omega, rel=1e-4)
    with pytest.raises(NoPeakError):
        fit_rabi_coupling(times, times)


def test_wigner_of_a_gaussian_is_positive_with_exact_marginals(electron_100ev, laser_4nm) -> None:
    grid = Grid.centered(512e-9, 4096)
    wp = make_gaussian(grid, electron_100ev, laser_4nm, WavepacketSpec(delta_k=0.05, dk_offset=0.0))
    w = wigner(wp, downsample=256)
    assert w.values.sum() * w.d_z * w.d_k == pytest.approx(1.0, abs=1e-9)
    assert wigner_negativity(w) < 1e-6

    position, modes, momentum = wigner_marginals(w)
    z_density = np.interp(w.z_axis, grid.xi_axis, to_position(wp).density)
    np.testing.assert_allclose(position, z_density, atol=1e-6 * z_density.max())
    assert momentum.sum() * (modes[1] - modes[0]) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("offset", [0.0, 0.3])
def test_wigner_momentum_marginal_matches_the_spectrum(electron_100ev, laser_4nm, offset: float) -> None:
    grid = Grid.centered(512e-9, 4096)
    wp = make_gaussian(grid, electron_100ev, laser_4nm, WavepacketSpec(delta_k=0.05, dk_offset=offset))
    w = wigner(wp, downsample=256)
    _, modes, momentum = wigner_marginals(w)
    assert modes.size == w.k_axis.size // 2
    assert modes[1] - modes[0] == pytest.approx(2 * w.d_k)
    assert np.any(modes == 0.0)

    dk, density = momentum_spectrum(wp)
    expected = np.interp(modes, dk, density)
    np.testing.assert_allclose(momentum, expected, atol=1e-2 * density.max())
    assert modes[int(np.argmax(momentum))] == pytest.approx(offset * laser_4nm.q, abs=modes[1] - modes[0])


def test_wigner_of_a_cat_state_goes_negative(electron_100ev, laser_4nm) -> None:
    grid = Grid.centered(512e-9, 4096)
    spec = WavepacketSpec(delta_k=0.02, dk_offset=0.5, superposition=Superposition(-0.5, 1.0))
    wp = make_gaussian(grid, electron_100ev, laser_4nm, spec)
    w = wigner(wp, downsample=256)
    assert wigner_negativity(w) > 0.01
    assert w.values.sum() * w.d_z * w.d_k == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize(
    ("preset", "label"),
    [
        ("fig2a", RegimeName.bragg),
        ("fig2c", RegimeName.ultrafast_stern_gerlach),
        ("fig2d", RegimeName.ultrafast_stern_gerlach),
        ("fig3", RegimeName.anomalous_bragg),
        ("s1_off", RegimeName.anomalous_bragg),
        ("s2", RegimeName.raman_nath_pinem),
        ("s3_theta_minus_pi", RegimeName.dla),
        ("s3_theta_plus_half_pi", RegimeName.dla),
        ("s4", RegimeName.apinem),
    ],
)
def test_presets_land_in_their_regime(preset: str, label: RegimeName) -> None:
    params = preset_params(preset)
    summary = summarize(params)
    assert summary.regime.label is label
    assert summary.regime.rationale
    assert classify_regime(params, summary.derived).label is label


def test_no_field_is_indeterminate(electron_100ev, laser_4nm) -> None:
    derived = tdse_coefficients(electron_100ev, laser_4nm, e0=0.0)
    label = classify(electron_100ev, laser_4nm, derived, 0.02)
    assert label.label is RegimeName.indeterminate
    assert label.rationale[-1].name == "rabi_omega"


def test_sizes_between_the_cuts_are_indeterminate(electron_100ev, laser_4nm) -> None:
    derived = tdse_coefficients(electron_100ev, laser_4nm)
    # 1/(2 dk) = 0.3 beta lambda
    beta_lambda = electron_100ev.beta * laser_4nm.wavelength
    delta_k_over_q = 1 / (2 * 0.3 * beta_lambda) / laser_4nm.q
    assert classify(electron_100ev, laser_4nm, derived, delta_k_over_q).label is RegimeName.indeterminate


def test_thresholds_can_be_overridden(electron_100ev, laser_4nm) -> None:
    derived = tdse_coefficients(electron_100ev, laser_4nm)
    strict = RegimeThresholds(klein_cook_min=2.0)
    assert classify(electron_100ev, laser_4nm, derived, 0.02).label is RegimeName.bragg
    assert classify(electron_100ev, laser_4nm, derived, 0.02, thresholds=strict).label is RegimeName.raman_nath_pinem


def _mean(dk_axis: np.ndarray, amplitudes: np.ndarray) -> float:
    density = np.abs(amplitudes) ** 2
    return float(np.sum(dk_axis * density) / density.sum())


def test_measured_split_grows_linearly_with_the_field_gradient(electron_100ev, laser_4nm) -> None:
    q = laser_4nm.q
    grid = Grid.centered(4096e-9, 8192)
    wp = make_gaussian(grid, electron_100ev, laser_4nm, WavepacketSpec(delta_k=0.005, dk_offset=0.5))
    lattice = SpinorLattice.from_wavepacket(wp, q, lattice_orders(2), dk_window=0.25 * q)
    total = 0.25e-12

    spans = np.array([6e7, 8e7, 1e8])
    splits, kicks = [], []
    for span in spans:
        profile = FieldProfile.linear_gradient(-100e-9, 100e-9, 1e8 - span / 2, 1e8 + span / 2)
        params = DiracParams.from_experiment(electron_100ev, laser_4nm, profile=profile)
        final = dirac_evolve(lattice, params, total, 1, method="exact").state(-1)

        peaks = detect_peaks(final.dk_axis, np.abs(final.amplitudes[0]) ** 2)
        assert len(peaks) >= 2
        splits.append(abs(peaks[0].position - peaks[1].position))
        kicks.append(usg_prediction(profile, electron_100ev, laser_4nm, total))

        # coupling eigenstates (1, +-e^{i arg Omega}) / sqrt 2 drift apart
        phase = np.exp(-1j * np.angle(params.omega))
        plus = (final.amplitudes[0] + phase * final.amplitudes[1]) / math.sqrt(2)
        minus = (final.amplitudes[0] - phase * final.amplitudes[1]) / math.sqrt(2)
        shift_plus, shift_minus = _mean(final.dk_axis, plus), _mean(final.dk_axis, minus)
        assert shift_plus * shift_minus < 0
        assert shift_plus == pytest.approx(-shift_minus, rel=0.05)

    splits, kicks = np.asarray(splits), np.asarray(kicks)
    ratios = splits / (2 * kicks)
    assert ratios == pytest.approx(np.ones(3), rel=0.1)
    assert ratios.max() - ratios.min() < 0.02
    fit = np.polyfit(spans, splits, 1)
    residual = splits - np.polyval(fit, spans)
    r_squared = 1 - np.sum(residual**2) / np.sum((splits - np.mean(splits)) ** 2)
    assert r_squared > 0.99
