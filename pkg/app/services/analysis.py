"""Observables: spectra, sideband populations, lobe splits, Wigner grids and
the diffraction-regime classifier."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft
from scipy.signal import find_peaks

from app.core.constants import HBAR, to_si
from app.core.errors import DomainError, NoPeakError
from app.schemas.analysis import (
    Criterion,
    Peak,
    RegimeLabel,
    RegimeName,
    RegimeThresholds,
    SidebandReport,
    SidebandWindow,
    SplitMeasurement,
)
from app.schemas.experiment import ExperimentParams
from app.schemas.physics import DerivedCouplings, ElectronParams, LaserGratingParams
from app.services.fields import FieldFrame, FieldProfile, field_at
from app.services.physics import klein_cook, rabi_gradient_factor, two_level_validity
from app.services.wavepacket import (
    Grid,
    Representation,
    Wavepacket,
    as_momentum,
    as_position,
    chirped_size,
    to_momentum,
    to_position,
)
from app.settings import WIGNER_MAX_POINTS, WIGNER_POINTS

logger = logging.getLogger(__name__)

SIDEBAND_ORDERS = (0.5, -0.5, 1.5, -1.5, 2.5, -2.5)
PEAK_FRACTION = 0.05
EMPTY_WINDOW = 1e-8  # population below which a window reports no lobes
WIGNER_TAIL = 1e-24
WIGNER_ROW_BLOCK = 256


def momentum_spectrum(wp: Wavepacket) -> tuple[np.ndarray, np.ndarray]:
    """(delta-k axis, |chi~|^2) on the monotone axis."""
    spectrum = as_momentum(wp)
    return spectrum.axis, spectrum.density


def total_variation(p: np.ndarray, r: np.ndarray, spacing: float) -> float:
    return 0.5 * float(np.sum(np.abs(p - r)) * spacing)


def _refine_peak(y: np.ndarray, i: int) -> tuple[float, float]:
    """Sub-bin offset and height of the parabola through y[i-1], y[i], y[i+1]."""
    if i <= 0 or i >= len(y) - 1:
        return 0.0, float(y[i])
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    curvature = y0 - 2 * y1 + y2
    if curvature == 0:
        return 0.0, float(y1)
    shift = 0.5 * (y0 - y2) / curvature
    return float(shift), float(y1 - 0.25 * (y0 - y2) * shift)


def detect_peaks(axis: np.ndarray, density: np.ndarray) -> list[Peak]:
    """Local maxima above 5 % of the strongest one, strongest first.

    A sample on either end that rises above its only neighbour counts as a
    maximum, so a lobe pushed against the window edge is still reported.
    """
    if density.size < 3 or not np.any(density > 0):
        return []
    padded = np.pad(density, 1, constant_values=float(density.min()) - 1.0)
    indices, _ = find_peaks(padded, height=PEAK_FRACTION * float(density.max()))
    step = float(axis[1] - axis[0])
    peaks = []
    for i in indices - 1:
        shift, height = _refine_peak(density, int(i))
        peaks.append(Peak(position=float(axis[i]) + shift * step, height=height))
    return sorted(peaks, key=lambda p: p.height, reverse=True)


def sideband_populations(
    wp: Wavepacket,
    q: float,
    window_halfwidth: float = 0.25,
    orders: tuple[float, ...] = SIDEBAND_ORDERS,
) -> SidebandReport:
    """Integrate |chi~|^2 over half-open windows [n q - w q, n q + w q)."""
    if window_halfwidth > 0.25 + 1e-12:
        raise DomainError(f"window half-width {window_halfwidth} q overlaps neighbouring sidebands")
    if not window_halfwidth > 0:
        raise DomainError("window half-width must be positive")
    dk, density = momentum_spectrum(wp)
    d_k = wp.grid.d_k
    bins = dk / d_k
    windows = []
    for order in orders:
        lo = (order - window_halfwidth) * q / d_k
        hi = (order + window_halfwidth) * q / d_k
        mask = (bins >= lo - 1e-9) & (bins < hi - 1e-9)
        local = density[mask]
        population = float(local.sum() * d_k)
        offsets = dk[mask] - order * q
        mean_offset = float(np.sum(offsets * local) / local.sum()) if local.sum() > 0 else 0.0
        peaks = detect_peaks(dk[mask], local) if population > EMPTY_WINDOW else []
        split = abs(peaks[0].position - peaks[1].position) if len(peaks) > 1 else 0.0
        windows.append(
            SidebandWindow(
                order=order,
                population=max(population, 0.0),
                mean_offset=mean_offset,
                peaks=peaks,
                split=split,
            )
        )
    report_pops = {w.order: w.population for w in windows}
    leakage = 1.0 - report_pops.get(0.5, 0.0) - report_pops.get(-0.5, 0.0)
    tail = 1.0 - sum(report_pops.values())
    return SidebandReport(
        q=q, window_halfwidth=window_halfwidth, windows=windows, leakage=leakage, tail=tail
    )


def measure_split(report: SidebandReport, sideband: float) -> SplitMeasurement:
    """Distance between the two highest lobes of one sideband window."""
    window = report.window(sideband)
    if not window.peaks:
        raise NoPeakError(f"no spectral peak in the {sideband:+g} q window")
    return SplitMeasurement(split=window.split, single_lobe=window.single_lobe)


def usg_prediction(
    profile: FieldProfile,
    electron: ElectronParams,
    laser: LaserGratingParams,
    total_time: float,
    xi0: float = 0.0,
) -> float:
    """(1/hbar) * integral of grad Omega along the packet trajectory, in rad/m.

    Each pseudospin component is displaced by this amount in opposite
    directions, so the lobes inside one sideband window sit twice as far apart.
    A lab-frame window is crossed at v0, so the integral is the field change
    between the ends of the path divided by v0.
    """
    factor = rabi_gradient_factor(electron, laser) / HBAR
    if profile.frame is FieldFrame.lab and profile.has_gradient:
        path = np.array([xi0, xi0 + electron.velocity * total_time])
        e_start, e_end = field_at(profile, path)
        return float(factor * (e_end - e_start) / electron.velocity)
    return float(factor * profile.gradient_at(xi0) * total_time)


def fit_rabi_coupling(times: np.ndarray, transferred: np.ndarray) -> float:
    """|Omega| (J) from the first maximum of the transferred population.

    Resonant transfer peaks at Omega t / hbar = pi / 2.
    """
    indices, _ = find_peaks(transferred)
    if indices.size == 0:
        raise NoPeakError("population never reaches a maximum")
    i = int(indices[0])
    shift, _ = _refine_peak(transferred, i)
    t_peak = float(times[i] + shift * (times[i + 1] - times[i]))
    return math.pi * HBAR / (2 * t_peak)


@dataclass(frozen=True)
class WignerGrid:
    z_axis: np.ndarray  # m, unwrapped positions of the analysis window
    k_axis: np.ndarray  # rad/m, delta-k
    values: np.ndarray  # (n_z, n_k)

    @property
    def d_z(self) -> float:
        return float(self.z_axis[1] - self.z_axis[0])

    @property
    def d_k(self) -> float:
        return float(self.k_axis[1] - self.k_axis[0])


def _power_of_two_at_least(value: int) -> int:
    return 1 << max(0, math.ceil(math.log2(max(value, 1))))


def _centred_mass(density: np.ndarray, width: int) -> float:
    n = density.size
    start = n // 2 - width // 2
    return float(density[start : start + width].sum())


def _smallest_window(density: np.ndarray, tail: float) -> int:
    """Smallest power-of-two span about the middle holding 1 - tail of the mass."""
    n = density.size
    width = 2
    while width < n and _centred_mass(density, width) < 1.0 - tail:
        width *= 2
    return min(width, n)


def wigner(
    wp: Wavepacket,
    downsample: int = WIGNER_POINTS,
    max_points: int = WIGNER_MAX_POINTS,
) -> WignerGrid:
    """Discrete Wigner function W(z, k) = (1/pi) int chi*(z+y) chi(z-y) exp(2iky) dy.

    The state is cut to the spatial window that holds it (doubled, so periodic
    ghost terms only pair tails), band-limited to the retained modes and
    upsampled by two; on that state both marginals are exact. The output is
    ``downsample`` points per axis unless the state needs more.
    """
    state = as_position(wp)
    grid = state.grid
    n = grid.n_points
    density = state.density / np.sum(state.density)

    centre = int(round(
        np.angle(np.sum(density * np.exp(2j * np.pi * np.arange(n) / n))) / (2 * np.pi) * n
    )) % n
    roll = n // 2 - centre
    rolled = np.roll(state.amplitudes, roll)
    width = min(2 * _smallest_window(np.roll(density, roll), WIGNER_TAIL), n)
    start = n // 2 - width // 2
    xi_start = grid.xi_min + (start - roll) * grid.d_xi

    window_grid = Grid(xi_start, xi_start + width * grid.d_xi, width)
    window = to_momentum(Wavepacket(window_grid, rolled[start : start + width]))
    spectral = window.density / np.sum(window.density)

    needed = _smallest_window(spectral, WIGNER_TAIL)
    modes = max(needed, min(max(downsample // 2, 1), width))
    if needed > downsample // 2:
        logger.warning("Wigner grid enlarged to %d points to hold the spectrum", 2 * modes)
    if 2 * modes > max_points:
        logger.warning(
            "Wigner grid capped at %d points; marginals are approximate", max_points
        )
        modes = max_points // 2
    lost = 1.0 - _centred_mass(spectral, modes)
    if lost > 1e-10:
        logger.warning("Wigner band truncation drops %.2e of the spectral mass", lost)

    n_f = 2 * modes
    fine_grid = Grid(window_grid.xi_min, window_grid.xi_max, n_f)
    padded = np.zeros(n_f, dtype=np.complex128)
    keep = slice(width // 2 - modes // 2, width // 2 - modes // 2 + modes)
    padded[n_f // 2 - modes // 2 : n_f // 2 - modes // 2 + modes] = window.amplitudes[keep]
    fine = to_position(Wavepacket(fine_grid, padded, Representation.momentum)).amplitudes

    h = fine_grid.d_xi
    lags = np.arange(n_f)
    sign = np.where(lags % 2 == 0, 1.0, -1.0)
    values = np.empty((n_f, n_f))
    for block in range(0, n_f, WIGNER_ROW_BLOCK):
        rows = np.arange(block, min(block + WIGNER_ROW_BLOCK, n_f))
        correlation = (
            np.conj(fine[(rows[:, None] + lags[None, :]) % n_f])
            * fine[(rows[:, None] - lags[None, :]) % n_f]
        )
        transformed = fft.ifft(correlation * sign, axis=1) * (n_f * h / math.pi)
        residue = float(np.max(np.abs(transformed.imag)))
        if residue > 1e-10 * max(float(np.max(np.abs(transformed.real))), 1e-300):
            logger.debug("Wigner imaginary residue %.2e", residue)
        values[rows] = transformed.real

    z_axis = fine_grid.xi_axis
    k_axis = (np.arange(n_f) - n_f // 2) * (math.pi / (n_f * h))
    return WignerGrid(z_axis=z_axis, k_axis=k_axis, values=values)


def wigner_marginals(grid: WignerGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(position density, momentum mode axis, momentum density) of the grid.

    The k axis runs at half the mode spacing of the analysis window. Columns an
    even number of steps from k = 0 land on the modes and carry twice the mode
    density; the others sit between modes and integrate to zero.
    """
    position = grid.values.sum(axis=1) * grid.d_k
    columns = grid.values.sum(axis=0) * grid.d_z
    modes = slice((grid.k_axis.size // 2) % 2, None, 2)
    return position, grid.k_axis[modes], columns[modes] / 2


def wigner_negativity(grid: WignerGrid) -> float:
    """-min(W) / max(W); zero for a non-negative grid."""
    return max(0.0, -float(grid.values.min()) / float(grid.values.max()))


def _criterion(name, value, threshold, comparison, passed, note=None) -> Criterion:
    return Criterion(
        name=name, value=float(value), threshold=float(threshold),
        comparison=comparison, passed=bool(passed), note=note,
    )


def classify(
    electron: ElectronParams,
    laser: LaserGratingParams,
    derived: DerivedCouplings,
    delta_k_over_q: float,
    chirp_drift: float = 0.0,
    has_gradient: bool = False,
    thresholds: RegimeThresholds | None = None,
) -> RegimeLabel:
    th = thresholds or RegimeThresholds()
    trace: list[Criterion] = []

    fast = electron.beta >= th.beta_fast
    trace.append(_criterion("beta", electron.beta, th.beta_fast, ">=", fast,
                            "fast" if fast else "slow"))
    if derived.rabi_omega <= 0:
        trace.append(_criterion("rabi_omega", derived.rabi_omega, 0.0, ">", False, "no optical coupling"))
        return RegimeLabel(label=RegimeName.indeterminate, rationale=trace)

    delta_k = delta_k_over_q * laser.q
    scale = electron.beta * laser.wavelength
    size = 1 / (2 * delta_k) / scale
    point = size <= th.point_particle_max
    plane = size >= th.plane_wave_min
    trace.append(_criterion("size_over_beta_lambda", size, th.point_particle_max, "<=", point, "point particle"))
    trace.append(_criterion("size_over_beta_lambda", size, th.plane_wave_min, ">=", plane, "plane wave"))

    if point:
        chirped = chirped_size(delta_k, chirp_drift, electron) / scale
        is_chirped = chirp_drift > 0 and chirped > 1.0
        trace.append(_criterion("chirped_size_over_beta_lambda", chirped, 1.0, ">", is_chirped))
        if is_chirped:
            return RegimeLabel(label=RegimeName.apinem, rationale=trace)
        note = None if fast else "slow point-particle packets follow classical acceleration and bunching"
        trace.append(_criterion("point_particle", size, th.point_particle_max, "<=", True, note))
        return RegimeLabel(label=RegimeName.dla, rationale=trace)

    if not plane:
        trace.append(_criterion("size_over_beta_lambda", size, th.plane_wave_min, ">=", False,
                                "between the point-particle and plane-wave cuts"))
        return RegimeLabel(label=RegimeName.indeterminate, rationale=trace)

    q_value = klein_cook(derived)
    raman_nath = q_value < th.klein_cook_min
    trace.append(_criterion("klein_cook", q_value, th.klein_cook_min, "<", raman_nath))
    if raman_nath:
        return RegimeLabel(label=RegimeName.raman_nath_pinem, rationale=trace)

    validity = two_level_validity(derived)
    if not validity.valid:
        logger.warning("Two-level validity ratio r = %.3f >= 1", validity.ratio)
    trace.append(_criterion("two_level_ratio", validity.ratio, 1.0, "<", validity.valid, "advisory"))

    anomalous = delta_k_over_q > th.anomalous_dk_over_q
    trace.append(_criterion("delta_k_over_q", delta_k_over_q, th.anomalous_dk_over_q, ">", anomalous))
    if anomalous:
        return RegimeLabel(label=RegimeName.anomalous_bragg, rationale=trace)

    trace.append(_criterion("gradient", float(has_gradient), 0.5, ">", has_gradient))
    if has_gradient:
        return RegimeLabel(label=RegimeName.ultrafast_stern_gerlach, rationale=trace)
    return RegimeLabel(label=RegimeName.bragg, rationale=trace)


def classify_regime(
    params: ExperimentParams,
    derived: DerivedCouplings,
    thresholds: RegimeThresholds | None = None,
) -> RegimeLabel:
    # local import: experiment resolution pulls in the solver configuration
    from app.services.experiment import resolve_electron, resolve_laser, resolve_profile

    electron = resolve_electron(params)
    laser = resolve_laser(params, electron)
    return classify(
        electron,
        laser,
        derived,
        params.wavepacket.delta_k_over_q,
        chirp_drift=to_si(params.wavepacket.chirp_ld_cm, "cm"),
        has_gradient=resolve_profile(params).has_gradient,
        thresholds=thresholds,
    )
