"""Wavepackets on a uniform periodic grid and their Fourier pair.

Momentum amplitudes live on the monotonically increasing delta-k axis
``(j - n/2) * d_k`` (the carrier k0 is removed). The transform is

    chi~(k) = d_xi / sqrt(2 pi) * sum_n chi(xi_n) exp(-i k xi_n)

so that sum |chi|^2 d_xi == sum |chi~|^2 d_k.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import fft
from scipy.special import erfc

from app.core.errors import GridError
from app.schemas.physics import ElectronParams, LaserGratingParams
from app.services.physics import kinetic_alpha

logger = logging.getLogger(__name__)

# tail mass a packet may leave outside the grid
TAIL_TOLERANCE = 1e-12


class Representation(str, Enum):
    position = "position"
    momentum = "momentum"


@dataclass(frozen=True)
class Grid:
    xi_min: float
    xi_max: float
    n_points: int

    def __post_init__(self):
        n = self.n_points
        if n < 2 or n & (n - 1):
            raise GridError(f"n_points must be a power of two >= 2, got {n}")
        if not self.xi_max > self.xi_min:
            raise GridError(f"empty grid [{self.xi_min}, {self.xi_max}]")

    @classmethod
    def centered(cls, length: float, n_points: int) -> Grid:
        return cls(-length / 2, length / 2, n_points)

    @property
    def length(self) -> float:
        return self.xi_max - self.xi_min

    @property
    def d_xi(self) -> float:
        return self.length / self.n_points

    @property
    def d_k(self) -> float:
        return 2 * math.pi / self.length

    @property
    def xi_axis(self) -> np.ndarray:
        return self.xi_min + np.arange(self.n_points) * self.d_xi

    @property
    def dk_axis(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.n_points // 2) * self.d_k

    def axis(self, representation: Representation) -> np.ndarray:
        if representation is Representation.position:
            return self.xi_axis
        return self.dk_axis

    def spacing(self, representation: Representation) -> float:
        if representation is Representation.position:
            return self.d_xi
        return self.d_k


@dataclass(frozen=True)
class Wavepacket:
    grid: Grid
    amplitudes: np.ndarray
    representation: Representation = Representation.position
    k_center: float = 0.0

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=np.complex128)
        if amplitudes.shape != (self.grid.n_points,):
            raise GridError(
                f"expected {self.grid.n_points} amplitudes, got shape {amplitudes.shape}"
            )
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def axis(self) -> np.ndarray:
        return self.grid.axis(self.representation)

    @property
    def spacing(self) -> float:
        return self.grid.spacing(self.representation)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm(self) -> float:
        return float(np.sum(self.density) * self.spacing)

    def with_amplitudes(self, amplitudes: np.ndarray) -> Wavepacket:
        return Wavepacket(self.grid, amplitudes, self.representation, self.k_center)

    def normalized(self) -> Wavepacket:
        return self.with_amplitudes(self.amplitudes / math.sqrt(self.norm))


@dataclass(frozen=True)
class Superposition:
    dk_offset: float
    weight: complex = 1.0


@dataclass(frozen=True)
class WavepacketSpec:
    """Gaussian in momentum; widths and offsets in units of q."""

    delta_k: float
    dk_offset: float = 0.5
    chirp_drift: float = 0.0
    superposition: Superposition | None = field(default=None)

    def __post_init__(self):
        if not self.delta_k > 0:
            raise GridError(f"delta_k must be positive, got {self.delta_k}")
        if self.chirp_drift < 0:
            raise GridError(f"chirp drift must be non-negative, got {self.chirp_drift}")


def to_momentum(wp: Wavepacket) -> Wavepacket:
    if wp.representation is Representation.momentum:
        raise GridError("wavepacket is already in the momentum representation")
    grid = wp.grid
    spectrum = fft.fftshift(fft.fft(wp.amplitudes))
    phase = np.exp(-1j * grid.dk_axis * grid.xi_min)
    amplitudes = grid.d_xi / math.sqrt(2 * math.pi) * phase * spectrum
    return Wavepacket(grid, amplitudes, Representation.momentum, wp.k_center)


def to_position(wp: Wavepacket) -> Wavepacket:
    if wp.representation is Representation.position:
        raise GridError("wavepacket is already in the position representation")
    grid = wp.grid
    shifted = fft.ifftshift(wp.amplitudes * np.exp(1j * grid.dk_axis * grid.xi_min))
    amplitudes = grid.d_k * grid.n_points / math.sqrt(2 * math.pi) * fft.ifft(shifted)
    return Wavepacket(grid, amplitudes, Representation.position, wp.k_center)


def as_position(wp: Wavepacket) -> Wavepacket:
    return wp if wp.representation is Representation.position else to_position(wp)


def as_momentum(wp: Wavepacket) -> Wavepacket:
    return wp if wp.representation is Representation.momentum else to_momentum(wp)


def moments(wp: Wavepacket) -> tuple[float, float]:
    """Mean and variance of |amplitude|^2 along the native axis."""
    weights = wp.density * wp.spacing
    weights = weights / weights.sum()
    axis = wp.axis
    mean = float(np.sum(axis * weights))
    return mean, float(np.sum((axis - mean) ** 2 * weights))


def _gaussian_tail(center: float, sigma: float, lo: float, hi: float) -> float:
    scale = math.sqrt(2) * sigma
    return 0.5 * (erfc((center - lo) / scale) + erfc((hi - center) / scale))


def _check_fits(grid: Grid, center: float, sigma_k: float) -> None:
    k = grid.dk_axis
    momentum_tail = _gaussian_tail(center, sigma_k, k[0], k[-1])
    sigma_z = 1 / (2 * sigma_k)
    position_tail = _gaussian_tail(0.0, sigma_z, grid.xi_min, grid.xi_max)
    if momentum_tail > TAIL_TOLERANCE or position_tail > TAIL_TOLERANCE:
        raise GridError(
            "grid too narrow for the packet: tail mass "
            f"{momentum_tail:.2e} outside delta-k window [{k[0]:.3e}, {k[-1]:.3e}] rad/m, "
            f"{position_tail:.2e} outside [{grid.xi_min:.3e}, {grid.xi_max:.3e}] m"
        )


def make_gaussian(
    grid: Grid,
    electron: ElectronParams,
    laser: LaserGratingParams,
    spec: WavepacketSpec,
) -> Wavepacket:
    """Momentum-space Gaussian (probability std ``delta_k * q``) centred at xi = 0."""
    q = laser.q
    sigma_k = spec.delta_k * q
    components = [Superposition(spec.dk_offset, 1.0)]
    if spec.superposition is not None:
        components.append(spec.superposition)

    dk = grid.dk_axis
    amplitudes = np.zeros(grid.n_points, dtype=np.complex128)
    for component in components:
        center = component.dk_offset * q
        _check_fits(grid, center, sigma_k)
        amplitudes += component.weight * np.exp(-((dk - center) ** 2) / (4 * sigma_k**2))

    if not np.any(amplitudes):
        raise GridError("superposition weights cancel to an empty state")
    wp = Wavepacket(grid, amplitudes, Representation.momentum, electron.k0).normalized()
    if spec.chirp_drift > 0:
        wp = apply_chirp(wp, spec.chirp_drift, electron)
    return wp


def chirp_phase(dk: np.ndarray, drift: float, electron: ElectronParams) -> np.ndarray:
    """Free-drift phase over ``drift`` metres: -hbar dk^2 L / (2 gamma^3 m v0)."""
    tau = drift / electron.beta
    return -kinetic_alpha(electron) * dk**2 * tau


def apply_chirp(wp: Wavepacket, drift: float, electron: ElectronParams) -> Wavepacket:
    if wp.representation is not Representation.momentum:
        raise GridError("chirp is applied in the momentum representation")
    if drift == 0:
        return wp
    return wp.with_amplitudes(wp.amplitudes * np.exp(1j * chirp_phase(wp.axis, drift, electron)))


def free_gaussian_width(sigma_z0: float, sigma_k: float, tau: float, alpha2: float) -> float:
    """Position std of a free Gaussian after co-moving time ``tau`` (= c t)."""
    return math.hypot(sigma_z0, 2 * alpha2 * sigma_k * tau)


def chirped_size(delta_k_abs: float, drift: float, electron: ElectronParams) -> float:
    """Packet size after a field-free drift of ``drift`` metres."""
    tau = drift / electron.beta
    return free_gaussian_width(1 / (2 * delta_k_abs), delta_k_abs, tau, kinetic_alpha(electron))
