"""Coupled-mode (synthetic momentum lattice) model of the grating interaction.

Sideband ``j`` sits at momentum ``orders[j] * q + dk`` (orders descending, so the
two-level case is [c0 at +q/2, c1 at -q/2]). Amplitudes obey

    i hbar d/dt c_j = E_j c_j - M c_{j-1} - M^dagger c_{j+1},
    M = Omega(t) + e^{i arg Omega} G X,

with E_j the kinetic energy of the sideband, G the coupling gradient and X the
position operator conjugate to the dk axis. For a real Omega and dk = 0 the
two-level block is -Omega sigma_x.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.signal import find_peaks

from app.core.constants import HBAR
from app.core.errors import DomainError, IntegrationError
from app.schemas.physics import ElectronParams, LaserGratingParams
from app.services.fields import FieldFrame, FieldProfile, field_at
from app.services.physics import phase_mismatch, rabi_frequency, rabi_gradient_factor
from app.services.wavepacket import Wavepacket, as_momentum

logger = logging.getLogger(__name__)

Schedule = Callable[[float], complex]

DEFAULT_NORM_TOLERANCE = 1e-10
MAX_STEP_PHASE = 0.05


def lattice_orders(n_sidebands: int, center: float = 0.0) -> np.ndarray:
    """Descending sideband orders (units of q) centred on ``center``."""
    if n_sidebands < 1:
        raise DomainError(f"need at least one sideband, got {n_sidebands}")
    return center + (n_sidebands - 1) / 2 - np.arange(n_sidebands, dtype=float)


@dataclass(frozen=True)
class SpinorLattice:
    dk_axis: np.ndarray
    amplitudes: np.ndarray
    orders: np.ndarray

    def __post_init__(self):
        dk_axis = np.atleast_1d(np.asarray(self.dk_axis, dtype=float))
        amplitudes = np.array(self.amplitudes, dtype=np.complex128).reshape(
            len(self.orders), dk_axis.shape[0]
        )
        if dk_axis.shape[0] > 1 and not np.allclose(np.diff(dk_axis), dk_axis[1] - dk_axis[0]):
            raise DomainError("lattice dk axis must be uniform")
        for name, value in (("dk_axis", dk_axis), ("amplitudes", amplitudes)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "orders", np.asarray(self.orders, dtype=float))

    @classmethod
    def two_level(cls, c0: complex, c1: complex) -> SpinorLattice:
        return cls(np.zeros(1), np.array([[c0], [c1]]), lattice_orders(2))

    @classmethod
    def from_wavepacket(
        cls,
        wp: Wavepacket,
        q: float,
        orders: np.ndarray,
        dk_window: float | None = None,
    ) -> SpinorLattice:
        """Sample a grid wavepacket onto the lattice, keeping |dk| <= ``dk_window``."""
        spectrum = as_momentum(wp)
        d_k = wp.grid.d_k
        ratio = q / d_k
        if abs(ratio - round(ratio)) > 1e-6:
            raise DomainError("grid length must hold a whole number of grating periods")
        window = q / 2 if dk_window is None else min(dk_window, q / 2)
        half = int(np.floor(window / d_k + 1e-9))
        local = np.arange(-half, half + (0 if 2 * half * d_k >= q else 1))
        zero = wp.grid.n_points // 2
        amplitudes = np.zeros((len(orders), local.size), dtype=np.complex128)
        for j, order in enumerate(orders):
            index = zero + int(round(order * ratio)) + local
            inside = (index >= 0) & (index < wp.grid.n_points)
            amplitudes[j, inside] = spectrum.amplitudes[index[inside]]
        lattice = cls(local * d_k, amplitudes, orders)
        captured = lattice.norm
        if abs(captured - 1) > 1e-6:
            logger.warning("Lattice captures %.6f of the wavepacket norm", captured)
        return lattice.with_amplitudes(lattice.amplitudes / math.sqrt(captured))

    @property
    def n_sidebands(self) -> int:
        return self.orders.shape[0]

    @property
    def weight(self) -> float:
        if self.dk_axis.shape[0] == 1:
            return 1.0
        return float(self.dk_axis[1] - self.dk_axis[0])

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.weight)

    def populations(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=1) * self.weight

    def with_amplitudes(self, amplitudes: np.ndarray) -> SpinorLattice:
        return SpinorLattice(self.dk_axis, amplitudes, self.orders)


@dataclass(frozen=True)
class DiracParams:
    omega: complex
    q: float
    mass_eff: float
    detuning: float = 0.0
    # dOmega/dxi (J/m), applied with the phase of omega
    omega_gradient: float = 0.0
    # carrier wavenumber; when set, bonds carry the (k0 + k_mid)/k0 recoil factor
    recoil_k0: float | None = None

    @property
    def theta(self) -> float:
        return float(np.angle(self.omega))

    @classmethod
    def from_experiment(
        cls,
        electron: ElectronParams,
        laser: LaserGratingParams,
        e0: float | None = None,
        profile: FieldProfile | None = None,
        *,
        detune: bool = False,
        recoil_correction: bool = False,
    ) -> DiracParams:
        """Couplings matching the TDSE stencil; theta maps to arg Omega = pi/2 - theta."""
        theta = laser.theta if profile is None else profile.theta
        e0 = laser.e0_central if e0 is None else e0
        gradient = 0.0
        if profile is not None:
            e0 = float(field_at(profile, 0.0))
            if profile.frame is FieldFrame.co_moving:
                gradient = float(profile.gradient_at(0.0)) * rabi_gradient_factor(electron, laser)
        omega = rabi_frequency(electron, laser, e0) * np.exp(1j * (math.pi / 2 - theta))
        return cls(
            omega=complex(omega),
            q=laser.q,
            mass_eff=electron.mass_eff,
            detuning=HBAR * (-phase_mismatch(electron, laser)) if detune else 0.0,
            omega_gradient=gradient,
            recoil_k0=electron.k0 if recoil_correction else None,
        )


@dataclass
class DiracTrajectory:
    times: np.ndarray
    amplitudes: np.ndarray  # (n_times, n_sidebands, n_dk)
    orders: np.ndarray
    dk_axis: np.ndarray
    weight: float
    n_steps: int

    def populations(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=2) * self.weight

    def norms(self) -> np.ndarray:
        return self.populations().sum(axis=1)

    def mean_dk(self) -> np.ndarray:
        """Mean dk per (time, sideband), relative to the sideband centre."""
        density = np.abs(self.amplitudes) ** 2
        total = density.sum(axis=2)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(total > 0, (density * self.dk_axis).sum(axis=2) / total, 0.0)

    def state(self, index: int) -> SpinorLattice:
        return SpinorLattice(self.dk_axis, self.amplitudes[index], self.orders)


def _position_operator(dk_axis: np.ndarray) -> np.ndarray:
    n = dk_axis.shape[0]
    if n == 1:
        return np.zeros((1, 1))
    d = dk_axis[1] - dk_axis[0]
    xi = (np.arange(n) - n // 2) * (2 * math.pi / (n * d))
    transform = np.exp(1j * np.outer(xi, dk_axis)) / math.sqrt(n)
    return transform.conj().T @ (xi[:, None] * transform)


class _Lattice:
    """Precomputed operators for one lattice geometry and parameter set."""

    def __init__(self, lattice: SpinorLattice, params: DiracParams):
        kappa = lattice.orders[:, None] * params.q + lattice.dk_axis[None, :]
        onsite = HBAR**2 * kappa**2 / (2 * params.mass_eff)
        onsite = onsite + lattice.orders[:, None] * params.detuning
        # constant offset is a global phase; centring it keeps the explicit step mild
        self.onsite = onsite - 0.5 * (onsite.max() + onsite.min())
        self.phase = np.exp(1j * params.theta) if params.omega != 0 else 1.0
        self.gradient = params.omega_gradient
        self.position = _position_operator(lattice.dk_axis) if params.omega_gradient else None
        if params.recoil_k0 is not None:
            k_mid = kappa[1:] + params.q / 2
            self.bond_factor = (params.recoil_k0 + k_mid) / params.recoil_k0
        else:
            self.bond_factor = None

    def coupling(self, amplitudes: np.ndarray, omega: complex, adjoint: bool) -> np.ndarray:
        """M @ a along the dk axis (or M^dagger @ a)."""
        scalar = np.conj(omega) if adjoint else omega
        result = scalar * amplitudes
        if self.position is not None:
            phase = np.conj(self.phase) if adjoint else self.phase
            result = result + phase * self.gradient * (amplitudes @ self.position.T)
        return result

    def derivative(self, amplitudes: np.ndarray, omega: complex) -> np.ndarray:
        h = self.onsite * amplitudes
        if amplitudes.shape[0] > 1:
            upper, lower = amplitudes[:-1], amplitudes[1:]
            if self.bond_factor is not None:
                lowered = self.bond_factor * self.coupling(upper, omega, adjoint=False)
                raised = self.coupling(self.bond_factor * lower, omega, adjoint=True)
            else:
                lowered = self.coupling(upper, omega, adjoint=False)
                raised = self.coupling(lower, omega, adjoint=True)
            h[1:] -= lowered
            h[:-1] -= raised
        return -1j / HBAR * h

    def dense(self, omega: complex) -> np.ndarray:
        n_sb, n_dk = self.onsite.shape
        size = n_sb * n_dk
        basis = np.eye(size, dtype=np.complex128).reshape(size, n_sb, n_dk)
        columns = [1j * HBAR * self.derivative(b, omega) for b in basis]
        return np.stack([c.reshape(size) for c in columns], axis=1)


def coupled_mode_rhs(
    state: SpinorLattice, params: DiracParams, omega: complex | None = None
) -> SpinorLattice:
    """Time derivative of the lattice amplitudes (1/s)."""
    lattice = _Lattice(state, params)
    coupling = params.omega if omega is None else omega
    return state.with_amplitudes(lattice.derivative(state.amplitudes, coupling))


def energy_gap(dk: float | np.ndarray, params: DiracParams) -> tuple[np.ndarray, np.ndarray]:
    sigma_z = HBAR**2 * params.q * np.asarray(dk) / (2 * params.mass_eff) + params.detuning / 2
    upper = np.sqrt(abs(params.omega) ** 2 + sigma_z**2)
    return upper, -upper


def rabi_period(dk: float | np.ndarray, params: DiracParams) -> np.ndarray:
    """Population revival period pi hbar / E+ (seconds)."""
    upper, _ = energy_gap(dk, params)
    if np.any(upper == 0):
        raise DomainError("no energy gap: the Rabi period is undefined")
    return math.pi * HBAR / upper


def _max_rate(lattice: _Lattice, params: DiracParams, schedule: Schedule | None, total_time: float) -> float:
    if schedule is None:
        omega_max = abs(params.omega)
    else:
        samples = np.linspace(0.0, total_time, 257)
        omega_max = max(abs(schedule(t)) for t in samples)
    if lattice.position is not None:
        omega_max += abs(lattice.gradient) * float(np.max(np.abs(np.linalg.eigvalsh(lattice.position))))
    return (float(np.max(np.abs(lattice.onsite))) + 2 * omega_max) / HBAR


def _default_steps(rate: float, total_time: float, tolerance: float) -> int:
    phase = rate * total_time
    if phase == 0:
        return 1
    # RK4 loses ~z^6/72 of the norm per step of phase z
    z = min(MAX_STEP_PHASE, (72 * tolerance / phase) ** 0.2)
    return max(1, math.ceil(phase / z))


def dirac_evolve(
    initial: SpinorLattice,
    params: DiracParams,
    total_time: float,
    n_steps: int | None = None,
    schedule: Schedule | None = None,
    *,
    record_every: int = 1,
    method: str = "rk4",
    norm_tolerance: float = DEFAULT_NORM_TOLERANCE,
) -> DiracTrajectory:
    """Integrate the lattice; ``schedule`` replaces Omega by Omega(t) (joules)."""
    if not total_time > 0:
        raise DomainError(f"total_time must be positive, got {total_time}")
    if abs(initial.norm - 1) > 1e-9:
        raise DomainError(f"initial lattice state is not normalised (norm {initial.norm:.12f})")
    lattice = _Lattice(initial, params)
    if method == "exact":
        if schedule is not None:
            raise DomainError("the exact propagator needs a time-independent coupling")
        return _evolve_exact(initial, lattice, params, total_time, n_steps or 1000)
    if method != "rk4":
        raise DomainError(f"unknown method {method!r}")

    if n_steps is None:
        n_steps = _default_steps(_max_rate(lattice, params, schedule, total_time), total_time, norm_tolerance)
    dt = total_time / n_steps
    omega_at = schedule or (lambda t: params.omega)
    logger.debug("RK4 lattice integration: %d steps of %.3e s", n_steps, dt)

    a = initial.amplitudes.copy()
    times = [0.0]
    frames = [a.copy()]
    for step in range(n_steps):
        t = step * dt
        omega0, omega_half, omega1 = omega_at(t), omega_at(t + dt / 2), omega_at(t + dt)
        k1 = lattice.derivative(a, omega0)
        k2 = lattice.derivative(a + 0.5 * dt * k1, omega_half)
        k3 = lattice.derivative(a + 0.5 * dt * k2, omega_half)
        k4 = lattice.derivative(a + dt * k3, omega1)
        a = a + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if (step + 1) % record_every == 0 or step + 1 == n_steps:
            times.append((step + 1) * dt)
            frames.append(a.copy())

    trajectory = DiracTrajectory(
        np.array(times), np.array(frames), initial.orders, initial.dk_axis, initial.weight, n_steps
    )
    drift = float(np.max(np.abs(trajectory.norms() - 1)))
    if drift > norm_tolerance:
        raise IntegrationError(
            f"lattice norm drift {drift:.2e} exceeds {norm_tolerance:.1e} "
            f"with {n_steps} steps; use a smaller step"
        )
    return trajectory


def _evolve_exact(
    initial: SpinorLattice, lattice: _Lattice, params: DiracParams, total_time: float, n_records: int
) -> DiracTrajectory:
    times = np.linspace(0.0, total_time, n_records + 1)
    n_sb, n_dk = initial.amplitudes.shape
    if lattice.position is None and lattice.bond_factor is None:
        # independent blocks per dk bin
        blocks = np.zeros((n_dk, n_sb, n_sb), dtype=np.complex128)
        idx = np.arange(n_sb)
        blocks[:, idx, idx] = lattice.onsite.T
        blocks[:, idx[1:], idx[:-1]] = -params.omega
        blocks[:, idx[:-1], idx[1:]] = -np.conj(params.omega)
        energies, vectors = np.linalg.eigh(blocks)
        coefficients = np.einsum("kji,jk->ki", vectors.conj(), initial.amplitudes)
        phases = np.exp(-1j * energies[None] * times[:, None, None] / HBAR)
        frames = np.einsum("kji,tki->tjk", vectors, phases * coefficients[None])
    else:
        energies, vectors = np.linalg.eigh(lattice.dense(params.omega))
        coefficients = vectors.conj().T @ initial.amplitudes.reshape(-1)
        phases = np.exp(-1j * np.outer(times, energies) / HBAR)
        frames = ((phases * coefficients) @ vectors.T).reshape(len(times), n_sb, n_dk)
    return DiracTrajectory(times, frames, initial.orders, initial.dk_axis, initial.weight, n_records)


def classical_schedule(
    profile: FieldProfile, electron: ElectronParams, laser: LaserGratingParams, xi0: float = 0.0
) -> Schedule:
    """Omega(t) seen by a packet centred at ``xi0``; lab-frame windows move past it."""
    phase = np.exp(1j * (math.pi / 2 - profile.theta))

    def schedule(t: float) -> complex:
        e0 = float(field_at(profile, xi0, electron.velocity * t))
        return complex(rabi_frequency(electron, laser, e0) * phase)

    return schedule


def first_revival_time(times: np.ndarray, population: np.ndarray) -> float:
    """Time of the first maximum of ``population`` after it has dipped."""
    peaks, _ = find_peaks(population)
    if peaks.size == 0:
        raise DomainError("no revival inside the trajectory")
    i = int(peaks[0])
    y0, y1, y2 = population[i - 1], population[i], population[i + 1]
    curvature = y0 - 2 * y1 + y2
    shift = 0.5 * (y0 - y2) / curvature if curvature != 0 else 0.0
    return float(times[i] + shift * (times[i + 1] - times[i]))
