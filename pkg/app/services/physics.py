"""Closed-form electron, grating and coupling parameters.

Everything here is SI at the boundary. Solver coefficients are expressed in the
co-moving units of the propagator: lengths in metres and time as tau = c t, so
the Hamiltonian comes out in 1/m.
"""
from __future__ import annotations

import math

import numpy as np

from app.core.constants import (
    ELECTRON_MASS,
    ELECTRON_REST_ENERGY_EV,
    ELEMENTARY_CHARGE,
    EV,
    HBAR,
    SPEED_OF_LIGHT,
)
from app.core.errors import DomainError
from app.schemas.physics import (
    DerivedCouplings,
    ElectronParams,
    LaserGratingParams,
    TwoLevelValidity,
)


def _electron(gamma: float, kinetic_energy: float) -> ElectronParams:
    # sqrt(gamma^2 - 1) / gamma keeps full precision at low energies
    beta = math.sqrt((gamma - 1.0) * (gamma + 1.0)) / gamma
    p0 = gamma * ELECTRON_MASS * beta * SPEED_OF_LIGHT
    return ElectronParams(
        kinetic_energy=kinetic_energy, beta=beta, gamma=gamma, k0=p0 / HBAR, p0=p0
    )


def electron_from_energy(kinetic_energy: float) -> ElectronParams:
    """Electron with the given kinetic energy in eV."""
    if not kinetic_energy > 0:
        raise DomainError(f"kinetic energy must be positive, got {kinetic_energy} eV")
    gamma = 1.0 + kinetic_energy / ELECTRON_REST_ENERGY_EV
    return _electron(gamma, kinetic_energy)


def electron_from_beta(beta: float) -> ElectronParams:
    if not 0 < beta < 1:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    gamma = 1.0 / math.sqrt((1.0 - beta) * (1.0 + beta))
    return _electron(gamma, (gamma - 1.0) * ELECTRON_REST_ENERGY_EV)


def kinetic_energy_of(electron: ElectronParams) -> float:
    return (electron.gamma - 1.0) * ELECTRON_REST_ENERGY_EV


def photon_omega(photon_energy: float) -> float:
    if not photon_energy > 0:
        raise DomainError(f"photon energy must be positive, got {photon_energy} eV")
    return photon_energy * EV / HBAR


def phase_matched_period(electron: ElectronParams, photon_energy: float) -> float:
    """Grating period whose optical phase velocity equals the electron velocity."""
    return 2 * math.pi * electron.velocity / photon_omega(photon_energy)


def laser_grating(
    photon_energy: float,
    grating_period: float | None = None,
    e0_central: float = 0.0,
    theta: float = math.pi / 2,
    electron: ElectronParams | None = None,
) -> LaserGratingParams:
    if grating_period is None:
        if electron is None:
            raise DomainError("an automatic grating period needs the electron")
        grating_period = phase_matched_period(electron, photon_energy)
    if not grating_period > 0:
        raise DomainError(f"grating period must be positive, got {grating_period} m")
    if e0_central < 0:
        raise DomainError(f"field amplitude must be non-negative, got {e0_central} V/m")
    return LaserGratingParams(
        photon_energy=photon_energy,
        omega_l=photon_omega(photon_energy),
        grating_period=grating_period,
        q=2 * math.pi / grating_period,
        e0_central=e0_central,
        theta=theta,
    )


def phase_mismatch(electron: ElectronParams, laser: LaserGratingParams) -> float:
    """omega_L - q v0 in rad/s; zero when the grating is phase matched."""
    return laser.omega_l - laser.q * electron.velocity


def rabi_frequency(
    electron: ElectronParams, laser: LaserGratingParams, e0_local: float
) -> float:
    """Two-level coupling e E0 hbar k0 / (2 m omega_L), in joules."""
    if e0_local < 0:
        raise DomainError(f"field amplitude must be non-negative, got {e0_local} V/m")
    return ELEMENTARY_CHARGE * e0_local * electron.p0 / (2 * ELECTRON_MASS * laser.omega_l)


def rabi_gradient_factor(electron: ElectronParams, laser: LaserGratingParams) -> float:
    """dOmega/dE0 in J per (V/m)."""
    return ELEMENTARY_CHARGE * electron.p0 / (2 * ELECTRON_MASS * laser.omega_l)


def recoil_energy(laser: LaserGratingParams) -> float:
    return (HBAR * laser.q) ** 2 / (2 * ELECTRON_MASS)


def alpha_profile(
    electron: ElectronParams, laser: LaserGratingParams, e0: np.ndarray | float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-site (alpha0, alpha1) for local field amplitudes ``e0``."""
    e0 = np.asarray(e0, dtype=float)
    alpha0 = ELEMENTARY_CHARGE * e0 * electron.beta / (HBAR * laser.omega_l)
    alpha1 = ELEMENTARY_CHARGE * e0 / (
        electron.gamma * ELECTRON_MASS * SPEED_OF_LIGHT * laser.omega_l
    )
    return alpha0, alpha1


def kinetic_alpha(electron: ElectronParams) -> float:
    return HBAR / (2 * electron.gamma**3 * ELECTRON_MASS * SPEED_OF_LIGHT)


def tdse_coefficients(
    electron: ElectronParams, laser: LaserGratingParams, e0: float | None = None
) -> DerivedCouplings:
    e0 = laser.e0_central if e0 is None else e0
    omega = rabi_frequency(electron, laser, e0)
    alpha0, alpha1 = alpha_profile(electron, laser, e0)
    recoil = recoil_energy(laser)
    return DerivedCouplings(
        rabi_omega=omega,
        alpha0=float(alpha0),
        alpha1=float(alpha1),
        alpha2=kinetic_alpha(electron),
        recoil_energy=recoil,
        klein_cook_q=recoil / (2 * omega) if omega > 0 else math.inf,
    )


def klein_cook(derived: DerivedCouplings) -> float:
    """Q = recoil / (2|Omega|); ``math.inf`` when there is no coupling."""
    if derived.rabi_omega == 0:
        return math.inf
    return derived.recoil_energy / (2 * abs(derived.rabi_omega))


def two_level_validity(derived: DerivedCouplings) -> TwoLevelValidity:
    # |Omega| against hbar^2 q^2 / 8m, i.e. a quarter of the recoil energy
    ratio = abs(derived.rabi_omega) / (derived.recoil_energy / 4)
    return TwoLevelValidity(valid=ratio < 1, ratio=ratio, margin=1.0 - ratio)
