"""Turn validated experiment parameters into solver-ready physics objects."""
from __future__ import annotations

import logging
from dataclasses import dataclass

from app.core.constants import to_si
from app.schemas.experiment import ExperimentParams
from app.schemas.physics import ElectronParams, LaserGratingParams
from app.services.fields import FieldProfile
from app.services.physics import electron_from_beta, electron_from_energy, laser_grating
from app.services.tdse_solver import EvolutionConfig
from app.services.wavepacket import Grid, Superposition, WavepacketSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResolvedExperiment:
    electron: ElectronParams
    laser: LaserGratingParams
    profile: FieldProfile
    grid: Grid
    spec: WavepacketSpec
    evolution: EvolutionConfig


def resolve_electron(params: ExperimentParams) -> ElectronParams:
    section = params.electron
    if section.beta is not None:
        return electron_from_beta(section.beta)
    return electron_from_energy(section.kinetic_energy_ev)


def resolve_laser(params: ExperimentParams, electron: ElectronParams) -> LaserGratingParams:
    """Grating parameters; with a gradient the central amplitude is E0(xi = 0)."""
    period = params.grating.period_nm
    return laser_grating(
        params.laser.photon_energy_ev,
        None if period == "auto" else to_si(period, "nm"),
        resolve_profile(params).e0_central,
        params.laser.theta_rad,
        electron,
    )


def resolve_profile(params: ExperimentParams) -> FieldProfile:
    laser = params.laser
    gradient = laser.gradient
    if gradient is None:
        return FieldProfile.uniform(laser.e0_v_per_m, laser.theta_rad)
    return FieldProfile.linear_gradient(
        to_si(gradient.xi_lo_nm, "nm"),
        to_si(gradient.xi_hi_nm, "nm"),
        gradient.e_lo_v_per_m,
        gradient.e_hi_v_per_m,
        theta=laser.theta_rad,
        frame=gradient.frame,
    )


def resolve_grid(params: ExperimentParams, laser: LaserGratingParams) -> Grid:
    """Centred grid whose length is a whole number of grating periods."""
    requested = to_si(params.grid.domain_nm, "nm")
    periods = max(1, round(requested / laser.grating_period))
    length = periods * laser.grating_period
    if abs(length - requested) > 1e-6 * requested:
        logger.info(
            "Domain %.4g nm rounded to %d grating periods (%.4g nm)",
            params.grid.domain_nm, periods, length * 1e9,
        )
    return Grid.centered(length, params.grid.n_points)


def resolve_spec(params: ExperimentParams) -> WavepacketSpec:
    section = params.wavepacket
    superposition = None
    if section.superposition_offset_over_q is not None:
        superposition = Superposition(
            section.superposition_offset_over_q,
            complex(section.superposition_weight_re, section.superposition_weight_im),
        )
    return WavepacketSpec(
        delta_k=section.delta_k_over_q,
        dk_offset=section.dk_offset_over_q,
        chirp_drift=to_si(section.chirp_ld_cm, "cm"),
        superposition=superposition,
    )


def resolve_evolution(params: ExperimentParams) -> EvolutionConfig:
    section = params.evolution
    return EvolutionConfig(
        total_time=to_si(section.t_total_ps, "ps"),
        n_steps=section.n_steps,
        snapshot_every=section.snapshot_every,
        observe_every=section.observe_every,
        boundary=section.boundary,
        symmetrize=section.symmetrize,
        norm_tolerance=section.norm_tolerance,
        phase_mismatch=section.phase_mismatch,
    )


def resolve(params: ExperimentParams) -> ResolvedExperiment:
    electron = resolve_electron(params)
    laser = resolve_laser(params, electron)
    return ResolvedExperiment(
        electron=electron,
        laser=laser,
        profile=resolve_profile(params),
        grid=resolve_grid(params, laser),
        spec=resolve_spec(params),
        evolution=resolve_evolution(params),
    )
