from __future__ import annotations

import math
from enum import Enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.services.fields import FieldFrame
from app.services.tdse_solver import Boundary


class OutputKind(str, Enum):
    spectrum = "spectrum"
    populations = "populations"
    record = "record"
    wigner = "wigner"
    heatmaps = "heatmaps"
    dirac = "dirac"


class PresetName(str, Enum):
    fig2a = "fig2a"
    fig2c = "fig2c"
    fig2d = "fig2d"
    fig3 = "fig3"
    s1_on = "s1_on"
    s1_off = "s1_off"
    s2 = "s2"
    s3_theta_minus_pi = "s3_theta_minus_pi"
    s3_theta_plus_half_pi = "s3_theta_plus_half_pi"
    s3_theta_minus_half_pi = "s3_theta_minus_half_pi"
    s4 = "s4"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ElectronSection(_Section):
    kinetic_energy_ev: float | None = Field(default=None, gt=0)
    beta: float | None = Field(default=None, gt=0, lt=1)

    @model_validator(mode="after")
    def _one_of(self) -> ElectronSection:
        if (self.kinetic_energy_ev is None) == (self.beta is None):
            raise ValueError("set exactly one of kinetic_energy_ev or beta")
        return self


class GradientSection(_Section):
    xi_lo_nm: float
    xi_hi_nm: float
    e_lo_v_per_m: float = Field(ge=0)
    e_hi_v_per_m: float = Field(ge=0)
    frame: FieldFrame = FieldFrame.co_moving

    @model_validator(mode="after")
    def _ordered(self) -> GradientSection:
        if not self.xi_hi_nm > self.xi_lo_nm:
            raise ValueError("xi_hi_nm must exceed xi_lo_nm")
        return self


class LaserSection(_Section):
    photon_energy_ev: float = Field(default=6.2, gt=0)
    e0_v_per_m: float = Field(default=1e8, ge=0)
    theta_rad: float = math.pi / 2
    gradient: GradientSection | None = None


class GratingSection(_Section):
    period_nm: float | Literal["auto"] = "auto"

    @field_validator("period_nm")
    @classmethod
    def _positive(cls, value):
        if value != "auto" and not value > 0:
            raise ValueError("period_nm must be positive or 'auto'")
        return value


class WavepacketSection(_Section):
    delta_k_over_q: float = Field(gt=0)
    dk_offset_over_q: float = 0.5
    superposition_offset_over_q: float | None = None
    superposition_weight_re: float = 0.0
    superposition_weight_im: float = 0.0
    chirp_ld_cm: float = Field(default=0.0, ge=0)


class GridSection(_Section):
    domain_nm: float = Field(gt=0)
    n_points: int = Field(default=65536, ge=4)

    @field_validator("n_points")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value & (value - 1):
            raise ValueError("n_points must be a power of two")
        return value


class EvolutionSection(_Section):
    t_total_ps: float = Field(gt=0)
    n_steps: int | None = Field(default=None, ge=1)
    snapshot_every: int = Field(default=100, ge=1)
    observe_every: int = Field(default=10, ge=1)
    boundary: Boundary = Boundary.periodic
    symmetrize: bool = True
    norm_tolerance: float = Field(default=1e-6, gt=0)
    phase_mismatch: bool = False


DEFAULT_OUTPUTS = [OutputKind.spectrum, OutputKind.populations, OutputKind.record]


class ExperimentParams(_Section):
    electron: ElectronSection
    laser: LaserSection = LaserSection()
    grating: GratingSection = GratingSection()
    wavepacket: WavepacketSection
    grid: GridSection
    evolution: EvolutionSection
    outputs: list[OutputKind] = DEFAULT_OUTPUTS

    @field_validator("outputs", mode="before")
    @classmethod
    def _split_outputs(cls, value):
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value
