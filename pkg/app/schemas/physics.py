from __future__ import annotations

import math

from pydantic import BaseModel, ConfigDict, Field

from app.core.constants import ELECTRON_MASS, SPEED_OF_LIGHT


class ElectronParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    kinetic_energy: float = Field(gt=0, description="eV")
    beta: float = Field(gt=0, lt=1)
    gamma: float = Field(ge=1)
    k0: float = Field(gt=0, description="rad/m")
    p0: float = Field(gt=0, description="kg m/s")

    @property
    def velocity(self) -> float:
        return self.beta * SPEED_OF_LIGHT

    @property
    def mass_eff(self) -> float:
        """Longitudinal mass gamma^3 m used by the solver's kinetic term."""
        return self.gamma**3 * ELECTRON_MASS


class LaserGratingParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    photon_energy: float = Field(gt=0, description="eV")
    omega_l: float = Field(gt=0, description="rad/s")
    grating_period: float = Field(gt=0, description="m")
    q: float = Field(gt=0, description="rad/m")
    e0_central: float = Field(default=0.0, ge=0, description="V/m")
    theta: float = math.pi / 2

    @property
    def wavelength(self) -> float:
        return 2 * math.pi * SPEED_OF_LIGHT / self.omega_l


class DerivedCouplings(BaseModel):
    model_config = ConfigDict(frozen=True)

    rabi_omega: float = Field(ge=0, description="J")
    alpha0: float = Field(ge=0, description="1/m")
    alpha1: float = Field(ge=0)
    alpha2: float = Field(gt=0, description="m")
    recoil_energy: float = Field(gt=0, description="J")
    klein_cook_q: float = Field(ge=0)


class TwoLevelValidity(BaseModel):
    model_config = ConfigDict(frozen=True)

    valid: bool
    ratio: float
    margin: float
