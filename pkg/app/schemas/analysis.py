from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class RegimeName(str, Enum):
    raman_nath_pinem = "RamanNathPINEM"
    bragg = "Bragg"
    ultrafast_stern_gerlach = "UltrafastSternGerlach"
    anomalous_bragg = "AnomalousBragg"
    apinem = "APINEM"
    dla = "DLA"
    indeterminate = "Indeterminate"


class Criterion(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    value: float
    threshold: float
    comparison: str
    passed: bool
    note: str | None = None


class RegimeLabel(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: RegimeName
    rationale: list[Criterion]


class RegimeThresholds(BaseModel):
    """Cuts of the classification tree; sizes are in units of beta * lambda."""

    model_config = ConfigDict(frozen=True)

    beta_fast: float = Field(default=0.5, gt=0, lt=1)
    plane_wave_min: float = Field(default=0.4, gt=0)
    point_particle_max: float = Field(default=0.2, gt=0)
    klein_cook_min: float = Field(default=1.0, gt=0)
    anomalous_dk_over_q: float = Field(default=0.05, gt=0)


class Peak(BaseModel):
    model_config = ConfigDict(frozen=True)

    position: float  # rad/m, absolute delta-k
    height: float


class SidebandWindow(BaseModel):
    model_config = ConfigDict(frozen=True)

    order: float  # units of q
    population: float = Field(ge=0)
    mean_offset: float  # rad/m from the window centre
    peaks: list[Peak] = []
    split: float = Field(default=0.0, ge=0)  # rad/m between the two strongest lobes

    @property
    def single_lobe(self) -> bool:
        return len(self.peaks) < 2


class SidebandReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    q: float
    window_halfwidth: float
    windows: list[SidebandWindow]
    leakage: float
    tail: float

    @property
    def populations(self) -> dict[float, float]:
        return {w.order: w.population for w in self.windows}

    def window(self, order: float) -> SidebandWindow:
        for w in self.windows:
            if abs(w.order - order) < 1e-9:
                return w
        raise KeyError(order)

    def mean_dk(self, order: float) -> float:
        """Population-weighted delta-k (rad/m) inside one window."""
        return order * self.q + self.window(order).mean_offset


class SplitMeasurement(BaseModel):
    model_config = ConfigDict(frozen=True)

    split: float
    single_lobe: bool
