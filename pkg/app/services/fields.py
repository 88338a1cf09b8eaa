"""Optical field amplitude E0(xi) and phase theta(xi) seen by the packet."""
from __future__ import annotations

import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class FieldKind(str, Enum):
    uniform = "uniform"
    linear_gradient = "linear_gradient"
    tabulated = "tabulated"


class FieldFrame(str, Enum):
    co_moving = "co_moving"
    lab = "lab"


class FieldProfile(BaseModel):
    """Piecewise-linear E0 profile, clamped to its end values outside the window.

    In the ``lab`` frame the window is fixed in the laboratory, so the profile is
    evaluated at ``xi + v0 t`` and the Hamiltonian becomes time dependent.
    """

    model_config = ConfigDict(frozen=True)

    kind: FieldKind = FieldKind.uniform
    e0_central: float = Field(default=0.0, ge=0)
    xi_lo: float | None = None
    xi_hi: float | None = None
    e_lo: float | None = Field(default=None, ge=0)
    e_hi: float | None = Field(default=None, ge=0)
    xi_points: tuple[float, ...] = ()
    e_points: tuple[float, ...] = ()
    theta: float = math.pi / 2
    theta_slope: float = 0.0
    frame: FieldFrame = FieldFrame.co_moving

    @model_validator(mode="after")
    def _check_shape(self) -> FieldProfile:
        if self.kind is FieldKind.linear_gradient:
            if None in (self.xi_lo, self.xi_hi, self.e_lo, self.e_hi):
                raise ValueError("linear gradient needs xi_lo, xi_hi, e_lo and e_hi")
            if not self.xi_hi > self.xi_lo:
                raise ValueError("xi_hi must exceed xi_lo")
        if self.kind is FieldKind.tabulated:
            if len(self.xi_points) < 2 or len(self.xi_points) != len(self.e_points):
                raise ValueError("tabulated profile needs matching xi/e points (>= 2)")
            if np.any(np.diff(self.xi_points) <= 0):
                raise ValueError("tabulated xi points must increase")
            if min(self.e_points) < 0:
                raise ValueError("field amplitude must be non-negative")
        return self

    @classmethod
    def uniform(cls, e0: float, theta: float = math.pi / 2) -> FieldProfile:
        return cls(kind=FieldKind.uniform, e0_central=e0, theta=theta)

    @classmethod
    def linear_gradient(
        cls,
        xi_lo: float,
        xi_hi: float,
        e_lo: float,
        e_hi: float,
        theta: float = math.pi / 2,
        frame: FieldFrame = FieldFrame.co_moving,
    ) -> FieldProfile:
        e_mid = e_lo + (e_hi - e_lo) * (0.0 - xi_lo) / (xi_hi - xi_lo)
        return cls(
            kind=FieldKind.linear_gradient,
            e0_central=min(max(e_mid, min(e_lo, e_hi)), max(e_lo, e_hi)),
            xi_lo=xi_lo,
            xi_hi=xi_hi,
            e_lo=e_lo,
            e_hi=e_hi,
            theta=theta,
            frame=frame,
        )

    def _nodes(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind is FieldKind.linear_gradient:
            return np.array([self.xi_lo, self.xi_hi]), np.array([self.e_lo, self.e_hi])
        return np.asarray(self.xi_points, dtype=float), np.asarray(self.e_points, dtype=float)

    @property
    def has_gradient(self) -> bool:
        if self.kind is FieldKind.uniform:
            return False
        return bool(np.ptp(self._nodes()[1]) > 0)

    @property
    def is_time_dependent(self) -> bool:
        return self.frame is FieldFrame.lab and self.has_gradient

    def gradient_at(self, xi: np.ndarray | float) -> np.ndarray:
        """dE0/dxi in V/m^2 (zero in the clamped regions)."""
        xi = np.asarray(xi, dtype=float)
        if self.kind is FieldKind.uniform:
            return np.zeros_like(xi)
        nodes, values = self._nodes()
        slopes = np.diff(values) / np.diff(nodes)
        segment = np.searchsorted(nodes, xi, side="right") - 1
        inside = (segment >= 0) & (segment < len(slopes))
        return np.where(inside, slopes[np.clip(segment, 0, len(slopes) - 1)], 0.0)

    def theta_at(self, xi: np.ndarray | float) -> np.ndarray:
        return self.theta + self.theta_slope * np.asarray(xi, dtype=float)


def field_at(profile: FieldProfile, xi: np.ndarray | float, z_offset: float = 0.0) -> np.ndarray:
    """E0 at co-moving positions ``xi``; ``z_offset`` (= v0 t) shifts lab-frame windows."""
    xi = np.asarray(xi, dtype=float)
    if profile.kind is FieldKind.uniform:
        return np.full_like(xi, profile.e0_central)
    if profile.frame is FieldFrame.lab:
        xi = xi + z_offset
    nodes, values = profile._nodes()
    return np.interp(xi, nodes, values)
