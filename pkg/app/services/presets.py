"""Built-in experiments.

Every preset is a complete ExperimentParams. The table below is the single
place their numbers live; ``preset <name> --emit-config`` prints the same
values in the flat config format.
"""
from __future__ import annotations

import math
from typing import Any

from app.schemas.experiment import ExperimentParams, OutputKind, PresetName

ELECTRON_100EV = {"kinetic_energy_ev": 100.0}
GRATING_4NM = {"period_nm": 4.0}

# 0 V/m at -100 nm to 2e8 V/m at +100 nm
FIG2_GRADIENT = {
    "xi_lo_nm": -100.0,
    "xi_hi_nm": 100.0,
    "e_lo_v_per_m": 0.0,
    "e_hi_v_per_m": 2e8,
}

ALL_OUTPUTS = [kind.value for kind in OutputKind]


def _fig2a() -> dict[str, Any]:
    return {
        "electron": ELECTRON_100EV,
        "laser": {"e0_v_per_m": 1e8},
        "grating": GRATING_4NM,
        "wavepacket": {"delta_k_over_q": 0.02, "dk_offset_over_q": 0.5},
        "grid": {"domain_nm": 2048.0, "n_points": 65536},
        "evolution": {
            "t_total_ps": 25.0,
            "n_steps": 50000,
            "snapshot_every": 1000,
            "observe_every": 10,
        },
        "outputs": ALL_OUTPUTS,
    }


def _fig2_gradient(superposed: bool) -> dict[str, Any]:
    wavepacket: dict[str, Any] = {"delta_k_over_q": 0.02, "dk_offset_over_q": 0.5}
    if superposed:
        wavepacket.update(superposition_offset_over_q=-0.5, superposition_weight_re=1.0)
    return {
        "electron": ELECTRON_100EV,
        "laser": {"e0_v_per_m": 1e8, "gradient": FIG2_GRADIENT},
        "grating": GRATING_4NM,
        "wavepacket": wavepacket,
        "grid": {"domain_nm": 1024.0, "n_points": 32768},
        # the co-moving gradient splits the lobes by ~0.15 q within this window
        "evolution": {
            "t_total_ps": 0.25,
            "n_steps": 2000,
            "snapshot_every": 100,
            "observe_every": 10,
        },
        "outputs": ALL_OUTPUTS,
    }


def _fig3(gradient: bool) -> dict[str, Any]:
    laser: dict[str, Any] = {"e0_v_per_m": 1e8}
    if gradient:
        # fixed in the laboratory: the packet crosses the ramp once
        laser["gradient"] = {**FIG2_GRADIENT, "frame": "lab"}
    return {
        "electron": ELECTRON_100EV,
        "laser": laser,
        "grating": GRATING_4NM,
        "wavepacket": {"delta_k_over_q": 0.15, "dk_offset_over_q": 0.5},
        "grid": {"domain_nm": 8192.0, "n_points": 65536},
        "evolution": {
            "t_total_ps": 25.9,
            "n_steps": 100000,
            "snapshot_every": 12500,
            "observe_every": 50,
        },
        "outputs": ALL_OUTPUTS,
    }


def _s2() -> dict[str, Any]:
    return {
        "electron": {"beta": 0.05},
        "laser": {"e0_v_per_m": 1e8},
        "grating": {"period_nm": "auto"},
        "wavepacket": {"delta_k_over_q": 0.05, "dk_offset_over_q": 0.5},
        "grid": {"domain_nm": 640.0, "n_points": 65536},
        "evolution": {
            "t_total_ps": 0.52,
            "n_steps": 100000,
            "snapshot_every": 10000,
            "observe_every": 100,
        },
        "outputs": ALL_OUTPUTS,
    }


def _particle_like(delta_k: float, theta: float, chirp_cm: float = 0.0) -> dict[str, Any]:
    return {
        "electron": ELECTRON_100EV,
        "laser": {"e0_v_per_m": 1e9, "theta_rad": theta},
        "grating": GRATING_4NM,
        "wavepacket": {
            "delta_k_over_q": delta_k,
            "dk_offset_over_q": 0.0,
            "chirp_ld_cm": chirp_cm,
        },
        "grid": {"domain_nm": 256.0, "n_points": 16384},
        "evolution": {
            "t_total_ps": 0.14,
            "n_steps": 40000,
            "snapshot_every": 5000,
            "observe_every": 20,
        },
        "outputs": ALL_OUTPUTS,
    }


PRESETS = {
    PresetName.fig2a: _fig2a,
    PresetName.fig2c: lambda: _fig2_gradient(superposed=True),
    PresetName.fig2d: lambda: _fig2_gradient(superposed=False),
    PresetName.fig3: lambda: _fig3(gradient=True),
    PresetName.s1_on: lambda: _fig3(gradient=True),
    PresetName.s1_off: lambda: _fig3(gradient=False),
    PresetName.s2: _s2,
    PresetName.s3_theta_minus_pi: lambda: _particle_like(1.5, -math.pi),
    PresetName.s3_theta_plus_half_pi: lambda: _particle_like(1.5, math.pi / 2),
    PresetName.s3_theta_minus_half_pi: lambda: _particle_like(1.5, -math.pi / 2),
    PresetName.s4: lambda: _particle_like(1.2, math.pi / 2, chirp_cm=10.0),
}


def preset_params(name: PresetName | str) -> ExperimentParams:
    return ExperimentParams.model_validate(PRESETS[PresetName(name)]())
