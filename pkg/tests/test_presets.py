from __future__ import annotations

import math

import pytest

from app.schemas.experiment import OutputKind, PresetName
from app.services.experiment import resolve
from app.services.fields import FieldFrame
from app.services.presets import preset_params


@pytest.mark.parametrize("name", list(PresetName))
def test_preset_grids_hold_whole_grating_periods(name: PresetName) -> None:
    resolved = resolve(preset_params(name))
    periods = resolved.grid.length / resolved.laser.grating_period
    assert periods == pytest.approx(round(periods), abs=1e-9)
    assert resolved.evolution.n_steps is not None


def test_fig2a_is_the_plain_bragg_experiment() -> None:
    params = preset_params("fig2a")
    assert params.grating.period_nm == 4.0
    assert params.laser.gradient is None
    assert params.wavepacket.delta_k_over_q == 0.02
    assert params.evolution.t_total_ps == 25.0
    assert set(params.outputs) == set(OutputKind)


def test_gradient_presets_use_the_same_ramp() -> None:
    fig2d = resolve(preset_params(PresetName.fig2d)).profile
    fig3 = resolve(preset_params(PresetName.fig3)).profile
    assert fig2d.frame is FieldFrame.co_moving
    assert fig3.frame is FieldFrame.lab
    for profile in (fig2d, fig3):
        assert profile.xi_lo == pytest.approx(-100e-9)
        assert profile.e_hi == 2e8
        assert profile.e0_central == pytest.approx(1e8)


def test_fig2c_starts_in_a_superposition() -> None:
    spec = resolve(preset_params("fig2c")).spec
    assert spec.superposition is not None
    assert spec.superposition.dk_offset == -0.5
    assert resolve(preset_params("fig2d")).spec.superposition is None


def test_gradient_on_and_off_differ_only_in_the_ramp() -> None:
    on = preset_params("s1_on").model_dump()
    off = preset_params("s1_off").model_dump()
    assert on["laser"].pop("gradient") is not None
    assert off["laser"].pop("gradient") is None
    assert on == off


def test_particle_like_presets() -> None:
    thetas = {
        "s3_theta_minus_pi": -math.pi,
        "s3_theta_plus_half_pi": math.pi / 2,
        "s3_theta_minus_half_pi": -math.pi / 2,
    }
    for name, theta in thetas.items():
        params = preset_params(name)
        assert params.laser.theta_rad == theta
        assert params.laser.e0_v_per_m == 1e9
        assert params.wavepacket.dk_offset_over_q == 0.0
    s4 = resolve(preset_params("s4"))
    assert s4.spec.chirp_drift == pytest.approx(0.1)


def test_fast_electron_preset_uses_the_phase_matched_period() -> None:
    resolved = resolve(preset_params("s2"))
    assert resolved.electron.beta == 0.05
    assert resolved.laser.grating_period == pytest.approx(
        resolved.electron.beta * resolved.laser.wavelength, rel=1e-12
    )


def test_unknown_preset() -> None:
    with pytest.raises(ValueError):
        preset_params("fig9")
