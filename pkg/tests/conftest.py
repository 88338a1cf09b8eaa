from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from app.schemas.physics import ElectronParams, LaserGratingParams
from app.services.physics import electron_from_energy, laser_grating


@pytest.fixture
def electron_100ev() -> ElectronParams:
    return electron_from_energy(100.0)


@pytest.fixture
def laser_4nm() -> LaserGratingParams:
    return laser_grating(6.2, 4e-9, 1e8, math.pi / 2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


SMALL_CONFIG = """\
# small run used across the runner and CLI tests
electron.kinetic_energy_ev = 100
laser.e0_v_per_m = 1e8
grating.period_nm = 4
wavepacket.delta_k_over_q = 0.05
wavepacket.dk_offset_over_q = 0.5
grid.domain_nm = 256
grid.n_points = 2048
evolution.t_total_ps = 0.05
evolution.n_steps = 200
evolution.snapshot_every = 50
evolution.observe_every = 10
outputs = spectrum, populations, record, wigner, heatmaps, dirac
"""


@pytest.fixture
def small_config_text() -> str:
    return SMALL_CONFIG


@pytest.fixture
def small_config(tmp_path: Path) -> Path:
    path = tmp_path / "small.conf"
    path.write_text(SMALL_CONFIG, encoding="utf-8")
    return path
