"""Colour-mapped P6 pixmaps of FEQO grids."""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from matplotlib import colormaps
from matplotlib.colors import Normalize, SymLogNorm
from PIL import Image

from app.core.errors import OutputError
from app.services.serialization import read_grid

logger = logging.getLogger(__name__)

DEFAULT_COLORMAP = "viridis"
SIGNED_COLORMAP = "RdBu_r"
# linear band of the symmetric-log scale, relative to max |value|
LOG_LINEAR_FRACTION = 1e-3


def normalize(values: np.ndarray, log: bool = False) -> np.ndarray:
    """Map a grid onto [0, 1].

    Non-negative data spans [0, max]; signed data is centred so that zero lands
    on 0.5. A constant grid maps to a constant.
    """
    values = np.nan_to_num(np.asarray(values, dtype=np.float64))
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    if peak == 0.0:
        return np.zeros_like(values)
    signed = float(values.min()) < 0
    vmin, vmax = (-peak, peak) if signed else (0.0, peak)
    if log:
        norm = SymLogNorm(linthresh=LOG_LINEAR_FRACTION * peak, vmin=vmin, vmax=vmax, base=10)
    else:
        norm = Normalize(vmin=vmin, vmax=vmax)
    return np.clip(np.asarray(norm(values), dtype=np.float64), 0.0, 1.0)


def colorize(values: np.ndarray, cmap: str | None = None, log: bool = False) -> np.ndarray:
    """(rows, cols, 3) uint8 pixels, row 0 first."""
    values = np.asarray(values, dtype=np.float64)
    if cmap is None:
        cmap = SIGNED_COLORMAP if values.size and values.min() < 0 else DEFAULT_COLORMAP
    try:
        colormap = colormaps[cmap]
    except KeyError as exc:
        raise OutputError(f"unknown colour map {cmap!r}") from exc
    return colormap(normalize(values, log), bytes=True)[..., :3]


def write_ppm(path: Path, values: np.ndarray, cmap: str | None = None, log: bool = False) -> Path:
    pixels = np.ascontiguousarray(colorize(values, cmap, log))
    try:
        Image.fromarray(pixels).save(path, format="PPM")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    logger.debug("Rendered %dx%d heatmap to %s", pixels.shape[1], pixels.shape[0], path)
    return Path(path)


def render_heatmap(
    grid_file: Path,
    out: Path,
    cmap: str | None = None,
    log: bool = False,
) -> Path:
    grid = read_grid(grid_file)
    logger.info("Rendering %s (%dx%d) to %s", grid_file, *grid.shape, out)
    return write_ppm(out, grid.values, cmap, log)
