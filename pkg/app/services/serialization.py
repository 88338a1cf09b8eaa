"""On-disk formats: FEQO binary grids, CSV tables and the run manifest."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from app.core.errors import GridFormatError, OutputError

logger = logging.getLogger(__name__)

MAGIC = b"FEQO"
FORMAT_VERSION = 1
# magic, version u32, rows u64, cols u64, row_min, row_max, col_min, col_max
HEADER = struct.Struct("<4sIQQ4d")
FLOAT_FORMAT = "{:.12e}"

SPECTRUM_COLUMNS = ("dk_over_q", "probability_density")
# mean_dk_*: population-weighted delta-k (rad/m) of the +q/2 and -q/2 windows;
# split_rad_per_m: distance between the two strongest lobes of the +q/2 window
POPULATION_COLUMNS = (
    "t_ps",
    "p_plus_half",
    "p_minus_half",
    "leakage",
    "mean_dk_plus",
    "mean_dk_minus",
    "split_rad_per_m",
)


@dataclass(frozen=True)
class GridFile:
    values: np.ndarray  # (rows, cols), float64
    row_bounds: tuple[float, float]
    col_bounds: tuple[float, float]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def write_grid(
    path: Path,
    values: np.ndarray,
    row_bounds: tuple[float, float],
    col_bounds: tuple[float, float],
) -> Path:
    data = np.ascontiguousarray(values, dtype="<f8")
    if data.ndim != 2:
        raise OutputError(f"grid must be two-dimensional, got shape {data.shape}")
    rows, cols = data.shape
    header = HEADER.pack(MAGIC, FORMAT_VERSION, rows, cols, *row_bounds, *col_bounds)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(data.tobytes(order="C"))
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    logger.debug("Wrote %dx%d grid to %s", rows, cols, path)
    return Path(path)


def read_grid(path: Path) -> GridFile:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise GridFormatError(f"cannot read {path}: {exc}") from exc
    if len(raw) < HEADER.size:
        raise GridFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, rows, cols, r0, r1, c0, c1 = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise GridFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise GridFormatError(f"{path}: unsupported version {version}")
    expected = rows * cols * 8
    payload = raw[HEADER.size :]
    if len(payload) != expected:
        raise GridFormatError(
            f"{path}: payload holds {len(payload)} bytes, header announces {expected}"
        )
    values = np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(np.float64)
    return GridFile(values=values, row_bounds=(r0, r1), col_bounds=(c0, c1))


def _format(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT.format(float(value))
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                if len(row) != len(columns):
                    raise OutputError(f"{path}: row has {len(row)} fields, expected {len(columns)}")
                writer.writerow([_format(v) for v in row])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return Path(path)


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    """Header and float matrix of a numeric CSV written by ``write_csv``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        body = [[float(v) for v in row] for row in reader]
    return header, np.array(body, dtype=np.float64).reshape(len(body), len(header))


def write_spectrum_csv(path: Path, dk_over_q: np.ndarray, density: np.ndarray) -> Path:
    return write_csv(path, SPECTRUM_COLUMNS, zip(dk_over_q, density))


def write_populations_csv(path: Path, rows: Iterable[Sequence[float]]) -> Path:
    return write_csv(path, POPULATION_COLUMNS, rows)


def sha256_of(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def file_entry(path: Path, root: Path) -> dict[str, Any]:
    path = Path(path)
    return {
        "name": path.relative_to(root).as_posix(),
        "size": path.stat().st_size,
        "sha256": sha256_of(path),
    }


def write_manifest(path: Path, payload: dict[str, Any], files: Iterable[Path]) -> dict[str, Any]:
    root = Path(path).parent
    manifest = dict(payload)
    manifest["files"] = sorted(
        (file_entry(f, root) for f in files), key=lambda entry: entry["name"]
    )
    try:
        Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    logger.info("Manifest written to %s (%d files)", path, len(manifest["files"]))
    return manifest


def read_manifest(path: Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))
