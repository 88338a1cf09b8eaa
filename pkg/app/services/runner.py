"""Run orchestration: single experiments, parameter sweeps and their artifacts."""
from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from pathos.pools import ProcessPool
from slugify import slugify

from app.core.constants import REFERENCE_USG_SPLIT, from_si
from app.core.errors import (
    ConfigValidationError,
    NoPeakError,
    SimulatorError,
    SolverAbort,
    SweepCapExceeded,
)
from app.schemas.analysis import RegimeLabel
from app.schemas.experiment import ExperimentParams, OutputKind
from app.schemas.physics import DerivedCouplings, TwoLevelValidity
from app.services.analysis import (
    classify,
    measure_split,
    momentum_spectrum,
    sideband_populations,
    usg_prediction,
    wigner,
)
from app.services.atlas import write_regime_atlas
from app.services.config_parser import flatten, parse_config_text, render_value, serialize_config
from app.services.dirac_model import (
    DiracParams,
    SpinorLattice,
    dirac_evolve,
    lattice_orders,
)
from app.services.experiment import ResolvedExperiment, resolve
from app.services.heatmap import write_ppm
from app.services.physics import klein_cook, tdse_coefficients, two_level_validity
from app.services.serialization import (
    write_csv,
    write_grid,
    write_manifest,
    write_populations_csv,
    write_spectrum_csv,
)
from app.services.tdse_solver import SimulationRecord, evolve
from app.services.wavepacket import Wavepacket, as_momentum, make_gaussian
from app.settings import PROJECT_NAME, SWEEP_CAP, SWEEP_WORKERS, VERSION

logger = logging.getLogger(__name__)

SPECTROGRAM_SPAN = 2.0  # |dk| / q kept in the momentum-vs-time grid
SPECTROGRAM_MAX_COLUMNS = 1024
DIRAC_MAX_RECORDS = 1000

REGIME_MAP_COLUMNS = (
    "point",
    "klein_cook",
    "validity_ratio",
    "validity_margin",
    "leakage",
    "split_rad_per_m",
    "label",
    "status",
)


def _json_float(value: float) -> float | str:
    value = float(value)
    return value if math.isfinite(value) else str(value)


@dataclass(frozen=True)
class Summary:
    """Derived quantities of an experiment, available before any evolution."""

    resolved: ResolvedExperiment
    derived: DerivedCouplings
    validity: TwoLevelValidity
    regime: RegimeLabel

    @property
    def klein_cook(self) -> float:
        return klein_cook(self.derived)

    def as_dict(self) -> dict[str, Any]:
        laser = self.resolved.laser
        return {
            "grating_period_nm": from_si(laser.grating_period, "nm"),
            "rabi_omega_ev": from_si(self.derived.rabi_omega, "eV"),
            "klein_cook": _json_float(self.klein_cook),
            "validity_ratio": self.validity.ratio,
            "validity_margin": self.validity.margin,
            "label": self.regime.label.value,
        }


def summarize(params: ExperimentParams) -> Summary:
    resolved = resolve(params)
    derived = tdse_coefficients(resolved.electron, resolved.laser)
    validity = two_level_validity(derived)
    regime = classify(
        resolved.electron,
        resolved.laser,
        derived,
        resolved.spec.delta_k,
        chirp_drift=resolved.spec.chirp_drift,
        has_gradient=resolved.profile.has_gradient,
    )
    return Summary(resolved, derived, validity, regime)


@dataclass
class RunObserver:
    """Collects sideband populations and a coarse spectrogram during an evolution."""

    q: float
    times: list[float] = field(default_factory=list)
    rows: list[tuple[float, ...]] = field(default_factory=list)
    spectrogram: list[np.ndarray] = field(default_factory=list)
    _columns: np.ndarray | None = None
    _bin: int = 1

    def _select(self, dk: np.ndarray) -> None:
        inside = np.flatnonzero(np.abs(dk) < SPECTROGRAM_SPAN * self.q)
        self._bin = max(1, math.ceil(inside.size / SPECTROGRAM_MAX_COLUMNS))
        usable = inside.size - inside.size % self._bin
        self._columns = inside[:usable]

    def __call__(self, t: float, wp: Wavepacket) -> None:
        report = sideband_populations(wp, self.q)
        plus, minus = report.window(0.5), report.window(-0.5)
        try:
            split = measure_split(report, 0.5).split
        except NoPeakError:
            split = float("nan")
        self.times.append(t)
        self.rows.append(
            (
                from_si(t, "ps"),
                plus.population,
                minus.population,
                report.leakage,
                report.mean_dk(0.5),
                report.mean_dk(-0.5),
                split,
            )
        )
        dk, density = momentum_spectrum(wp)
        if self._columns is None:
            self._select(dk)
        binned = density[self._columns].reshape(-1, self._bin).mean(axis=1)
        self.spectrogram.append(binned)

    def spectrogram_grid(self) -> np.ndarray:
        return np.array(self.spectrogram)


def _snapshot_grid(record: SimulationRecord, q: float) -> tuple[np.ndarray, tuple, tuple]:
    rows = np.array([as_momentum(snap).density for snap in record.snapshots])
    axis = record.snapshots[0].grid.dk_axis / q
    times = from_si(record.times, "ps")
    return rows, (float(times[0]), float(times[-1])), (float(axis[0]), float(axis[-1]))


def _dirac_rows(
    resolved: ResolvedExperiment, initial: Wavepacket, n_records: int
) -> tuple[list[str], list[tuple[float, ...]]] | None:
    profile = resolved.profile
    if profile.is_time_dependent:
        logger.warning("Lattice comparison needs a time-independent coupling; dirac.csv skipped")
        return None
    half_odd = abs(2 * resolved.spec.dk_offset) % 2 == 1
    orders = lattice_orders(6 if half_odd else 7)
    lattice = SpinorLattice.from_wavepacket(initial, resolved.laser.q, orders)
    params = DiracParams.from_experiment(
        resolved.electron,
        resolved.laser,
        profile=profile if profile.has_gradient else None,
    )
    trajectory = dirac_evolve(
        lattice, params, resolved.evolution.total_time, n_records, method="exact"
    )
    columns = ["t_ps"] + [f"p_{order:+g}" for order in orders]
    populations = trajectory.populations()
    rows = [
        (from_si(t, "ps"), *map(float, pops)) for t, pops in zip(trajectory.times, populations)
    ]
    return columns, rows


def _split_summary(observer: RunObserver, summary: Summary, record: SimulationRecord) -> dict:
    resolved = summary.resolved
    prediction = usg_prediction(
        resolved.profile, resolved.electron, resolved.laser, float(record.times[-1])
    )
    final = observer.rows[-1] if observer.rows else None
    single = None
    if record.snapshots:
        try:
            single = measure_split(
                sideband_populations(record.final, resolved.laser.q), 0.5
            ).single_lobe
        except NoPeakError:
            single = None
    return {
        "measured_rad_per_m": _json_float(final[-1]) if final else None,
        "single_lobe": single,
        "usg_prediction_rad_per_m": prediction,
        "expected_split_rad_per_m": 2 * prediction,
        "reference_split_rad_per_m": REFERENCE_USG_SPLIT,
    }


def run(params: ExperimentParams, out_dir: Path) -> dict[str, Any]:
    """Evolve one experiment and write its artifacts plus ``manifest.json``."""
    started = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = summarize(params)
    resolved = summary.resolved
    q = resolved.laser.q
    outputs = set(params.outputs)
    logger.info(
        "Run %s: %s, Q=%.3f, r=%.3f",
        out_dir, summary.regime.label.value, summary.klein_cook, summary.validity.ratio,
    )

    initial = make_gaussian(resolved.grid, resolved.electron, resolved.laser, resolved.spec)
    observer = RunObserver(q)
    status, error, notes = "ok", None, []
    evolution_started = time.perf_counter()
    try:
        record = evolve(
            initial, resolved.electron, resolved.laser, resolved.profile,
            resolved.evolution, observers=[observer],
        )
    except SolverAbort as exc:
        record = exc.record
        status, error = "aborted", exc.detail
        logger.error("Solver aborted: %s; writing partial outputs", exc.detail)
        abort = exc
    else:
        abort = None
    evolution_time = time.perf_counter() - evolution_started

    files: list[Path] = []
    final = record.final
    if OutputKind.spectrum in outputs:
        dk, density = momentum_spectrum(final)
        files.append(write_spectrum_csv(out_dir / "spectrum.csv", dk / q, density))
    if OutputKind.populations in outputs:
        files.append(write_populations_csv(out_dir / "populations.csv", observer.rows))
    if OutputKind.record in outputs:
        rows, t_bounds, k_bounds = _snapshot_grid(record, q)
        files.append(write_grid(out_dir / "record.bin", rows, t_bounds, k_bounds))
    if OutputKind.heatmaps in outputs and observer.spectrogram:
        grid = observer.spectrogram_grid()
        t_bounds = (observer.rows[0][0], observer.rows[-1][0])
        files.append(write_grid(out_dir / "spectrogram.bin", grid, t_bounds, (-SPECTROGRAM_SPAN, SPECTROGRAM_SPAN)))
        files.append(write_ppm(out_dir / "spectrogram.ppm", grid))
    if OutputKind.wigner in outputs:
        w = wigner(final)
        z_nm = from_si(w.z_axis, "nm")
        k_q = w.k_axis / q
        files.append(
            write_grid(
                out_dir / "wigner.bin", w.values,
                (float(z_nm[0]), float(z_nm[-1])), (float(k_q[0]), float(k_q[-1])),
            )
        )
        if OutputKind.heatmaps in outputs:
            files.append(write_ppm(out_dir / "wigner.ppm", w.values))
    if OutputKind.dirac in outputs and abort is None:
        n_records = min(DIRAC_MAX_RECORDS, max(1, len(observer.rows) - 1))
        dirac = _dirac_rows(resolved, initial, n_records)
        if dirac is None:
            notes.append("dirac output skipped: time-dependent coupling")
        else:
            files.append(write_csv(out_dir / "dirac.csv", *dirac))

    manifest = {
        "project": PROJECT_NAME,
        "version": VERSION,
        "status": status,
        "partial": abort is not None,
        "error": error,
        "config": {key: render_value(value) for key, value in sorted(flatten(params).items())},
        "derived": summary.as_dict(),
        "regime": {
            "label": summary.regime.label.value,
            "rationale": [c.model_dump() for c in summary.regime.rationale],
        },
        "norm_drift": {
            "final": record.final_norm_drift,
            "max": record.max_norm_drift,
        },
        "steps": {"total": record.n_steps, "completed": int(record.norm_history.size - 1)},
        "grid": {
            "n_points": resolved.grid.n_points,
            "domain_nm": from_si(resolved.grid.length, "nm"),
        },
        "split": _split_summary(observer, summary, record),
        "final_leakage": observer.rows[-1][3] if observer.rows else None,
        "notes": notes + record.notes,
        "timing": {
            "evolution_s": evolution_time,
            "total_s": time.perf_counter() - started,
        },
    }
    (out_dir / "config.txt").write_text(serialize_config(params), encoding="utf-8")
    files.append(out_dir / "config.txt")
    manifest = write_manifest(out_dir / "manifest.json", manifest, files)
    if abort is not None:
        raise abort
    return manifest


def _numeric(name: str, values: list) -> list[float]:
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError):
        raise ConfigValidationError([f"{name}: sweep values must be numeric, got {values}"])


def expand_axes(
    base: ExperimentParams, axes: dict[str, list], cap: int = SWEEP_CAP
) -> list[tuple[dict[str, float], ExperimentParams]]:
    """Cartesian product of the axes, first axis slowest, each point validated."""
    size = math.prod(len(values) for values in axes.values()) if axes else 1
    if size > cap:
        raise SweepCapExceeded(f"sweep has {size} points, cap is {cap}")
    flat = flatten(base)
    numeric = {name: _numeric(name, values) for name, values in axes.items()}
    # raw spellings go into the config text so integer fields stay integers
    spelled = {
        name: [v if isinstance(v, str) else render_value(v) for v in values]
        for name, values in axes.items()
    }
    points = []
    for indices in itertools.product(*(range(len(v)) for v in axes.values())):
        overrides = {name: numeric[name][i] for name, i in zip(axes, indices)}
        merged = {key: render_value(value) for key, value in flat.items()}
        merged.update({name: spelled[name][i].strip() for name, i in zip(axes, indices)})
        text = "".join(f"{key} = {merged[key]}\n" for key in sorted(merged))
        points.append((overrides, parse_config_text(text, "<sweep>")))
    return points


def _point_name(index: int, overrides: dict[str, float]) -> str:
    parts = [f"{index:04d}"] + [f"{key.split('.')[-1]} {value:g}" for key, value in overrides.items()]
    return slugify(" ".join(parts))


def _sweep_point(task: tuple[int, dict, ExperimentParams, str, bool]) -> dict[str, Any]:
    index, overrides, params, out_root, classify_only = task
    name = _point_name(index, overrides)
    row: dict[str, Any] = {"point": name, "inputs": overrides, "leakage": "", "split": ""}
    try:
        summary = summarize(params)
        row.update(
            klein_cook=summary.klein_cook,
            validity_ratio=summary.validity.ratio,
            validity_margin=summary.validity.margin,
            label=summary.regime.label.value,
            rationale=[c.model_dump() for c in summary.regime.rationale],
            status="ok",
        )
        if not classify_only:
            manifest = run(params, Path(out_root) / name)
            leakage = manifest.get("final_leakage")
            row["leakage"] = leakage if leakage is not None else ""
            split = manifest["split"]["measured_rad_per_m"]
            row["split"] = split if split is not None else ""
    except SimulatorError as exc:
        logger.warning("Sweep point %s failed: %s", name, exc.detail)
        row.setdefault("klein_cook", float("nan"))
        row.setdefault("validity_ratio", float("nan"))
        row.setdefault("validity_margin", float("nan"))
        row.setdefault("label", "error")
        row.setdefault("rationale", [])
        row["status"] = f"error: {exc.detail}"
    return row


def sweep(
    base: ExperimentParams,
    axes: dict[str, list],
    out_dir: Path,
    workers: int = SWEEP_WORKERS,
    cap: int = SWEEP_CAP,
    classify_only: bool = False,
) -> list[dict[str, Any]]:
    """Run every grid point and write ``regime_map.csv`` and ``regime_atlas.md``."""
    out_dir = Path(out_dir)
    points = expand_axes(base, axes, cap)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [
        (i, overrides, params, str(out_dir), classify_only)
        for i, (overrides, params) in enumerate(points)
    ]
    logger.info("Sweep of %d points on %d worker(s)", len(tasks), workers)
    started = time.perf_counter()
    if workers > 1 and len(tasks) > 1:
        pool = ProcessPool(nodes=workers)
        try:
            rows = pool.map(_sweep_point, tasks)
        finally:
            pool.close()
            pool.join()
            pool.clear()
    else:
        rows = [_sweep_point(task) for task in tasks]

    names = list(axes)
    write_csv(
        out_dir / "regime_map.csv",
        ["point", *names, *REGIME_MAP_COLUMNS[1:]],
        (
            [
                row["point"],
                *(row["inputs"][name] for name in names),
                row["klein_cook"],
                row["validity_ratio"],
                row["validity_margin"],
                row["leakage"],
                row["split"],
                row["label"],
                row["status"],
            ]
            for row in rows
        ),
    )
    write_regime_atlas(
        out_dir / "regime_atlas.md",
        {name: [f"{v:g}" for v in _numeric(name, axes[name])] for name in names},
        rows,
        title=f"Regime atlas ({len(rows)} points)",
    )
    logger.info("Sweep finished in %.1f s", time.perf_counter() - started)
    return rows
