"""Crank-Nicolson propagation of the co-moving envelope on a tridiagonal stencil.

Units: xi in metres, tau = c t in metres, the Hamiltonian in 1/m. Off-diagonals
are stored per bond: ``upper[i] = H[i, i+1]`` and ``lower[i] = H[i+1, i]``, where
bond ``n-1`` is the wrap-around bond (zero under Dirichlet boundaries).
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from app.core.constants import SPEED_OF_LIGHT
from app.core.errors import HamiltonianError, SolverAbort
from app.schemas.physics import ElectronParams, LaserGratingParams
from app.services.fields import FieldProfile, field_at
from app.services.physics import alpha_profile, kinetic_alpha, phase_mismatch
from app.services.tridiagonal import TridiagonalSolver
from app.services.wavepacket import Grid, Wavepacket, as_momentum, as_position
from app.settings import NORM_TOLERANCE

logger = logging.getLogger(__name__)

Observer = Callable[[float, Wavepacket], None]

# Cayley phase per step allowed on the populated momentum band
PHASE_BUDGET = 0.05


class Boundary(str, Enum):
    periodic = "periodic"
    dirichlet = "dirichlet"


@dataclass(frozen=True)
class TridiagonalHamiltonian:
    diag: np.ndarray
    upper: np.ndarray
    lower: np.ndarray
    time_tau: float = 0.0
    boundary: Boundary = Boundary.periodic
    symmetrized: bool = True

    @property
    def n_sites(self) -> int:
        return self.diag.shape[0]

    def apply(self, v: np.ndarray) -> np.ndarray:
        """H @ v."""
        return (
            self.diag * v
            + self.upper * np.roll(v, -1)
            + np.roll(self.lower, 1) * np.roll(v, 1)
        )

    def to_dense(self) -> np.ndarray:
        n = self.n_sites
        dense = np.diag(self.diag).astype(np.complex128)
        for i in range(n):
            j = (i + 1) % n
            dense[i, j] += self.upper[i]
            dense[j, i] += self.lower[i]
        return dense


@dataclass(frozen=True)
class EvolutionConfig:
    total_time: float
    n_steps: int | None = None
    snapshot_every: int = 100
    boundary: Boundary = Boundary.periodic
    symmetrize: bool = True
    norm_tolerance: float = NORM_TOLERANCE
    phase_mismatch: bool = False
    # drift velocity (units of c) left in the stencil; 0 in the co-moving frame
    advection_beta: float = 0.0
    observe_every: int = 10

    def __post_init__(self):
        if not self.total_time > 0:
            raise ValueError(f"total_time must be positive, got {self.total_time}")
        if self.n_steps is not None and self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.snapshot_every < 1 or self.observe_every < 1:
            raise ValueError("snapshot_every and observe_every must be >= 1")


@dataclass
class SimulationRecord:
    times: np.ndarray
    snapshots: list[Wavepacket]
    norm_history: np.ndarray
    config: EvolutionConfig
    n_steps: int
    completed: bool = True
    wall_time: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def final(self) -> Wavepacket:
        return self.snapshots[-1]

    @property
    def final_norm_drift(self) -> float:
        return float(abs(self.norm_history[-1] - 1.0))

    @property
    def max_norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm_history - 1.0)))


def assemble_hamiltonian(
    grid: Grid,
    electron: ElectronParams,
    laser: LaserGratingParams,
    profile: FieldProfile,
    tau_c: float = 0.0,
    *,
    boundary: Boundary = Boundary.periodic,
    symmetrize: bool = True,
    advection_beta: float = 0.0,
    with_phase_mismatch: bool = False,
) -> TridiagonalHamiltonian:
    xi = grid.xi_axis
    d_xi = grid.d_xi
    z_offset = electron.beta * tau_c
    e0 = field_at(profile, xi, z_offset)
    alpha0, alpha1 = alpha_profile(electron, laser, e0)
    alpha2 = kinetic_alpha(electron)

    phi = laser.q * xi + profile.theta_at(xi)
    if with_phase_mismatch:
        phi = phi - phase_mismatch(electron, laser) * tau_c / SPEED_OF_LIGHT

    kinetic = alpha2 / d_xi**2
    drift = 0.5j * advection_beta / d_xi
    diag = 2 * kinetic - alpha1 / d_xi * np.cos(phi) - alpha0 * np.sin(phi)
    upper_rows = -kinetic - drift + alpha1 / (2 * d_xi) * np.exp(1j * phi)
    lower_rows = -kinetic + drift + alpha1 / (2 * d_xi) * np.exp(-1j * phi)

    # row i+1's left neighbour coefficient belongs to bond i
    upper = upper_rows
    lower = np.roll(lower_rows, -1)
    if symmetrize:
        upper = 0.5 * (upper + np.conj(lower))
        lower = np.conj(upper)
    if boundary is Boundary.dirichlet:
        upper = upper.copy()
        lower = lower.copy()
        upper[-1] = lower[-1] = 0.0

    diag = diag.astype(np.complex128)
    if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(upper)) and np.all(np.isfinite(lower))):
        raise HamiltonianError(f"non-finite Hamiltonian entries at tau = {tau_c:.3e} m")
    return TridiagonalHamiltonian(diag, upper, lower, tau_c, boundary, symmetrize)


class CrankNicolsonPropagator:
    """(1 + i dtau H / 2)^-1 (1 - i dtau H / 2) with the left factor cached."""

    def __init__(self, hamiltonian: TridiagonalHamiltonian, d_tau: float):
        if not d_tau > 0:
            raise HamiltonianError(f"d_tau must be positive, got {d_tau}")
        self.hamiltonian = hamiltonian
        self.d_tau = d_tau
        h = 0.5j * d_tau
        self._h = h
        periodic = hamiltonian.boundary is Boundary.periodic
        self._solver = TridiagonalSolver(
            sub=np.roll(h * hamiltonian.lower, 1),
            diag=1.0 + h * hamiltonian.diag,
            sup=h * hamiltonian.upper,
            top_right=h * hamiltonian.lower[-1],
            bottom_left=h * hamiltonian.upper[-1],
            periodic=periodic,
        )

    def step(self, amplitudes: np.ndarray) -> np.ndarray:
        rhs = amplitudes - self._h * self.hamiltonian.apply(amplitudes)
        return self._solver.solve(rhs)


def cn_step(state: Wavepacket, hamiltonian: TridiagonalHamiltonian, d_tau: float) -> Wavepacket:
    state = as_position(state)
    return state.with_amplitudes(CrankNicolsonPropagator(hamiltonian, d_tau).step(state.amplitudes))


def suggest_n_steps(
    initial: Wavepacket,
    electron: ElectronParams,
    laser: LaserGratingParams,
    profile: FieldProfile,
    total_time: float,
    advection_beta: float = 0.0,
) -> int:
    """Step count keeping the Cayley phase of the populated band under the budget."""
    spectrum = as_momentum(initial)
    density = spectrum.density
    populated = np.abs(spectrum.axis[density > 1e-10 * density.max()])
    k_band = min(float(populated.max()) + 3 * laser.q, math.pi / initial.grid.d_xi)
    e0_max = float(np.max(field_at(profile, initial.grid.xi_axis)))
    if profile.is_time_dependent:
        e0_max = max(e0_max, float(np.max(profile._nodes()[1])))
    alpha0, alpha1 = alpha_profile(electron, laser, e0_max)
    rate = (
        kinetic_alpha(electron) * k_band**2
        + float(alpha0)
        + float(alpha1) * k_band
        + abs(advection_beta) * k_band
    )
    tau_total = SPEED_OF_LIGHT * total_time
    return max(1, math.ceil(rate * tau_total / PHASE_BUDGET))


def evolve(
    initial: Wavepacket,
    electron: ElectronParams,
    laser: LaserGratingParams,
    profile: FieldProfile,
    config: EvolutionConfig,
    observers: list[Observer] | None = None,
) -> SimulationRecord:
    state = as_position(initial)
    grid = state.grid
    n_steps = config.n_steps or suggest_n_steps(
        state, electron, laser, profile, config.total_time, config.advection_beta
    )
    tau_total = SPEED_OF_LIGHT * config.total_time
    d_tau = tau_total / n_steps
    observers = observers or []
    time_dependent = profile.is_time_dependent or (
        config.phase_mismatch and phase_mismatch(electron, laser) != 0
    )
    logger.info(
        "Evolving %d sites over %.3e s in %d steps (d_tau=%.3e m, time-dependent=%s)",
        grid.n_points, config.total_time, n_steps, d_tau, time_dependent,
    )

    def hamiltonian_at(tau: float) -> TridiagonalHamiltonian:
        return assemble_hamiltonian(
            grid, electron, laser, profile, tau,
            boundary=config.boundary,
            symmetrize=config.symmetrize,
            advection_beta=config.advection_beta,
            with_phase_mismatch=config.phase_mismatch,
        )

    propagator = None if time_dependent else CrankNicolsonPropagator(hamiltonian_at(0.0), d_tau)

    norms = np.empty(n_steps + 1)
    norms[0] = state.norm
    times = [0.0]
    snapshots = [state]
    for observer in observers:
        observer(0.0, state)

    amplitudes = state.amplitudes
    started = time.perf_counter()
    progress_every = max(1, n_steps // 10)
    for step in range(1, n_steps + 1):
        if time_dependent:
            # midpoint Hamiltonian keeps the step second order in time
            propagator = CrankNicolsonPropagator(hamiltonian_at((step - 0.5) * d_tau), d_tau)
        amplitudes = propagator.step(amplitudes)
        norm = float(np.vdot(amplitudes, amplitudes).real * grid.d_xi)
        norms[step] = norm
        t = step * d_tau / SPEED_OF_LIGHT

        drift = abs(norm - 1.0)
        if drift > config.norm_tolerance:
            current = state.with_amplitudes(amplitudes)
            record = SimulationRecord(
                times=np.array(times + [t]),
                snapshots=snapshots + [current],
                norm_history=norms[: step + 1].copy(),
                config=config,
                n_steps=n_steps,
                completed=False,
                wall_time=time.perf_counter() - started,
            )
            raise SolverAbort(
                f"norm drift {drift:.3e} exceeds tolerance {config.norm_tolerance:.1e} "
                f"at step {step}/{n_steps} (t = {t:.3e} s); reduce the time step",
                record=record,
            )

        observe = step % config.observe_every == 0 or step == n_steps
        snap = step % config.snapshot_every == 0 or step == n_steps
        if observe or snap:
            current = state.with_amplitudes(amplitudes)
            if observe:
                for observer in observers:
                    observer(t, current)
            if snap:
                times.append(t)
                snapshots.append(current)
        if step % progress_every == 0:
            logger.debug("step %d/%d, norm drift %.2e", step, n_steps, drift)

    record = SimulationRecord(
        times=np.array(times),
        snapshots=snapshots,
        norm_history=norms,
        config=config,
        n_steps=n_steps,
        wall_time=time.perf_counter() - started,
    )
    if record.max_norm_drift > 0.5 * config.norm_tolerance:
        logger.warning("Norm drift %.2e is close to the tolerance", record.max_norm_drift)
    logger.info(
        "Evolution finished in %.1f s, final norm drift %.2e",
        record.wall_time, record.final_norm_drift,
    )
    return record
