"""Exception hierarchy shared by the solver, the analysis code and the CLI.

Each error carries the process exit code the CLI reports for it, the same way
an API error carries its HTTP status.
"""
from __future__ import annotations

from typing import Any


class SimulatorError(Exception):
    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class DomainError(SimulatorError, ValueError):
    """Physically meaningless input (non-positive energy, negative field...)."""


class GridError(SimulatorError, ValueError):
    """Grid cannot hold the requested state."""


class HamiltonianError(SimulatorError):
    exit_code = 2


class SolverAbort(SimulatorError):
    """Norm drift exceeded the tolerance; ``record`` holds what was computed."""

    exit_code = 2

    def __init__(self, detail: str, record: Any = None):
        super().__init__(detail)
        self.record = record


class IntegrationError(SimulatorError):
    exit_code = 2


class NoPeakError(SimulatorError, ValueError):
    pass


class ConfigNotFound(SimulatorError):
    exit_code = 3


class ConfigSyntaxError(SimulatorError):
    exit_code = 4

    def __init__(self, detail: str, line: int | None = None):
        super().__init__(f"line {line}: {detail}" if line else detail)
        self.line = line


class ConfigValidationError(SimulatorError):
    exit_code = 1

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


class SweepCapExceeded(SimulatorError):
    exit_code = 1


class GridFormatError(SimulatorError):
    exit_code = 3


class OutputError(SimulatorError):
    exit_code = 3
