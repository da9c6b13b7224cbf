"""Exception types shared across the package."""
from __future__ import annotations


class ParseError(ValueError):
    """Malformed input data (topology files, scenario JSON, monitor lists).

    Carries an optional 1-based line number for file inputs.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(ValueError):
    """Semantically invalid configuration (unknown AS, bad scenario wiring)."""


class SimulationError(RuntimeError):
    """An internal invariant was violated during simulation."""
