"""Exception hierarchy shared across the package."""
from __future__ import annotations


class TkgAlignError(Exception):
    """Base class for all package errors."""


class ConfigError(TkgAlignError):
    """Invalid configuration value or infeasible request."""


class DatasetError(TkgAlignError):
    """Dataset directory is missing files or otherwise unusable."""


class ParseError(DatasetError):
    """A dataset file failed to parse; carries file and line context."""

    def __init__(self, file: str, line: int, message: str):
        self.file = file
        self.line = line
        super().__init__(f"{file}:{line}: {message}")


class GraphError(TkgAlignError):
    """Graph-level invariant violation (dangling id, bad range, ...)."""


class NumericsError(TkgAlignError):
    """Numerical failure in the tensor layer or optimizer."""


class DegenerateEmbeddingError(NumericsError):
    """A row that must be normalized has (near-)zero norm."""


class NonFiniteError(NumericsError):
    """NaN or Inf encountered where finite values are required."""


class TrainingDivergedError(TkgAlignError):
    """Loss became non-finite; carries the last good parameter snapshot."""

    def __init__(self, epoch: int, last_good=None):
        self.epoch = epoch
        self.last_good = last_good
        super().__init__(f"training diverged at epoch {epoch}")
