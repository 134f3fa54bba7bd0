"""Run configuration shared by the check catalog and the command line."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass

REPORT_FORMATS = ("text", "json")


class ConfigError(ValueError):
    """An invalid configuration value."""


@dataclass(frozen=True)
class Config:
    """Settings for a verification or numeric run.

    Parameters
    ----------
    dimension
        ``6`` or ``None`` (symbolic ``n``).  Only dimension-generic checks
        consult it; the tractor computations are dimension-six statements.
    jet_degree
        Truncation degree of numeric jets (at least 2).
    tolerance
        Relative tolerance of float certificates (positive).
    seed
        Seed of every random metric and point generator.
    report_format
        ``"text"`` or ``"json"``.
    parallelism
        Number of worker processes for independent checks.
    """

    dimension: int | None = 6
    jet_degree: int = 7
    tolerance: float = 1e-8
    seed: int = 0
    report_format: str = "text"
    parallelism: int = 1

    def __post_init__(self):
        if self.dimension not in (6, None):
            raise ConfigError("dimension must be 6 or symbolic")
        if self.jet_degree < 2:
            raise ConfigError("jet_degree must be at least 2")
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be positive")
        if self.report_format not in REPORT_FORMATS:
            raise ConfigError(f"report format must be one of {REPORT_FORMATS}")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be at least 1")

    def to_dict(self) -> dict:
        return asdict(self)


def default_parallelism() -> int:
    return max(1, min(4, os.cpu_count() or 1))


__all__ = ["Config", "ConfigError", "REPORT_FORMATS", "default_parallelism"]
