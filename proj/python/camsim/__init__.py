"""Capacitive RRAM TCAM simulator.

Every experiment returns the same JSON document the ``camsim`` command-line
tool writes, decoded into a dict. ``config`` accepts the run-configuration
schema (sections ``device``, ``cell``, ``array``, ``solver``) as a dict.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Mapping, Sequence

from . import _camsim
from ._camsim import FitError, IoError, SolverError, ValidationError

__all__ = [
    "REPORT_SCHEMA",
    "FitError",
    "IoError",
    "SolverError",
    "ValidationError",
    "aar",
    "default_config",
    "energy_map",
    "export_report",
    "fit_device",
    "iv_current",
    "model_card",
    "search",
    "sweep_vsec",
    "table2",
    "timing",
    "truth_table",
    "write_sweep",
]

REPORT_SCHEMA = _camsim.REPORT_SCHEMA

_STATES = {"LRS": _camsim.LRS_OHMS, "HRS": _camsim.HRS_OHMS}


def _cfg(config: Mapping | None) -> str:
    return "" if not config else json.dumps(config)


def default_config() -> dict:
    """The shipped defaults in config-file form."""
    return json.loads(_camsim.default_config())


def model_card(state: str | float = "LRS", b: float = 5.0) -> dict:
    """Calibrated device card for "LRS", "HRS" or a read-out resistance in ohms."""
    rs = _STATES[state] if isinstance(state, str) else float(state)
    return json.loads(_camsim.model_card(rs, b))


def iv_current(card: Mapping, v: Iterable[float]) -> list[float]:
    return _camsim.iv_current(json.dumps(card), list(v))


def fit_device(v: Sequence[float], i: Sequence[float], rs_ohms: float) -> dict:
    return json.loads(_camsim.fit_device(list(v), list(i), rs_ohms))


def truth_table(config: Mapping | None = None) -> dict:
    return json.loads(_camsim.truth_table(_cfg(config)))


def search(data: str, cue: str, config: Mapping | None = None, trace: bool = False) -> dict:
    """One match-line search; ``data`` is H/L per row, ``cue`` 1/0/X per row."""
    return json.loads(_camsim.search(data, cue, _cfg(config), trace))


def table2(config: Mapping | None = None, calibrate: bool = True, jobs: int = 1) -> dict:
    return json.loads(_camsim.table2(_cfg(config), calibrate, jobs))


def sweep_vsec(
    corner: str = "tt",
    start: float = 1.0,
    stop: float = 1.35,
    step: float = 0.01,
    config: Mapping | None = None,
    jobs: int = 1,
) -> dict:
    return json.loads(_camsim.sweep_vsec(corner, start, stop, step, _cfg(config), jobs))


def energy_map(config: Mapping | None = None, jobs: int = 1) -> dict:
    return json.loads(_camsim.energy_map(_cfg(config), jobs))


def timing(config: Mapping | None = None) -> dict:
    return json.loads(_camsim.timing(_cfg(config)))


def aar(columns: Sequence[str] = (), config: Mapping | None = None) -> dict:
    return json.loads(_camsim.aar(list(columns), _cfg(config)))


def write_sweep(
    direction: str = "both",
    resistances: Sequence[float] = (),
    config: Mapping | None = None,
) -> dict:
    return json.loads(_camsim.write_sweep(direction, list(resistances), _cfg(config)))


def export_report(report: Mapping, directory: str | os.PathLike, fmt: str = "json") -> list[str]:
    """Writes ``report`` like the CLI does and returns the paths written."""
    return json.loads(_camsim.export_report(json.dumps(report), os.fspath(directory), fmt))
