"""Bayesian-optimization design space exploration.

Thin Python layer over the C++ core. ``run`` and ``sweep`` take a config as a
dict, a JSON string, or a path to a JSON file, using the same schema as the
``bodse`` command-line tool.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Mapping

from ._core import (
    BodseError,
    ParameterSpace,
    Surrogate,
    benchmark_ids,
    ei,
    eval_ppa_surface,
    eval_synthetic,
    fit_surrogate,
    lcb,
    normal_cdf,
    normal_pdf,
    pareto_filter,
    poi,
    scalarize,
    ucb,
)
from . import _core

__all__ = [
    "BodseError",
    "ParameterSpace",
    "Surrogate",
    "benchmark_ids",
    "ei",
    "eval_ppa_surface",
    "eval_synthetic",
    "fit_surrogate",
    "lcb",
    "normal_cdf",
    "normal_pdf",
    "pareto_filter",
    "poi",
    "run",
    "scalarize",
    "sweep",
    "ucb",
]

ConfigLike = Mapping[str, Any] | str | os.PathLike


def _config_text(config: ConfigLike) -> tuple[str, str]:
    """Returns (json text, directory that relative paths resolve against)."""
    if isinstance(config, Mapping):
        return json.dumps(config), os.getcwd()
    if isinstance(config, os.PathLike) or (isinstance(config, str) and not config.lstrip().startswith("{")):
        path = Path(config)
        return path.read_text(), str(path.resolve().parent)
    return config, os.getcwd()


def _workdir(workdir: str | os.PathLike | None) -> tuple[str, tempfile.TemporaryDirectory | None]:
    if workdir is not None:
        Path(workdir).mkdir(parents=True, exist_ok=True)
        return str(workdir), None
    tmp = tempfile.TemporaryDirectory(prefix="bodse-")
    return tmp.name, tmp


def run(config: ConfigLike, *, seed: int | None = None, workdir: str | os.PathLike | None = None) -> list[dict]:
    """Runs the configured engine and returns the log lines as dicts.

    The first entry is the header; evaluation records carry ``"index"``.
    External evaluators write their per-iteration directories under
    ``workdir`` (a temporary directory when omitted).
    """
    text, base = _config_text(config)
    wd, tmp = _workdir(workdir)
    try:
        jsonl = _core._run_config(text, base, wd, seed)
    finally:
        if tmp is not None:
            tmp.cleanup()
    return [json.loads(line) for line in jsonl.splitlines() if line]


def sweep(config: ConfigLike, *, seed: int | None = None, workdir: str | os.PathLike | None = None) -> list[dict]:
    """Runs one BO procedure per sweep weight pair; returns the merged front."""
    text, base = _config_text(config)
    wd, tmp = _workdir(workdir)
    try:
        return _core._sweep_config(text, base, wd, seed)
    finally:
        if tmp is not None:
            tmp.cleanup()
