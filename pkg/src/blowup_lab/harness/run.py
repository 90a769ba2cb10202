"""Dispatch a configuration, write its artifacts, and report contract status."""
from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ..errors import BlowupLabError, ConfigError, ContractViolation
from .check import run_checks
from .config import ExperimentConfig, config_from_dict
from .experiments import RUNNERS, Outcome, Table
from .io import write_csv, write_sidecar


@dataclass(frozen=True)
class RunResult:
    artifacts: list[Path]
    summary: dict
    failures: list[str]


# ---------------------------------------------------------------------------
# sweeps


def _sort_key(value):
    return (0, value, "") if isinstance(value, (int, float)) else (1, 0, str(value))


def sweep_cells(axes: dict) -> list[tuple[tuple[str, object], ...]]:
    """Cartesian product, lexicographic in (sorted axis name, sorted value)."""
    names = sorted(axes)
    values = [sorted(axes[n], key=_sort_key) for n in names]
    return [tuple(zip(names, combo)) for combo in itertools.product(*values)]


def _run_cell(base: dict, assignment, force: bool):
    data = {k: (dict(v) if isinstance(v, dict) else v) for k, v in base.items()}
    try:
        for dotted, value in assignment:
            section, name = dotted.split(".")
            data[section][name] = value
        cfg = config_from_dict(data)
        outcome = RUNNERS[cfg.experiment](cfg, force)
    except BlowupLabError as exc:
        return type(exc).__name__, str(exc), {}
    if outcome.failures:
        return "ContractViolation", "; ".join(outcome.failures), outcome.summary
    return "ok", "", outcome.summary


def run_sweep(cfg: ExperimentConfig, workers: int = 1, force: bool = False) -> Outcome:
    if not cfg.sweep.axes:
        raise ConfigError("a sweep needs at least one axis", "sweep.axes")
    cells = sweep_cells(cfg.sweep.axes)
    base = cfg.to_dict()
    base["experiment"] = cfg.sweep.experiment
    args = [(base, cell, force) for cell in cells]
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, *zip(*args)))
    else:
        results = [_run_cell(*a) for a in args]

    # summary columns in first-seen order over the (fixed) cell order
    columns: list[str] = []
    for _, _, summary in results:
        columns += [k for k in summary if k not in columns]
    axis_names = [name for name, _ in cells[0]]
    rows = []
    for cell, (status, detail, summary) in zip(cells, results):
        rows.append(tuple(v for _, v in cell) + (status, detail)
                    + tuple(summary.get(c, float("nan")) for c in columns))
    counts: dict[str, int] = {}
    for status, _, _ in results:
        counts[status] = counts.get(status, 0) + 1
    header = tuple(axis_names) + ("status", "detail") + tuple(columns)
    return Outcome([Table("", header, rows)], {"cells": len(cells), "status_counts": counts}, [])


def run_check() -> Outcome:
    results = run_checks()
    failures = [f"{name}: {detail}" for name, status, detail in results if status != "pass"]
    summary = {"checks": len(results), "passed": len(results) - len(failures)}
    return Outcome([Table("", ("name", "status", "detail"), results)], summary, failures)


# ---------------------------------------------------------------------------


def execute(cfg: ExperimentConfig, out_dir: str | Path, workers: int = 1,
            force: bool = False) -> RunResult:
    """Run one experiment and write ``<stem>.csv`` (plus extra tables) and
    ``<stem>.json``.  Raises :class:`ContractViolation` after writing when a
    post-condition failed, and lets module errors through (sidecar written)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = cfg.output.name or cfg.experiment
    start = time.perf_counter()
    try:
        if cfg.experiment == "sweep":
            outcome = run_sweep(cfg, workers, force)
        elif cfg.experiment == "check":
            outcome = run_check()
        else:
            outcome = RUNNERS[cfg.experiment](cfg, force)
    except BlowupLabError as exc:
        if not isinstance(exc, ConfigError):
            write_sidecar(out_dir / f"{stem}.json", cfg.to_dict(), time.perf_counter() - start,
                          {"status": type(exc).__name__, "error": str(exc)}, [])
        raise
    artifacts = []
    for table in outcome.tables:
        name = f"{stem}.csv" if not table.name else f"{stem}_{table.name}.csv"
        artifacts.append(write_csv(out_dir / name, table.header, table.rows, table.singular))
    summary = dict(outcome.summary)
    summary["status"] = "ContractViolation" if outcome.failures else "ok"
    summary["failures"] = outcome.failures
    sidecar = write_sidecar(out_dir / f"{stem}.json", cfg.to_dict(),
                            time.perf_counter() - start, summary, [p.name for p in artifacts])
    artifacts.append(sidecar)
    if outcome.failures:
        raise ContractViolation("; ".join(outcome.failures), outcome.failures)
    return RunResult(artifacts, summary, outcome.failures)
