"""Experiment sweep harness over generating order, sample size, and seeds.

Each cell (k_hat, n, run) regenerates data with a seed derived from a
stable hash of the cell key, so results are reproducible regardless of
execution order or the degree of parallelism.  Per-cell failures are
recorded in the cell instead of aborting the sweep.
"""

import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .datagen import SynthConfig, sample_synthetic
from .errors import GmmSelectError, OutOfRange
from .selection import EmConfig, FitConfig, aic_bic_curve, model_order_posterior

METHODS = ("korea", "aic", "bic")


@dataclass
class SweepCell:
    """Outcome of one (k_hat, n, seed, method) evaluation."""

    k_hat: int
    n: int
    seed: int
    method: str
    k_star: int | None
    runtime_seconds: float
    error: str | None = None


@dataclass
class SweepAggregate:
    """Per (k_hat, n, method) mean selected order and mean squared error."""

    k_hat: int
    n: int
    method: str
    mean_k_star: float
    mse: float
    runs: int


@dataclass
class SweepResult:
    cells: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)
    k_max: int = 10
    seed0: int = 0

    def to_doc(self, timings: bool = False) -> dict:
        cells = []
        for c in self.cells:
            cell = {"k_hat": c.k_hat, "n": c.n, "seed": c.seed, "method": c.method,
                    "k_star": c.k_star, "error": c.error}
            if timings:
                cell["runtime_seconds"] = c.runtime_seconds
            cells.append(cell)
        return {
            "schema_version": 1,
            "kind": "sweep_result",
            "k_max": self.k_max,
            "seed0": self.seed0,
            "cells": cells,
            "aggregates": [
                {"k_hat": a.k_hat, "n": a.n, "method": a.method,
                 "mean_k_star": a.mean_k_star, "mse": a.mse, "runs": a.runs}
                for a in self.aggregates
            ],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "SweepResult":
        cells = [SweepCell(k_hat=c["k_hat"], n=c["n"], seed=c["seed"],
                           method=c["method"], k_star=c["k_star"],
                           runtime_seconds=c.get("runtime_seconds", 0.0),
                           error=c.get("error"))
                 for c in doc["cells"]]
        aggregates = [SweepAggregate(**a) for a in doc["aggregates"]]
        return cls(cells=cells, aggregates=aggregates,
                   k_max=doc["k_max"], seed0=doc["seed0"])


def cell_seed(seed0: int, k_hat: int, n: int, run: int) -> int:
    """Stable per-cell seed: seed0 plus a CRC of the cell key."""
    key = f"{k_hat}|{n}|{run}".encode()
    return seed0 + (zlib.crc32(key) & 0x7FFFFF)


def _run_cell(task):
    (k_hat, n, run, seed0, methods, k_max, min_weight, fit_cfg, em_cfg) = task
    seed = cell_seed(seed0, k_hat, n, run)
    cfg = SynthConfig(k_hat=k_hat, n=n, seed=seed, min_weight=min_weight)
    sample = sample_synthetic(cfg)
    cells = []

    if "korea" in methods:
        start = time.perf_counter()
        try:
            post = model_order_posterior(
                sample.data, k_max=k_max,
                fit_cfg=FitConfig(seed=seed, tol=fit_cfg.tol,
                                  max_iter=fit_cfg.max_iter, restarts=fit_cfg.restarts),
            )
            cells.append(SweepCell(k_hat, n, seed, "korea", post.k_star,
                                   time.perf_counter() - start))
        except GmmSelectError as exc:
            cells.append(SweepCell(k_hat, n, seed, "korea", None,
                                   time.perf_counter() - start, error=str(exc)))

    wanted = [m for m in ("aic", "bic") if m in methods]
    if wanted:
        start = time.perf_counter()
        try:
            curve = aic_bic_curve(
                sample.data, k_max=k_max,
                em_cfg=EmConfig(seed=seed, tol=em_cfg.tol, max_iter=em_cfg.max_iter,
                                restarts=em_cfg.restarts, var_floor=em_cfg.var_floor),
            )
            elapsed = time.perf_counter() - start
            picks = {"aic": curve.k_aic, "bic": curve.k_bic}
            for m in wanted:
                cells.append(SweepCell(k_hat, n, seed, m, picks[m], elapsed))
        except GmmSelectError as exc:
            elapsed = time.perf_counter() - start
            for m in wanted:
                cells.append(SweepCell(k_hat, n, seed, m, None, elapsed, error=str(exc)))
    return cells


def aggregate_cells(cells) -> list:
    """Recompute per-(k_hat, n, method) mean and MSE from raw cells."""
    groups = {}
    for cell in cells:
        if cell.k_star is None:
            continue
        groups.setdefault((cell.k_hat, cell.n, cell.method), []).append(cell.k_star)
    out = []
    for (k_hat, n, method), stars in sorted(groups.items()):
        stars = np.array(stars, dtype=float)
        out.append(SweepAggregate(
            k_hat=k_hat, n=n, method=method,
            mean_k_star=float(stars.mean()),
            mse=float(np.mean((stars - k_hat) ** 2)),
            runs=len(stars),
        ))
    return out


def run_sweep(k_hat_list, n_list, runs: int, k_max: int = 10,
              methods=METHODS, seed0: int = 0, jobs: int = 1,
              min_weight: float = 0.0,
              fit_cfg: FitConfig | None = None,
              em_cfg: EmConfig | None = None) -> SweepResult:
    """Run every (k_hat, n, run, method) cell and aggregate mean/MSE.

    The output is independent of ``jobs``; cells are sorted by their key
    before assembly.
    """
    if runs < 1:
        raise OutOfRange("runs must be at least 1")
    k_hat_list = list(k_hat_list)
    n_list = list(n_list)
    if not k_hat_list or not n_list:
        raise OutOfRange("k_hat_list and n_list must be non-empty")
    for m in methods:
        if m not in METHODS:
            raise OutOfRange(f"unknown method {m!r}")

    fit_cfg = fit_cfg or FitConfig()
    em_cfg = em_cfg or EmConfig()
    tasks = [
        (k_hat, n, run, seed0, tuple(methods), k_max, min_weight, fit_cfg, em_cfg)
        for k_hat in k_hat_list for n in n_list for run in range(runs)
    ]

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            nested = list(pool.map(_run_cell, tasks, chunksize=1))
    else:
        nested = [_run_cell(t) for t in tasks]

    cells = [cell for group in nested for cell in group]
    cells.sort(key=lambda c: (c.k_hat, c.n, c.seed, c.method))
    return SweepResult(cells=cells, aggregates=aggregate_cells(cells),
                       k_max=k_max, seed0=seed0)
