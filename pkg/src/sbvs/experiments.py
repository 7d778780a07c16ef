"""
Replication harness for simulated selection-rate tables and leave-one-out
prediction error.

Every replication draws its randomness from
``SeedSequence([master_seed, cell_index, rep_index])`` so results do not
depend on how replications are spread over worker processes.
"""

from __future__ import annotations

import csv
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from .gibbs import GibbsConfig
from .marginal import Dataset
from .screening import ScreeningConfig
from .selector import two_step_select
from .simgen import ScenarioSpec, generate_dataset

log = logging.getLogger(__name__)

REP_FIELDS = ["cell", "rep", "n", "p", "cov_case", "error_law", "beta_pattern",
              "support_size", "d", "true_support", "selected", "screened",
              "exact", "superset", "screen_superset", "log_weight", "passes",
              "error"]
AGG_FIELDS = ["cell", "n", "p", "cov_case", "error_law", "beta_pattern",
              "support_size", "d", "reps", "errors", "proportion_exact",
              "proportion_superset", "proportion_screen_superset", "status"]


@dataclass
class ExperimentCell:
    spec: ScenarioSpec
    reps: int = 50
    screen: ScreeningConfig = field(default_factory=ScreeningConfig)
    gibbs: GibbsConfig = field(default_factory=GibbsConfig)
    sigma2: Optional[float] = None
    standardize: bool = False

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")


@dataclass
class ExperimentGrid:
    cells: List[ExperimentCell]
    master_seed: int = 0
    out_dir: Optional[Path] = None


@dataclass
class CellSummary:
    cell: int
    proportion_exact: float
    proportion_superset: float
    proportion_screen_superset: float
    mean_runtime: float
    errors: int
    failed: bool
    records: list


def _fmt_set(s):
    return " ".join(str(j) for j in s)


def _rep_seeds(master_seed, cell_index, rep):
    ss = np.random.SeedSequence([master_seed, cell_index, rep])
    data_ss, screen_ss, gibbs_ss = ss.spawn(3)
    return (np.random.default_rng(data_ss),
            int(screen_ss.generate_state(1)[0]),
            int(gibbs_ss.generate_state(1)[0]))


def run_one(cell: ExperimentCell, master_seed: int, cell_index: int, rep: int) -> dict:
    """Generate, select and score a single replication."""
    spec = cell.spec
    rng, s_seed, g_seed = _rep_seeds(master_seed, cell_index, rep)
    d = cell.screen.d if cell.screen.d is not None else max(1, spec.n // 4)
    rec = {"cell": cell_index, "rep": rep, "n": spec.n, "p": spec.p,
           "cov_case": spec.cov_case, "error_law": spec.error_law,
           "beta_pattern": spec.beta_pattern, "support_size": spec.size,
           "d": d, "true_support": "", "selected": "", "screened": "",
           "exact": "", "superset": "", "screen_superset": "",
           "log_weight": "", "passes": "", "error": ""}
    t0 = time.perf_counter()
    try:
        truth = generate_dataset(spec, rng)
        rec["true_support"] = _fmt_set(truth.true_support)
        res = two_step_select(truth.dataset,
                              replace(cell.screen, seed=s_seed),
                              replace(cell.gibbs, seed=g_seed),
                              sigma2=cell.sigma2, standardize=cell.standardize)
        true = set(truth.true_support)
        rec.update(selected=_fmt_set(res.selected), screened=_fmt_set(res.screened),
                   exact=int(set(res.selected) == true),
                   superset=int(true <= set(res.selected)),
                   screen_superset=int(true <= set(res.screened)),
                   log_weight=repr(res.log_weight),
                   passes=res.diagnostics["passes"],
                   d=res.diagnostics["d"])
    except Exception as exc:  # recorded per replication, judged per cell
        rec["error"] = f"{type(exc).__name__}: {exc}"
    rec["_runtime"] = time.perf_counter() - t0
    return rec


def _run_one_packed(args):
    return run_one(*args)


def resolve_workers(workers: Optional[int] = None) -> int:
    if workers is None:
        env = os.environ.get("SBS_WORKERS")
        workers = int(env) if env else 0
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def run_replications(cell: ExperimentCell, master_seed: int = 0,
                     cell_index: int = 0, workers: Optional[int] = 1) -> CellSummary:
    """
    Run every replication of one grid cell.

    Failed replications are kept as records with an ``error`` message; the
    cell is flagged as failed when more than 10% of them error.
    """
    workers = resolve_workers(workers)
    jobs = [(cell, master_seed, cell_index, r) for r in range(cell.reps)]
    if workers == 1 or cell.reps == 1:
        records = [run_one(*j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            records = list(ex.map(_run_one_packed, jobs))
    ok = [r for r in records if not r["error"]]
    errors = len(records) - len(ok)
    n_ok = max(len(ok), 1)
    summary = CellSummary(
        cell=cell_index,
        proportion_exact=sum(r["exact"] for r in ok) / n_ok,
        proportion_superset=sum(r["superset"] for r in ok) / n_ok,
        proportion_screen_superset=sum(r["screen_superset"] for r in ok) / n_ok,
        mean_runtime=float(np.mean([r["_runtime"] for r in records])),
        errors=errors,
        failed=errors > 0.1 * len(records),
        records=records,
    )
    if summary.failed:
        log.warning("cell %d: %d of %d replications failed", cell_index, errors, len(records))
    return summary


def aggregate_row(cell: ExperimentCell, s: CellSummary) -> dict:
    spec = cell.spec
    d = cell.screen.d if cell.screen.d is not None else max(1, spec.n // 4)
    return {"cell": s.cell, "n": spec.n, "p": spec.p, "cov_case": spec.cov_case,
            "error_law": spec.error_law, "beta_pattern": spec.beta_pattern,
            "support_size": spec.size, "d": d, "reps": cell.reps,
            "errors": s.errors,
            "proportion_exact": f"{s.proportion_exact:.6f}",
            "proportion_superset": f"{s.proportion_superset:.6f}",
            "proportion_screen_superset": f"{s.proportion_screen_superset:.6f}",
            "status": "failed" if s.failed else "ok"}


def run_grid(grid: ExperimentGrid, workers: Optional[int] = 1) -> List[CellSummary]:
    """Run all cells; write ``replications.csv`` and ``aggregate.csv`` if ``out_dir`` is set."""
    summaries = [run_replications(c, grid.master_seed, i, workers)
                 for i, c in enumerate(grid.cells)]
    if grid.out_dir is not None:
        out = Path(grid.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "replications.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, REP_FIELDS, extrasaction="ignore", lineterminator="\n")
            w.writeheader()
            for s in summaries:
                w.writerows(s.records)
        with open(out / "aggregate.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, AGG_FIELDS, lineterminator="\n")
            w.writeheader()
            for c, s in zip(grid.cells, summaries):
                w.writerow(aggregate_row(c, s))
    return summaries


@dataclass
class CVResult:
    median_sq_err: float
    mean_sq_err: float
    predictions: np.ndarray
    sq_errors: np.ndarray
    selections: list


def loocv_median_square_error(data: Dataset, fixed_d: int,
                              screen: Optional[ScreeningConfig] = None,
                              gibbs: Optional[GibbsConfig] = None,
                              sigma2: Optional[float] = None,
                              standardize: bool = True) -> CVResult:
    """
    Leave-one-out squared prediction errors with the screening size fixed.

    Standardisation statistics come from the training rows of each fold.
    Without standardisation there is no intercept, so an empty model
    predicts 0.
    """
    n = data.n
    if n < 3:
        raise ValueError("leave-one-out needs n >= 3")
    if not 1 <= fixed_d <= n - 1:
        raise ValueError(f"fixed_d={fixed_d} must lie in [1, n-1={n - 1}]")
    screen = replace(screen or ScreeningConfig(), d=fixed_d)
    gibbs = gibbs or GibbsConfig()
    preds = np.empty(n)
    selections = []
    for i in range(n):
        train = np.delete(np.arange(n), i)
        res = two_step_select(data.rows(train), screen, gibbs, sigma2=sigma2,
                              standardize=standardize)
        preds[i] = res.predict(data.x[i])[0]
        selections.append(res.selected)
    sq = (data.y - preds) ** 2
    return CVResult(float(np.median(sq)), float(np.mean(sq)), preds, sq, selections)
