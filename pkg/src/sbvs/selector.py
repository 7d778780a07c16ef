"""End-to-end two-step selection: screening followed by Gibbs search."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .gibbs import GibbsConfig, run_gibbs
from .marginal import (Dataset, PriorConfig, init_workspace,
                       posterior_mean_coefficients)
from .screening import ScreeningConfig, run_screening


@dataclass
class Standardizer:
    """Column centring/scaling fitted on one set of rows."""

    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    kept: np.ndarray

    @classmethod
    def fit(cls, data: Dataset) -> "Standardizer":
        x_mean = data.x.mean(axis=0)
        x_scale = data.x.std(axis=0, ddof=1) if data.n > 1 else np.zeros(data.p)
        kept = np.flatnonzero(x_scale > 1e-12 * np.maximum(1.0, np.abs(x_mean)))
        return cls(x_mean, x_scale, float(data.y.mean()), kept)

    def transform_x(self, x: np.ndarray) -> np.ndarray:
        k = self.kept
        return (np.atleast_2d(x)[:, k] - self.x_mean[k]) / self.x_scale[k]

    def transform(self, data: Dataset) -> Dataset:
        names = tuple(data.names[j] for j in self.kept)
        return Dataset(data.y - self.y_mean, self.transform_x(data.x), names)


@dataclass
class SelectionResult:
    """
    ``selected`` and ``screened`` hold column indices of the input dataset.
    ``coefficients`` are posterior means for ``selected`` on the scale the
    selection ran on (standardised when ``standardize=True``).
    """

    selected: tuple
    log_weight: float
    screened: tuple
    coefficients: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    standardizer: Optional[Standardizer] = field(default=None, repr=False)
    names: tuple = ()

    @property
    def selected_names(self):
        return [self.names[j] for j in self.selected]

    def original_scale_coefficients(self) -> np.ndarray:
        """Coefficients per unit of the raw covariates."""
        if self.standardizer is None:
            return self.coefficients.copy()
        return self.coefficients / self.standardizer.x_scale[list(self.selected)]

    def intercept(self) -> float:
        if self.standardizer is None:
            return 0.0
        s = self.standardizer
        cols = list(self.selected)
        return float(s.y_mean - self.original_scale_coefficients() @ s.x_mean[cols])

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Posterior-mean prediction for raw covariate rows ``x``."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        cols = list(self.selected)
        return self.intercept() + x[:, cols] @ self.original_scale_coefficients()


def two_step_select(data: Dataset, screen: Optional[ScreeningConfig] = None,
                    gibbs: Optional[GibbsConfig] = None,
                    sigma2: Optional[float] = None,
                    standardize: bool = False) -> SelectionResult:
    """
    Screen to ``d`` columns with ``g = g_screen``, then run the Gibbs search
    on the screened columns with ``g = g_select``.

    ``sigma2=None`` uses the Jeffreys prior on the error variance. With
    ``standardize=True`` constant columns are dropped (with a warning),
    the rest centred and scaled to unit sample standard deviation, and ``y``
    centred.
    """
    screen = screen or ScreeningConfig()
    gibbs = gibbs or GibbsConfig()
    t0 = time.perf_counter()
    std = None
    work = data
    col_map = np.arange(data.p)
    if standardize:
        std = Standardizer.fit(data)
        dropped = np.setdiff1d(np.arange(data.p), std.kept)
        if dropped.size:
            warnings.warn(
                "dropping constant columns: "
                + ", ".join(data.names[j] for j in dropped), stacklevel=2)
        if std.kept.size == 0:
            raise ValueError("no non-constant covariates left after standardising")
        work = std.transform(data)
        col_map = std.kept

    d = screen.d if screen.d is not None else max(1, work.n // 4)
    limit = min(work.n, work.p)
    if d > limit:
        warnings.warn(f"screening size d={d} clamped to {limit}", stacklevel=2)
        d = limit
    scfg = ScreeningConfig(d=d, max_passes=screen.max_passes,
                           g_screen=screen.g_screen, seed=screen.seed,
                           parallel_workers=screen.parallel_workers,
                           random_init=screen.random_init)
    screen_prior = PriorConfig(g=scfg.resolve_g(work.n, work.p), sigma2=sigma2)
    sres = run_screening(work, screen_prior, scfg)
    t1 = time.perf_counter()

    select_prior = PriorConfig(g=gibbs.resolve_g(len(sres.subset)),
                               q=gibbs.q_select, sigma2=sigma2)
    gres = run_gibbs(work, sres.subset, select_prior, gibbs)
    t2 = time.perf_counter()

    ws = init_workspace(work, gres.best, select_prior)
    coefs = posterior_mean_coefficients(ws)
    diagnostics = {
        "d": d,
        "g_screen": screen_prior.g,
        "g_select": select_prior.g,
        "passes": sres.passes,
        "screen_evaluations": sres.evaluations,
        "screen_log_weight": sres.log_weight,
        "sweeps": gibbs.sweeps,
        "gibbs_states": gres.n_states,
        "top_models": [(tuple(int(col_map[j]) for j in m), c)
                       for m, c in gres.top_models(gibbs.top_k)],
        "screen_seconds": t1 - t0,
        "gibbs_seconds": t2 - t1,
    }
    return SelectionResult(
        selected=tuple(int(col_map[j]) for j in gres.best),
        log_weight=gres.best_weight,
        screened=tuple(int(col_map[j]) for j in sres.subset),
        coefficients=coefs,
        diagnostics=diagnostics,
        standardizer=std,
        names=data.names,
    )
