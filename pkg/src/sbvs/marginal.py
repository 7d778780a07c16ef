"""
Closed-form log posterior model weights and an incrementally updated
Cholesky workspace.

For a model ``alpha`` with design columns ``X_a`` the regularised Gram matrix
is ``A = I/g + X_a' X_a``. Every quantity the weight needs comes from the
Cholesky factor of ``A``, the cross-product ``b = X_a' y`` and ``y'y``:

    R*^2        = y'y - b' A^{-1} b
    log|I + g X_a'X_a| = d log g + log|A|

so adding, removing or swapping a single column costs O(n d + d^2) instead
of a fresh O(n d^2 + d^3) factorisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "Dataset",
    "PriorConfig",
    "ModelWorkspace",
    "DegenerateResponseError",
    "as_subset",
    "init_workspace",
    "log_posterior_weight",
    "add_covariate",
    "remove_covariate",
    "swap_covariate",
    "posterior_mean_coefficients",
    "residual_sum",
    "scan_additions",
]


class DegenerateResponseError(ValueError):
    """Regularised residual is not positive, so the Jeffreys weight is undefined."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Response vector and design matrix.

    Parameters
    ----------
    y : array_like, shape (n,)
    x : array_like, shape (n, p)
        Stored column-major so single columns are contiguous.
    names : sequence of str, optional
        Column labels, defaults to ``x0, x1, ...``.
    """

    y: np.ndarray
    x: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64).ravel()
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2:
            raise ValueError(f"x must be 2-D, got shape {x.shape}")
        if x.shape[0] != y.shape[0]:
            raise ValueError(
                f"x has {x.shape[0]} rows but y has {y.shape[0]} entries")
        if y.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError("dataset needs n >= 1 and p >= 1")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise ValueError("dataset contains non-finite values")
        names = tuple(self.names) if self.names else tuple(
            f"x{j}" for j in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise ValueError("names must have one entry per column of x")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", np.asfortranarray(x))
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @cached_property
    def yy(self) -> float:
        return float(self.y @ self.y)

    @cached_property
    def xty(self) -> np.ndarray:
        return self.x.T @ self.y

    @cached_property
    def col_sq(self) -> np.ndarray:
        return np.einsum("ij,ij->j", self.x, self.x)

    def rows(self, idx) -> "Dataset":
        return Dataset(self.y[idx], self.x[idx], self.names)


@dataclass(frozen=True)
class PriorConfig:
    """
    Hyperparameters of the model and coefficient priors.

    ``g`` scales the Gaussian slab ``beta_a | sigma^2 ~ N(0, g sigma^2 I)``.
    ``q`` is the Bernoulli inclusion probability; ``None`` means ``1/p``.
    ``sigma2`` is the known error variance, or ``None`` for the Jeffreys
    prior on an unknown variance.
    """

    g: float
    q: Optional[float] = None
    sigma2: Optional[float] = None

    def __post_init__(self):
        if not (self.g > 0 and math.isfinite(self.g)):
            raise ValueError(f"g must be positive and finite, got {self.g}")
        if self.q is not None and not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q}")
        if self.sigma2 is not None and not self.sigma2 > 0:
            raise ValueError(f"known sigma2 must be positive, got {self.sigma2}")

    @property
    def jeffreys(self) -> bool:
        return self.sigma2 is None

    def inclusion_log_odds(self, p: int) -> float:
        """Prior log-odds ``log(q / (1 - q))`` charged per selected covariate."""
        q = self.q
        if q is None:
            # q = 1/p degenerates at p = 1; fall back to an even prior
            if p < 2:
                return 0.0
            return -math.log(p - 1)
        return math.log(q) - math.log1p(-q)


def as_subset(indices: Iterable[int], p: int) -> tuple:
    """Validate column indices and return them as a sorted tuple."""
    out = sorted(int(j) for j in indices)
    if len(set(out)) != len(out):
        raise ValueError(f"duplicate column indices in {out}")
    if out and (out[0] < 0 or out[-1] >= p):
        raise IndexError(f"column index out of range [0, {p}) in {out}")
    return tuple(out)


@dataclass
class ModelWorkspace:
    """
    Cached factorisation for one model.

    ``cols`` keeps the insertion order that matches the rows of ``chol``;
    ``subset`` is the sorted view.
    """

    cols: tuple
    chol: np.ndarray
    bx: np.ndarray
    yy: float
    logdet_a: float
    ridge: float
    _u: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def subset(self) -> tuple:
        return tuple(sorted(self.cols))

    @property
    def d(self) -> int:
        return len(self.cols)

    @property
    def g(self) -> float:
        return 1.0 / self.ridge

    @property
    def u(self) -> np.ndarray:
        """``L^{-1} b``, so that ``b' A^{-1} b = |u|^2``."""
        if self._u is None:
            if self.d == 0:
                self._u = np.zeros(0)
            else:
                self._u = solve_triangular(self.chol, self.bx, lower=True,
                                           check_finite=False)
        return self._u

    def gram(self) -> np.ndarray:
        return self.chol @ self.chol.T

    def copy(self) -> "ModelWorkspace":
        return ModelWorkspace(self.cols, self.chol.copy(), self.bx.copy(),
                              self.yy, self.logdet_a, self.ridge,
                              None if self._u is None else self._u.copy())


def _check_col(j, p):
    j = int(j)
    if not 0 <= j < p:
        raise IndexError(f"column index {j} out of range [0, {p})")
    return j


def init_workspace(data: Dataset, subset: Iterable[int],
                   prior: PriorConfig) -> ModelWorkspace:
    """Factorise ``I/g + X_a'X_a`` from scratch for ``subset``."""
    cols = as_subset(subset, data.p)
    ridge = 1.0 / prior.g
    d = len(cols)
    if d == 0:
        return ModelWorkspace((), np.zeros((0, 0)), np.zeros(0), data.yy, 0.0, ridge)
    xa = data.x[:, cols]
    a = xa.T @ xa
    a[np.diag_indices(d)] += ridge
    chol = np.linalg.cholesky(a)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return ModelWorkspace(cols, chol, data.xty[list(cols)].copy(), data.yy,
                          logdet, ridge)


def residual_sum(ws: ModelWorkspace) -> float:
    """Regularised residual ``y'y - b'A^{-1}b``."""
    u = ws.u
    return ws.yy - float(u @ u)


def _weight(d, logdet_a, r2, log_g, prior_odds, n, sigma2):
    # shared by the scalar path and the vectorised candidate scan
    penalty = d * prior_odds - 0.5 * (d * log_g + logdet_a)
    if sigma2 is None:
        return penalty - 0.5 * n * np.log(r2)
    return penalty - r2 / (2.0 * sigma2)


def log_posterior_weight(ws: ModelWorkspace, prior: PriorConfig,
                         data: Dataset) -> float:
    """
    Log of the unnormalised posterior probability of the workspace's model.

    Differences of two weights are exact log posterior odds.
    """
    if not math.isclose(ws.ridge, 1.0 / prior.g, rel_tol=1e-12):
        raise ValueError("workspace was built with a different g")
    r2 = residual_sum(ws)
    if prior.jeffreys and not r2 > 0:
        raise DegenerateResponseError(
            f"regularised residual R*^2 = {r2:g} is not positive")
    return float(_weight(ws.d, ws.logdet_a, r2, math.log(prior.g),
                         prior.inclusion_log_odds(data.p), data.n, prior.sigma2))


def _append_column(ws: ModelWorkspace, j: int, data: Dataset) -> ModelWorkspace:
    d = ws.d
    xj = data.x[:, j]
    diag = ws.ridge + data.col_sq[j]
    if d == 0:
        s2 = diag
        v = np.zeros(0)
    else:
        cross = data.x[:, list(ws.cols)].T @ xj
        v = solve_triangular(ws.chol, cross, lower=True, check_finite=False)
        # Schur complement of A is bounded below by the ridge
        s2 = max(diag - float(v @ v), ws.ridge)
    s = math.sqrt(s2)
    chol = np.zeros((d + 1, d + 1))
    chol[:d, :d] = ws.chol
    chol[d, :d] = v
    chol[d, d] = s
    bx = np.append(ws.bx, data.xty[j])
    u = None
    if ws._u is not None:
        u = np.append(ws._u, (data.xty[j] - float(v @ ws._u)) / s)
    return ModelWorkspace(ws.cols + (j,), chol, bx, ws.yy,
                          ws.logdet_a + math.log(s2), ws.ridge, u)


def add_covariate(ws: ModelWorkspace, j: int, data: Dataset) -> ModelWorkspace:
    """Return a new workspace for ``subset + {j}`` via a Cholesky append."""
    j = _check_col(j, data.p)
    if j in ws.cols:
        raise ValueError(f"column {j} is already in the model")
    return _append_column(ws, j, data)


def _chol_rank_one_update(lower: np.ndarray, x: np.ndarray) -> None:
    # in place: lower @ lower.T += outer(x, x), Givens-style sweep
    m = lower.shape[0]
    for k in range(m):
        lkk = lower[k, k]
        r = math.hypot(lkk, x[k])
        c = r / lkk
        s = x[k] / lkk
        lower[k, k] = r
        if k + 1 < m:
            lower[k + 1:, k] = (lower[k + 1:, k] + s * x[k + 1:]) / c
            x[k + 1:] = c * x[k + 1:] - s * lower[k + 1:, k]


def remove_covariate(ws: ModelWorkspace, j: int, data: Dataset) -> ModelWorkspace:
    """Return a new workspace for ``subset - {j}``; the trailing block is re-triangularised."""
    j = int(j)
    try:
        k = ws.cols.index(j)
    except ValueError:
        raise ValueError(f"column {j} is not in the model") from None
    d = ws.d
    keep = [i for i in range(d) if i != k]
    chol = ws.chol[np.ix_(keep, keep)]
    if k < d - 1:
        trailing = chol[k:, k:]
        _chol_rank_one_update(trailing, ws.chol[k + 1:, k].copy())
        chol[k:, k:] = trailing
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol)))) if d > 1 else 0.0
    cols = ws.cols[:k] + ws.cols[k + 1:]
    return ModelWorkspace(cols, chol, ws.bx[keep], ws.yy, logdet, ws.ridge)


def swap_covariate(ws: ModelWorkspace, out_j: int, in_k: int,
                   data: Dataset) -> ModelWorkspace:
    """Replace ``out_j`` by ``in_k``."""
    in_k = _check_col(in_k, data.p)
    if in_k in ws.cols:
        raise ValueError(f"column {in_k} is already in the model")
    return _append_column(remove_covariate(ws, out_j, data), in_k, data)


def posterior_mean_coefficients(ws: ModelWorkspace) -> np.ndarray:
    """
    Posterior mean ``A^{-1} X_a'y`` of the included coefficients, ordered
    as ``ws.subset``.
    """
    if ws.d == 0:
        return np.zeros(0)
    beta = solve_triangular(ws.chol, ws.u, lower=True, trans="T",
                            check_finite=False)
    order = np.argsort(ws.cols)
    return beta[order]


def scan_additions(ws: ModelWorkspace, data: Dataset, prior: PriorConfig,
                   candidates: Sequence[int]) -> np.ndarray:
    """
    Log weights of ``subset + {k}`` for every ``k`` in ``candidates``.

    Each candidate is scored by the same rank-one append as
    :func:`add_covariate`, vectorised across candidates. Candidates already in
    the model get ``-inf``.
    """
    cand = np.asarray(candidates, dtype=np.intp)
    d = ws.d
    diag = ws.ridge + data.col_sq[cand]
    xty = data.xty[cand]
    if d == 0:
        s2 = diag
        t = xty / np.sqrt(s2)
        r2 = ws.yy - t * t
    else:
        cross = data.x[:, list(ws.cols)].T @ data.x[:, cand]
        v = solve_triangular(ws.chol, cross, lower=True, check_finite=False)
        s2 = np.maximum(diag - np.einsum("ij,ij->j", v, v), ws.ridge)
        u = ws.u
        t = (xty - u @ v) / np.sqrt(s2)
        r2 = (ws.yy - float(u @ u)) - t * t
    if prior.jeffreys:
        bad = ~(r2 > 0)
        if np.any(bad):
            raise DegenerateResponseError(
                "regularised residual R*^2 is not positive for a candidate")
    w = _weight(d + 1, ws.logdet_a + np.log(s2), r2, math.log(prior.g),
                prior.inclusion_log_odds(data.p), data.n, prior.sigma2)
    inside = np.isin(cand, ws.cols)
    if inside.any():
        w = np.where(inside, -np.inf, w)
    return w
