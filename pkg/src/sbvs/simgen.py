"""
Simulated designs: four covariate covariance structures, three error laws
and three coefficient patterns, with a randomly placed sparse support.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .marginal import Dataset

COV_CASES = ("identity", "block", "equicorrelation", "ar1")
ERROR_LAWS = ("gaussian", "mvt", "iid_t")
BETA_PATTERNS = ("constant", "decaying", "increasing")

# block-dependence correlations: active/active, inactive/inactive, cross
BLOCK_RHO = (0.25, 0.75, 0.50)
EQUI_RHO = 0.5
AR_RHO = 0.9
T_DF = 2
BLOCK_MAX_P = 500


@dataclass(frozen=True)
class ScenarioSpec:
    n: int
    p: int
    cov_case: str = "identity"
    error_law: str = "gaussian"
    beta_pattern: str = "constant"
    support_size: Optional[int] = None
    error_scale: float = 1.0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.cov_case not in COV_CASES:
            raise ValueError(f"unknown covariance case {self.cov_case!r}; choose from {COV_CASES}")
        if self.error_law not in ERROR_LAWS:
            raise ValueError(f"unknown error law {self.error_law!r}; choose from {ERROR_LAWS}")
        if self.beta_pattern not in BETA_PATTERNS:
            raise ValueError(f"unknown beta pattern {self.beta_pattern!r}; choose from {BETA_PATTERNS}")
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if not 0 <= self.size <= self.p:
            raise ValueError(f"support size {self.size} exceeds p={self.p}")
        if self.cov_case == "block" and self.p > BLOCK_MAX_P:
            raise ValueError(f"block covariance case needs p <= {BLOCK_MAX_P}, got {self.p}")

    @property
    def size(self) -> int:
        if self.support_size is not None:
            return self.support_size
        return 5 if self.p <= 500 else 10


@dataclass
class GeneratedTruth:
    dataset: Dataset
    true_support: tuple
    true_beta: np.ndarray
    errors: np.ndarray


def beta_values(pattern: str, k: int) -> np.ndarray:
    """
    Nonzero coefficients in generation order.

    The grid step is ``1/k``: 0.2 for five actives, 0.1 for ten.
    """
    if k == 0:
        return np.zeros(0)
    steps = np.arange(k) / k
    if pattern == "constant":
        return np.full(k, 2.0)
    if pattern == "decaying":
        return np.round(2.0 - steps, 12)
    if pattern == "increasing":
        return np.round(2.0 + steps, 12)
    raise ValueError(f"unknown beta pattern {pattern!r}")


def block_covariance(p: int, active) -> np.ndarray:
    r_aa, r_ii, r_ai = BLOCK_RHO
    mask = np.zeros(p, dtype=bool)
    mask[list(active)] = True
    sigma = np.where(np.logical_and.outer(mask, mask), r_aa,
                     np.where(np.logical_or.outer(mask, mask), r_ai, r_ii))
    np.fill_diagonal(sigma, 1.0)
    return sigma


@lru_cache(maxsize=16)
def _block_factor(p: int, k: int) -> np.ndarray:
    # canonical ordering puts the k active columns first
    try:
        return np.linalg.cholesky(block_covariance(p, range(k)))
    except np.linalg.LinAlgError:
        raise ValueError(
            f"block dependence covariance is not positive definite for p={p}, "
            f"support size {k}") from None


def sample_covariates(spec: ScenarioSpec, rng: np.random.Generator,
                      support=None) -> np.ndarray:
    """
    ``n x p`` matrix with rows iid ``N(0, Sigma)``.

    The block case needs ``support`` since the correlations depend on which
    columns are active.
    """
    n, p = spec.n, spec.p
    case = spec.cov_case
    if case == "identity":
        return rng.standard_normal((n, p))
    if case == "equicorrelation":
        z = rng.standard_normal((n, p))
        w = rng.standard_normal((n, 1))
        return math.sqrt(1 - EQUI_RHO) * z + math.sqrt(EQUI_RHO) * w
    if case == "ar1":
        z = rng.standard_normal((n, p))
        x = np.empty((n, p))
        x[:, 0] = z[:, 0]
        innov = math.sqrt(1 - AR_RHO ** 2)
        for j in range(1, p):
            x[:, j] = AR_RHO * x[:, j - 1] + innov * z[:, j]
        return x
    if case == "block":
        if support is None:
            raise ValueError("block covariance case requires the active support")
        support = list(support)
        k = len(support)
        chol = _block_factor(p, k)
        canon = rng.standard_normal((n, p)) @ chol.T
        inactive = np.setdiff1d(np.arange(p), support)
        x = np.empty((n, p))
        x[:, support] = canon[:, :k]
        x[:, inactive] = canon[:, k:]
        return x
    raise ValueError(f"unknown covariance case {case!r}")


def sample_errors(n: int, error_law: str, rng: np.random.Generator) -> np.ndarray:
    """
    Error vector of length ``n``.

    ``mvt`` is the multivariate t with 2 df (one chi-square divisor shared by
    all coordinates); ``iid_t`` draws each coordinate independently.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if error_law == "gaussian":
        return rng.standard_normal(n)
    if error_law == "mvt":
        z = rng.standard_normal(n)
        w = rng.chisquare(T_DF)
        return z * math.sqrt(T_DF / w)
    if error_law == "iid_t":
        return rng.standard_t(T_DF, size=n)
    raise ValueError(f"unknown error law {error_law!r}")


def generate_dataset(spec: ScenarioSpec,
                     rng: Optional[np.random.Generator] = None) -> GeneratedTruth:
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    k = spec.size
    drawn = rng.choice(spec.p, size=k, replace=False)
    beta = beta_values(spec.beta_pattern, k)
    order = np.argsort(drawn)
    support = tuple(int(j) for j in drawn[order])
    beta = beta[order]
    x = sample_covariates(spec, rng, support)
    e = sample_errors(spec.n, spec.error_law, rng) * spec.error_scale
    y = x[:, list(support)] @ beta + e
    return GeneratedTruth(Dataset(y, x), support, beta, e)


def write_csv(truth: GeneratedTruth, path, response: str = "y") -> None:
    """Write ``y`` and all covariates with a header row."""
    data = truth.dataset
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([response, *data.names])
        for i in range(data.n):
            writer.writerow([repr(float(data.y[i]))] + [repr(float(v)) for v in data.x[i]])
