"""
Brute-force enumeration of every model's log weight for small ``p``.

Nothing here touches the incremental workspace: each subset is evaluated by a
dense solve on its own Gram matrix, so agreement with :mod:`sbvs.marginal`
is a genuine two-route check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .marginal import Dataset, PriorConfig

P_CAP = 22


@dataclass
class EnumerationResult:
    best: tuple
    best_weight: float
    subsets: list
    weights: np.ndarray

    def table(self, k: Optional[int] = None):
        """``(subset, weight)`` pairs sorted by decreasing weight."""
        order = np.argsort(-self.weights, kind="stable")
        if k is not None:
            order = order[:k]
        return [(self.subsets[i], float(self.weights[i])) for i in order]

    def normalized(self) -> np.ndarray:
        return normalize_log_weights(self.weights)

    def restricted_best(self, allowed: Iterable[int]):
        """Argmax over subsets of ``allowed`` only."""
        allowed = set(allowed)
        mask = np.array([set(s) <= allowed for s in self.subsets])
        w = np.where(mask, self.weights, -np.inf)
        i = int(np.argmax(w))
        return self.subsets[i], float(w[i])


def normalize_log_weights(w) -> np.ndarray:
    """Posterior probabilities from log weights via log-sum-exp."""
    w = np.asarray(w, dtype=np.float64)
    m = np.max(w)
    e = np.exp(w - m)
    return e / e.sum()


def dense_log_weight(data: Dataset, subset, prior: PriorConfig) -> float:
    """Direct evaluation of one model's log weight with ``det`` and ``solve``."""
    cols = list(subset)
    d = len(cols)
    log_odds = prior.inclusion_log_odds(data.p)
    if d == 0:
        r2 = float(data.y @ data.y)
        logdet = 0.0
    else:
        xa = data.x[:, cols]
        gram = xa.T @ xa
        sign, logdet = np.linalg.slogdet(np.eye(d) + prior.g * gram)
        a = gram + np.eye(d) / prior.g
        b = xa.T @ data.y
        r2 = float(data.y @ data.y - b @ np.linalg.solve(a, b))
    w = d * log_odds - 0.5 * logdet
    if prior.jeffreys:
        return w - 0.5 * data.n * math.log(r2)
    return w - r2 / (2.0 * prior.sigma2)


def _batch_weights(data, prior, combos):
    # all subsets in ``combos`` share one size, so the solves stack
    k = combos.shape[1]
    n_models = combos.shape[0]
    log_odds = prior.inclusion_log_odds(data.p)
    yy = float(data.y @ data.y)
    if k == 0:
        r2 = np.full(n_models, yy)
        logdet = np.zeros(n_models)
    else:
        full_gram = data.x.T @ data.x
        xy = data.x.T @ data.y
        gram = full_gram[combos[:, :, None], combos[:, None, :]]
        eye = np.eye(k)
        _, logdet = np.linalg.slogdet(eye + prior.g * gram)
        b = xy[combos]
        sol = np.linalg.solve(gram + eye / prior.g, b[:, :, None])[:, :, 0]
        r2 = yy - np.einsum("ij,ij->i", b, sol)
    w = k * log_odds - 0.5 * logdet
    if prior.jeffreys:
        return w - 0.5 * data.n * np.log(r2)
    return w - r2 / (2.0 * prior.sigma2)


def enumerate_posteriors(data: Dataset, prior: PriorConfig,
                         p_cap: int = P_CAP) -> EnumerationResult:
    """
    Log weight of all ``2^p`` models.

    Ties in the argmax go to the lexicographically smallest subset.
    """
    p = data.p
    if p > p_cap:
        raise ValueError(f"p = {p} exceeds the enumeration cap {p_cap}")
    subsets = []
    chunks = []
    for k in range(p + 1):
        combos = list(itertools.combinations(range(p), k))
        subsets.extend(combos)
        arr = np.array(combos, dtype=np.intp).reshape(len(combos), k)
        chunks.append(_batch_weights(data, prior, arr))
    weights = np.concatenate(chunks)
    if prior.jeffreys and not np.all(np.isfinite(weights)):
        raise ValueError("non-finite weight in enumeration (degenerate response?)")
    top = np.flatnonzero(weights == weights.max())
    i = min(top, key=lambda t: subsets[t])
    return EnumerationResult(subsets[i], float(weights[i]), subsets, weights)
