"""Permutation-invariant binary cross-entropy.

Convention: ``permutation[n]`` is the label row paired with prediction row
``n``, and the loss is

    (1 / (N T)) * min_phi  sum_n sum_t BCE(y[phi[n], t], yhat[n, t])

Pair totals are combined with :func:`math.fsum`, so the loss does not
depend on the order of the rows.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .labels import LabelMatrix

EPS = 1e-7
MAX_BRUTEFORCE_SINGERS = 8


@dataclass(frozen=True)
class PredictionMatrix:
    """Per-frame activity probabilities ``[0, 1]^{N x T}``."""

    data: np.ndarray
    frame_duration: float = 0.1

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError(f"prediction data must be 2-D, got shape {data.shape}")
        if data.size and (np.isnan(data).any() or data.min() < 0.0 or data.max() > 1.0):
            raise ValueError("predictions must lie in [0, 1]")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def num_singers(self) -> int:
        return self.data.shape[0]

    @property
    def num_frames(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class PitResult:
    loss: float
    permutation: tuple[int, ...]
    per_pair_cost: np.ndarray

    def to_dict(self) -> dict:
        return {
            "loss": self.loss,
            "permutation": list(self.permutation),
            "per_pair_cost": self.per_pair_cost.tolist(),
        }


def bce(y, y_hat, eps: float = EPS):
    """Elementwise binary cross-entropy with ``y_hat`` clamped to ``[eps, 1 - eps]``."""
    if not 0.0 < eps < 0.5:
        raise ValueError(f"eps must be in (0, 0.5), got {eps}")
    y = np.asarray(y, dtype=np.float64)
    p = np.clip(np.asarray(y_hat, dtype=np.float64), eps, 1.0 - eps)
    return -(y * np.log(p) + (1.0 - y) * np.log1p(-p))


def _arrays(y, y_hat) -> tuple[np.ndarray, np.ndarray]:
    y = y.data if isinstance(y, LabelMatrix) else np.asarray(y)
    y_hat = y_hat.data if isinstance(y_hat, PredictionMatrix) else np.asarray(y_hat)
    y = np.atleast_2d(y).astype(np.float64)
    y_hat = np.atleast_2d(y_hat).astype(np.float64)
    if y.shape != y_hat.shape:
        raise ValueError(f"shape mismatch: labels {y.shape} vs predictions {y_hat.shape}")
    if y.shape[0] < 1 or y.shape[1] < 1:
        raise ValueError(f"empty label matrix {y.shape}")
    return y, y_hat


def _costs(y: np.ndarray, y_hat: np.ndarray, eps: float) -> np.ndarray:
    return bce(y[None, :, :], y_hat[:, None, :], eps).sum(axis=-1)


def pair_costs(y, y_hat, eps: float = EPS) -> np.ndarray:
    """``cost[n, m] = sum_t BCE(y[m, t], y_hat[n, t])``."""
    return _costs(*_arrays(y, y_hat), eps)


def _total(cost: np.ndarray, perm) -> float:
    return math.fsum(cost[n, m] for n, m in enumerate(perm))


def pit_loss_bruteforce(y, y_hat, eps: float = EPS) -> PitResult:
    """Enumerate all ``N!`` pairings; ties go to the lexicographically smallest."""
    y, y_hat = _arrays(y, y_hat)
    N, T = y.shape
    cost = _costs(y, y_hat, eps)
    if N > MAX_BRUTEFORCE_SINGERS:
        raise ValueError(f"brute force limited to {MAX_BRUTEFORCE_SINGERS} singers, got {N}")
    best, best_perm = math.inf, None
    for perm in itertools.permutations(range(N)):
        total = _total(cost, perm)
        if total < best:
            best, best_perm = total, perm
    return PitResult(best / (N * T), tuple(best_perm), cost)


def pit_loss(y, y_hat, eps: float = EPS) -> PitResult:
    """Same minimum as :func:`pit_loss_bruteforce`, via linear assignment.

    The objective is a sum of independent pair costs, so the Hungarian
    solution is exact. Among tied optima the chosen permutation may differ
    from the brute-force one; the loss does not.
    """
    y, y_hat = _arrays(y, y_hat)
    N, T = y.shape
    cost = _costs(y, y_hat, eps)
    rows, cols = linear_sum_assignment(cost)
    perm = tuple(int(c) for c in cols[np.argsort(rows)])
    return PitResult(_total(cost, perm) / (N * T), perm, cost)


pit_loss_assignment = pit_loss


def permute_predictions(y_hat, permutation) -> np.ndarray:
    """Reorder prediction rows so row ``m`` aligns with label row ``m``."""
    y_hat = y_hat.data if isinstance(y_hat, PredictionMatrix) else np.asarray(y_hat)
    out = np.empty_like(y_hat)
    out[list(permutation)] = y_hat
    return out
