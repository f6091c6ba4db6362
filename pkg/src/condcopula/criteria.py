"""Predictive model-selection criteria computed from a draws matrix.

A draws matrix holds per-draw, per-observation log densities: the joint
log density of both responses plus each marginal log density.  The criteria
are agnostic to how the draws were produced; :func:`bootstrap_draws` emulates
posterior draws by refitting on nonparametric bootstrap resamples.

Conventions: larger is better for CVML and CCVML, smaller is better for WAIC.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import logsumexp

from ._validation import as_generator
from .datasets import Dataset


@dataclass(frozen=True)
class DrawsMatrix:
    """M x n log-density blocks: joint, margin 1 and margin 2."""

    joint: np.ndarray
    m1: np.ndarray
    m2: np.ndarray

    def __post_init__(self):
        for name in ("joint", "m1", "m2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 2:
                raise ValueError(f"{name} must be 2-dimensional")
            if arr.shape != np.shape(self.joint):
                raise ValueError("all blocks must share the same shape")
            if arr.size == 0:
                raise ValueError(f"{name} must be non-empty")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            object.__setattr__(self, name, arr)

    @property
    def n_draws(self) -> int:
        return self.joint.shape[0]

    @property
    def n_obs(self) -> int:
        return self.joint.shape[1]


class WaicResult(NamedTuple):
    waic: float
    fit: float
    penalty: float


def cvml(draws: DrawsMatrix) -> float:
    """Cross-validated pseudo marginal likelihood estimate.

    ``-sum_i log((1/M) sum_t exp(-l_ti))`` with log-sum-exp stabilization;
    larger is better.
    """
    M = draws.n_draws
    return float(np.sum(np.log(M) - logsumexp(-draws.joint, axis=0)))


def ccvml(draws: DrawsMatrix) -> float:
    """Conditional variant of CVML built from both conditional predictions.

    ``-(1/2) sum_i { log((1/M) sum_t exp(m2_ti - l_ti))
                   + log((1/M) sum_t exp(m1_ti - l_ti)) }``; larger is better.
    """
    M = draws.n_draws
    log_m = np.log(M)
    given2 = logsumexp(draws.m2 - draws.joint, axis=0) - log_m
    given1 = logsumexp(draws.m1 - draws.joint, axis=0) - log_m
    return float(-0.5 * np.sum(given2 + given1))


def waic(draws: DrawsMatrix) -> WaicResult:
    """Watanabe-Akaike criterion: -2*fit + 2*penalty; smaller is better.

    fit sums the log of draw-averaged densities; the penalty sums the
    per-observation sample variances (divisor M - 1) of the log densities.
    """
    M = draws.n_draws
    if M < 2:
        raise ValueError("WAIC needs at least 2 draws for a defined variance")
    fit = float(np.sum(logsumexp(draws.joint, axis=0) - np.log(M)))
    penalty = float(np.sum(np.var(draws.joint, axis=0, ddof=1)))
    return WaicResult(waic=-2.0 * fit + 2.0 * penalty, fit=fit, penalty=penalty)


def bootstrap_draws(
    train: Dataset,
    eval_data: Dataset,
    fit_fn: Callable[[Dataset, np.random.Generator], object],
    B: int,
    rng,
) -> DrawsMatrix:
    """Emulate posterior draws by B bootstrap refits evaluated on ``eval_data``.

    ``fit_fn(dataset, rng)`` must return an object exposing
    ``log_density_blocks(X, Y) -> (joint, m1, m2)``.  A failed refit is retried
    once with a fresh resample before the whole call errors out.
    """
    if B < 2:
        raise ValueError("B must be >= 2")
    rng = as_generator(rng)
    n = train.n
    joint = np.empty((B, eval_data.n))
    m1 = np.empty((B, eval_data.n))
    m2 = np.empty((B, eval_data.n))
    for b in range(B):
        last_error = None
        for _ in range(2):
            idx = rng.integers(0, n, size=n)
            try:
                model = fit_fn(train.subset(idx), rng)
                joint[b], m1[b], m2[b] = model.log_density_blocks(
                    eval_data.X, eval_data.Y
                )
                last_error = None
                break
            except (ValueError, RuntimeError, np.linalg.LinAlgError) as e:
                last_error = e
        if last_error is not None:
            raise RuntimeError(
                f"bootstrap draw {b} failed twice: {last_error}"
            ) from last_error
    return DrawsMatrix(joint=joint, m1=m1, m2=m2)
