"""Input validation helpers shared across the estimators and test procedures."""

from __future__ import annotations

import numbers

import numpy as np

# Probability-integral-transform values are kept strictly inside the unit
# interval; this floor is applied wherever a likelihood is evaluated.
UNIT_EPS = 1e-12


def as_generator(random_state) -> np.random.Generator:
    """Coerce ``None``, an integer seed, a SeedSequence or a Generator to a Generator."""
    if random_state is None:
        return np.random.default_rng()
    if isinstance(random_state, np.random.Generator):
        return random_state
    if isinstance(random_state, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(random_state)
    raise TypeError(
        f"random_state must be None, an int, a SeedSequence or a Generator, "
        f"got {type(random_state).__name__}"
    )


def check_unit_pairs(U, *, name: str = "U") -> np.ndarray:
    """Validate an (n, 2) array of unit-square pairs, strictly interior."""
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[1] != 2:
        raise ValueError(f"{name} must have shape (n, 2), got {U.shape}")
    if U.shape[0] == 0:
        raise ValueError(f"{name} must contain at least one pair")
    if not np.all(np.isfinite(U)):
        raise ValueError(f"{name} contains non-finite values")
    if np.any(U <= 0.0) or np.any(U >= 1.0):
        raise ValueError(f"{name} must lie strictly inside the unit square")
    return U


def check_covariates(X, *, name: str = "X") -> np.ndarray:
    """Validate a 2-d finite covariate matrix."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={X.ndim}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def check_vector(y, n: int | None = None, *, name: str = "y") -> np.ndarray:
    """Validate a finite 1-d vector, optionally of prescribed length."""
    y = np.asarray(y, dtype=float).ravel()
    if n is not None and y.shape[0] != n:
        raise ValueError(f"{name} has length {y.shape[0]}, expected {n}")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} contains non-finite values")
    return y


def clip_unit(u: np.ndarray) -> np.ndarray:
    """Clamp values into the open unit interval used by likelihood evaluations."""
    return np.clip(u, UNIT_EPS, 1.0 - UNIT_EPS)
