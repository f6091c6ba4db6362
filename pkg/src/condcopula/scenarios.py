"""Simulation scenarios: known mean/dependence surfaces for power studies.

Three bivariate-covariate scenarios are shipped.  All share the marginal mean
functions

    f1(x) = 0.6*sin(5*x1) - 0.9*sin(2*x2)
    f2(x) = 0.6*sin(3*x1 + 5*x2)

with constant noise scales, and differ in how Kendall's tau varies with x:

    sc1: tau(x) = 0.5                                     (constant; SA holds)
    sc2: tau(x) = 0.5 + beta*sin(10 * x.w),  w = (1,3)/sqrt(10)   (single index)
    sc3: tau(x) = 0.5 + beta*2*(x1 + cos(6*x2) - 0.45)/3          (additive)

Covariates are i.i.d. uniform on [0, 1]; responses are Gaussian transforms of
Clayton-copula pairs.  ``pad_covariates`` appends irrelevant uniform columns to
emulate higher-dimensional designs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from ._validation import as_generator
from .copulas import CLAYTON, TAU_MAX, TAU_MIN
from .datasets import Dataset

SCENARIO_NAMES = ("sc1", "sc2", "sc3")

_SC2_DIRECTION = np.array([1.0, 3.0]) / np.sqrt(10.0)


def normal_quantile(p):
    """Standard normal quantile for p strictly inside (0, 1)."""
    p = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("normal_quantile requires p strictly inside (0, 1)")
    out = ndtri(p)
    return float(out) if out.ndim == 0 else out


def _mean1(X):
    return 0.6 * np.sin(5.0 * X[:, 0]) - 0.9 * np.sin(2.0 * X[:, 1])


def _mean2(X):
    return 0.6 * np.sin(3.0 * X[:, 0] + 5.0 * X[:, 1])


@dataclass(frozen=True)
class Scenario:
    """A named data-generating process over [0, 1]^2 (plus optional padding)."""

    name: str
    beta: float = 0.25
    sigma1: float = 0.2
    sigma2: float = 0.2
    pad_covariates: int = 0
    clip_tau: bool = field(default=False)

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario {self.name!r}; choose from {SCENARIO_NAMES}")
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise ValueError("noise scales must be positive")
        if self.pad_covariates < 0:
            raise ValueError("pad_covariates must be >= 0")
        self._validate_tau_band()

    def _validate_tau_band(self):
        grid = np.linspace(0.0, 1.0, 61)
        gx, gy = np.meshgrid(grid, grid)
        G = np.column_stack([gx.ravel(), gy.ravel()])
        tau = self._tau_raw(G)
        if np.any(tau <= TAU_MIN) or np.any(tau >= TAU_MAX):
            if not self.clip_tau:
                raise ValueError(
                    f"scenario {self.name!r} with beta={self.beta} produces tau outside "
                    f"({TAU_MIN}, {TAU_MAX}); pass clip_tau=True to clamp"
                )

    @property
    def q(self) -> int:
        return 2 + self.pad_covariates

    def _tau_raw(self, X):
        if self.name == "sc1":
            return np.full(X.shape[0], 0.5)
        if self.name == "sc2":
            return 0.5 + self.beta * np.sin(10.0 * X[:, :2] @ _SC2_DIRECTION)
        return 0.5 + self.beta * 2.0 * (X[:, 0] + np.cos(6.0 * X[:, 1]) - 0.45) / 3.0

    def tau(self, X) -> np.ndarray:
        """Kendall's tau surface; padding columns are ignored."""
        X = np.asarray(X, dtype=float)
        tau = self._tau_raw(X)
        if self.clip_tau:
            tau = np.clip(tau, TAU_MIN * 1.5, TAU_MAX / 1.01)
        return tau

    def eta(self, X) -> np.ndarray:
        """Calibration surface on the link scale, log(theta(tau(x)))."""
        return np.log(CLAYTON.tau_to_theta(self.tau(X)))

    def mean1(self, X) -> np.ndarray:
        return _mean1(np.asarray(X, dtype=float))

    def mean2(self, X) -> np.ndarray:
        return _mean2(np.asarray(X, dtype=float))


def get_scenario(name: str, beta: float = 0.25, pad_covariates: int = 0, **kwargs) -> Scenario:
    return Scenario(name=name.lower(), beta=beta, pad_covariates=pad_covariates, **kwargs)


def gen_scenario(scenario: Scenario, n: int, rng) -> Dataset:
    """Generate n observations from the scenario's data-generating process."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = as_generator(rng)
    X = rng.random((n, scenario.q))
    theta = CLAYTON.tau_to_theta(scenario.tau(X))
    U = CLAYTON.sample(theta, n, rng)
    y1 = scenario.mean1(X) + scenario.sigma1 * normal_quantile(U[:, 0])
    y2 = scenario.mean2(X) + scenario.sigma2 * normal_quantile(U[:, 1])
    return Dataset(X, y1, y2)
