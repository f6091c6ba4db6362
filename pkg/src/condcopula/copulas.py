"""Bivariate Clayton copula: density, CDF, conditional distribution and sampling.

Only the positive-dependence branch (theta > 0) is supported; all simulation
scenarios live in Kendall-tau range (0, 1).  The dependence parameter has three
equivalent parametrizations used throughout the package:

    theta in (0, inf)   copula parameter,
    tau   in (0, 1)     Kendall's tau, tau = theta / (theta + 2),
    eta   in R          link scale, eta = log(theta).

A copula family is any object implementing the ``ClaytonCopula`` surface
(logpdf/pdf/cdf/hfunc/sample/loglik plus the conversions); Clayton is the only
family shipped.  Density and likelihood arithmetic is carried out in the log
domain so that large theta does not overflow.
"""

from __future__ import annotations

import numpy as np

from ._validation import as_generator, check_unit_pairs, clip_unit

# Accepted Kendall-tau band; requests outside it are rejected to avoid the
# numerically explosive tails of the theta scale.
TAU_MIN = 0.01
TAU_MAX = 0.99


def _check_theta(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if np.any(~np.isfinite(theta)) or np.any(theta <= 0.0):
        raise ValueError("Clayton theta must be finite and > 0")
    return theta


def _check_interior(u, name: str) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(u)) or np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError(f"{name} must lie strictly inside (0, 1)")
    return u


def _log_generator_sum(lu1, lu2, theta):
    """log(u1**-theta + u2**-theta - 1) from log(u1), log(u2), overflow-free.

    With a = -theta*log(u1) >= 0 and b = -theta*log(u2) >= 0,
    u1**-theta + u2**-theta - 1 = e**hi * (1 + e**(lo-hi) * (1 - e**-lo))
    where hi = max(a, b), lo = min(a, b).
    """
    a = -theta * lu1
    b = -theta * lu2
    hi = np.maximum(a, b)
    lo = np.minimum(a, b)
    return hi + np.log1p(np.exp(lo - hi) * (-np.expm1(-lo)))


class ClaytonCopula:
    """Bivariate Clayton copula, positive-dependence branch.

    Density: c(u1, u2; theta) =
        (1 + theta) * (u1*u2)**(-theta-1) * (u1**-theta + u2**-theta - 1)**(-2 - 1/theta)
    """

    name = "clayton"

    # -- parameter conversions ------------------------------------------------

    @staticmethod
    def tau_to_theta(tau) -> np.ndarray | float:
        """Kendall's tau to theta via theta = 2*tau / (1 - tau).

        Accepts tau strictly inside (TAU_MIN, TAU_MAX).
        """
        tau = np.asarray(tau, dtype=float)
        if np.any(~np.isfinite(tau)) or np.any(tau <= TAU_MIN) or np.any(tau >= TAU_MAX):
            raise ValueError(
                f"Kendall tau must lie strictly inside ({TAU_MIN}, {TAU_MAX})"
            )
        theta = 2.0 * tau / (1.0 - tau)
        return float(theta) if theta.ndim == 0 else theta

    @staticmethod
    def theta_to_tau(theta) -> np.ndarray | float:
        """theta to Kendall's tau = theta / (theta + 2)."""
        theta = _check_theta(theta)
        tau = theta / (theta + 2.0)
        return float(tau) if tau.ndim == 0 else tau

    @staticmethod
    def theta_to_eta(theta) -> np.ndarray | float:
        """Log link onto the unrestricted calibration scale."""
        theta = _check_theta(theta)
        eta = np.log(theta)
        return float(eta) if eta.ndim == 0 else eta

    @staticmethod
    def eta_to_theta(eta) -> np.ndarray | float:
        """Inverse link, theta = exp(eta)."""
        eta = np.asarray(eta, dtype=float)
        if np.any(~np.isfinite(eta)):
            raise ValueError("eta must be finite")
        theta = np.exp(eta)
        return float(theta) if theta.ndim == 0 else theta

    # -- density / distribution functions -------------------------------------

    def logpdf(self, u1, u2, theta):
        """Log copula density at strictly interior points."""
        u1 = _check_interior(u1, "u1")
        u2 = _check_interior(u2, "u2")
        theta = _check_theta(theta)
        return self._logpdf_from_logu(np.log(u1), np.log(u2), theta)

    @staticmethod
    def _logpdf_from_logu(lu1, lu2, theta):
        """Log density from precomputed log(u); hot path for the optimizers."""
        log_s = _log_generator_sum(lu1, lu2, theta)
        return np.log1p(theta) - (theta + 1.0) * (lu1 + lu2) - (2.0 + 1.0 / theta) * log_s

    def pdf(self, u1, u2, theta):
        """Copula density; symmetric in (u1, u2)."""
        return np.exp(self.logpdf(u1, u2, theta))

    def cdf(self, u1, u2, theta):
        """C(u1, u2; theta) = (u1**-theta + u2**-theta - 1)**(-1/theta) on [0, 1]^2."""
        theta = _check_theta(theta)
        u1 = np.asarray(u1, dtype=float)
        u2 = np.asarray(u2, dtype=float)
        if np.any(~np.isfinite(u1)) or np.any(~np.isfinite(u2)):
            raise ValueError("copula arguments must be finite")
        if np.any(u1 < 0.0) or np.any(u1 > 1.0) or np.any(u2 < 0.0) or np.any(u2 > 1.0):
            raise ValueError("copula arguments must lie in [0, 1]")
        u1i = np.where(u1 > 0.0, u1, 0.5)  # placeholder; masked below
        u2i = np.where(u2 > 0.0, u2, 0.5)
        log_s = _log_generator_sum(np.log(u1i), np.log(u2i), theta)
        out = np.exp(-log_s / theta)
        out = np.where((u1 <= 0.0) | (u2 <= 0.0), 0.0, out)
        out = np.where(u1 >= 1.0, u2, out)
        out = np.where(u2 >= 1.0, np.where(u1 >= 1.0, 1.0, u1), out)
        return float(out) if out.ndim == 0 else out

    def hfunc(self, u1, u2, theta):
        """Conditional CDF P(U1 <= u1 | U2 = u2) = dC/du2 at interior points.

        h(u1 | u2; theta) = u2**(-theta-1) * (u1**-theta + u2**-theta - 1)**(-1 - 1/theta).
        """
        u1 = _check_interior(u1, "u1")
        u2 = _check_interior(u2, "u2")
        theta = _check_theta(theta)
        log_s = _log_generator_sum(np.log(u1), np.log(u2), theta)
        out = np.exp(-(theta + 1.0) * np.log(u2) - (1.0 + 1.0 / theta) * log_s)
        return float(out) if out.ndim == 0 else out

    # -- sampling --------------------------------------------------------------

    def sample(self, theta, n: int, rng) -> np.ndarray:
        """Draw n i.i.d. pairs by conditional inversion.

        With u2, w independent uniforms,
        u1 = (1 + u2**-theta * (w**(-theta/(1+theta)) - 1))**(-1/theta),
        evaluated in the log domain.  ``theta`` may be a scalar or a length-n
        vector (one parameter per pair).  Returns an (n, 2) array clipped to
        the open unit square.
        """
        theta = _check_theta(theta)
        if theta.ndim not in (0, 1):
            raise ValueError("theta must be a scalar or a 1-d array")
        if theta.ndim == 1 and theta.shape[0] != n:
            raise ValueError(f"theta has length {theta.shape[0]}, expected {n}")
        if n < 1:
            raise ValueError("n must be >= 1")
        rng = as_generator(rng)
        u2 = clip_unit(rng.random(n))
        w = clip_unit(rng.random(n))
        # log u1 = -(1/theta) * log(1 + exp(a + log(expm1(b))))
        # with a = -theta*log(u2) and b = -theta/(1+theta)*log(w) > 0.
        b = -theta / (1.0 + theta) * np.log(w)
        a = -theta * np.log(u2)
        log_u1 = -np.logaddexp(0.0, a + np.log(np.expm1(b))) / theta
        u1 = clip_unit(np.exp(log_u1))
        return np.column_stack([u1, u2])

    # -- likelihood ------------------------------------------------------------

    def loglik(self, U, theta) -> float:
        """Sum of log densities over the pairs in the (n, 2) array U.

        Values are floored into the open unit square before evaluation; this is
        the one place boundary inputs are tolerated.
        """
        U = check_unit_pairs(clip_unit(np.asarray(U, dtype=float)))
        theta = _check_theta(theta)
        lu = np.log(U)
        vals = self._logpdf_from_logu(lu[:, 0], lu[:, 1], theta)
        return float(np.sum(vals))

    # -- derivatives (used by the spline calibration optimizer) -----------------

    def dlogpdf_dtheta(self, u1, u2, theta):
        """Partial derivative of the log density with respect to theta."""
        u1 = _check_interior(u1, "u1")
        u2 = _check_interior(u2, "u2")
        theta = _check_theta(theta)
        lu1 = np.log(u1)
        lu2 = np.log(u2)
        return self._dlogpdf_dtheta_from_logu(lu1, lu2, theta)

    @staticmethod
    def _dlogpdf_dtheta_from_logu(lu1, lu2, theta):
        log_s = _log_generator_sum(lu1, lu2, theta)
        # d/dtheta log(S) = -(lu1 * u1**-theta + lu2 * u2**-theta) / S
        dlog_s = -(lu1 * np.exp(-theta * lu1 - log_s) + lu2 * np.exp(-theta * lu2 - log_s))
        return (
            1.0 / (1.0 + theta)
            - (lu1 + lu2)
            + log_s / theta**2
            - (2.0 + 1.0 / theta) * dlog_s
        )

    def dlogpdf_deta(self, u1, u2, eta):
        """Derivative of the log density with respect to eta = log(theta)."""
        theta = self.eta_to_theta(eta)
        return self.dlogpdf_dtheta(u1, u2, theta) * theta


#: Shared default family instance.
CLAYTON = ClaytonCopula()
