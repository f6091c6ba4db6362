"""Gaussian marginal regression: kernel-smoothed conditional means with constant
residual variance, and the probability integral transform (PIT) built on them.

Each response margin is modeled as y | x ~ N(f(x), sigma^2) with f estimated by
Nadaraya-Watson regression (product Gaussian kernel, per-dimension bandwidth)
and sigma from leave-one-out residuals.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.special import erf
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_covariates, check_vector, clip_unit

_SQRT2 = np.sqrt(2.0)

# Relative-to-rule-of-thumb multipliers scanned by bandwidth cross-validation.
_CV_LOG_RANGE = (-0.9, 0.6)


def gaussian_cdf(z):
    """Standard normal CDF via the error-function identity Phi(z) = (1 + erf(z/sqrt 2))/2."""
    z = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z)):
        raise ValueError("gaussian_cdf requires finite input")
    out = 0.5 * (1.0 + erf(z / _SQRT2))
    return float(out) if out.ndim == 0 else out


def _sq_dists(A, B):
    """Per-dimension squared distances, shape (len(A), len(B), q)."""
    return (A[:, None, :] - B[None, :, :]) ** 2


def _kernel_weights(sq, bandwidth):
    """Product Gaussian kernel weights from per-dimension squared distances."""
    expo = np.zeros(sq.shape[:2])
    for d in range(sq.shape[2]):
        expo -= 0.5 * sq[:, :, d] / bandwidth[d] ** 2
    return np.exp(expo)


def _nw_predict(weights, y, fallback_idx):
    """Weighted means with a nearest-neighbor fallback for fully underflowed rows."""
    totals = weights.sum(axis=1)
    dead = totals <= 0.0
    safe = np.where(dead, 1.0, totals)
    out = weights @ y / safe
    if np.any(dead):
        out[dead] = y[fallback_idx[dead]]
    return out


class KernelMarginModel(BaseEstimator, RegressorMixin):
    """Nadaraya-Watson marginal regression with a Gaussian error model.

    Parameters
    ----------
    bandwidth : "auto", float, or array of shape (q,), default="auto"
        Kernel bandwidth per covariate dimension.  "auto" selects a common
        multiplier of the per-dimension standard deviations by leave-one-out
        cross-validation over ``cv_grid_size`` log-spaced candidates centered
        on the n**(-1/(q+4)) rule of thumb.
    cv_grid_size : int, default=10
        Number of bandwidth candidates scanned when bandwidth="auto".
    sigma_floor : float, default=1e-8
        Lower bound for the residual standard deviation.

    Attributes
    ----------
    bandwidth_ : ndarray of shape (q,)
        Selected (or supplied) bandwidth vector.
    sigma_ : float
        Residual standard deviation from leave-one-out fitted means.
    degenerate_ : bool
        True when every covariate column is constant and the fit fell back to
        the global mean.
    """

    def __init__(self, bandwidth="auto", cv_grid_size: int = 10, sigma_floor: float = 1e-8):
        self.bandwidth = bandwidth
        self.cv_grid_size = cv_grid_size
        self.sigma_floor = sigma_floor

    def fit(self, X, y):
        X = check_covariates(X)
        y = check_vector(y, X.shape[0])
        n, q = X.shape
        if n < 20:
            raise ValueError(f"need at least 20 observations to fit a margin, got {n}")

        sds = X.std(axis=0)
        self.degenerate_ = bool(np.all(sds == 0.0))
        if self.degenerate_:
            warnings.warn(
                "all covariate columns are constant; falling back to the global mean",
                UserWarning,
            )
        # Constant columns contribute zero distance everywhere; any positive
        # bandwidth works there.
        scale = np.where(sds > 0.0, sds, 1.0)

        sq = _sq_dists(X, X)
        nn_idx = self._nearest_neighbors(sq)

        if isinstance(self.bandwidth, str):
            if self.bandwidth != "auto":
                raise ValueError(f"unknown bandwidth spec {self.bandwidth!r}")
            rot = n ** (-1.0 / (q + 4))
            mults = rot * np.logspace(*_CV_LOG_RANGE, self.cv_grid_size)
            if q == 2:
                candidates = [np.array([a, b]) for a in mults for b in mults]
            else:
                candidates = [np.full(q, m) for m in mults]
            scores = np.array(
                [self._loo_mse(sq, y, c * scale, nn_idx) for c in candidates]
            )
            m_vec = candidates[int(np.argmin(scores))]
            # One local refinement pass around the coarse optimum.
            refine = np.logspace(-0.13, 0.13, 5)
            if q == 2:
                fine = [m_vec * np.array([a, b]) for a in refine for b in refine]
            else:
                fine = [m_vec * r for r in refine]
            fine_scores = np.array(
                [self._loo_mse(sq, y, c * scale, nn_idx) for c in fine]
            )
            m_vec = fine[int(np.argmin(fine_scores))]
            self.cv_scores_ = scores
            self.bandwidth_ = m_vec * scale
        else:
            bw = np.broadcast_to(np.asarray(self.bandwidth, dtype=float), (q,)).copy()
            if np.any(bw <= 0.0):
                raise ValueError("bandwidths must be positive")
            self.bandwidth_ = bw

        loo = self._loo_means(sq, y, self.bandwidth_, nn_idx)
        resid = y - loo
        self.sigma_ = float(max(np.sqrt(np.mean(resid**2)), self.sigma_floor))
        self.X_ = X
        self.y_ = y
        return self

    @staticmethod
    def _nearest_neighbors(sq):
        total = sq.sum(axis=2)
        np.fill_diagonal(total, np.inf)
        return np.argmin(total, axis=1)

    def _loo_means(self, sq, y, bandwidth, nn_idx):
        W = _kernel_weights(sq, bandwidth)
        np.fill_diagonal(W, 0.0)
        return _nw_predict(W, y, nn_idx)

    def _loo_mse(self, sq, y, bandwidth, nn_idx):
        resid = y - self._loo_means(sq, y, bandwidth, nn_idx)
        return float(np.mean(resid**2))

    def predict(self, X):
        check_is_fitted(self, "bandwidth_")
        X = check_covariates(X)
        if X.shape[1] != self.X_.shape[1]:
            raise ValueError(
                f"X has {X.shape[1]} columns, the fit used {self.X_.shape[1]}"
            )
        if self.degenerate_:
            return np.full(X.shape[0], float(np.mean(self.y_)))
        sq = _sq_dists(X, self.X_)
        W = _kernel_weights(sq, self.bandwidth_)
        nn_idx = np.argmin(sq.sum(axis=2), axis=1)
        return _nw_predict(W, self.y_, nn_idx)

    def pit(self, X, y):
        """Estimated marginal CDF values Phi((y - f_hat(x)) / sigma_hat).

        Returned values are clamped strictly inside (0, 1).
        """
        y = np.asarray(y, dtype=float).ravel()
        z = (y - self.predict(X)) / self.sigma_
        return clip_unit(gaussian_cdf(z))


class RidgeMarginModel(BaseEstimator, RegressorMixin):
    """Kernel-ridge marginal regression with a Gaussian error model.

    The conditional mean is a radial-basis kernel ridge fit (the point-estimate
    analogue of a Gaussian-process posterior mean); the length scale and ridge
    weight are selected by closed-form leave-one-out cross-validation, and the
    residual standard deviation comes from the same leave-one-out residuals.
    Distances are measured on sd-standardized coordinates, so a single length
    scale adapts to anisotropic covariate scales.

    Parameters
    ----------
    length_scale : "auto" or float, default="auto"
        Kernel length scale on the standardized coordinate scale.
    ridge : "auto" or float, default="auto"
        Ridge weight added to the kernel matrix diagonal.
    sigma_floor : float, default=1e-8

    Attributes
    ----------
    length_scale_ : float
    ridge_ : float
    sigma_ : float
    degenerate_ : bool
    """

    _LS_GRID = np.logspace(-0.9, 0.45, 8)
    _RIDGE_GRID = np.logspace(-4.0, 0.0, 7)

    def __init__(self, length_scale="auto", ridge="auto", sigma_floor: float = 1e-8):
        self.length_scale = length_scale
        self.ridge = ridge
        self.sigma_floor = sigma_floor

    def fit(self, X, y):
        X = check_covariates(X)
        y = check_vector(y, X.shape[0])
        n = X.shape[0]
        if n < 20:
            raise ValueError(f"need at least 20 observations to fit a margin, got {n}")
        sds = X.std(axis=0)
        self.degenerate_ = bool(np.all(sds == 0.0))
        if self.degenerate_:
            warnings.warn(
                "all covariate columns are constant; falling back to the global mean",
                UserWarning,
            )
        self._scale_ = np.where(sds > 0.0, sds, 1.0)
        Z = X / self._scale_
        D = ((Z[:, None, :] - Z[None, :, :]) ** 2).sum(axis=2)
        self._y_mean_ = float(np.mean(y))
        yc = y - self._y_mean_

        ls_grid = (
            self._LS_GRID if isinstance(self.length_scale, str) else [float(self.length_scale)]
        )
        ridge_grid = (
            self._RIDGE_GRID if isinstance(self.ridge, str) else [float(self.ridge)]
        )
        best = (np.inf, ls_grid[0], ridge_grid[0], None)
        for ls in ls_grid:
            K = np.exp(-0.5 * D / ls**2)
            eigval, Q = np.linalg.eigh(K)
            eigval = np.maximum(eigval, 0.0)
            Qty = Q.T @ yc
            Qt1 = Q.T @ np.ones(n)
            Q2 = Q**2
            for lam in ridge_grid:
                h = eigval / (eigval + lam)
                yhat = Q @ (h * Qty)
                # Effective smoother includes the re-added mean term.
                h_diag = Q2 @ h + (1.0 - Q @ (h * Qt1)) / n
                denom = np.maximum(1.0 - h_diag, 1e-8)
                loo = y - (y - (yhat + self._y_mean_)) / denom
                mse = float(np.mean((y - loo) ** 2))
                if mse < best[0]:
                    best = (mse, ls, lam, loo)
        mse, ls, lam, loo = best
        self.length_scale_ = float(ls)
        self.ridge_ = float(lam)
        K = np.exp(-0.5 * D / ls**2)
        self._alpha_ = np.linalg.solve(K + lam * np.eye(n), yc)
        resid = y - loo
        self.sigma_ = float(max(np.sqrt(np.mean(resid**2)), self.sigma_floor))
        self.X_ = X
        self.y_ = y
        self._Z_ = Z
        return self

    def predict(self, X):
        check_is_fitted(self, "length_scale_")
        X = check_covariates(X)
        if X.shape[1] != self.X_.shape[1]:
            raise ValueError(
                f"X has {X.shape[1]} columns, the fit used {self.X_.shape[1]}"
            )
        if self.degenerate_:
            return np.full(X.shape[0], self._y_mean_)
        Zq = X / self._scale_
        D = ((Zq[:, None, :] - self._Z_[None, :, :]) ** 2).sum(axis=2)
        return np.exp(-0.5 * D / self.length_scale_**2) @ self._alpha_ + self._y_mean_

    def pit(self, X, y):
        """Estimated marginal CDF values, clamped strictly inside (0, 1)."""
        y = np.asarray(y, dtype=float).ravel()
        z = (y - self.predict(X)) / self.sigma_
        return clip_unit(gaussian_cdf(z))


def make_margin(method: str = "krr", bandwidth="auto"):
    """Build a margin estimator: "krr" (ridge-kernel mean) or "nw" (Nadaraya-Watson)."""
    if method == "krr":
        return RidgeMarginModel()
    if method == "nw":
        return KernelMarginModel(bandwidth=bandwidth)
    raise ValueError(f"unknown margin method {method!r}; choose 'krr' or 'nw'")
