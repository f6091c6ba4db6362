"""Calibration-function estimators.

The calibration function maps covariates to the copula parameter on the link
(log) scale.  Three backends are provided, all maximizing the copula
log-likelihood of probability-integral-transformed pairs:

* :class:`ConstantCalibration` -- a single scalar (the reduced model),
* :class:`LocalLikelihoodCalibration` -- kernel-weighted likelihood, one
  1-d maximization per query point,
* :class:`SingleIndexCalibration` -- ridge-penalized cubic-spline ridge
  function of a unit-norm covariate projection, fitted by alternating
  maximization.

Every backend exposes ``fit(X, U)`` and ``predict(X)`` where ``U`` holds the
(n, 2) PIT pairs, and keeps predictions inside the search box ``eta_bounds``
so that the implied copula parameter is always valid.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.interpolate import BSpline
from scipy.optimize import minimize, minimize_scalar
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_generator, check_covariates, check_unit_pairs, clip_unit
from .copulas import CLAYTON

ETA_BOUNDS = (-10.0, 10.0)

# Resolution of the coarse eta grid used for bracketing, cross-validation and
# the "grid" optimizer.
_GRID_SIZE = 81

# Bandwidth multipliers scanned by likelihood cross-validation, relative to the
# n**(-1/(q+4)) rule of thumb.
_CV_LOG_RANGE = (-0.5, 1.1)


def _eta_grid(bounds):
    return np.linspace(bounds[0], bounds[1], _GRID_SIZE)


def _logpdf_grid(family, lu1, lu2, eta_grid):
    """Per-pair log densities on the eta grid, shape (n, grid)."""
    theta = np.exp(eta_grid)
    return family._logpdf_from_logu(lu1[:, None], lu2[:, None], theta[None, :])


def _parabolic_argmax(grid, scores):
    """Row-wise argmax on a grid with one parabolic refinement step.

    ``scores`` has shape (m, grid).  Returns (eta_hat, lo, hi) where
    [lo, hi] brackets the maximizer.
    """
    idx = np.argmax(scores, axis=1)
    idx = np.clip(idx, 1, len(grid) - 2)
    rows = np.arange(scores.shape[0])
    ym = scores[rows, idx - 1]
    y0 = scores[rows, idx]
    yp = scores[rows, idx + 1]
    denom = ym - 2.0 * y0 + yp
    offset = np.where(np.abs(denom) > 0, 0.5 * (ym - yp) / np.where(denom == 0, 1.0, denom), 0.0)
    offset = np.clip(offset, -1.0, 1.0)
    step = grid[1] - grid[0]
    eta = grid[idx] + offset * step
    return eta, grid[idx - 1], grid[idx + 1]


def _brent_max(objective, lo, hi, tol):
    """Maximize a scalar function on [lo, hi] with bounded Brent search."""
    res = minimize_scalar(
        lambda e: -objective(e), bounds=(lo, hi), method="bounded",
        options={"xatol": tol},
    )
    return float(res.x)


class ConstantCalibration(BaseEstimator):
    """Scalar calibration: the reduced model's maximum-likelihood estimate.

    The estimate maximizes the copula log-likelihood over ``eta_bounds`` by
    bounded Brent search.  ``at_bound_`` flags solutions that ran into the
    search box.

    Attributes
    ----------
    eta_ : float
    at_bound_ : bool
    loglik_ : float
    """

    def __init__(self, family=None, eta_bounds=ETA_BOUNDS, tol: float = 1e-8):
        self.family = family
        self.eta_bounds = eta_bounds
        self.tol = tol

    def fit(self, X, U):
        U = check_unit_pairs(clip_unit(np.asarray(U, dtype=float)))
        if U.shape[0] < 10:
            raise ValueError(f"need at least 10 pairs, got {U.shape[0]}")
        family = self.family if self.family is not None else CLAYTON
        lu1 = np.log(U[:, 0])
        lu2 = np.log(U[:, 1])

        def loglik(eta):
            vals = family._logpdf_from_logu(lu1, lu2, np.exp(eta))
            # Summing in sorted order makes the fit invariant to row permutations.
            return float(np.sum(np.sort(vals)))

        lo, hi = self.eta_bounds
        self.eta_ = _brent_max(loglik, lo, hi, self.tol)
        self.loglik_ = loglik(self.eta_)
        self.at_bound_ = bool(min(self.eta_ - lo, hi - self.eta_) < 1e-2)
        self.n_features_in_ = None if X is None else check_covariates(X).shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "eta_")
        X = check_covariates(X)
        return np.full(X.shape[0], self.eta_)


class LocalLikelihoodCalibration(BaseEstimator):
    """Kernel-weighted local likelihood estimate of the calibration function.

    For a query x the estimate maximizes
    ``sum_i K_bw(x_i - x) * log c(u_i; exp(eta))`` over ``eta_bounds``.

    Parameters
    ----------
    bandwidth : "auto", float or array of shape (q,), default="auto"
        "auto" picks a common multiplier of per-dimension standard deviations
        by leave-one-out likelihood cross-validation.
    cv_grid_size : int, default=8
        Number of bandwidth candidates scanned by cross-validation per
        dimension (full grid for q <= 2, coordinate sweeps otherwise).
    cv_se_rule : float, default=0.5
        Smoothing preference: the selected bandwidth is the largest-volume
        candidate whose cross-validation score sits within ``cv_se_rule``
        paired standard errors of the best score.  0 picks the argmax.
    optimizer : {"brent", "grid"}, default="brent"
        "brent" polishes each query's grid bracket to ``tol``; "grid" uses a
        parabolic refinement of the grid argmax only (faster, ~1e-3 accurate;
        used by the bootstrap harness).

    Attributes
    ----------
    bandwidth_ : ndarray of shape (q,)
    cv_scores_ : ndarray, only when bandwidth="auto"
    loglik_ : float
        In-sample log-likelihood at the fitted local estimates.
    """

    def __init__(
        self,
        bandwidth="auto",
        cv_grid_size: int = 8,
        cv_se_rule: float = 0.5,
        family=None,
        eta_bounds=ETA_BOUNDS,
        tol: float = 1e-8,
        optimizer: str = "brent",
    ):
        self.bandwidth = bandwidth
        self.cv_grid_size = cv_grid_size
        self.cv_se_rule = cv_se_rule
        self.family = family
        self.eta_bounds = eta_bounds
        self.tol = tol
        self.optimizer = optimizer

    def fit(self, X, U):
        X = check_covariates(X)
        U = check_unit_pairs(clip_unit(np.asarray(U, dtype=float)))
        n, q = X.shape
        if U.shape[0] != n:
            raise ValueError("X and U must have the same number of rows")
        if n < 50:
            raise ValueError(f"need at least 50 observations, got {n}")
        if self.optimizer not in ("brent", "grid"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        self._family_ = self.family if self.family is not None else CLAYTON
        self.X_ = X
        self._lu1_ = np.log(U[:, 0])
        self._lu2_ = np.log(U[:, 1])
        self._grid_ = _eta_grid(self.eta_bounds)
        self._logc_ = _logpdf_grid(self._family_, self._lu1_, self._lu2_, self._grid_)

        sds = X.std(axis=0)
        scale = np.where(sds > 0.0, sds, 1.0)
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "auto":
                raise ValueError(f"unknown bandwidth spec {self.bandwidth!r}")
            rot = n ** (-1.0 / (q + 4))
            mults = rot * np.logspace(*_CV_LOG_RANGE, self.cv_grid_size)
            # Per-dimension squared distances on the sd scale, computed once.
            D_dims = np.stack(
                [((X[:, d, None] - X[None, :, d]) / scale[d]) ** 2 for d in range(q)],
                axis=0,
            )

            def contribs(m_vec):
                D = np.tensordot(1.0 / m_vec**2, D_dims, axes=1)
                return self._loo_cv_contribs(D)

            if q == 2:
                # Full grid: joint anisotropic moves matter and stay affordable.
                coarse = [np.array([a, b]) for a in mults for b in mults]
            else:
                coarse = [np.full(q, m) for m in mults]
            # Infinite bandwidth (the constant-fit limit) competes too, so the
            # estimate collapses to a flat surface when the data support none.
            coarse.append(np.full(q, np.inf))
            pool = [(c, contribs(c)) for c in coarse]
            totals = np.array([p[1].sum() for p in pool])
            center = pool[int(np.argmax(totals))][0]
            if np.all(np.isfinite(center)):
                # Local refinement: the coarse grid steps by a factor ~1.7.
                refine = np.logspace(-0.13, 0.13, 5)
                if q == 2:
                    fine = [center * np.array([a, b]) for a in refine for b in refine]
                else:
                    fine = [center * r for r in refine]
                pool.extend((c, contribs(c)) for c in fine)
            self.cv_scores_ = totals
            self.bandwidth_ = self._select_bandwidth(pool) * scale
        else:
            bw = np.broadcast_to(np.asarray(self.bandwidth, dtype=float), (q,)).copy()
            if np.any(bw <= 0.0):
                raise ValueError("bandwidths must be positive")
            self.bandwidth_ = bw

        eta_train = self.predict(X)
        vals = self._family_._logpdf_from_logu(self._lu1_, self._lu2_, np.exp(eta_train))
        self.loglik_ = float(np.sum(vals))
        return self

    @staticmethod
    def _scaled_sq_dists(A, B, scale):
        D = np.zeros((A.shape[0], B.shape[0]))
        for d in range(A.shape[1]):
            D += ((A[:, d, None] - B[None, :, d]) / scale[d]) ** 2
        return D

    def _loo_cv_contribs(self, D):
        """Per-observation log densities at the leave-one-out local estimates."""
        W = np.exp(-0.5 * D)
        np.fill_diagonal(W, 0.0)
        W = self._rescue_dead_rows(W, D)
        scores = W @ self._logc_
        eta, _, _ = _parabolic_argmax(self._grid_, scores)
        return self._family_._logpdf_from_logu(self._lu1_, self._lu2_, np.exp(eta))

    def _select_bandwidth(self, pool):
        """Pick the most-smoothing candidate within half a paired standard error
        of the best cross-validation score."""
        totals = np.array([p[1].sum() for p in pool])
        best = int(np.argmax(totals))
        kept = []
        for j, (cand, contrib) in enumerate(pool):
            diff = pool[best][1] - contrib
            se = np.sqrt(len(diff)) * diff.std()
            if totals[best] - totals[j] <= self.cv_se_rule * se:
                kept.append(j)
        volumes = np.array([np.prod(pool[j][0]) for j in kept])
        return pool[kept[int(np.argmax(volumes))]][0]

    @staticmethod
    def _rescue_dead_rows(W, D, k: int = 10):
        """Give rows whose kernel weights all underflowed equal weight on the
        k nearest training points."""
        dead = W.sum(axis=1) <= 0.0
        if np.any(dead):
            kk = min(k, D.shape[1])
            nn = np.argsort(D[dead], axis=1)[:, :kk]
            repl = np.zeros((int(dead.sum()), D.shape[1]))
            np.put_along_axis(repl, nn, 1.0, axis=1)
            W = W.copy()
            W[dead] = repl
        return W

    def predict(self, X):
        check_is_fitted(self, "bandwidth_")
        X = check_covariates(X)
        if X.shape[1] != self.X_.shape[1]:
            raise ValueError(
                f"X has {X.shape[1]} columns, the fit used {self.X_.shape[1]}"
            )
        D = self._scaled_sq_dists(X, self.X_, self.bandwidth_)
        W = np.exp(-0.5 * D)
        if np.any(W.sum(axis=1) <= 0.0):
            warnings.warn(
                "query points too far from the training data; "
                "falling back to nearest neighbors",
                UserWarning,
            )
            W = self._rescue_dead_rows(W, D)
        scores = W @ self._logc_
        eta, lo, hi = _parabolic_argmax(self._grid_, scores)
        if self.optimizer == "grid":
            return eta
        out = np.empty_like(eta)
        for i in range(len(eta)):
            w = W[i]

            def loglik(e):
                vals = self._family_._logpdf_from_logu(self._lu1_, self._lu2_, np.exp(e))
                return float(w @ vals)

            out[i] = _brent_max(loglik, lo[i], hi[i], self.tol)
        return out


def _spline_knots(lo: float, hi: float, n_interior: int) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1e-6
    interior = np.linspace(lo, hi, n_interior + 2)[1:-1]
    return np.concatenate([np.repeat(lo, 4), interior, np.repeat(hi, 4)])


def _design(t, knots):
    tc = np.clip(t, knots[3], knots[-4])
    return BSpline.design_matrix(tc, knots, 3).toarray()


def _second_difference(n_coef: int) -> np.ndarray:
    D = np.zeros((n_coef - 2, n_coef))
    for i in range(n_coef - 2):
        D[i, i : i + 3] = (1.0, -2.0, 1.0)
    return D


class SingleIndexCalibration(BaseEstimator):
    """Single-index calibration: eta(x) = s(x @ w) with ||w|| = 1.

    The ridge function s is a cubic B-spline with ``n_knots`` interior knots
    and a ridge penalty on its second differences.  For two covariates the
    direction is found by profile likelihood over the half-circle (grid plus
    Brent refinement, refitting the spline at each candidate); in higher
    dimensions it alternates spline fits with projected-gradient updates from
    multiple starts.  The penalty weight is then selected by k-fold likelihood
    cross-validation along the fitted direction, with a constant model in the
    candidate set so the fit collapses to a flat surface when the data support
    no index structure.

    Parameters
    ----------
    n_knots : int, default=8
        Interior knot count of the ridge function.
    penalty : "cv" or float, default="cv"
        Second-difference ridge weight; "cv" selects from ``penalty_grid``.
    pilot_penalty : float, default=0.1
        Penalty used while searching for the direction.
    n_starts : int, default=5
        Random restarts for the q > 2 alternation, in addition to a
        slope-based pilot direction.
    max_iter : int, default=50
        Alternation cap per start (q > 2 only).
    tol : float, default=1e-8
        Relative log-likelihood change declaring convergence.

    Attributes
    ----------
    direction_ : ndarray of shape (q,)
        Unit-norm index direction with positive first nonzero coordinate.
    coef_ : ndarray
        Spline coefficients of the ridge function.
    knots_ : ndarray
    penalty_ : float
    collapsed_ : bool
        True when cross-validation preferred the constant model.
    converged_ : bool
    loglik_ : float
    """

    def __init__(
        self,
        n_knots: int = 8,
        penalty="cv",
        penalty_grid=(1e-3, 1e-2, 1e-1, 1.0, 10.0),
        pilot_penalty: float = 0.1,
        cv_folds: int = 3,
        n_starts: int = 5,
        max_iter: int = 50,
        tol: float = 1e-8,
        family=None,
        eta_bounds=ETA_BOUNDS,
        random_state=None,
    ):
        self.n_knots = n_knots
        self.penalty = penalty
        self.penalty_grid = penalty_grid
        self.pilot_penalty = pilot_penalty
        self.cv_folds = cv_folds
        self.n_starts = n_starts
        self.max_iter = max_iter
        self.tol = tol
        self.family = family
        self.eta_bounds = eta_bounds
        self.random_state = random_state

    # -- internals -------------------------------------------------------------

    def _loglik(self, lu1, lu2, eta):
        vals = self._family_._logpdf_from_logu(lu1, lu2, np.exp(eta))
        return float(np.sum(vals))

    def _fit_spline(self, t, lu1, lu2, lam, c0=None):
        """Maximize penalized likelihood over spline coefficients for fixed index."""
        knots = _spline_knots(float(np.min(t)), float(np.max(t)), self.n_knots)
        B = _design(t, knots)
        n_coef = B.shape[1]
        D2 = _second_difference(n_coef)
        if c0 is None:
            c0 = np.full(n_coef, getattr(self, "_const_eta_", 0.0))

        family = self._family_

        def objective(c):
            eta = B @ c
            theta = np.exp(eta)
            vals = family._logpdf_from_logu(lu1, lu2, theta)
            grad_eta = family._dlogpdf_dtheta_from_logu(lu1, lu2, theta) * theta
            pen = D2 @ c
            f = -np.sum(vals) + lam * (pen @ pen)
            g = -(B.T @ grad_eta) + 2.0 * lam * (D2.T @ pen)
            return f, g

        res = minimize(
            objective,
            c0,
            jac=True,
            method="L-BFGS-B",
            bounds=[self.eta_bounds] * n_coef,
            options={"maxiter": 200, "ftol": 1e-12},
        )
        return knots, res.x

    def _direction_step(self, w, knots, coef, X, lu1, lu2, current_ll):
        """One projected-gradient ascent step on the unit sphere, backtracked."""
        spline = BSpline(knots, coef, 3)
        dspline = spline.derivative()
        t = X @ w
        lo, hi = knots[3], knots[-4]
        tc = np.clip(t, lo, hi)
        eta = spline(tc)
        theta = np.exp(eta)
        slope = np.where((t >= lo) & (t <= hi), dspline(tc), 0.0)
        grad_eta = self._family_._dlogpdf_dtheta_from_logu(lu1, lu2, theta) * theta
        g = X.T @ (grad_eta * slope)
        g_tan = g - (g @ w) * w
        norm = np.linalg.norm(g_tan)
        if norm < 1e-12:
            return w, current_ll
        direction = g_tan / norm
        step = 0.5
        for _ in range(12):
            cand = w + step * direction
            cand /= np.linalg.norm(cand)
            eta_c = spline(np.clip(X @ cand, lo, hi))
            ll = self._loglik(lu1, lu2, np.clip(eta_c, *self.eta_bounds))
            if ll > current_ll:
                return cand, ll
            step *= 0.5
        return w, current_ll

    def _alternate(self, w0, X, lu1, lu2, lam, max_iter):
        w = w0 / np.linalg.norm(w0)
        best = None
        prev_ll = -np.inf
        converged = False
        coef = None
        for _ in range(max_iter):
            knots, coef = self._fit_spline(X @ w, lu1, lu2, lam, c0=coef)
            eta = np.clip(_design(X @ w, knots) @ coef, *self.eta_bounds)
            ll = self._loglik(lu1, lu2, eta)
            if best is None or ll > best[0]:
                best = (ll, w.copy(), knots, coef.copy())
            if abs(ll - prev_ll) <= self.tol * (abs(prev_ll) + 1.0):
                converged = True
                break
            prev_ll = ll
            if X.shape[1] == 1:
                converged = True
                break
            w, _ = self._direction_step(w, knots, coef, X, lu1, lu2, ll)
        return best, converged

    def _slope_start(self, X, U):
        """Pilot direction: slope of a coarse local-likelihood surface."""
        try:
            pilot = LocalLikelihoodCalibration(
                bandwidth=np.maximum(X.std(axis=0), 1e-3)
                * X.shape[0] ** (-1.0 / (X.shape[1] + 4)),
                family=self._family_,
                eta_bounds=self.eta_bounds,
                optimizer="grid",
            )
            pilot.fit(X, U)
            eta = pilot.predict(X)
            design = np.column_stack([np.ones(X.shape[0]), X])
            beta, *_ = np.linalg.lstsq(design, eta, rcond=None)
            slope = beta[1:]
            norm = np.linalg.norm(slope)
            if norm > 1e-10:
                return slope / norm
        except ValueError:
            pass
        return None

    @staticmethod
    def _canonical_sign(w):
        nz = np.nonzero(np.abs(w) > 1e-12)[0]
        if len(nz) and w[nz[0]] < 0:
            return -w
        return w

    def _profile_loglik(self, w, X, lu1, lu2, lam):
        """Log-likelihood at the best spline for a fixed direction."""
        t = X @ w
        knots, coef = self._fit_spline(t, lu1, lu2, lam)
        eta = np.clip(_design(t, knots) @ coef, *self.eta_bounds)
        return self._loglik(lu1, lu2, eta), knots, coef

    def _direction_by_profile(self, X, lu1, lu2, lam):
        """q = 2: grid plus Brent search of the profile likelihood over angles."""
        angles = np.linspace(0.0, np.pi, 25)[:-1]
        lls = [
            self._profile_loglik(np.array([np.cos(a), np.sin(a)]), X, lu1, lu2, lam)[0]
            for a in angles
        ]
        best = int(np.argmax(lls))
        step = angles[1] - angles[0]

        def neg(a):
            w = np.array([np.cos(a), np.sin(a)])
            return -self._profile_loglik(w, X, lu1, lu2, lam)[0]

        res = minimize_scalar(
            neg,
            bounds=(angles[best] - step, angles[best] + step),
            method="bounded",
            options={"xatol": 1e-3},
        )
        a = float(res.x)
        return np.array([np.cos(a), np.sin(a)])

    def _direction_by_alternation(self, X, lu1, lu2, lam, rng):
        """q > 2: alternating maximization from slope-based and random starts."""
        q = X.shape[1]
        starts = []
        slope = self._slope_start(X, np.column_stack([np.exp(lu1), np.exp(lu2)]))
        if slope is not None:
            starts.append(slope)
        for _ in range(self.n_starts):
            v = rng.standard_normal(q)
            while np.linalg.norm(v) < 1e-12:
                v = rng.standard_normal(q)
            starts.append(v / np.linalg.norm(v))
        starts = [self._canonical_sign(s) for s in starts]

        results = []
        any_converged = False
        for s in starts:
            best, conv = self._alternate(s, X, lu1, lu2, lam, self.max_iter)
            any_converged = any_converged or conv
            results.append(best)
        ref = starts[0]
        # Highest log-likelihood wins; near-ties break toward the first start.
        results.sort(key=lambda r: (-r[0], np.linalg.norm(r[1] - ref)))
        return results[0][1], any_converged

    def _select_penalty(self, w, X, lu1, lu2, rng):
        """K-fold likelihood CV along a fixed direction; a constant model
        competes with every penalty weight."""
        n = X.shape[0]
        order = rng.permutation(n)
        folds = [order[f :: self.cv_folds] for f in range(self.cv_folds)]
        t = X @ w
        scores = []
        candidates = list(self.penalty_grid) + ["constant"]
        for lam in candidates:
            total = 0.0
            for f in range(self.cv_folds):
                test = folds[f]
                train = np.concatenate([folds[g] for g in range(self.cv_folds) if g != f])
                if lam == "constant":
                    const = ConstantCalibration(
                        family=self._family_, eta_bounds=self.eta_bounds
                    ).fit(None, np.column_stack([np.exp(lu1[train]), np.exp(lu2[train])]))
                    eta = np.full(len(test), const.eta_)
                else:
                    knots, coef = self._fit_spline(t[train], lu1[train], lu2[train], lam)
                    eta = np.clip(_design(t[test], knots) @ coef, *self.eta_bounds)
                total += self._loglik(lu1[test], lu2[test], eta)
            scores.append(total)
        return candidates[int(np.argmax(scores))]

    # -- estimator API -----------------------------------------------------------

    def fit(self, X, U):
        X = check_covariates(X)
        U = check_unit_pairs(clip_unit(np.asarray(U, dtype=float)))
        n, q = X.shape
        if U.shape[0] != n:
            raise ValueError("X and U must have the same number of rows")
        if n < 50:
            raise ValueError(f"need at least 50 observations, got {n}")
        self._family_ = self.family if self.family is not None else CLAYTON
        rng = as_generator(self.random_state)
        lu1 = np.log(U[:, 0])
        lu2 = np.log(U[:, 1])
        const = ConstantCalibration(family=self._family_, eta_bounds=self.eta_bounds)
        const.fit(None, U)
        self._const_eta_ = const.eta_

        self.converged_ = True
        if q == 1:
            w = np.array([1.0])
        elif q == 2:
            w = self._direction_by_profile(X, lu1, lu2, self.pilot_penalty)
        else:
            w, self.converged_ = self._direction_by_alternation(
                X, lu1, lu2, self.pilot_penalty, rng
            )
        w = self._canonical_sign(w)

        lam = self._select_penalty(w, X, lu1, lu2, rng) if self.penalty == "cv" else float(self.penalty)
        self.collapsed_ = lam == "constant"
        self.direction_ = w
        if self.collapsed_:
            self.penalty_ = np.inf
            t = X @ w
            self.knots_ = _spline_knots(float(np.min(t)), float(np.max(t)), self.n_knots)
            self.coef_ = np.full(self.n_knots + 4, const.eta_)
            self.loglik_ = const.loglik_
        else:
            self.penalty_ = float(lam)
            self.knots_, self.coef_ = self._fit_spline(X @ w, lu1, lu2, self.penalty_)
            eta = np.clip(_design(X @ w, self.knots_) @ self.coef_, *self.eta_bounds)
            self.loglik_ = self._loglik(lu1, lu2, eta)
        if not self.converged_:
            warnings.warn("single-index alternation did not converge; returning best iterate")
        return self

    def predict(self, X):
        check_is_fitted(self, "direction_")
        X = check_covariates(X)
        if X.shape[1] != self.direction_.shape[0]:
            raise ValueError(
                f"X has {X.shape[1]} columns, the fit used {self.direction_.shape[0]}"
            )
        eta = _design(X @ self.direction_, self.knots_) @ self.coef_
        return np.clip(eta, *self.eta_bounds)


_BACKENDS = ("constant", "local_likelihood", "single_index")


def make_calibration(backend: str, *, bandwidth="auto", random_state=None, family=None):
    """Build a calibration estimator from its backend id."""
    if backend == "constant":
        return ConstantCalibration(family=family)
    if backend == "local_likelihood":
        return LocalLikelihoodCalibration(bandwidth=bandwidth, family=family)
    if backend == "single_index":
        return SingleIndexCalibration(random_state=random_state, family=family)
    raise ValueError(f"unknown calibration backend {backend!r}; choose from {_BACKENDS}")
