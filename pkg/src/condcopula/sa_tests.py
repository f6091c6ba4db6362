"""Tests for the simplifying assumption (constant calibration function).

Workflow: split the data, fit margins and calibration on the training part,
transform the test responses to PIT pairs, order the test points by predicted
calibration value and cut them into K equal-frequency bins, then check whether
the bin-wise dependence is homogeneous:

* Method 1 (permutation): statistic = range of bin-wise Spearman rank
  correlations, null distribution from random reassignment of observations to
  bins, decision by the empirical (1 - alpha) quantile.
* Method 2 (chi-square): adjacent contrasts of bin-wise Pearson correlations,
  standardized by the normal-theory variances (1 - rho^2)^2, compared against
  a chi-square law with K - 1 degrees of freedom.
"""

from __future__ import annotations

import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc
from scipy.stats import rankdata

from ._validation import as_generator, check_unit_pairs, check_vector, clip_unit
from .calibration import make_calibration
from .datasets import Dataset
from .margins import make_margin

MIN_TRAIN = 20
MIN_TEST = 10


@dataclass(frozen=True)
class BinAssignment:
    """Equal-frequency partition of observations by sorted calibration value."""

    K: int
    labels: np.ndarray  # bin index in {0..K-1} per observation
    boundaries: np.ndarray  # K+1 calibration values at the block edges
    sizes: np.ndarray  # per-bin counts; differ by at most one


@dataclass(frozen=True)
class TestResult:
    """Outcome of one homogeneity test."""

    method: str  # "permutation" or "chisq"
    statistic: float
    p_value: float
    K: int
    alpha: float
    reject: bool
    per_bin_rho: np.ndarray
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SACheckConfig:
    """End-to-end configuration for :func:`run_sa_check`."""

    train_frac: float = 0.65
    K: int = 3
    J: int = 500
    alpha: float = 0.05
    backend: str = "local_likelihood"
    margin_method: str = "krr"
    margin_bandwidth: object = "auto"
    calib_bandwidth: object = "auto"


@dataclass(frozen=True)
class SACheckReport:
    method1: TestResult
    method2: TestResult
    diagnostics: dict


def split_data(dataset: Dataset, train_frac: float, rng) -> tuple[Dataset, Dataset]:
    """Uniformly random train/test partition with n1 = round(train_frac * n)."""
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must be strictly between 0 and 1")
    n = dataset.n
    if n < 40:
        raise ValueError(f"need at least 40 observations to split, got {n}")
    n1 = int(round(train_frac * n))
    if n1 < MIN_TRAIN or n - n1 < MIN_TEST:
        raise ValueError(
            f"split sizes ({n1}, {n - n1}) below minimums ({MIN_TRAIN}, {MIN_TEST})"
        )
    rng = as_generator(rng)
    perm = rng.permutation(n)
    train_idx = np.sort(perm[:n1])
    test_idx = np.sort(perm[n1:])
    return dataset.subset(train_idx), dataset.subset(test_idx)


def assign_bins(eta_hat, K: int) -> BinAssignment:
    """Cut observations into K equal-frequency bins by sorted eta_hat.

    Ties are broken by original index (stable sort); when the length is not a
    multiple of K the earliest bins receive the extra elements.
    """
    eta_hat = check_vector(eta_hat, name="eta_hat")
    n = eta_hat.shape[0]
    if K < 2:
        raise ValueError("K must be >= 2")
    if n < 2 * K:
        raise ValueError(f"need at least {2 * K} observations for K={K} bins")
    if K > n / 5:
        raise ValueError(f"K={K} leaves bins too small for correlation estimates (n={n})")
    base, rem = divmod(n, K)
    sizes = np.array([base + (1 if k < rem else 0) for k in range(K)])
    order = np.argsort(eta_hat, kind="stable")
    labels = np.empty(n, dtype=np.int64)
    edges = np.concatenate([[0], np.cumsum(sizes)])
    for k in range(K):
        labels[order[edges[k] : edges[k + 1]]] = k
    sorted_eta = eta_hat[order]
    boundaries = np.concatenate(
        [[sorted_eta[0]], sorted_eta[edges[1:-1]], [sorted_eta[-1]]]
    )
    return BinAssignment(K=K, labels=labels, boundaries=boundaries, sizes=sizes)


def spearman_rho(U) -> float:
    """Spearman's rank correlation (midranks for ties) of the pairs in U."""
    U = check_unit_pairs(clip_unit(np.asarray(U, dtype=float)))
    if U.shape[0] < 3:
        raise ValueError("need at least 3 pairs")
    r1 = rankdata(U[:, 0])
    r2 = rankdata(U[:, 1])
    if np.var(r1) == 0.0 or np.var(r2) == 0.0:
        warnings.warn("zero rank variance; returning 0", UserWarning)
        return 0.0
    return float(np.corrcoef(r1, r2)[0, 1])


def _rowwise_pearson(a, b):
    """Pearson correlation along axis 1 with a zero-variance guard."""
    a = a - a.mean(axis=1, keepdims=True)
    b = b - b.mean(axis=1, keepdims=True)
    va = np.einsum("ij,ij->i", a, a)
    vb = np.einsum("ij,ij->i", b, b)
    cov = np.einsum("ij,ij->i", a, b)
    denom = np.sqrt(va * vb)
    return np.where(denom > 0.0, cov / np.where(denom == 0.0, 1.0, denom), 0.0)


def _bin_spearman_batch(u1, u2, labels_batch, sizes):
    """Bin-wise Spearman correlations for a batch of label vectors.

    labels_batch has shape (m, n); returns (m, K).
    """
    m = labels_batch.shape[0]
    K = len(sizes)
    order = np.argsort(labels_batch, axis=1, kind="stable")
    out = np.empty((m, K))
    offset = 0
    for k in range(K):
        idx = order[:, offset : offset + sizes[k]]
        r1 = rankdata(u1[idx], axis=1)
        r2 = rankdata(u2[idx], axis=1)
        out[:, k] = _rowwise_pearson(r1, r2)
        offset += sizes[k]
    return out


def permutation_test(U, eta_hat, K: int, J: int, alpha: float, rng) -> TestResult:
    """Method 1: permutation test on the range of bin-wise Spearman correlations.

    The observed statistic is max_k rho_k - min_k rho_k.  Each of the J
    permutations reassigns observations to bins uniformly at random; the test
    rejects when the observed statistic exceeds the empirical (1 - alpha)
    quantile of the permuted statistics.  The reported p-value is the add-one
    estimator (1 + #{T_j >= T_obs}) / (J + 1).
    """
    U = check_unit_pairs(clip_unit(np.asarray(U, dtype=float)))
    eta_hat = check_vector(eta_hat, U.shape[0], name="eta_hat")
    if J < 99:
        raise ValueError("J must be >= 99")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    bins = assign_bins(eta_hat, K)
    if np.min(bins.sizes) < 3:
        raise ValueError("every bin needs at least 3 observations")
    rng = as_generator(rng)

    u1 = U[:, 0]
    u2 = U[:, 1]
    obs_rho = _bin_spearman_batch(u1, u2, bins.labels[None, :], bins.sizes)[0]
    t_obs = float(obs_rho.max() - obs_rho.min())

    perms = rng.permuted(
        np.tile(np.arange(U.shape[0]), (J, 1)), axis=1
    )
    perm_rho = _bin_spearman_batch(u1, u2, bins.labels[perms], bins.sizes)
    t_perm = perm_rho.max(axis=1) - perm_rho.min(axis=1)

    t_sorted = np.sort(t_perm)
    q_idx = min(max(int(np.ceil((1.0 - alpha) * J)) - 1, 0), J - 1)
    quantile = float(t_sorted[q_idx])
    reject = bool(t_obs > quantile)
    p_value = float((1 + np.sum(t_perm >= t_obs)) / (J + 1))

    return TestResult(
        method="permutation",
        statistic=t_obs,
        p_value=p_value,
        K=K,
        alpha=alpha,
        reject=reject,
        per_bin_rho=obs_rho,
        details={
            "n_permutations": J,
            "null_quantile": quantile,
            "bin_sizes": bins.sizes.tolist(),
        },
    )


def chisq_sf(t, dof: int):
    """Upper-tail chi-square probability via the regularized incomplete gamma."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("t must be >= 0")
    if dof < 1:
        raise ValueError("dof must be >= 1")
    out = gammaincc(dof / 2.0, t / 2.0)
    return float(out) if out.ndim == 0 else out


def chisq_test(U, eta_hat, K: int, alpha: float) -> TestResult:
    """Method 2: chi-square contrast test on bin-wise Pearson correlations.

    With rho the vector of bin correlations, Sigma = diag((1 - rho_k^2)^2) and
    A the adjacent-difference matrix, the statistic is
    ``T = ntilde * (A rho)' (A Sigma A')^{-1} (A rho)`` with
    ``ntilde = floor(n / K)``, referred to chi-square with K - 1 degrees of
    freedom.
    """
    U = check_unit_pairs(clip_unit(np.asarray(U, dtype=float)))
    eta_hat = check_vector(eta_hat, U.shape[0], name="eta_hat")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    bins = assign_bins(eta_hat, K)
    flags = []
    if np.min(bins.sizes) < 20:
        flags.append("small_bins")
        warnings.warn(
            "bins smaller than 20; the normal approximation may be poor", UserWarning
        )

    rho = np.empty(K)
    for k in range(K):
        sub = U[bins.labels == k]
        rho[k] = _rowwise_pearson(sub[None, :, 0], sub[None, :, 1])[0]

    var = (1.0 - rho**2) ** 2
    if np.any(np.abs(rho) > 1.0 - 1e-6):
        flags.append("variance_floored")
        var = np.maximum(var, 1e-12)

    A = np.eye(K - 1, K) - np.eye(K - 1, K, k=1)
    middle = A @ np.diag(var) @ A.T
    d = A @ rho
    n_tilde = U.shape[0] // K
    try:
        t_obs = float(n_tilde * d @ np.linalg.solve(middle, d))
    except np.linalg.LinAlgError as e:
        raise ValueError(f"contrast covariance is singular: {e}") from e
    t_obs = max(t_obs, 0.0)
    p_value = float(chisq_sf(t_obs, K - 1))
    return TestResult(
        method="chisq",
        statistic=t_obs,
        p_value=p_value,
        K=K,
        alpha=alpha,
        reject=bool(p_value < alpha),
        per_bin_rho=rho,
        details={
            "dof": K - 1,
            "n_tilde": n_tilde,
            "bin_sizes": bins.sizes.tolist(),
            "flags": flags,
        },
    )


@contextmanager
def _stage(name: str):
    try:
        yield
    except Exception as e:
        raise RuntimeError(f"sa-check stage '{name}' failed: {e}") from e


def fit_sa_inputs(dataset: Dataset, config: SACheckConfig, rng):
    """Split, fit margins and calibration, and return test-set (U, eta_hat).

    Returns ``(U_test, eta_test, diagnostics)``; the tests themselves are run
    separately so several K values can share one fitted pipeline.
    """
    rng = as_generator(rng)
    split_rng, calib_rng = rng.spawn(2)

    with _stage("split"):
        train, test = split_data(dataset, config.train_frac, split_rng)

    with _stage("fit margins"):
        m1 = make_margin(config.margin_method, config.margin_bandwidth).fit(
            train.X, train.y1
        )
        m2 = make_margin(config.margin_method, config.margin_bandwidth).fit(
            train.X, train.y2
        )

    with _stage("fit calibration"):
        U_train = np.column_stack(
            [m1.pit(train.X, train.y1), m2.pit(train.X, train.y2)]
        )
        calib = make_calibration(
            config.backend, bandwidth=config.calib_bandwidth, random_state=calib_rng
        )
        calib.fit(train.X, U_train)

    with _stage("predict test set"):
        U_test = np.column_stack([m1.pit(test.X, test.y1), m2.pit(test.X, test.y2)])
        eta_test = calib.predict(test.X)

    diagnostics = {
        "n_train": train.n,
        "n_test": test.n,
        "sigma1": m1.sigma_,
        "sigma2": m2.sigma_,
        "margins": [_margin_summary(m1), _margin_summary(m2)],
        "eta_range": [float(np.min(eta_test)), float(np.max(eta_test))],
        "backend": config.backend,
        "calibration_at_bound": bool(getattr(calib, "at_bound_", False)),
    }
    return U_test, eta_test, diagnostics


def _margin_summary(m) -> dict:
    out = {"estimator": type(m).__name__, "sigma": m.sigma_, "degenerate": m.degenerate_}
    if hasattr(m, "bandwidth_"):
        out["bandwidth"] = np.asarray(m.bandwidth_).tolist()
    if hasattr(m, "length_scale_"):
        out["length_scale"] = m.length_scale_
        out["ridge"] = m.ridge_
    return out


def run_sa_check(dataset: Dataset, config: SACheckConfig | None = None, rng=None) -> SACheckReport:
    """End-to-end check of the simplifying assumption with both methods."""
    config = config or SACheckConfig()
    rng = as_generator(rng)
    pipeline_rng, perm_rng = rng.spawn(2)
    U_test, eta_test, diagnostics = fit_sa_inputs(dataset, config, pipeline_rng)

    with _stage("permutation test"):
        method1 = permutation_test(
            U_test, eta_test, config.K, config.J, config.alpha, perm_rng
        )
    with _stage("chisq test"):
        method2 = chisq_test(U_test, eta_test, config.K, config.alpha)

    bins = assign_bins(eta_test, config.K)
    diagnostics = dict(
        diagnostics,
        bin_sizes=bins.sizes.tolist(),
        bin_boundaries=bins.boundaries.tolist(),
        per_bin_spearman=method1.per_bin_rho.tolist(),
        per_bin_pearson=method2.per_bin_rho.tolist(),
    )
    return SACheckReport(method1=method1, method2=method2, diagnostics=diagnostics)
