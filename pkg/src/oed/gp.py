"""Exact Gaussian-process regression with a squared-exponential kernel.

Posterior mean/variance follow the zero-mean conditioning formulas with the
white-noise term ``alpha`` added to the training diagonal only; predictions
are noise-free latent-function estimates. Analytic gradients of the posterior
mean and variance with respect to the query point are exposed because the
acquisition optimizer consumes them. ``fit(..., center=True)`` subtracts the
empirical target mean before conditioning and adds it back to posterior means
(variances are unaffected) when a caller prefers not to spend signal variance
on a constant offset.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import minimize
from scipy.spatial.distance import cdist, pdist

from .exceptions import InvalidInputError, SingularKernelError

logger = logging.getLogger(__name__)

SIGNAL_VARIANCE_BOUNDS = (1e-6, 1e6)
LENGTHSCALE_BOUNDS = (1e-3, 1e3)
# Deterministic log-space lengthscale restarts for hyper-parameter selection.
LENGTHSCALE_STARTS = (0.03, 0.1, 0.3, 1.0, 3.0)
ALPHA_GRID = tuple(10.0 ** (-10.0 + 0.5 * k) for k in range(21))
DEFAULT_ALPHA = 1e-6
CV_FOLDS = 5


@dataclass(frozen=True)
class KernelParams:
    """Squared-exponential hyper-parameters: sigma_f^2, lengthscale, noise."""

    signal_variance: float
    lengthscale: float
    noise: float = 0.0

    def __post_init__(self):
        if not (self.signal_variance > 0 and np.isfinite(self.signal_variance)):
            raise InvalidInputError(f"signal_variance must be > 0, got {self.signal_variance}")
        if not (self.lengthscale > 0 and np.isfinite(self.lengthscale)):
            raise InvalidInputError(f"lengthscale must be > 0, got {self.lengthscale}")
        if not (self.noise >= 0 and np.isfinite(self.noise)):
            raise InvalidInputError(f"noise must be >= 0, got {self.noise}")


def _as_points(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("inputs contain non-finite entries")
    return X


def kernel_matrix(X_a, X_b, params: KernelParams) -> np.ndarray:
    """Cross-covariance ``sigma_f^2 exp(-|x - y|^2 / (2 l^2))``.

    The white-noise term is never added here; it only enters the training
    diagonal inside :func:`fit`.
    """
    A, B = _as_points(X_a), _as_points(X_b)
    sq = cdist(A, B, metric="sqeuclidean")
    return params.signal_variance * np.exp(-0.5 * sq / params.lengthscale**2)


class GPState:
    """Fitted GP: immutable after construction, cheap posterior queries."""

    def __init__(self, X, y, params, offset, chol, alpha_vec):
        self.X = X
        self.y = y
        self.params = params
        self._offset = offset
        self._chol = chol
        self._alpha_vec = alpha_vec

    @property
    def n_train(self) -> int:
        return self.X.shape[0]

    def posterior(self, x):
        """Posterior (mean, variance, mean_gradient, variance_gradient) at x."""
        x = np.asarray(x, dtype=float).ravel()
        diff = self.X - x  # (n, d)
        sq = np.einsum("nd,nd->n", diff, diff)
        l2 = self.params.lengthscale**2
        k_star = self.params.signal_variance * np.exp(-0.5 * sq / l2)
        mean = float(k_star @ self._alpha_vec) + self._offset
        v = cho_solve(self._chol, k_star)
        var = max(float(self.params.signal_variance - k_star @ v), 0.0)
        grad_k = (diff * k_star[:, None]) / l2  # (n, d): d k_i / d x
        mean_grad = grad_k.T @ self._alpha_vec
        var_grad = -2.0 * (grad_k.T @ v)
        return mean, var, mean_grad, var_grad

    def predict(self, X_query):
        """Batch posterior means and variances (no gradients)."""
        K_star = kernel_matrix(X_query, self.X, self.params)
        means = K_star @ self._alpha_vec + self._offset
        V = cho_solve(self._chol, K_star.T)
        variances = np.maximum(
            self.params.signal_variance - np.einsum("nm,nm->m", K_star.T, V), 0.0
        )
        return means, variances


def fit(X_t, y, params: KernelParams, *, center: bool = False) -> GPState:
    """Fit the exact GP posterior; O(n^3) once, O(n^2)-ish queries after.

    With ``center=True`` the empirical target mean is subtracted before
    conditioning and re-added to posterior means.
    """
    X = _as_points(X_t)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise InvalidInputError("X_t and y lengths differ")
    if X.shape[0] < 1:
        raise InvalidInputError("need at least one training point")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("targets contain non-finite entries")
    offset = float(y.mean()) if center else 0.0
    y_c = y - offset
    K = kernel_matrix(X, X, params)
    K[np.diag_indices_from(K)] += params.noise
    try:
        chol = cho_factor(K, lower=True)
    except LinAlgError as exc:
        raise SingularKernelError(
            f"kernel matrix not positive definite (n={X.shape[0]}, "
            f"noise={params.noise:g}): {exc}"
        ) from exc
    alpha_vec = cho_solve(chol, y_c)
    return GPState(X, y, params, offset, chol, alpha_vec)


def log_marginal_likelihood(X_t, y, params: KernelParams) -> float:
    """Gaussian log marginal likelihood of ``y`` under the kernel (larger is better)."""
    value, _ = _lml_with_grad(_as_points(X_t), np.asarray(y, float).ravel(),
                              params.signal_variance, params.lengthscale,
                              params.noise, want_grad=False)
    return value


def _lml_with_grad(X, y, sf2, ell, noise, want_grad=True):
    n = X.shape[0]
    sq = cdist(X, X, metric="sqeuclidean")
    K0 = sf2 * np.exp(-0.5 * sq / ell**2)  # noiseless part
    K = K0.copy()
    K[np.diag_indices_from(K)] += noise
    try:
        chol = cho_factor(K, lower=True)
    except LinAlgError as exc:
        raise SingularKernelError(f"kernel matrix not positive definite: {exc}") from exc
    alpha_vec = cho_solve(chol, y)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol[0]))))
    value = -0.5 * float(y @ alpha_vec) - 0.5 * logdet - 0.5 * n * np.log(2.0 * np.pi)
    if not want_grad:
        return value, None
    Kinv = cho_solve(chol, np.eye(n))
    W = np.outer(alpha_vec, alpha_vec) - Kinv
    # Derivatives w.r.t. log(sigma_f^2) and log(l).
    dK_dlog_sf2 = K0
    dK_dlog_ell = K0 * (sq / ell**2)
    grad = np.array([
        0.5 * np.einsum("ij,ij->", W, dK_dlog_sf2),
        0.5 * np.einsum("ij,ij->", W, dK_dlog_ell),
    ])
    return value, grad


def select_hypers(X_t, y, alpha_fixed: float, *,
                  start: KernelParams | None = None) -> KernelParams:
    """Maximize the log marginal likelihood over (sigma_f^2, l), alpha fixed.

    Multistart L-BFGS-B in log space from deterministic restarts (plus the
    optional ``start`` pair, used to warm-start successive refits). Falls back
    to ``(var(y), 1.0)`` with a logged warning when every restart fails.
    """
    X = _as_points(X_t)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] < 2:
        raise InvalidInputError("hyper-parameter selection needs n >= 2")
    y_c = y - y.mean()
    var_y = float(np.clip(y_c.var(), *SIGNAL_VARIANCE_BOUNDS))

    log_bounds = [np.log(SIGNAL_VARIANCE_BOUNDS), np.log(LENGTHSCALE_BOUNDS)]
    starts = []
    if start is not None:
        starts.append((start.signal_variance, start.lengthscale))
    starts.extend(
        (var_y, float(np.clip(l0, *LENGTHSCALE_BOUNDS))) for l0 in LENGTHSCALE_STARTS
    )

    def negative_lml(theta):
        sf2, ell = np.exp(theta)
        try:
            value, grad = _lml_with_grad(X, y_c, sf2, ell, alpha_fixed)
        except SingularKernelError:
            # Treat a non-factorizable trial kernel as a very bad point so the
            # line search backtracks instead of aborting the restart.
            return 1e25, np.zeros(2)
        return -value, -grad

    best = None
    for sf2_0, l0 in starts:
        theta0 = np.log([np.clip(sf2_0, *SIGNAL_VARIANCE_BOUNDS),
                         np.clip(l0, *LENGTHSCALE_BOUNDS)])
        res = minimize(negative_lml, theta0, jac=True, method="L-BFGS-B",
                       bounds=log_bounds, options={"maxiter": 100})
        if not np.isfinite(res.fun) or res.fun >= 1e25:
            continue
        if best is None or res.fun < best[0]:
            best = (float(res.fun), res.x)
    if best is None:
        logger.warning("all hyper-parameter restarts failed; falling back to "
                       "(var(y), 1.0)")
        return KernelParams(var_y, 1.0, alpha_fixed)
    sf2, ell = np.exp(best[1])
    return KernelParams(float(sf2), float(ell), alpha_fixed)


def _cv_fold_params(X_train, y_train, kernel: KernelParams | None):
    if kernel is not None:
        return kernel.signal_variance, kernel.lengthscale
    dists = pdist(X_train)
    positive = dists[dists > 0]
    ell = float(np.median(positive)) if positive.size else 1.0
    sf2 = float(np.clip(np.var(y_train), *SIGNAL_VARIANCE_BOUNDS))
    return sf2, ell


def select_alpha_cv(X_t, y, *, kernel: KernelParams | None = None) -> float:
    """Pick the white-noise level from the 21-value grid by 5-fold CV.

    Folds are formed by index stride; the mean squared prediction error
    decides, with ties broken toward the larger alpha. With fewer than 5
    points the default ``1e-6`` is returned with a logged warning. The fold
    fits use ``kernel``'s (sigma_f^2, l) when given, else a median-distance /
    target-variance heuristic.
    """
    X = _as_points(X_t)
    y = np.asarray(y, dtype=float).ravel()
    n = y.shape[0]
    if n < CV_FOLDS:
        logger.warning("select_alpha_cv needs n >= %d, got %d; using default %g",
                       CV_FOLDS, n, DEFAULT_ALPHA)
        return DEFAULT_ALPHA
    idx = np.arange(n)
    best_alpha, best_mse = None, np.inf
    for alpha in ALPHA_GRID:
        total = 0.0
        count = 0
        failed = False
        for fold in range(CV_FOLDS):
            test = idx % CV_FOLDS == fold
            train = ~test
            sf2, ell = _cv_fold_params(X[train], y[train], kernel)
            try:
                state = fit(X[train], y[train], KernelParams(sf2, ell, alpha))
            except SingularKernelError:
                failed = True
                break
            pred, _ = state.predict(X[test])
            total += float(np.sum((pred - y[test]) ** 2))
            count += int(test.sum())
        if failed:
            continue
        mse = total / count
        if mse <= best_mse:  # ties resolve toward larger alpha (grid ascends)
            best_alpha, best_mse = alpha, mse
    if best_alpha is None:
        logger.warning("every alpha failed cross-validation; using default %g",
                       DEFAULT_ALPHA)
        return DEFAULT_ALPHA
    return best_alpha
