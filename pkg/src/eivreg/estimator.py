"""Scikit-learn style front end for the corrected low-rank regressor."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .linalg import numerical_rank
from .loss import as_covariance, build_additive_pair, build_missing_pair, build_uncorrected_pair
from .penalties import make_penalty
from .solver import Problem, SolverOptions, solve
from .validation import check_covariates, check_response


class LowRankMatrixRegressor(BaseEstimator, RegressorMixin):
    """Low-rank trace regression robust to noisy or missing covariates.

    Fits ``y_i ~ <<X_i, theta>>`` by minimizing the corrected quadratic
    loss plus a spectral penalty over a nuclear-norm ball, using the
    composite proximal gradient method.

    Parameters
    ----------
    penalty : {'nuclear', 'scad', 'mcp'}
        Spectral penalty family. `a` and `b` are the SCAD/MCP shape
        parameters.
    lam : float
        Regularization level.
    omega : float or None
        Nuclear-norm feasibility radius. None picks a data-driven default,
        1.5x the nuclear norm of the matricized cross term, which matches
        the truth's scale when the covariate covariance is near identity.
    corruption : {'none', 'additive', 'missing'}
        Covariate error mechanism. Additive noise requires ``noise_cov``
        (scalar variance, per-entry variances, or a full M x M matrix);
        missing data requires ``missing_rate`` unless it is to be estimated
        from the observed NaN fraction (``missing_rate=None``). Missing
        entries are passed as NaN in X.
    step_inverse : float or None
        Inverse step size; None estimates the loss curvature spectrally.
    max_iter, tol : solver budget and relative stopping residual.
    matrix_shape : (d1, d2) or None
        Required when X is passed as 2-D vectorized rows.

    Attributes
    ----------
    coef_ : ndarray of shape (d1, d2)
        Fitted matrix parameter.
    rank_ : int
        Numerical rank of ``coef_``.
    n_iter_ : int
        Iterations used.
    objective_trace_ : list of objective values per iteration.
    """

    def __init__(
        self,
        penalty="scad",
        lam=0.1,
        omega=None,
        a=3.7,
        b=2.0,
        corruption="none",
        noise_cov=None,
        missing_rate=0.0,
        step_inverse=None,
        max_iter=5000,
        tol=1e-7,
        matrix_shape=None,
    ):
        self.penalty = penalty
        self.lam = lam
        self.omega = omega
        self.a = a
        self.b = b
        self.corruption = corruption
        self.noise_cov = noise_cov
        self.missing_rate = missing_rate
        self.step_inverse = step_inverse
        self.max_iter = max_iter
        self.tol = tol
        self.matrix_shape = matrix_shape

    def _build_pair(self, X, y):
        allow_nan = self.corruption == "missing"
        X = check_covariates(X, self.matrix_shape, allow_nan=allow_nan)
        y = check_response(y, X.shape[0])
        if self.corruption == "missing":
            mask = np.isnan(X)
            rho = self.missing_rate
            if rho is None:
                rho = float(mask.mean())
            return build_missing_pair(np.nan_to_num(X, nan=0.0), mask, y, rho)
        if self.corruption == "additive":
            if self.noise_cov is None:
                raise ValueError("additive corruption requires noise_cov")
            cov = as_covariance(self.noise_cov, dim=X.shape[1] * X.shape[2])
            return build_additive_pair(X, y, cov)
        if self.corruption == "none":
            return build_uncorrected_pair(X, y)
        raise ValueError("unknown corruption %r" % self.corruption)

    def fit(self, X, y):
        pair = self._build_pair(X, y)
        pen = make_penalty(self.penalty, self.lam, a=self.a, b=self.b)
        omega = self.omega
        if omega is None:
            cross = pair.upsilon.reshape(pair.d1, pair.d2)
            omega = 1.5 * float(np.linalg.svd(cross, compute_uv=False).sum())
            omega = max(omega, self.lam)
        problem = Problem(pair, pen, omega)
        opts = SolverOptions(v=self.step_inverse, max_iters=self.max_iter, tol_residual=self.tol)
        theta, trace = solve(problem, opts)
        self.coef_ = theta
        self.rank_ = numerical_rank(theta, tol=1e-8)
        self.n_iter_ = len(trace.residual)
        self.objective_trace_ = trace.objective
        self.omega_ = omega
        return self

    def predict(self, X):
        X = check_covariates(X, self.matrix_shape, allow_nan=True)
        return np.einsum("nij,ij->n", np.nan_to_num(X, nan=0.0), self.coef_)
