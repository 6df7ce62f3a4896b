"""Input validation helpers for the estimator front end."""

import numpy as np


def check_covariates(X, matrix_shape=None, allow_nan=False):
    """Coerce covariates to shape (n, d1, d2).

    Accepts a 3-D stack directly, or a 2-D array of vectorized (row-major)
    matrices together with ``matrix_shape=(d1, d2)``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        if matrix_shape is None:
            raise ValueError("2-D covariates need matrix_shape=(d1, d2)")
        d1, d2 = matrix_shape
        if X.shape[1] != d1 * d2:
            raise ValueError("covariate width %d != d1*d2 = %d" % (X.shape[1], d1 * d2))
        X = X.reshape(X.shape[0], d1, d2)
    if X.ndim != 3:
        raise ValueError("covariates must be (n, d1, d2) or (n, d1*d2)")
    if X.shape[0] < 1:
        raise ValueError("need at least one observation")
    if not allow_nan and not np.isfinite(X).all():
        raise ValueError("covariates contain non-finite entries")
    if allow_nan and np.isinf(X).any():
        raise ValueError("covariates contain infinities")
    return X


def check_response(y, n):
    y = np.asarray(y, dtype=float).ravel()
    if y.size != n:
        raise ValueError("len(y)=%d does not match %d covariates" % (y.size, n))
    if not np.isfinite(y).all():
        raise ValueError("response contains non-finite entries")
    return y
