"""Corrected quadratic losses for covariates observed with noise or gaps.

With corrupted covariates the clean Gram matrix is not observable, so the
least-squares loss is replaced by the plug-in quadratic

    loss(theta) = 0.5 * <gamma vec(theta), vec(theta)> - <upsilon, vec(theta)>

where ``(gamma, upsilon)`` is an unbiased surrogate for the second-moment
operator and the cross term.  With additive covariate noise the known noise
covariance is subtracted from the observed Gram matrix; with missing
entries the design is inflated by 1/(1-rho) and its diagonal rescaled.
Whenever the sample size is below the number of matrix entries the
corrected ``gamma`` has negative eigenvalues, so the loss is unbounded
below on the whole space and only the nuclear-ball constraint makes the
estimator well posed.
"""

import math
from dataclasses import dataclass

import numpy as np

from .linalg import operator_norm

# Largest vectorized dimension M = d1*d2 for which gamma is materialized as
# a dense M x M array; above this all applications stay matrix-free.
DENSE_GAMMA_MAX_DIM = 4096


class Covariance:
    """Symmetric PSD operator on vectorized matrices.

    Stored as one of ``scaled_identity`` (a scalar multiple of I),
    ``diagonal`` or ``dense``; the representation is what the surrogate
    builders subtract and what the samplers factor.
    """

    def __init__(self, kind, data, dim=None):
        if kind not in ("scaled_identity", "diagonal", "dense"):
            raise ValueError("unknown covariance kind %r" % kind)
        self.kind = kind
        if kind == "scaled_identity":
            self.data = float(data)
            if self.data < 0:
                raise ValueError("negative variance scale")
            self.dim = dim
        elif kind == "diagonal":
            self.data = np.asarray(data, dtype=float).ravel()
            if (self.data < 0).any():
                raise ValueError("negative diagonal entries")
            self.dim = self.data.size
        else:
            self.data = np.asarray(data, dtype=float)
            if self.data.ndim != 2 or self.data.shape[0] != self.data.shape[1]:
                raise ValueError("dense covariance must be square")
            if not np.allclose(self.data, self.data.T, atol=1e-10):
                raise ValueError("dense covariance must be symmetric")
            self.dim = self.data.shape[0]
            self._eigvals, self._eigvecs = np.linalg.eigh(self.data)
            if self._eigvals.min() < -1e-10 * max(1.0, abs(self._eigvals).max()):
                raise ValueError("dense covariance must be PSD")

    @classmethod
    def scaled_identity(cls, scale, dim=None):
        return cls("scaled_identity", scale, dim=dim)

    @classmethod
    def diagonal(cls, diag):
        return cls("diagonal", diag)

    @classmethod
    def dense(cls, mat):
        return cls("dense", mat)

    def matvec(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "scaled_identity":
            return self.data * v
        if self.kind == "diagonal":
            return self.data * v
        return self.data @ v

    def to_dense(self, dim):
        if self.kind == "scaled_identity":
            return self.data * np.eye(dim)
        if self.kind == "diagonal":
            if self.dim != dim:
                raise ValueError("diagonal length %d != %d" % (self.dim, dim))
            return np.diag(self.data)
        if self.dim != dim:
            raise ValueError("dense covariance is %d-dim, expected %d" % (self.dim, dim))
        return self.data.copy()

    def opnorm(self):
        if self.kind == "scaled_identity":
            return self.data
        if self.kind == "diagonal":
            return float(self.data.max(initial=0.0))
        return float(abs(self._eigvals).max())

    def lambda_min(self):
        if self.kind == "scaled_identity":
            return self.data
        if self.kind == "diagonal":
            return float(self.data.min())
        return float(self._eigvals.min())

    def lambda_max(self):
        if self.kind == "scaled_identity":
            return self.data
        if self.kind == "diagonal":
            return float(self.data.max())
        return float(self._eigvals.max())

    def sqrt_matvec(self, z):
        """Apply any factor L with L L^T equal to the covariance."""
        z = np.asarray(z, dtype=float)
        if self.kind == "scaled_identity":
            return math.sqrt(self.data) * z
        if self.kind == "diagonal":
            return np.sqrt(self.data) * z
        return self._eigvecs @ (np.sqrt(np.maximum(self._eigvals, 0.0)) * (self._eigvecs.T @ z))

    def sqrt_factor(self):
        """Dense factor L with L @ L.T equal to the covariance (dense kind)."""
        if self.kind != "dense":
            raise ValueError("sqrt_factor is only defined for dense covariances")
        return self._eigvecs * np.sqrt(np.maximum(self._eigvals, 0.0))

    def is_zero(self):
        if self.kind == "scaled_identity":
            return self.data == 0.0
        if self.kind == "diagonal":
            return bool((self.data == 0.0).all())
        return bool((self.data == 0.0).all())

    def __repr__(self):
        return "Covariance(%r, ...)" % self.kind


def as_covariance(value, dim=None):
    """Coerce a scalar / vector / square matrix / Covariance to a Covariance."""
    if isinstance(value, Covariance):
        return value
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return Covariance.scaled_identity(float(arr), dim=dim)
    if arr.ndim == 1:
        return Covariance.diagonal(arr)
    return Covariance.dense(arr)


@dataclass(frozen=True)
class CovarianceSpec:
    """Observation-model description: covariate law, corruption and noise.

    ``sigma_x`` must be positive definite; ``rho`` is the entrywise missing
    probability and ``sigma_eps`` the response noise standard deviation.
    """

    sigma_x: Covariance
    sigma_w: Covariance
    rho: float = 0.0
    sigma_eps: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.rho < 1.0):
            raise ValueError("rho must lie in [0, 1)")
        if self.sigma_eps < 0:
            raise ValueError("sigma_eps must be nonnegative")


def _as_design(z):
    """Stack (n, d1, d2) covariates into the n x (d1*d2) vectorized design."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 3:
        raise ValueError("expected covariates with shape (n, d1, d2)")
    n, d1, d2 = z.shape
    return z.reshape(n, d1 * d2), d1, d2


class SurrogatePair:
    """Plug-in quadratic loss data ``(gamma, upsilon)``.

    ``gamma`` acts on vectorized d1 x d2 matrices; it is kept matrix-free
    (`design.T @ (design @ v) / n` minus the corruption correction) and
    additionally materialized as a dense array when the vectorized
    dimension is at most ``DENSE_GAMMA_MAX_DIM``. Instances are immutable
    after construction and safe to share across threads.
    """

    def __init__(self, design, upsilon, d1, d2, corruption, noise_cov=None, rho=0.0):
        self.design = np.asarray(design, dtype=float)
        self.upsilon = np.asarray(upsilon, dtype=float).ravel()
        self.d1 = int(d1)
        self.d2 = int(d2)
        self.corruption = corruption
        self.noise_cov = noise_cov
        self.rho = float(rho)
        m = self.d1 * self.d2
        if self.design.shape[1] != m or self.upsilon.size != m:
            raise ValueError("design/upsilon width does not match d1*d2")
        if corruption == "missing":
            self._diag = (self.design * self.design).mean(axis=0)
        else:
            self._diag = None
        self._gamma = self._build_dense() if m <= DENSE_GAMMA_MAX_DIM else None

    @property
    def n(self):
        return self.design.shape[0]

    @property
    def dim(self):
        return self.d1 * self.d2

    def _build_dense(self):
        g = self.design.T @ self.design / self.n
        if self.corruption == "additive" and self.noise_cov is not None:
            g = g - self.noise_cov.to_dense(self.dim)
        elif self.corruption == "missing":
            g = g - self.rho * np.diag(np.diag(g))
        # symmetrize away accumulation asymmetry
        return (g + g.T) / 2

    def _apply_free(self, v):
        out = self.design.T @ (self.design @ v) / self.n
        if self.corruption == "additive" and self.noise_cov is not None:
            out = out - self.noise_cov.matvec(v)
        elif self.corruption == "missing":
            out = out - self.rho * self._diag * v
        return out

    def apply_gamma(self, v, matrix_free=False):
        """Apply gamma to a vector of length d1*d2."""
        v = np.asarray(v, dtype=float).ravel()
        if v.size != self.dim:
            raise ValueError("vector length %d != %d" % (v.size, self.dim))
        if matrix_free or self._gamma is None:
            return self._apply_free(v)
        return self._gamma @ v

    def gamma_dense(self):
        """Dense gamma, materializing it if the pair is matrix-free."""
        if self._gamma is not None:
            return self._gamma
        return self._build_dense()

    def loss(self, theta):
        v = np.asarray(theta, dtype=float).ravel()
        return float(0.5 * v @ self.apply_gamma(v) - self.upsilon @ v)

    def grad(self, theta):
        """Loss gradient, reshaped back to d1 x d2."""
        v = np.asarray(theta, dtype=float).ravel()
        return (self.apply_gamma(v) - self.upsilon).reshape(self.d1, self.d2)

    def taylor_error(self, theta, theta_ref):
        """First-order Taylor remainder of the loss between two points.

        For this quadratic loss the remainder is exactly
        ``0.5 * <gamma vec(delta), vec(delta)>`` and hence symmetric in its
        arguments.
        """
        d = (np.asarray(theta, dtype=float) - np.asarray(theta_ref, dtype=float)).ravel()
        return float(0.5 * d @ self.apply_gamma(d))

    def gradient_norms_at(self, theta):
        """(operator norm, entrywise max) of the gradient at ``theta``.

        The two norms of the matricized gradient differ in general; both
        are reported and the operator norm is the one the regularization
        rule consumes.
        """
        v = np.asarray(theta, dtype=float).ravel()
        g = self.apply_gamma(v) - self.upsilon
        return operator_norm(g.reshape(self.d1, self.d2)), float(np.abs(g).max())

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.gamma_dense())[0])


def build_additive_pair(z, y, noise_cov):
    """Surrogate pair for additive covariate noise with known covariance.

    ``gamma = Z'Z/n - sigma_w`` and ``upsilon = Z'y/n``.
    """
    design, d1, d2 = _as_design(z)
    y = np.asarray(y, dtype=float).ravel()
    if y.size != design.shape[0]:
        raise ValueError("len(y)=%d does not match %d covariates" % (y.size, design.shape[0]))
    if design.shape[0] < 1:
        raise ValueError("need at least one observation")
    cov = as_covariance(noise_cov, dim=d1 * d2)
    upsilon = design.T @ y / design.shape[0]
    return SurrogatePair(design, upsilon, d1, d2, "additive", noise_cov=cov)


def build_missing_pair(z, mask, y, rho):
    """Surrogate pair for entrywise missing data with known rate ``rho``.

    Missing entries must be stored as zeros with the mask bit set. The
    design is inflated to ``Z/(1-rho)``; then ``gamma`` subtracts
    ``rho * diag`` of the inflated Gram matrix and ``upsilon`` uses the
    inflated design.
    """
    if not (0.0 <= rho < 1.0):
        raise ValueError("rho must lie in [0, 1)")
    z = np.asarray(z, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != z.shape:
        raise ValueError("mask shape %s != covariate shape %s" % (mask.shape, z.shape))
    z = np.where(mask, 0.0, z)
    design, d1, d2 = _as_design(z)
    y = np.asarray(y, dtype=float).ravel()
    if y.size != design.shape[0]:
        raise ValueError("len(y)=%d does not match %d covariates" % (y.size, design.shape[0]))
    design = design / (1.0 - rho)
    upsilon = design.T @ y / design.shape[0]
    return SurrogatePair(design, upsilon, d1, d2, "missing", rho=rho)


def build_uncorrected_pair(z, y):
    """Naive pair ``(Z'Z/n, Z'y/n)`` on the observed data, no correction."""
    design, d1, d2 = _as_design(z)
    y = np.asarray(y, dtype=float).ravel()
    if y.size != design.shape[0]:
        raise ValueError("len(y)=%d does not match %d covariates" % (y.size, design.shape[0]))
    upsilon = design.T @ y / design.shape[0]
    return SurrogatePair(design, upsilon, d1, d2, "none")


def modified_taylor(pair, pen, theta, theta_ref):
    """Taylor remainder of the loss plus the spectral concave part."""
    from .penalties import spectral_concave, spectral_concave_grad
    from .linalg import trace_inner

    theta = np.asarray(theta, dtype=float)
    theta_ref = np.asarray(theta_ref, dtype=float)
    base = pair.taylor_error(theta, theta_ref)
    if pen.mu == 0.0:
        return base
    return base + (
        spectral_concave(pen, theta)
        - spectral_concave(pen, theta_ref)
        - trace_inner(spectral_concave_grad(pen, theta_ref), theta - theta_ref)
    )


@dataclass(frozen=True)
class RegularityParams:
    """Curvature and slack constants of the corrected loss.

    ``alpha1``..``alpha3`` are the restricted strong convexity/smoothness
    curvatures tied to the extreme eigenvalues of the covariate covariance;
    each ``tau_k`` is the nuclear-norm slack ``c0 * tau_corr * sqrt(d1*d2)
    * (log d1 + log d2) / n`` whose corruption factor depends on the error
    mechanism. ``phi`` is the deviation scale of the gradient at the truth.
    ``c0`` is an unspecified universal constant exposed as a knob.
    """

    alpha1: float
    alpha2: float
    alpha3: float
    tau1: float
    tau2: float
    tau3: float
    tau: float
    phi: float
    corruption: str
    c0: float


def regularity_params(cov, d1, d2, n, corruption, c0=1.0, theta_star_fnorm=1.0):
    """Curvature/slack constants for a given model size and corruption.

    ``corruption`` is one of ``additive``, ``missing`` or ``none`` (clean
    data, treated as additive with zero noise covariance). ``phi`` scales
    linearly with the Frobenius norm of the truth.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if c0 < 0:
        raise ValueError("c0 must be nonnegative")
    lmin = cov.sigma_x.lambda_min()
    if lmin <= 0:
        raise ValueError("sigma_x must be positive definite")
    lmax = cov.sigma_x.lambda_max()
    xop = cov.sigma_x.opnorm()
    if corruption in ("additive", "none"):
        wop = 0.0 if corruption == "none" else cov.sigma_w.opnorm()
        tau_corr = lmin * max((xop ** 2 + wop ** 2) / lmin ** 2, 1.0)
        phi = (xop + wop) * (xop + cov.sigma_eps) * theta_star_fnorm
    elif corruption == "missing":
        scale = xop / (1.0 - cov.rho)
        tau_corr = lmin * max(xop ** 4 / ((1.0 - cov.rho) ** 4 * lmin ** 2), 1.0)
        phi = scale * (scale + cov.sigma_eps) * theta_star_fnorm
    else:
        raise ValueError("unknown corruption %r" % corruption)
    base = c0 * tau_corr * math.sqrt(d1 * d2) * (math.log(d1) + math.log(d2)) / n
    return RegularityParams(
        alpha1=0.5 * lmin,
        alpha2=0.25 * lmin,
        alpha3=0.75 * lmax,
        tau1=base,
        tau2=base,
        tau3=base,
        tau=base,
        phi=phi,
        corruption=corruption,
        c0=c0,
    )


@dataclass
class CurvatureAudit:
    """Violation counts of the restricted curvature conditions."""

    trials: int
    violations: dict
    fractions: dict

    def clean(self):
        return all(v == 0 for v in self.violations.values())


def audit_curvature(pair, params, trials=1000, seed=0, low_rank_fraction=0.5, tol=1e-10):
    """Sample random directions and count curvature-condition violations.

    Directions mix dense Gaussian matrices and low-rank outer products,
    normalized to unit Frobenius norm (the three conditions are quadratic
    in the direction, so scale is irrelevant). Checked with the supplied
    constants:

    * ``stat_rsc``:  <gamma d, d>      >= alpha1*|d|_F^2 - tau1*|d|_*^2
    * ``alg_rsc``:   0.5*<gamma d, d>  >= alpha2*|d|_F^2 - tau2*|d|_*^2
    * ``alg_rsm``:   0.5*<gamma d, d>  <= alpha3*|d|_F^2 + tau3*|d|_*^2
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    d1, d2 = pair.d1, pair.d2
    counts = {"stat_rsc": 0, "alg_rsc": 0, "alg_rsm": 0}
    for trial in range(trials):
        if rng.uniform() < low_rank_fraction:
            k = int(rng.integers(1, min(3, min(d1, d2)) + 1))
            delta = rng.standard_normal((d1, k)) @ rng.standard_normal((k, d2))
        else:
            delta = rng.standard_normal((d1, d2))
        delta = delta / np.linalg.norm(delta, "fro")
        v = delta.ravel()
        quad = float(v @ pair.apply_gamma(v))
        nuc2 = float(np.linalg.svd(delta, compute_uv=False).sum()) ** 2
        if quad < params.alpha1 - params.tau1 * nuc2 - tol:
            counts["stat_rsc"] += 1
        if 0.5 * quad < params.alpha2 - params.tau2 * nuc2 - tol:
            counts["alg_rsc"] += 1
        if 0.5 * quad > params.alpha3 + params.tau3 * nuc2 + tol:
            counts["alg_rsm"] += 1
    fractions = {k: c / trials for k, c in counts.items()}
    return CurvatureAudit(trials=trials, violations=counts, fractions=fractions)
