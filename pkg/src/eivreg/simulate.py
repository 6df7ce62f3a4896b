"""Synthetic data generation for the corrupted matrix regression model.

Covariate matrices are drawn so their vectorizations are zero-mean
Gaussian with a prescribed covariance; responses follow the trace
regression model ``y_i = <<X_i, theta*>> + eps_i``. Truths are either
exactly low-rank Gaussian factor products or spectra decaying like
``j**(-(1+decay)/q)`` normalized so the q-th power of the singular values
sums to the requested radius.

Everything is a pure function of the seed: replication ``i`` of a sweep
draws from the stream ``SeedSequence([master_seed, i])``, so parallel runs
are reproducible regardless of scheduling.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .loss import Covariance, CovarianceSpec


@dataclass(frozen=True)
class TruthSpec:
    """Shape and spectral profile of the true parameter matrix.

    ``mode='exact'`` uses a rank-``r`` Gaussian factor product rescaled to
    Frobenius norm ``scale``. ``mode='near'`` draws random orthogonal
    factors with singular values ``c * j**(-(1+decay)/q)``, ``c`` chosen so
    ``sum sigma_j**q == radius_q`` (``scale`` is ignored: the radius pins
    the size).
    """

    d1: int
    d2: int
    mode: str = "exact"
    r: int = 1
    q: float = 0.5
    radius_q: float = 1.0
    decay: float = 0.5
    scale: float = 1.0

    def __post_init__(self):
        if self.d1 < 1 or self.d2 < 1:
            raise ValueError("dimensions must be positive")
        if self.mode not in ("exact", "near"):
            raise ValueError("mode must be 'exact' or 'near'")
        if self.mode == "exact":
            if self.r < 1 or self.r > min(self.d1, self.d2):
                raise ValueError("r must lie in [1, min(d1, d2)]")
            if self.scale <= 0:
                raise ValueError("scale must be positive")
        else:
            if not (0.0 < self.q <= 1.0):
                raise ValueError("near-low-rank mode needs q in (0, 1]")
            if self.radius_q <= 0 or self.decay <= 0:
                raise ValueError("radius_q and decay must be positive")

    def effective_rank_radius(self):
        """(q, R_q) pair the truth satisfies: (0, r) exact, (q, radius) near."""
        if self.mode == "exact":
            return 0.0, float(self.r)
        return self.q, self.radius_q


def make_low_rank_truth(spec, rng):
    """Draw a truth matrix according to ``spec``."""
    if spec.mode == "exact":
        a = rng.standard_normal((spec.d1, spec.r))
        b = rng.standard_normal((spec.d2, spec.r))
        theta = a @ b.T
        return theta * (spec.scale / np.linalg.norm(theta, "fro"))
    d = min(spec.d1, spec.d2)
    j = np.arange(1, d + 1, dtype=float)
    profile = j ** (-(1.0 + spec.decay) / spec.q)
    c = (spec.radius_q / np.sum(profile ** spec.q)) ** (1.0 / spec.q)
    sigma = c * profile
    u, _ = np.linalg.qr(rng.standard_normal((spec.d1, d)))
    v, _ = np.linalg.qr(rng.standard_normal((spec.d2, d)))
    return (u * sigma) @ v.T


def sample_gaussian_matrix(cov, d1, d2, rng):
    """One d1 x d2 matrix whose vectorization is N(0, cov)."""
    m = d1 * d2
    if cov.kind != "scaled_identity" and cov.dim is not None and cov.dim != m:
        raise ValueError("covariance dimension %s != %d" % (cov.dim, m))
    z = rng.standard_normal(m)
    return cov.sqrt_matvec(z).reshape(d1, d2)


def sample_gaussian_stack(cov, n, d1, d2, rng):
    """n matrices from the same ensemble, one rng stream, shape (n, d1, d2)."""
    m = d1 * d2
    z = rng.standard_normal((n, m))
    if cov.kind == "scaled_identity":
        out = math.sqrt(cov.data) * z
    elif cov.kind == "diagonal":
        out = z * np.sqrt(cov.data)
    else:
        out = z @ cov.sqrt_factor().T
    return out.reshape(n, d1, d2)


@dataclass
class Dataset:
    """One simulated draw of the observation model.

    ``z`` holds the observed covariates: clean plus noise in the additive
    case, zero-filled with ``mask`` marking the holes in the missing case.
    """

    x: np.ndarray
    z: np.ndarray
    mask: Optional[np.ndarray]
    y: np.ndarray
    theta_star: np.ndarray
    cov: CovarianceSpec
    corruption: str
    seed: int

    @property
    def n(self):
        return self.y.size


def replication_rng(master_seed, index):
    """Independent generator for replication ``index`` of a sweep."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(index)]))


def simulate_dataset(truth_spec, cov, n, corruption, seed, theta_star=None):
    """Generate a dataset; identical seeds reproduce identical bits.

    ``corruption`` is ``additive`` (observe x + w), ``missing`` (each entry
    independently dropped with probability rho) or ``none``. A fixed
    ``theta_star`` can be supplied to reuse one truth across replications.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if corruption not in ("additive", "missing", "none"):
        raise ValueError("unknown corruption %r" % corruption)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed)]))
    d1, d2 = truth_spec.d1, truth_spec.d2
    # always consume the truth draw so a supplied theta_star leaves the
    # covariate/noise streams unchanged
    drawn = make_low_rank_truth(truth_spec, rng)
    if theta_star is None:
        theta_star = drawn
    x = sample_gaussian_stack(cov.sigma_x, n, d1, d2, rng)
    eps = cov.sigma_eps * rng.standard_normal(n) if cov.sigma_eps > 0 else np.zeros(n)
    y = np.einsum("nij,ij->n", x, theta_star) + eps
    mask = None
    if corruption == "additive":
        if cov.sigma_w.is_zero():
            z = x.copy()
        else:
            z = x + sample_gaussian_stack(cov.sigma_w, n, d1, d2, rng)
    elif corruption == "missing":
        mask = rng.uniform(size=x.shape) < cov.rho
        z = np.where(mask, 0.0, x)
    else:
        z = x.copy()
    return Dataset(
        x=x,
        z=z,
        mask=mask,
        y=y,
        theta_star=theta_star,
        cov=cov,
        corruption=corruption,
        seed=int(seed),
    )


def identity_cov_spec(x_var=1.0, w_std=0.0, rho=0.0, eps_std=0.0, dim=None):
    """Scalar-identity covariance spec, the workhorse for benchmarks."""
    return CovarianceSpec(
        sigma_x=Covariance.scaled_identity(x_var, dim=dim),
        sigma_w=Covariance.scaled_identity(w_std * w_std, dim=dim),
        rho=rho,
        sigma_eps=eps_std,
    )
