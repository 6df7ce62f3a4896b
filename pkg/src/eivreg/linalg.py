"""Dense-matrix spectral primitives.

Thin SVD with a fixed sign convention, singular-value norms, soft
thresholding of the spectrum, projections onto the l1 and nuclear-norm
balls, and the rank-based splittings used by the solver diagnostics.

All functions are pure and operate on plain 2-D float arrays. Spectral
maps (soft thresholding, ball projections, spectral-function gradients)
are invariant to the choice of singular basis even when the factorization
itself is not unique; the sign convention only pins the factor matrices.
"""

from typing import NamedTuple

import numpy as np

# Absolute cutoff below which a singular value counts as zero for rank
# decisions.
RANK_TOL = 1e-10


def check_matrix(m, name="matrix"):
    """Coerce to a finite 2-D float array or raise ValueError."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError("%s must be 2-D, got shape %s" % (name, (m.shape,)))
    if m.size == 0:
        raise ValueError("%s must be nonempty" % name)
    if not np.isfinite(m).all():
        raise ValueError("%s has non-finite entries" % name)
    return m


class SvdFactor(NamedTuple):
    """Thin SVD ``u @ diag(sigma) @ v.T`` with orthonormal column blocks."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def reconstruct(self):
        return (self.u * self.sigma) @ self.v.T


def thin_svd(m):
    """Thin SVD with a deterministic sign convention.

    Each left singular vector is flipped so that its first coordinate of
    magnitude above 1e-12 is positive; the matching right vector is flipped
    with it. This pins the factors for a fixed input (including repeated
    singular values, up to the backend's deterministic basis choice).
    """
    m = check_matrix(m)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    v = vt.T.copy()
    u = u.copy()
    for j in range(u.shape[1]):
        nz = np.nonzero(np.abs(u[:, j]) > 1e-12)[0]
        if nz.size and u[nz[0], j] < 0:
            u[:, j] = -u[:, j]
            v[:, j] = -v[:, j]
    return SvdFactor(u, s, v)


def singular_values(m):
    """Singular values in nonincreasing order."""
    return np.linalg.svd(check_matrix(m), compute_uv=False)


class MatrixNorms(NamedTuple):
    nuclear: float
    frobenius: float
    operator: float


def matrix_norms(m):
    """Nuclear, Frobenius and operator norms from one SVD pass."""
    s = singular_values(m)
    return MatrixNorms(float(s.sum()), float(np.sqrt((s * s).sum())), float(s[0]))


def nuclear_norm(m):
    return float(singular_values(m).sum())


def operator_norm(m):
    return float(singular_values(m)[0])


def frobenius_norm(m):
    return float(np.linalg.norm(m, "fro"))


def trace_inner(a, b):
    """Trace inner product ``trace(a.T @ b)`` = entrywise sum of a*b."""
    a = check_matrix(a, "a")
    b = check_matrix(b, "b")
    if a.shape != b.shape:
        raise ValueError("shape mismatch: %s vs %s" % (a.shape, b.shape))
    return float((a * b).sum())


def svt(m, threshold):
    """Singular value soft thresholding.

    Returns ``u @ diag(max(sigma - threshold, 0)) @ v.T``, the closed-form
    minimizer of ``0.5*||theta - m||_F^2 + threshold*||theta||_*``.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    u, s, v = thin_svd(m)
    return (u * np.maximum(s - threshold, 0.0)) @ v.T


def project_l1_ball(v, radius):
    """Euclidean projection of a nonnegative vector onto the l1 ball.

    Sort-and-threshold method: when the input lies outside the ball the
    projection is ``max(v - theta, 0)`` with the shift theta determined by
    the sorted cumulative sums.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError("expected a 1-D vector")
    if v.min(initial=0.0) < -1e-12:
        raise ValueError("expected nonnegative entries")
    v = np.maximum(v, 0.0)
    if v.sum() <= radius:
        return v.copy()
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, v.size + 1)
    rho = k[u - (css - radius) / k > 0][-1]
    theta = (css[rho - 1] - radius) / rho
    return np.maximum(v - theta, 0.0)


def project_nuclear_ball(m, radius):
    """Frobenius projection onto ``{theta : ||theta||_* <= radius}``.

    Reduces to the l1-ball projection of the singular values.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    u, s, v = thin_svd(m)
    if s.sum() <= radius:
        return np.asarray(m, dtype=float).copy()
    return (u * project_l1_ball(s, radius)) @ v.T


class RankSplit(NamedTuple):
    """Orthogonal split of a matrix into its top-2r spectral part and tail."""

    head: np.ndarray
    tail: np.ndarray
    r: int


def rank_split(delta, r):
    """Split ``delta`` along its own singular basis at index 2r.

    ``head`` keeps the 2r largest singular triples (rank <= 2r), ``tail``
    the rest; the two parts are trace-orthogonal and sum to ``delta``.
    When 2r covers the whole spectrum the tail is zero.
    """
    if int(r) != r or r <= 0:
        raise ValueError("r must be a positive integer")
    r = int(r)
    u, s, v = thin_svd(delta)
    k = min(2 * r, s.size)
    s_head = s.copy()
    s_head[k:] = 0.0
    s_tail = s - s_head
    return RankSplit((u * s_head) @ v.T, (u * s_tail) @ v.T, r)


class ComplementSplit(NamedTuple):
    """Split of a perturbation against the singular subspaces of an anchor."""

    outer: np.ndarray
    remainder: np.ndarray


def complement_split(anchor, delta, r):
    """Split ``delta`` relative to the top-r singular subspaces of ``anchor``.

    ``outer`` is the compression of ``delta`` onto the orthogonal
    complements of the anchor's top-r left and right singular spaces,
    ``(I - U_r U_r^T) delta (I - V_r V_r^T)``; the remainder
    ``delta - outer`` has rank at most 2r.
    """
    anchor = check_matrix(anchor, "anchor")
    delta = check_matrix(delta, "delta")
    if anchor.shape != delta.shape:
        raise ValueError("shape mismatch: %s vs %s" % (anchor.shape, delta.shape))
    if int(r) != r or r <= 0:
        raise ValueError("r must be a positive integer")
    r = int(r)
    if r > min(anchor.shape):
        raise ValueError("r exceeds min(d1, d2)")
    f = thin_svd(anchor)
    u1 = f.u[:, :r]
    v1 = f.v[:, :r]
    inner = delta - u1 @ (u1.T @ delta)
    outer = inner - (inner @ v1) @ v1.T
    return ComplementSplit(outer, delta - outer)


def spectral_tail_split(sigma, eta):
    """Indices of singular values >= eta and the nuclear mass left below.

    ``sigma`` must be nonincreasing and nonnegative. Returns ``(head,
    tail_nuclear)`` where ``head`` holds the (0-based) indices kept by the
    threshold and ``tail_nuclear`` the sum of the remaining values.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 1:
        raise ValueError("expected a 1-D vector of singular values")
    if sigma.size > 1 and np.any(np.diff(sigma) > 1e-12):
        raise ValueError("singular values must be nonincreasing")
    head = np.nonzero(sigma >= eta)[0]
    return head, float(sigma[sigma < eta].sum())


def numerical_rank(m, tol=RANK_TOL):
    """Number of singular values above an absolute cutoff."""
    return int((singular_values(m) > tol).sum())
