"""Scalar penalties on singular values and their spectral lifts.

Every penalty here decomposes as ``p(t) = concave(t) + lam*|t|`` where the
concave part is symmetric, vanishes at zero and has a nonincreasing
derivative with slope bounded below by ``-mu``. The weakness constant
``mu`` is what the solver and the error bounds trade against the curvature
of the loss: larger ``mu`` means a more aggressively debiased but more
nonconvex penalty.

Spectral lifts apply the scalar functions to the singular values::

    spectral_value(pen, m)   = sum_j p(sigma_j(m))
    spectral_concave(pen, m) = sum_j concave(sigma_j(m))

and ``spectral_concave_grad`` is the gradient of the latter,
``u @ diag(concave'(sigma)) @ v.T`` in the computed singular basis. At
matrices with repeated or zero singular values the formula is evaluated in
the basis returned by the factorization without any uniqueness claim.
"""

import numpy as np

from .linalg import singular_values, thin_svd


class Penalty:
    """Base scalar penalty; subclasses fill in the piecewise formulas."""

    kind = "base"

    def __init__(self, lam):
        if lam <= 0:
            raise ValueError("lam must be positive")
        self.lam = float(lam)
        self.mu = 0.0

    def value(self, t):
        raise NotImplementedError

    def concave(self, t):
        raise NotImplementedError

    def concave_deriv(self, t):
        raise NotImplementedError

    def __repr__(self):
        return "%s(lam=%r)" % (type(self).__name__, self.lam)


class NuclearPenalty(Penalty):
    """Plain weighted absolute value, ``p(t) = lam*|t|``.

    Lifts to ``lam * ||m||_*``; the concave part is identically zero.
    """

    kind = "nuclear"

    def value(self, t):
        return self.lam * np.abs(np.asarray(t, dtype=float))

    def concave(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def concave_deriv(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


class ScadPenalty(Penalty):
    """Smoothly clipped absolute deviation with shape parameter a > 2.

    ::

        p(t) = lam*|t|                                |t| <= lam
             = -(t^2 - 2*a*lam*|t| + lam^2)
               / (2*(a-1))                            lam < |t| <= a*lam
             = (a+1)*lam^2 / 2                        |t| > a*lam

    The concave part is zero on ``|t| <= lam`` and the derivative slope is
    bounded below by ``-mu`` with ``mu = 1/(a-1)``.
    """

    kind = "scad"

    def __init__(self, lam, a=3.7):
        super().__init__(lam)
        if a <= 2:
            raise ValueError("scad requires a > 2")
        self.a = float(a)
        self.mu = 1.0 / (self.a - 1.0)

    def value(self, t):
        at = np.abs(np.asarray(t, dtype=float))
        lam, a = self.lam, self.a
        return np.select(
            [at <= lam, at <= a * lam],
            [lam * at, -(at * at - 2 * a * lam * at + lam * lam) / (2 * (a - 1))],
            default=(a + 1) * lam * lam / 2,
        )

    def concave(self, t):
        at = np.abs(np.asarray(t, dtype=float))
        lam, a = self.lam, self.a
        return np.select(
            [at <= lam, at <= a * lam],
            [np.zeros_like(at), -((at - lam) ** 2) / (2 * (a - 1))],
            default=(a + 1) * lam * lam / 2 - lam * at,
        )

    def concave_deriv(self, t):
        t = np.asarray(t, dtype=float)
        at = np.abs(t)
        sgn = np.sign(t)
        lam, a = self.lam, self.a
        return np.select(
            [at <= lam, at <= a * lam],
            [np.zeros_like(t), -(at - lam) / (a - 1) * sgn],
            default=-lam * sgn,
        )

    def __repr__(self):
        return "ScadPenalty(lam=%r, a=%r)" % (self.lam, self.a)


class McpPenalty(Penalty):
    """Minimax concave penalty with shape parameter b > 0.

    ::

        p(t) = lam*|t| - t^2/(2b)       |t| <= b*lam
             = b*lam^2 / 2              |t| > b*lam

    ``mu = 1/b``.
    """

    kind = "mcp"

    def __init__(self, lam, b=2.0):
        super().__init__(lam)
        if b <= 0:
            raise ValueError("mcp requires b > 0")
        self.b = float(b)
        self.mu = 1.0 / self.b

    def value(self, t):
        t = np.asarray(t, dtype=float)
        at = np.abs(t)
        lam, b = self.lam, self.b
        return np.where(at <= b * lam, lam * at - t * t / (2 * b), b * lam * lam / 2)

    def concave(self, t):
        t = np.asarray(t, dtype=float)
        at = np.abs(t)
        lam, b = self.lam, self.b
        return np.where(at <= b * lam, -t * t / (2 * b), b * lam * lam / 2 - lam * at)

    def concave_deriv(self, t):
        t = np.asarray(t, dtype=float)
        at = np.abs(t)
        lam, b = self.lam, self.b
        return np.where(at <= b * lam, -t / b, -lam * np.sign(t))

    def __repr__(self):
        return "McpPenalty(lam=%r, b=%r)" % (self.lam, self.b)


PENALTY_KINDS = ("nuclear", "scad", "mcp")


def make_penalty(kind, lam, a=3.7, b=2.0):
    """Construct a penalty from its config name."""
    if kind == "nuclear":
        return NuclearPenalty(lam)
    if kind == "scad":
        return ScadPenalty(lam, a=a)
    if kind == "mcp":
        return McpPenalty(lam, b=b)
    raise ValueError("unknown penalty kind %r (expected one of %s)" % (kind, (PENALTY_KINDS,)))


def spectral_value(pen, m):
    """Penalty applied to the spectrum: ``sum_j p(sigma_j(m))``."""
    return float(np.sum(pen.value(singular_values(m))))


def spectral_concave(pen, m):
    """Concave part applied to the spectrum."""
    if pen.mu == 0.0:
        return 0.0
    return float(np.sum(pen.concave(singular_values(m))))


def spectral_concave_grad(pen, m):
    """Gradient of the spectral concave part.

    Zero for the nuclear penalty; otherwise ``u @ diag(concave'(sigma)) @
    v.T`` from the thin SVD of ``m``.
    """
    m = np.asarray(m, dtype=float)
    if pen.mu == 0.0:
        return np.zeros_like(m)
    u, s, v = thin_svd(m)
    return (u * pen.concave_deriv(s)) @ v.T
