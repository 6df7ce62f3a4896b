"""Composite proximal gradient solver over the nuclear-norm ball.

The objective  ``psi(theta) = loss(theta) + sum_j p(sigma_j(theta))``  is
rearranged by folding the concave part of the penalty into the smooth term,
leaving a nuclear-norm-plus-ball problem that each iteration solves in
closed form:

1. take a gradient step on the smoothed loss,
2. soft-threshold the singular values at ``lam/v``,
3. if the result leaves the ball ``||theta||_* <= omega``, replace it by
   the Frobenius projection of the gradient point onto the ball (at the
   constrained optimum the nuclear norm sits on the boundary, where the
   penalty term is constant, so the subproblem reduces to the projection).

Every iterate is feasible. The module also evaluates the error bounds and
convergence diagnostics associated with the estimator: the statistical
precision floor, the contraction factor ``kappa`` and slack ``xi``, and
the stationary-point recovery bounds.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, NumericalDivergence
from .linalg import frobenius_norm, nuclear_norm, project_nuclear_ball, svt
from .penalties import spectral_concave_grad, spectral_value

DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class Problem:
    """A corrected loss, a spectral penalty and the feasibility radius."""

    pair: object
    penalty: object
    omega: float

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("omega must be positive")

    @property
    def lam(self):
        return self.penalty.lam


@dataclass
class SolverOptions:
    """Step-size inverse, iteration budget, stopping rule and start point.

    ``v=None`` picks the step automatically (see ``default_step_inverse``).
    The contraction diagnostics assume ``v >= max((2*alpha2-mu)/4,
    2*alpha3)``; the default also covers the largest gamma eigenvalue so
    that descent holds on positive semidefinite instances.
    """

    v: Optional[float] = None
    max_iters: int = 5000
    tol_residual: float = 1e-7
    theta0: Optional[np.ndarray] = None
    snapshot_every: int = 0


@dataclass
class SolverTrace:
    """Objective values, iterate residuals and optional snapshots."""

    objective: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    converged_at: Optional[int] = None
    step_inverse: float = 0.0


def objective(problem, theta):
    """Penalized objective ``loss + spectral penalty``."""
    return problem.pair.loss(theta) + spectral_value(problem.penalty, theta)


def smoothed_grad(problem, theta):
    """Gradient of the loss plus the spectral concave part."""
    return problem.pair.grad(theta) + spectral_concave_grad(problem.penalty, theta)


def gamma_opnorm_estimate(pair, iters=30, seed=0):
    """Largest absolute gamma eigenvalue via a fixed-seed power iteration."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(pair.dim)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = pair.apply_gamma(x)
        est = float(np.linalg.norm(y))
        if est == 0.0:
            return 0.0
        x = y / est
    return est


def default_step_inverse(problem, params=None, power_iters=30, seed=0):
    """Step-size inverse: theory floor joined with a spectral estimate."""
    mu = problem.penalty.mu
    candidates = [gamma_opnorm_estimate(problem.pair, iters=power_iters, seed=seed)]
    if params is not None:
        candidates.append((2 * params.alpha2 - mu) / 4)
        candidates.append(2 * params.alpha3)
    v = max(candidates)
    if v <= 0:
        v = 1.0
    return v


def proximal_step(problem, v, theta):
    """One composite step at step-size inverse ``v``; output is feasible."""
    if v <= 0:
        raise ValueError("step-size inverse v must be positive")
    grad = smoothed_grad(problem, theta)
    if not np.isfinite(grad).all():
        raise NumericalDivergence("non-finite gradient in proximal step")
    point = theta - grad / v
    candidate = svt(point, problem.lam / v)
    if nuclear_norm(candidate) <= problem.omega:
        return candidate
    return project_nuclear_ball(point, problem.omega)


def stationarity_residual(problem, v, theta):
    """Frobenius distance of ``theta`` to its own proximal update.

    Zero exactly at fixed points of the update, the computable surrogate
    for the first-order stationarity condition over the ball.
    """
    return frobenius_norm(theta - proximal_step(problem, v, theta))


def solve(problem, opts=None, params=None):
    """Run the proximal gradient iteration until the residual stops it.

    Stops when ``||theta_{t+1} - theta_t||_F <= tol * max(1, ||theta_t||_F)``
    or the iteration budget runs out. Raises ``NumericalDivergence`` (with
    the partial trace attached) if the objective passes 1e12.
    """
    opts = opts or SolverOptions()
    v = opts.v if opts.v is not None else default_step_inverse(problem, params=params)
    theta = (
        np.zeros((problem.pair.d1, problem.pair.d2))
        if opts.theta0 is None
        else np.asarray(opts.theta0, dtype=float).copy()
    )
    trace = SolverTrace(step_inverse=v)
    trace.objective.append(objective(problem, theta))
    for t in range(opts.max_iters):
        theta_next = proximal_step(problem, v, theta)
        res = frobenius_norm(theta_next - theta)
        trace.residual.append(res)
        trace.objective.append(objective(problem, theta_next))
        if opts.snapshot_every and t % opts.snapshot_every == 0:
            trace.snapshots.append((t, theta_next.copy()))
        if not math.isfinite(trace.objective[-1]) or abs(trace.objective[-1]) > DIVERGENCE_LIMIT:
            raise NumericalDivergence(
                "objective exceeded %.1e at iteration %d" % (DIVERGENCE_LIMIT, t), trace=trace
            )
        if res <= opts.tol_residual * max(1.0, frobenius_norm(theta)):
            trace.converged_at = t + 1
            return theta_next, trace
        theta = theta_next
    return theta, trace


def restart_points(problem, count, seed=0, scale=None):
    """Random feasible start points drawn from a scaled Gaussian ensemble."""
    rng = np.random.default_rng(seed)
    scale = problem.omega / 2 if scale is None else scale
    points = []
    for _ in range(count):
        g = rng.standard_normal((problem.pair.d1, problem.pair.d2))
        g *= scale / max(np.linalg.norm(g, "fro"), 1e-12)
        points.append(project_nuclear_ball(g, problem.omega))
    return points


def solve_with_restarts(problem, restarts=10, opts=None, params=None, seed=0):
    """Zero start plus random restarts; returns (best theta, all results)."""
    opts = opts or SolverOptions()
    starts = [np.zeros((problem.pair.d1, problem.pair.d2))]
    starts += restart_points(problem, restarts - 1, seed=seed) if restarts > 1 else []
    results = []
    for theta0 in starts:
        run_opts = SolverOptions(
            v=opts.v,
            max_iters=opts.max_iters,
            tol_residual=opts.tol_residual,
            theta0=theta0,
            snapshot_every=opts.snapshot_every,
        )
        theta, trace = solve(problem, run_opts, params=params)
        results.append((theta, trace))
    best = min(results, key=lambda pair_: pair_[1].objective[-1])
    return best[0], results


def stationary_error_bounds(params, lam, mu, radius_q, q):
    """Recovery-bound values for any stationary point.

    Returns ``(frob_sq, nuclear)``:

        frob_sq = 9 * R_q * (lam / (alpha1 - mu))**(2-q)
        nuclear = (24*sqrt(2) + 8) * R_q * (lam / (alpha1 - mu))**(1-q)

    Requires ``alpha1 > mu``.
    """
    gap = params.alpha1 - mu
    if gap <= 0:
        raise ValueError("bounds need alpha1 > mu (got alpha1=%g, mu=%g)" % (params.alpha1, mu))
    ratio = lam / gap
    return (
        9.0 * radius_q * ratio ** (2.0 - q),
        (24.0 * math.sqrt(2.0) + 8.0) * radius_q * ratio ** (1.0 - q),
    )


@dataclass
class ConvergenceDiagnostics:
    """Contraction factor, slack terms and the statistical precision floor.

    ``applicable`` is False whenever the contraction statement's premises
    fail (``kappa`` outside (0,1), a nonpositive normalizer, or a step size
    below the required floor); values are reported as computed, never
    clamped.
    """

    eps_stat_bar: float
    kappa: float
    xi: float
    applicable: bool
    reasons: list
    delta_floor: float
    psi_gap0: float
    t_of_delta: Callable[[float], float]
    eps_of_delta: Callable[[float], float]


def convergence_diagnostics(problem, params, radius_q, q, theta_hat, theta_star, v, theta0=None):
    """Evaluate the convergence constants at a solved instance.

    ``theta_hat`` should be the best solution found (the global optimum is
    unknowable; the best point across restarts stands in for it and the
    precision floor inherits that caveat). ``q`` in [0, 1]; for ``q = 0``
    the ``lam**(-q)`` factors are 1.
    """
    if not (0.0 <= q <= 1.0):
        raise ValueError("q must lie in [0, 1]")
    lam = problem.lam
    mu = problem.penalty.mu
    omega = problem.omega
    err = frobenius_norm(np.asarray(theta_hat, float) - np.asarray(theta_star, float))
    root_r = math.sqrt(radius_q)
    eps_stat = 8.0 * lam ** (-q / 2) * root_r * (math.sqrt(2.0) * err + lam ** (1 - q / 2) * root_r)

    alpha = params.alpha2
    tau = params.tau
    zeta = tau * lam ** (-q) * radius_q
    two_am = 2 * alpha - mu
    reasons = []
    if two_am <= 0:
        reasons.append("2*alpha2 <= mu")
        denom = float("nan")
        kappa = float("nan")
        xi = float("nan")
    else:
        denom = 1.0 - 512.0 * zeta / two_am
        if denom <= 0:
            reasons.append("slack normalizer nonpositive")
            kappa = float("inf")
            xi = float("inf")
        else:
            kappa = (1.0 - two_am / (8.0 * v) + 512.0 * zeta / two_am) / denom
            xi = 2.0 * tau * (two_am / (8.0 * v) + 1024.0 * zeta / two_am + 5.0) / denom
        if v < max(two_am / 4.0, 2.0 * params.alpha3):
            reasons.append("step inverse below theory floor")
    if not (0.0 < kappa < 1.0):
        reasons.append("kappa outside (0, 1)")
    applicable = not reasons

    delta_floor = 8.0 * xi / (1.0 - kappa) * eps_stat ** 2 if applicable else float("inf")
    psi_gap0 = float("nan")
    if theta0 is not None:
        psi_gap0 = objective(problem, theta0) - objective(problem, theta_hat)

    def eps_of_delta(delta):
        return 2.0 * min(delta / lam, omega)

    def t_of_delta(delta_star, gap0=None):
        gap0 = psi_gap0 if gap0 is None else gap0
        if not applicable or delta_star <= 0 or not math.isfinite(gap0):
            return float("inf")
        log_inv_kappa = math.log(1.0 / kappa)
        ratio = omega * lam / delta_star
        outer = math.log2(math.log2(ratio)) if ratio > 2.0 else 0.0
        tail = math.log(gap0 / delta_star) / log_inv_kappa if gap0 > delta_star else 0.0
        return outer * (1.0 + math.log(2.0) / log_inv_kappa) + tail

    return ConvergenceDiagnostics(
        eps_stat_bar=eps_stat,
        kappa=kappa,
        xi=xi,
        applicable=applicable,
        reasons=reasons,
        delta_floor=delta_floor,
        psi_gap0=psi_gap0,
        t_of_delta=t_of_delta,
        eps_of_delta=eps_of_delta,
    )


def select_regularization(
    pair,
    params,
    policy="oracle",
    theta_star=None,
    margin=1.0,
    omega=None,
    lambdas=None,
    val_pair=None,
    penalty_factory=None,
    opts=None,
):
    """Pick ``(lam, omega)`` by the oracle rule or a validation grid.

    oracle (synthetic data, truth known):
        ``omega = margin * ||theta_star||_*`` and
        ``lam = 2 * max(op-norm of the gradient at the truth, 4*omega*tau1)``.

    grid (data driven):
        sweep the supplied ``lambdas`` subject to ``lam >= 8*tau*omega``,
        fit on ``pair`` and score by the corrected loss on ``val_pair``
        (held-out data); smallest validation loss wins.
    """
    if policy == "oracle":
        if theta_star is None:
            raise ConfigError("oracle policy needs theta_star")
        omega = margin * nuclear_norm(theta_star)
        grad_op, _ = pair.gradient_norms_at(theta_star)
        lam = 2.0 * max(grad_op, 4.0 * omega * params.tau1)
        return lam, omega
    if policy == "grid":
        if not lambdas:
            raise ConfigError("grid policy needs a nonempty lambda grid")
        if omega is None or omega <= 0:
            raise ConfigError("grid policy needs a positive omega")
        if val_pair is None or penalty_factory is None:
            raise ConfigError("grid policy needs val_pair and penalty_factory")
        feasible = [lam for lam in lambdas if lam >= 8.0 * params.tau * omega]
        if not feasible:
            raise ConfigError("lambda grid empty after the lam >= 8*tau*omega filter")
        opts = opts or SolverOptions()
        best = None
        for lam in feasible:
            problem = Problem(pair, penalty_factory(lam), omega)
            theta, _ = solve(problem, opts, params=params)
            score = val_pair.loss(theta)
            if best is None or score < best[0]:
                best = (score, lam)
        return best[1], omega
    raise ConfigError("unknown selection policy %r" % policy)
