"""Acceptance suite: the checks that gate a release.

Each criterion P1..P10 runs at a fixed seed with its tolerance and runtime
budget pinned in code, prints one PASS/FAIL line, and returns its
measurements. Run via ``eivreg accept`` or through the pytest wrapper in
``tests/test_acceptance.py``.
"""

import math
import tempfile
import time
import traceback
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .linalg import (
    complement_split,
    frobenius_norm,
    nuclear_norm,
    project_l1_ball,
    svt,
    thin_svd,
    trace_inner,
)
from .loss import (
    Covariance,
    CovarianceSpec,
    build_additive_pair,
    build_missing_pair,
    build_uncorrected_pair,
    regularity_params,
)
from .penalties import (
    McpPenalty,
    NuclearPenalty,
    ScadPenalty,
    spectral_concave,
    spectral_concave_grad,
    spectral_value,
)
from .simulate import TruthSpec, identity_cov_spec, make_low_rank_truth, simulate_dataset
from .solver import (
    Problem,
    SolverOptions,
    convergence_diagnostics,
    default_step_inverse,
    select_regularization,
    solve,
    solve_with_restarts,
)

FAMILIES = lambda lam=1.0: [  # noqa: E731
    NuclearPenalty(lam),
    ScadPenalty(lam, a=3.7),
    McpPenalty(lam, b=2.0),
]


@dataclass
class CriterionResult:
    name: str
    title: str
    passed: bool
    detail: str
    seconds: float


# ---------------------------------------------------------------------------
# P1: prox / projection closed forms vs independent oracles
# ---------------------------------------------------------------------------

def _scalar_shrink_oracle(sigma, t, h=1e-5):
    # value-only minimizers cannot localize x better than ~sqrt(eps), so
    # minimize by solving the first-order condition of the scalar problem:
    # root of the numerically differenced objective slope, boundary-checked
    def f(s):
        return 0.5 * (s - sigma) ** 2 + t * s

    def slope(s):
        return (f(s + h) - f(s - h)) / (2 * h)

    if slope(0.0) >= 0:
        return 0.0
    return brentq(slope, 0.0, sigma + t + 1.0, xtol=1e-12)


def _l1_oracle(v, radius):
    # coarse grid brackets the dual shift, bisection refines it
    if v.sum() <= radius:
        return v.copy()
    lo, hi = 0.0, float(v.max())
    for _ in range(200):
        mid = (lo + hi) / 2
        if np.maximum(v - mid, 0).sum() > radius:
            lo = mid
        else:
            hi = mid
    return np.maximum(v - (lo + hi) / 2, 0)


def run_p1():
    rng = np.random.default_rng(101)
    worst_svt = 0.0
    for _ in range(200):
        d1 = int(rng.integers(2, 21))
        d2 = int(rng.integers(2, 16))
        m = rng.standard_normal((d1, d2)) * rng.uniform(0.3, 2.0)
        t = float(rng.uniform(0.01, 1.5))
        u, s, v = thin_svd(m)
        oracle = np.array([_scalar_shrink_oracle(x, t) for x in s])
        worst_svt = max(worst_svt, float(np.abs(svt(m, t) - (u * oracle) @ v.T).max()))
    worst_l1 = 0.0
    for _ in range(200):
        v = rng.uniform(0, 3, size=int(rng.integers(1, 16)))
        radius = float(rng.uniform(0.1, 4.0))
        worst_l1 = max(
            worst_l1, float(np.abs(project_l1_ball(v, radius) - _l1_oracle(v, radius)).max())
        )
    passed = worst_svt <= 1e-8 and worst_l1 <= 1e-8
    return passed, "max dev: svt %.2e, l1 projection %.2e (tol 1e-8)" % (worst_svt, worst_l1)


# ---------------------------------------------------------------------------
# P2: penalty inequality suite + bounded-rank split
# ---------------------------------------------------------------------------

def run_p2():
    rng = np.random.default_rng(202)
    tol = 1e-8
    failures = []
    for pen in FAMILIES():
        for _ in range(1000):
            a = rng.standard_normal((6, 5)) * rng.uniform(0.2, 2.0)
            b = rng.standard_normal((6, 5)) * rng.uniform(0.2, 2.0)
            pa, pb = spectral_value(pen, a), spectral_value(pen, b)
            if spectral_value(pen, a + b) > pa + pb + tol:
                failures.append("%s subadditivity" % pen.kind)
            if spectral_value(pen, a - b) < pa - pb - tol:
                failures.append("%s reverse triangle" % pen.kind)
            inner = trace_inner(
                spectral_concave_grad(pen, a) - spectral_concave_grad(pen, b), a - b
            )
            gap = frobenius_norm(a - b) ** 2
            if inner < -pen.mu * gap - tol or inner > tol:
                failures.append("%s monotone bracket" % pen.kind)
            qa, qb = spectral_concave(pen, a), spectral_concave(pen, b)
            lin = trace_inner(spectral_concave_grad(pen, b), a - b)
            if qa < qb + lin - pen.mu / 2 * gap - tol or qa > qb + lin + tol:
                failures.append("%s curvature bracket" % pen.kind)
            if failures:
                return False, "first failure: %s" % failures[0]
    rank_ok = 0
    for _ in range(500):
        d1 = int(rng.integers(4, 11))
        d2 = int(rng.integers(4, 11))
        r = int(rng.integers(1, min(d1, d2) // 2 + 1))
        anchor = rng.standard_normal((d1, r)) @ rng.standard_normal((r, d2))
        delta = rng.standard_normal((d1, d2))
        split = complement_split(anchor, delta, r)
        sig = np.linalg.svd(split.remainder, compute_uv=False)
        if sig[min(2 * r, len(sig)):].max(initial=0.0) <= 1e-10 * max(1.0, sig[0]):
            rank_ok += 1
    passed = rank_ok == 500
    return passed, "inequalities clean on 3x1000 pairs; rank bound held %d/500" % rank_ok


# ---------------------------------------------------------------------------
# P3: gradient checks against central finite differences
# ---------------------------------------------------------------------------

def _fd_grad(fn, m, h=1e-6):
    out = np.zeros_like(m)
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            e = np.zeros_like(m)
            e[i, j] = h
            out[i, j] = (fn(m + e) - fn(m - e)) / (2 * h)
    return out


def run_p3():
    rng = np.random.default_rng(303)
    worst_pen = 0.0
    pens = [ScadPenalty(1.0, a=3.7), McpPenalty(1.0, b=2.0)]
    for k in range(200):
        pen = pens[k % 2]
        d1, d2 = 5, 4
        sigma = np.sort(rng.uniform(0.05, 3.0, size=4))[::-1]
        while np.min(np.abs(np.diff(sigma))) < 0.05:
            sigma = np.sort(rng.uniform(0.05, 3.0, size=4))[::-1]
        u, _ = np.linalg.qr(rng.standard_normal((d1, 4)))
        v, _ = np.linalg.qr(rng.standard_normal((d2, 4)))
        m = (u * sigma) @ v.T
        grad = spectral_concave_grad(pen, m)
        fd = _fd_grad(lambda x: spectral_concave(pen, x), m)
        rel = np.linalg.norm(fd - grad, "fro") / max(np.linalg.norm(grad, "fro"), 1e-8)
        worst_pen = max(worst_pen, float(rel))

    worst_loss = 0.0
    for _ in range(200):
        pair = build_additive_pair(
            rng.standard_normal((12, 3, 2)), rng.standard_normal(12), float(rng.uniform(0, 0.5))
        )
        theta = rng.standard_normal((3, 2))
        grad = pair.grad(theta)
        fd = _fd_grad(pair.loss, theta)
        rel = np.linalg.norm(fd - grad, "fro") / max(np.linalg.norm(grad, "fro"), 1e-8)
        worst_loss = max(worst_loss, float(rel))
    passed = worst_pen <= 1e-5 and worst_loss <= 1e-5
    return passed, "max rel err: concave grad %.2e, loss grad %.2e (tol 1e-5)" % (
        worst_pen,
        worst_loss,
    )


# ---------------------------------------------------------------------------
# P4: surrogate unbiasedness, 4-sigma entrywise Monte Carlo
# ---------------------------------------------------------------------------

def _mc_surrogate_moments(corruption, w_std, rho, reps, n, d, seed):
    m = d * d
    rng = np.random.default_rng(seed)
    theta = make_low_rank_truth(TruthSpec(d1=d, d2=d, mode="exact", r=2, scale=1.0), rng)
    tvec = theta.ravel()
    g_sum = np.zeros((m, m))
    g_sq = np.zeros((m, m))
    u_sum = np.zeros(m)
    u_sq = np.zeros(m)
    chunk = 250
    for start in range(0, reps, chunk):
        k = min(chunk, reps - start)
        x = rng.standard_normal((k, n, m))
        y = x @ tvec + 0.1 * rng.standard_normal((k, n))
        if corruption == "additive":
            z = x + w_std * rng.standard_normal((k, n, m))
            gam = np.einsum("rni,rnj->rij", z, z) / n - (w_std ** 2) * np.eye(m)
            ups = np.einsum("rni,rn->ri", z, y) / n
        else:
            keep = rng.uniform(size=(k, n, m)) >= rho
            z = np.where(keep, x, 0.0) / (1.0 - rho)
            gram = np.einsum("rni,rnj->rij", z, z) / n
            diag = np.einsum("rii->ri", gram)
            gam = gram.copy()
            idx = np.arange(m)
            gam[:, idx, idx] -= rho * diag
            ups = np.einsum("rni,rn->ri", z, y) / n
        g_sum += gam.sum(axis=0)
        g_sq += (gam ** 2).sum(axis=0)
        u_sum += ups.sum(axis=0)
        u_sq += (ups ** 2).sum(axis=0)
    g_mean = g_sum / reps
    g_se = np.sqrt(np.maximum(g_sq / reps - g_mean ** 2, 0.0) / reps)
    u_mean = u_sum / reps
    u_se = np.sqrt(np.maximum(u_sq / reps - u_mean ** 2, 0.0) / reps)
    g_frac = float((np.abs(g_mean - np.eye(m)) <= 4 * g_se + 1e-12).mean())
    u_frac = float((np.abs(u_mean - tvec) <= 4 * u_se + 1e-12).mean())
    return g_frac, u_frac


def run_p4():
    d, n, reps = 5, 200, 2000
    details = []
    passed = True
    for label, corruption, w_std, rho, seed in (
        ("additive w_std=0.5", "additive", 0.5, 0.0, 404),
        ("missing rho=0.1", "missing", 0.0, 0.1, 405),
        ("missing rho=0.3", "missing", 0.0, 0.3, 406),
    ):
        g_frac, u_frac = _mc_surrogate_moments(corruption, w_std, rho, reps, n, d, seed)
        details.append("%s: gamma %.4f, upsilon %.4f within 4-sigma" % (label, g_frac, u_frac))
        passed = passed and g_frac >= 0.99 and u_frac >= 0.99
    return passed, "; ".join(details)


# ---------------------------------------------------------------------------
# P5: corrected gamma indefinite in the underdetermined regime
# ---------------------------------------------------------------------------

def run_p5():
    spec = identity_cov_spec(x_var=1.0, w_std=0.5, eps_std=0.1)
    truth = TruthSpec(d1=10, d2=10, mode="exact", r=2, scale=1.0)
    negative = 0
    worst = -np.inf
    for seed in range(20):
        data = simulate_dataset(truth, spec, 50, "additive", seed=505 + seed)
        pair = build_additive_pair(data.z, data.y, spec.sigma_w)
        lam_min = pair.min_eigenvalue()
        worst = max(worst, lam_min)
        if lam_min < 0:
            negative += 1
    return negative == 20, "min eigenvalue negative in %d/20 instances (largest %.3f)" % (
        negative,
        worst,
    )


# ---------------------------------------------------------------------------
# P6: geometric objective decay, then a plateau at the statistical floor
# ---------------------------------------------------------------------------

def run_p6():
    d, r, n = 30, 3, 2000
    spec = identity_cov_spec(x_var=1.0, w_std=0.2, eps_std=0.1)
    truth = TruthSpec(d1=d, d2=d, mode="exact", r=r, scale=3.0)
    data = simulate_dataset(truth, spec, n, "additive", seed=606)
    pair = build_additive_pair(data.z, data.y, spec.sigma_w)
    # gradient-term lambda rule: the slack term carries an unspecified
    # universal constant, so the scaling-relevant gradient part sets lambda
    params = regularity_params(
        spec, d, d, n, "additive", c0=0.0, theta_star_fnorm=frobenius_norm(data.theta_star)
    )
    lam, omega = select_regularization(
        pair, params, policy="oracle", theta_star=data.theta_star, margin=1.2
    )
    problem = Problem(pair, ScadPenalty(lam, a=3.7), omega)
    v = default_step_inverse(problem, params=params)
    opts = SolverOptions(v=v, max_iters=4000, tol_residual=1e-9)
    best, results = solve_with_restarts(problem, restarts=6, opts=opts, seed=7)
    psi_best = min(tr.objective[-1] for _, tr in results)

    gaps = np.array(results[0][1].objective) - psi_best  # zero-start run
    gaps = np.maximum(gaps, 0.0)
    floor = max(gaps[-1], gaps[0] * 1e-14, 1e-15)
    keep = gaps > max(10 * floor, 1e-12)
    t = np.nonzero(keep)[0]
    if t.size < 5:
        return False, "pre-plateau segment too short (%d points)" % t.size
    logs = np.log(gaps[t])
    slope, intercept = np.polyfit(t, logs, 1)
    fitted = slope * t + intercept
    ss_res = float(((logs - fitted) ** 2).sum())
    ss_tot = float(((logs - logs.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot
    diag = convergence_diagnostics(
        problem, params, float(r), 0.0, best, data.theta_star, v,
        theta0=np.zeros((d, d)),
    )
    plateau_gap = float(gaps[-1])
    bound = 10.0 * lam * diag.eps_stat_bar
    passed = r2 >= 0.95 and plateau_gap <= bound
    return passed, "R^2=%.4f over %d points (>=0.95); plateau gap %.2e <= %.2e" % (
        r2,
        t.size,
        plateau_gap,
        bound,
    )


# ---------------------------------------------------------------------------
# P7/P8/P9 shared benchmark machinery
# ---------------------------------------------------------------------------

def _ar1_covariance(m, phi=0.6):
    idx = np.arange(m)
    return Covariance.dense(phi ** np.abs(idx[:, None] - idx[None, :]))


def _bench_cov(corruption, m, w_std=0.5):
    # identity covariates for additive noise; correlated covariates for the
    # missing case, where uncorrected estimation is consistent under an
    # identity covariance and correction only matters with structure
    if corruption == "additive":
        return identity_cov_spec(x_var=1.0, w_std=w_std, eps_std=0.1, dim=m)
    return CovarianceSpec(
        sigma_x=_ar1_covariance(m),
        sigma_w=Covariance.scaled_identity(0.0),
        rho=0.3,
        sigma_eps=0.1,
    )


def _bench_fit(corruption, n, seed, method="corrected", restarts=1, w_std=0.5, d=20):
    r = 2
    m = d * d
    spec = _bench_cov(corruption, m, w_std=w_std)
    truth = TruthSpec(d1=d, d2=d, mode="exact", r=r, scale=1.5)
    data = simulate_dataset(truth, spec, n, corruption, seed=seed)
    if method == "naive" or corruption == "none":
        pair = build_uncorrected_pair(data.z, data.y)
    elif corruption == "additive":
        pair = build_additive_pair(data.z, data.y, spec.sigma_w)
    else:
        pair = build_missing_pair(data.z, data.mask, data.y, spec.rho)
    params = regularity_params(
        spec, d, d, n, corruption, c0=0.0, theta_star_fnorm=frobenius_norm(data.theta_star)
    )
    lam, omega = select_regularization(
        pair, params, policy="oracle", theta_star=data.theta_star, margin=1.2
    )
    problem = Problem(pair, ScadPenalty(lam, a=3.7), omega)
    v = default_step_inverse(problem, params=params)
    opts = SolverOptions(v=v, max_iters=3000, tol_residual=1e-6)
    if restarts > 1:
        theta, results = solve_with_restarts(problem, restarts=restarts, opts=opts, seed=seed)
        thetas = [th for th, _ in results]
        return data, params, lam, thetas
    theta, _ = solve(problem, opts, params=params)
    return data, params, lam, [theta]


def run_p7():
    # additive noise at w_std=0.3 keeps n=1000 above the regime where the
    # corrected quadratic turns indefinite and errors decay faster than
    # the lambda ~ n**-0.5 law the band encodes
    reps = 20
    details = []
    passed = True
    for corruption in ("additive", "missing"):
        medians = {}
        for n in (1000, 4000):
            errs = []
            for rep in range(reps):
                data, _, _, thetas = _bench_fit(corruption, n, seed=707_000 + rep, w_std=0.3)
                errs.append(frobenius_norm(thetas[0] - data.theta_star))
            medians[n] = float(np.median(errs))
        ratio = medians[4000] / medians[1000]
        details.append(
            "%s: median %.4f @1000 vs %.4f @4000, ratio %.3f" % (corruption, medians[1000], medians[4000], ratio)
        )
        passed = passed and 0.35 <= ratio <= 0.7
    return passed, "; ".join(details) + " (band [0.35, 0.7])"


def run_p8():
    # the missing arm runs at a sample size where the corrected estimator's
    # consistency separates from the naive baseline's bias floor
    reps = 20
    details = []
    passed = True
    for corruption, n, d in (("additive", 1000, 20), ("missing", 3000, 15)):
        err = {"corrected": [], "naive": []}
        for rep in range(reps):
            for method in ("corrected", "naive"):
                data, _, _, thetas = _bench_fit(
                    corruption, n, seed=808_000 + rep, method=method, d=d
                )
                err[method].append(frobenius_norm(thetas[0] - data.theta_star))
        med_c = float(np.median(err["corrected"]))
        med_n = float(np.median(err["naive"]))
        details.append("%s: corrected %.4f vs naive %.4f" % (corruption, med_c, med_n))
        passed = passed and med_c <= 0.8 * med_n
    return passed, "; ".join(details) + " (need corrected <= 0.8 x naive)"


def run_p9():
    data, params, lam, thetas = _bench_fit("additive", 1000, seed=909, restarts=10, w_std=0.3)
    mu = ScadPenalty(lam, a=3.7).mu
    gap = params.alpha1 - mu
    if gap <= 0:
        return False, "curvature gap alpha1 - mu nonpositive"
    scale = 2 * (lam / gap) ** 2  # r = 2
    errors = [frobenius_norm(th - data.theta_star) for th in thetas]
    c_fit = max(e ** 2 for e in errors) / scale
    max_err = max(errors)
    worst_pair = max(
        frobenius_norm(a - b) for i, a in enumerate(thetas) for b in thetas[i + 1:]
    )
    passed = c_fit <= 20.0 and worst_pair <= 2.0 * max_err
    return passed, "fitted C=%.3f (<=20) over 10 restarts; max pairwise %.2e <= 2x max error %.2e" % (
        c_fit,
        worst_pair,
        2 * max_err,
    )


# ---------------------------------------------------------------------------
# P10: curvature audit + gradient quarter-sample scaling via the CLI
# ---------------------------------------------------------------------------

def run_p10(out_dir=None):
    import json
    import os

    from .cli import main as cli_main

    out = out_dir or tempfile.mkdtemp(prefix="eivreg-accept-")
    cfg_path = os.path.join(out, "audit.ini")
    with open(cfg_path, "w") as fh:
        fh.write(
            "[dims]\nd1 = 10\nd2 = 10\n"
            "[truth]\nmode = exact\nr = 2\nscale = 1.0\n"
            "[cov]\nw_std = 0.0\neps_std = 0.1\n"
            "[corruption]\nkind = none\n"
            "[experiment]\nn_list = 2000\nmaster_seed = 10\n"
            "[selection]\nc0 = 1.0\n"
            "[audit]\ntrials = 1000\ngrad_reps = 50\n"
        )
    code = cli_main(["audit", "--config", cfg_path, "--out", out])
    if code != 0:
        return False, "audit command exited %d" % code
    with open(os.path.join(out, "audit.json")) as fh:
        report = json.load(fh)
    violations = report["curvature_violations"]
    ratio = report["grad_quarter_sample_ratio"]
    passed = all(v == 0 for v in violations.values()) and 0.35 <= ratio <= 0.7
    return passed, "violations %s over 1000 directions; quarter-sample ratio %.3f in [0.35, 0.7]" % (
        violations,
        ratio,
    )


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------

CRITERIA = [
    ("P1", "prox and projection match independent oracles", run_p1, 10.0),
    ("P2", "penalty inequality suite and bounded-rank split", run_p2, 30.0),
    ("P3", "analytic gradients match finite differences", run_p3, 30.0),
    ("P4", "surrogate pairs are unbiased (4-sigma Monte Carlo)", run_p4, 120.0),
    ("P5", "corrected gamma indefinite when n < d1*d2", run_p5, None),
    ("P6", "geometric decay to the statistical plateau", run_p6, 60.0),
    ("P7", "error halves when the sample quadruples", run_p7, 600.0),
    ("P8", "corrected estimation beats the naive baseline", run_p8, 600.0),
    ("P9", "restart solutions share the recovery-bound shape", run_p9, 300.0),
    ("P10", "curvature audit and gradient scaling via the CLI", run_p10, None),
]


def run_criterion(name, out_dir=None):
    for crit_name, title, fn, limit in CRITERIA:
        if crit_name != name:
            continue
        start = time.perf_counter()
        try:
            if crit_name == "P10":
                passed, detail = fn(out_dir=out_dir)
            else:
                passed, detail = fn()
        except Exception:
            passed, detail = False, "raised: %s" % traceback.format_exc(limit=3)
        seconds = time.perf_counter() - start
        if passed and limit is not None and seconds > limit:
            passed = False
            detail += " [exceeded %.0fs runtime budget: %.1fs]" % (limit, seconds)
        return CriterionResult(crit_name, title, passed, detail, seconds)
    raise ValueError("unknown criterion %r" % name)


def run_acceptance(only=None, out_dir=None):
    results = []
    for name, title, _, _ in CRITERIA:
        if only and name not in only:
            continue
        result = run_criterion(name, out_dir=out_dir)
        print(
            "%-4s %s (%.1fs)  %s: %s"
            % (result.name, "PASS" if result.passed else "FAIL", result.seconds, result.title, result.detail)
        )
        results.append(result)
    return results
