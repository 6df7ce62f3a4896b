"""Benchmark command line.

Subcommands: ``simulate`` (write a dataset), ``fit`` (estimate from a
dataset or a config), ``bench`` (N x replication x method x penalty
sweep), ``audit`` (curvature and gradient-scaling checks) and ``accept``
(the acceptance suite). Exit codes: 0 success, 2 config error, 3 numerical
error, 4 I/O error. Set ``EIV_LOG=debug|info|quiet`` to control logging.
"""

import argparse
import concurrent.futures
import json
import logging
import os
import sys
import time

import numpy as np

from .config import load_config
from .errors import ConfigError, NumericalDivergence
from .io import (
    read_dataset,
    write_dataset,
    write_matrix_csv,
    write_record_json,
    write_results_csv,
    write_trace_csv,
)
from .linalg import frobenius_norm, nuclear_norm, numerical_rank
from .loss import (
    audit_curvature,
    build_additive_pair,
    build_missing_pair,
    build_uncorrected_pair,
    regularity_params,
)
from .penalties import make_penalty
from .simulate import simulate_dataset
from .solver import (
    Problem,
    SolverOptions,
    convergence_diagnostics,
    default_step_inverse,
    select_regularization,
    solve,
    stationary_error_bounds,
)

log = logging.getLogger("eivreg")


def _setup_logging():
    level = {"debug": logging.DEBUG, "info": logging.INFO, "quiet": logging.ERROR}.get(
        os.environ.get("EIV_LOG", "info").lower(), logging.INFO
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _dataset_seed(master_seed, n, rep):
    return int(np.random.SeedSequence([master_seed, n, rep]).generate_state(1)[0])


def _build_pair(z, mask, y, corruption, cov, method):
    if method == "naive" or corruption == "none":
        return build_uncorrected_pair(z, y)
    if corruption == "additive":
        return build_additive_pair(z, y, cov.sigma_w)
    if corruption == "missing":
        return build_missing_pair(z, mask, y, cov.rho)
    raise ConfigError("unknown corruption %r" % corruption)


def _select(cfg, pair, params, theta_star, pen_kind, val_pair=None):
    if cfg.policy == "oracle":
        if theta_star is None:
            raise ConfigError("oracle selection needs theta_star (synthetic data only)")
        return select_regularization(
            pair, params, policy="oracle", theta_star=theta_star, margin=cfg.margin
        )
    return select_regularization(
        pair,
        params,
        policy="grid",
        lambdas=cfg.lambda_grid,
        omega=cfg.omega,
        val_pair=val_pair,
        penalty_factory=lambda lam: make_penalty(lam=lam, kind=pen_kind, a=cfg.penalty_a, b=cfg.penalty_b),
        opts=SolverOptions(v=cfg.solver_v, max_iters=cfg.max_iters, tol_residual=cfg.tol),
    )


def _split_for_grid(z, mask, y, corruption, cov, method):
    n = len(y)
    cut = max(1, int(0.8 * n))
    train = _build_pair(
        z[:cut], None if mask is None else mask[:cut], y[:cut], corruption, cov, method
    )
    val = _build_pair(
        z[cut:], None if mask is None else mask[cut:], y[cut:], corruption, cov, method
    )
    return train, val


def fit_once(
    cfg, z, mask, y, theta_star, corruption, method, pen_kind, record_prefix=None, record_rel=None
):
    """Fit one estimator; returns (row dict, record dict, trace).

    ``record_prefix`` is where the estimate/trace/record files land;
    ``record_rel`` (relative prefix) is what gets written into the result
    row so sweep CSVs stay byte-identical across output directories.
    """
    cov = cfg.cov_spec()
    n = len(y)
    pair = _build_pair(z, mask, y, corruption, cov, method)
    fnorm = 1.0 if theta_star is None else frobenius_norm(theta_star)
    params = regularity_params(
        cov, cfg.d1, cfg.d2, n, corruption, c0=cfg.c0, theta_star_fnorm=fnorm
    )
    if cfg.policy == "grid":
        train, val = _split_for_grid(z, mask, y, corruption, cov, method)
        lam, omega = _select(cfg, train, params, theta_star, pen_kind, val_pair=val)
    else:
        lam, omega = _select(cfg, pair, params, theta_star, pen_kind)
    pen = make_penalty(pen_kind, lam, a=cfg.penalty_a, b=cfg.penalty_b)
    problem = Problem(pair, pen, omega)
    v = cfg.solver_v if cfg.solver_v is not None else default_step_inverse(problem, params=params)
    opts = SolverOptions(v=v, max_iters=cfg.max_iters, tol_residual=cfg.tol)
    t0 = time.perf_counter()
    theta, trace = solve(problem, opts, params=params)
    wall = time.perf_counter() - t0

    row = {
        "method": method,
        "penalty": pen_kind,
        "corruption": corruption,
        "n": n,
        "lam": lam,
        "omega": omega,
        "iterations": len(trace.residual),
        "residual": trace.residual[-1] if trace.residual else 0.0,
        "objective_final": trace.objective[-1],
        "error": "",
    }
    record = dict(row)
    record["wall_time"] = wall
    kappa = float("nan")
    if theta_star is not None:
        q, radius = cfg.truth.effective_rank_radius()
        row["frob_error"] = frobenius_norm(theta - theta_star)
        row["nuclear_error"] = nuclear_norm(theta - theta_star)
        row["rank_estimate"] = numerical_rank(theta, tol=1e-8)
        diag = convergence_diagnostics(
            problem, params, radius, q, theta, theta_star, v, theta0=np.zeros_like(theta)
        )
        row["kappa"] = diag.kappa
        row["xi"] = diag.xi
        row["eps_stat_bar"] = diag.eps_stat_bar
        kappa = diag.kappa if diag.applicable else float("nan")
        if params.alpha1 > pen.mu:
            fb, nb = stationary_error_bounds(params, lam, pen.mu, radius, q)
            row["frob_bound_sq"] = fb
            row["nuclear_bound"] = nb
        record.update(
            {k: row[k] for k in ("frob_error", "nuclear_error", "rank_estimate", "kappa", "xi", "eps_stat_bar")}
        )
    if record_prefix:
        rel = record_rel if record_rel is not None else record_prefix
        write_matrix_csv(record_prefix + "_theta.csv", theta)
        write_trace_csv(record_prefix + "_trace.csv", trace.objective, trace.residual, kappa)
        record["trace_path"] = rel + "_trace.csv"
        record["estimate_path"] = rel + "_theta.csv"
        write_record_json(record_prefix + ".json", record)
        row["record_path"] = rel + ".json"
    return row, record, theta


def cmd_simulate(args):
    cfg = load_config(args.config, args.set or [])
    out = args.out or cfg.out_dir
    n = cfg.n_list[0]
    seed = args.seed if args.seed is not None else cfg.master_seed
    dataset = simulate_dataset(cfg.truth, cfg.cov_spec(), n, cfg.corruption, seed)
    os.makedirs(out, exist_ok=True)
    manifest = write_dataset(out, dataset, manifest_extra={"config_hash": cfg.hash()})
    log.info("wrote %d samples of shape %dx%d to %s", manifest["n"], cfg.d1, cfg.d2, out)
    print(json.dumps({"out": out, "n": manifest["n"], "d1": cfg.d1, "d2": cfg.d2}))
    return 0


def cmd_fit(args):
    cfg = load_config(args.config, args.set or [])
    out = args.out or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    if args.data:
        z, mask, y, theta_star, manifest = read_dataset(args.data)
        corruption = manifest["corruption"]
        overrides = list(args.set or [])
        overrides += [
            "dims.d1=%d" % manifest["d1"],
            "dims.d2=%d" % manifest["d2"],
            "corruption.kind=%s" % corruption,
            "cov.rho=%s" % manifest.get("rho", 0.0),
            "cov.eps_std=%s" % manifest.get("sigma_eps", 0.0),
        ]
        if "w_var" in manifest:
            overrides.append("cov.w_std=%s" % float(manifest["w_var"]) ** 0.5)
        if "x_var" in manifest:
            overrides.append("cov.x_var=%s" % manifest["x_var"])
        cfg = load_config(args.config, overrides)
    else:
        seed = args.seed if args.seed is not None else cfg.master_seed
        dataset = simulate_dataset(
            cfg.truth, cfg.cov_spec(), cfg.n_list[0], cfg.corruption, seed
        )
        z, mask, y, theta_star = dataset.z, dataset.mask, dataset.y, dataset.theta_star
        corruption = cfg.corruption
    pen_kind = cfg.penalty_kinds[0]
    prefix = os.path.join(out, "fit_%s_%s" % (pen_kind, "corrected"))
    row, record, theta = fit_once(
        cfg, z, mask, y, theta_star, corruption, "corrected", pen_kind, record_prefix=prefix
    )
    log.info("fit done: %s iterations=%s", pen_kind, row["iterations"])
    print(json.dumps({k: record[k] for k in ("penalty", "n", "iterations", "lam", "omega")}))
    return 0


def _bench_point(cfg, n, rep):
    """All fits that share one simulated dataset; returns result rows."""
    seed = _dataset_seed(cfg.master_seed, n, rep)
    dataset = simulate_dataset(cfg.truth, cfg.cov_spec(), n, cfg.corruption, seed)
    methods = ["corrected"]
    if cfg.naive_baseline:
        methods.append("naive")
    rows = []
    for pen_kind in cfg.penalty_kinds:
        for method in methods:
            base = {
                "config_hash": cfg.hash(),
                "n": n,
                "replication": rep,
                "method": method,
                "penalty": pen_kind,
                "corruption": cfg.corruption,
            }
            rel = os.path.join("records", "fit_n%d_rep%d_%s_%s" % (n, rep, method, pen_kind))
            prefix = os.path.join(cfg.out_dir, rel)
            try:
                row, _, _ = fit_once(
                    cfg,
                    dataset.z,
                    dataset.mask,
                    dataset.y,
                    dataset.theta_star,
                    cfg.corruption,
                    method,
                    pen_kind,
                    record_prefix=prefix,
                    record_rel=rel,
                )
                base.update(row)
            except (NumericalDivergence, FloatingPointError, np.linalg.LinAlgError) as exc:
                base["error"] = "numerical: %s" % exc
            except ConfigError:
                raise
            except Exception as exc:  # crash isolation: record, keep sweeping
                base["error"] = "%s: %s" % (type(exc).__name__, exc)
            rows.append(base)
    return rows


def cmd_bench(args):
    cfg = load_config(args.config, args.set or [])
    if args.out:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.master_seed = args.seed
    os.makedirs(os.path.join(cfg.out_dir, "records"), exist_ok=True)
    points = [(n, rep) for n in cfg.n_list for rep in range(cfg.replications)]
    rows = []
    if args.jobs and args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_bench_point, cfg, n, rep) for n, rep in points]
            for fut in futures:
                rows.extend(fut.result())
    else:
        for n, rep in points:
            rows.extend(_bench_point(cfg, n, rep))
    out_csv = os.path.join(cfg.out_dir, "results.csv")
    write_results_csv(out_csv, rows)
    failures = sum(1 for r in rows if r.get("error"))
    log.info("bench wrote %d rows (%d failed) to %s", len(rows), failures, out_csv)
    print(out_csv)
    return 0


def cmd_audit(args):
    cfg = load_config(args.config, args.set or [])
    out = args.out or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    cov = cfg.cov_spec()
    n = cfg.n_list[0]
    report = {"n": n, "corruption": cfg.corruption, "c0": cfg.c0}

    seed = _dataset_seed(cfg.master_seed, n, 0)
    dataset = simulate_dataset(cfg.truth, cov, n, cfg.corruption, seed)
    pair = _build_pair(dataset.z, dataset.mask, dataset.y, cfg.corruption, cov, "corrected")
    params = regularity_params(
        cov, cfg.d1, cfg.d2, n, cfg.corruption, c0=cfg.c0,
        theta_star_fnorm=frobenius_norm(dataset.theta_star),
    )
    audit = audit_curvature(pair, params, trials=cfg.audit_trials, seed=cfg.master_seed)
    report["curvature_violations"] = audit.violations
    report["curvature_fractions"] = audit.fractions

    ratios = []
    norms_small, norms_big = [], []
    for rep in range(cfg.audit_grad_reps):
        small = simulate_dataset(
            cfg.truth, cov, n, cfg.corruption, _dataset_seed(cfg.master_seed, n, 1000 + rep)
        )
        big = simulate_dataset(
            cfg.truth, cov, 4 * n, cfg.corruption,
            _dataset_seed(cfg.master_seed, 4 * n, 1000 + rep),
        )
        p_small = _build_pair(small.z, small.mask, small.y, cfg.corruption, cov, "corrected")
        p_big = _build_pair(big.z, big.mask, big.y, cfg.corruption, cov, "corrected")
        norms_small.append(p_small.gradient_norms_at(small.theta_star)[0])
        norms_big.append(p_big.gradient_norms_at(big.theta_star)[0])
    med_small = float(np.median(norms_small))
    med_big = float(np.median(norms_big))
    report["grad_opnorm_median_n"] = med_small
    report["grad_opnorm_median_4n"] = med_big
    report["grad_quarter_sample_ratio"] = med_big / med_small if med_small else float("nan")
    report["phi"] = params.phi

    path = os.path.join(out, "audit.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_accept(args):
    from .acceptance import run_acceptance

    only = args.only.split(",") if args.only else None
    results = run_acceptance(only=only, out_dir=args.out)
    return 0 if all(r.passed for r in results) else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="eivreg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("simulate", cmd_simulate),
        ("fit", cmd_fit),
        ("bench", cmd_bench),
        ("audit", cmd_audit),
        ("accept", cmd_accept),
    ):
        p = sub.add_parser(name)
        p.set_defaults(fn=fn)
        p.add_argument("--config", default=None, help="experiment config file")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        if name == "fit":
            p.add_argument("--data", default=None, help="dataset directory from `simulate`")
        if name == "accept":
            p.add_argument("--only", default=None, help="comma-separated criteria, e.g. P1,P4")
    return parser


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except NumericalDivergence as exc:
        log.error("numerical error: %s", exc)
        return 3
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return 4


if __name__ == "__main__":
    sys.exit(main())
