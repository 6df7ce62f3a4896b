"""Declarative experiment configuration.

A single INI-style file of ``key = value`` sections plus command-line
overrides ``--set section.key=value``; precedence is CLI > file > defaults.
Every key is validated at parse time and unknown sections or keys are
rejected outright.
"""

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError
from .penalties import PENALTY_KINDS
from .simulate import TruthSpec, identity_cov_spec


def _parse_bool(s):
    if s.lower() in ("true", "1", "yes"):
        return True
    if s.lower() in ("false", "0", "no"):
        return False
    raise ValueError("not a boolean: %r" % s)


def _parse_float_list(s):
    return [float(tok) for tok in s.split(",") if tok.strip()]


def _parse_int_list(s):
    return [int(tok) for tok in s.split(",") if tok.strip()]


def _parse_str_list(s):
    return [tok.strip() for tok in s.split(",") if tok.strip()]


def _parse_opt_float(s):
    return None if s.strip().lower() in ("auto", "none", "") else float(s)

# section -> key -> (parser, default-as-string)
SCHEMA = {
    "dims": {"d1": (int, "10"), "d2": (int, "10")},
    "truth": {
        "mode": (str, "exact"),
        "r": (int, "2"),
        "q": (float, "0.5"),
        "radius": (float, "1.0"),
        "decay": (float, "0.5"),
        "scale": (float, "1.0"),
    },
    "cov": {
        "x_var": (float, "1.0"),
        "w_std": (float, "0.0"),
        "rho": (float, "0.0"),
        "eps_std": (float, "0.1"),
    },
    "corruption": {"kind": (str, "additive")},
    "penalty": {
        "kinds": (_parse_str_list, "scad"),
        "a": (float, "3.7"),
        "b": (float, "2.0"),
    },
    "experiment": {
        "n_list": (_parse_int_list, "1000"),
        "replications": (int, "1"),
        "master_seed": (int, "1"),
        "naive_baseline": (_parse_bool, "true"),
    },
    "selection": {
        "policy": (str, "oracle"),
        "margin": (float, "1.2"),
        "c0": (float, "1.0"),
        "lambda_grid": (_parse_float_list, ""),
        "omega": (_parse_opt_float, "auto"),
    },
    "solver": {
        "v": (_parse_opt_float, "auto"),
        "max_iters": (int, "5000"),
        "tol": (float, "1e-7"),
    },
    "audit": {
        "trials": (int, "1000"),
        "grad_reps": (int, "50"),
    },
    "output": {"dir": (str, "results")},
}


@dataclass
class ExperimentConfig:
    """Typed, validated view of one experiment description."""

    d1: int
    d2: int
    truth: TruthSpec
    x_var: float
    w_std: float
    rho: float
    eps_std: float
    corruption: str
    penalty_kinds: list
    penalty_a: float
    penalty_b: float
    n_list: list
    replications: int
    master_seed: int
    naive_baseline: bool
    policy: str
    margin: float
    c0: float
    lambda_grid: list
    omega: Optional[float]
    solver_v: Optional[float]
    max_iters: int
    tol: float
    audit_trials: int
    audit_grad_reps: int
    out_dir: str
    raw: dict = field(default_factory=dict)

    def cov_spec(self):
        return identity_cov_spec(
            x_var=self.x_var, w_std=self.w_std, rho=self.rho, eps_std=self.eps_std
        )

    def hash(self):
        canon = json.dumps(self.raw, sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _resolved_strings(path=None, overrides=()):
    values = {sec: {k: default for k, (_, default) in keys.items()} for sec, keys in SCHEMA.items()}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError:
            raise
        except configparser.Error as exc:
            raise ConfigError("cannot parse %s: %s" % (path, exc))
        for sec in parser.sections():
            if sec not in SCHEMA:
                raise ConfigError("unknown config section [%s]" % sec)
            for key, val in parser.items(sec):
                if key not in SCHEMA[sec]:
                    raise ConfigError("unknown key %s.%s" % (sec, key))
                values[sec][key] = val
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError("--set expects section.key=value, got %r" % item)
        target, val = item.split("=", 1)
        sec, key = target.split(".", 1)
        if sec not in SCHEMA or key not in SCHEMA[sec]:
            raise ConfigError("unknown key %s.%s" % (sec, key))
        values[sec][key] = val
    return values


def load_config(path=None, overrides=()):
    """Parse + validate a config file and overrides into an ExperimentConfig."""
    strings = _resolved_strings(path, overrides)
    parsed = {}
    for sec, keys in SCHEMA.items():
        parsed[sec] = {}
        for key, (fn, _) in keys.items():
            try:
                parsed[sec][key] = fn(strings[sec][key])
            except (TypeError, ValueError) as exc:
                raise ConfigError("bad value for %s.%s: %s" % (sec, key, exc))

    corruption = parsed["corruption"]["kind"]
    if corruption not in ("additive", "missing", "none"):
        raise ConfigError("corruption.kind must be additive, missing or none")
    for kind in parsed["penalty"]["kinds"]:
        if kind not in PENALTY_KINDS:
            raise ConfigError("penalty.kinds entry %r not in %s" % (kind, (PENALTY_KINDS,)))
    if not parsed["penalty"]["kinds"]:
        raise ConfigError("penalty.kinds must be nonempty")
    if parsed["selection"]["policy"] not in ("oracle", "grid"):
        raise ConfigError("selection.policy must be oracle or grid")
    if not parsed["experiment"]["n_list"]:
        raise ConfigError("experiment.n_list must be nonempty")
    if any(n < 1 for n in parsed["experiment"]["n_list"]):
        raise ConfigError("experiment.n_list entries must be positive")
    if parsed["experiment"]["replications"] < 1:
        raise ConfigError("experiment.replications must be positive")
    if not (0.0 <= parsed["cov"]["rho"] < 1.0):
        raise ConfigError("cov.rho must lie in [0, 1)")
    if parsed["cov"]["x_var"] <= 0:
        raise ConfigError("cov.x_var must be positive")

    try:
        truth = TruthSpec(
            d1=parsed["dims"]["d1"],
            d2=parsed["dims"]["d2"],
            mode=parsed["truth"]["mode"],
            r=parsed["truth"]["r"],
            q=parsed["truth"]["q"],
            radius_q=parsed["truth"]["radius"],
            decay=parsed["truth"]["decay"],
            scale=parsed["truth"]["scale"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc))

    return ExperimentConfig(
        d1=parsed["dims"]["d1"],
        d2=parsed["dims"]["d2"],
        truth=truth,
        x_var=parsed["cov"]["x_var"],
        w_std=parsed["cov"]["w_std"],
        rho=parsed["cov"]["rho"],
        eps_std=parsed["cov"]["eps_std"],
        corruption=corruption,
        penalty_kinds=parsed["penalty"]["kinds"],
        penalty_a=parsed["penalty"]["a"],
        penalty_b=parsed["penalty"]["b"],
        n_list=parsed["experiment"]["n_list"],
        replications=parsed["experiment"]["replications"],
        master_seed=parsed["experiment"]["master_seed"],
        naive_baseline=parsed["experiment"]["naive_baseline"],
        policy=parsed["selection"]["policy"],
        margin=parsed["selection"]["margin"],
        c0=parsed["selection"]["c0"],
        lambda_grid=parsed["selection"]["lambda_grid"],
        omega=parsed["selection"]["omega"],
        solver_v=parsed["solver"]["v"],
        max_iters=parsed["solver"]["max_iters"],
        tol=parsed["solver"]["tol"],
        audit_trials=parsed["audit"]["trials"],
        audit_grad_reps=parsed["audit"]["grad_reps"],
        out_dir=parsed["output"]["dir"],
        raw={s: dict(k) for s, k in strings.items()},
    )
