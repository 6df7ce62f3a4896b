"""File formats owned by the CLI: matrix CSVs, datasets, result tables.

Matrix CSV: a header line ``# rows=<d1> cols=<d2>`` followed by d1 lines of
d2 comma-separated decimals written with shortest round-trip precision, so
read(write(m)) == m bit for bit. A dataset directory holds one file per
sample under ``samples/``, the response vector ``y.csv`` (n x 1), a
``mask/`` directory for missing data (0/1 entries, 1 = missing) and a
``manifest.json`` describing the generating model.
"""

import csv
import json
import os

import numpy as np

RESULT_COLUMNS = [
    "config_hash",
    "n",
    "replication",
    "method",
    "penalty",
    "corruption",
    "frob_error",
    "nuclear_error",
    "rank_estimate",
    "iterations",
    "residual",
    "lam",
    "omega",
    "kappa",
    "xi",
    "eps_stat_bar",
    "frob_bound_sq",
    "nuclear_bound",
    "objective_final",
    "record_path",
    "error",
]

TRACE_COLUMNS = ["iteration", "objective", "residual", "kappa"]


def _fmt(x):
    """Shortest decimal that round-trips the float."""
    return repr(float(x))


def write_matrix_csv(path, m):
    m = np.asarray(m, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    with open(path, "w", newline="") as fh:
        fh.write("# rows=%d cols=%d\n" % m.shape)
        for row in m:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_matrix_csv(path):
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# rows="):
            raise ValueError("%s: missing '# rows=.. cols=..' header" % path)
        try:
            fields = dict(part.split("=") for part in header[2:].split())
            rows, cols = int(fields["rows"]), int(fields["cols"])
        except (ValueError, KeyError):
            raise ValueError("%s: malformed matrix header %r" % (path, header))
        data = [
            [float(tok) for tok in line.strip().split(",")] for line in fh if line.strip()
        ]
    m = np.asarray(data, dtype=float)
    if m.shape != (rows, cols):
        raise ValueError("%s: expected %dx%d, parsed %s" % (path, rows, cols, m.shape))
    return m


def write_dataset(dirpath, dataset, manifest_extra=None):
    """Persist a simulated dataset; returns the manifest dict."""
    os.makedirs(os.path.join(dirpath, "samples"), exist_ok=True)
    n, d1, d2 = dataset.z.shape
    sample_paths = []
    for i in range(n):
        rel = os.path.join("samples", "sample_%05d.csv" % i)
        write_matrix_csv(os.path.join(dirpath, rel), dataset.z[i])
        sample_paths.append(rel)
    write_matrix_csv(os.path.join(dirpath, "y.csv"), dataset.y)
    mask_dir = None
    if dataset.mask is not None:
        mask_dir = "mask"
        os.makedirs(os.path.join(dirpath, mask_dir), exist_ok=True)
        for i in range(n):
            write_matrix_csv(
                os.path.join(dirpath, mask_dir, "sample_%05d.csv" % i),
                dataset.mask[i].astype(float),
            )
    write_matrix_csv(os.path.join(dirpath, "theta_star.csv"), dataset.theta_star)
    manifest = {
        "n": int(n),
        "d1": int(d1),
        "d2": int(d2),
        "corruption": dataset.corruption,
        "rho": dataset.cov.rho,
        "sigma_eps": dataset.cov.sigma_eps,
        "seed": dataset.seed,
        "samples": sample_paths,
        "y": "y.csv",
        "mask_dir": mask_dir,
        "theta_star": "theta_star.csv",
    }
    if dataset.cov.sigma_w.kind == "scaled_identity":
        manifest["w_var"] = dataset.cov.sigma_w.data
    if dataset.cov.sigma_x.kind == "scaled_identity":
        manifest["x_var"] = dataset.cov.sigma_x.data
    if manifest_extra:
        manifest.update(manifest_extra)
    with open(os.path.join(dirpath, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def read_dataset(dirpath):
    """Load (z, mask, y, theta_star, manifest) from a dataset directory."""
    with open(os.path.join(dirpath, "manifest.json")) as fh:
        manifest = json.load(fh)
    z = np.stack(
        [read_matrix_csv(os.path.join(dirpath, rel)) for rel in manifest["samples"]]
    )
    y = read_matrix_csv(os.path.join(dirpath, manifest["y"])).ravel()
    mask = None
    if manifest.get("mask_dir"):
        mask = np.stack(
            [
                read_matrix_csv(
                    os.path.join(dirpath, manifest["mask_dir"], os.path.basename(rel))
                ).astype(bool)
                for rel in manifest["samples"]
            ]
        )
    theta_star = None
    if manifest.get("theta_star"):
        p = os.path.join(dirpath, manifest["theta_star"])
        if os.path.exists(p):
            theta_star = read_matrix_csv(p)
    return z, mask, y, theta_star, manifest


def write_results_csv(path, rows):
    """Long-format sweep table; one row per fit, deterministic ordering."""
    rows = sorted(
        rows,
        key=lambda r: (r.get("n", 0), r.get("replication", 0), str(r.get("method")), str(r.get("penalty"))),
    )
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            out = {}
            for col in RESULT_COLUMNS:
                val = row.get(col, "")
                if isinstance(val, float):
                    val = _fmt(val)
                out[col] = val
            writer.writerow(out)


def read_results_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_trace_csv(path, objectives, residuals, kappa=None):
    """Per-fit objective trace; residual/kappa cells may be empty."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        kap = "" if kappa is None or not np.isfinite(kappa) else _fmt(kappa)
        for t, obj in enumerate(objectives):
            res = _fmt(residuals[t - 1]) if 0 < t <= len(residuals) else ""
            writer.writerow([t, _fmt(obj), res, kap])


def write_record_json(path, record):
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
