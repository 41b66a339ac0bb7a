"""Reproducible experiment runner.

Each subcommand maps one experiment family to CSV artifacts plus a
manifest.json recording the resolved configuration and code version;
``summarize`` re-reads whatever CSVs are present in an output directory
and emits report.json with a pass/fail entry per acceptance check.

Numbers are written with 17 significant digits (round-trip exact for
64-bit floats) so re-running a subcommand with identical configuration
yields byte-identical CSV bodies; worker count never changes results.

Exit codes: 0 success, 2 configuration/validation error, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, mc, multinode as mn, relu1, relusq, sgd as sgd_mod
from .chebdiff import cheb_diff_matrix, cheb_points
from .geometry import pair_geometry
from .linear import LinearProblem, conditioning, variance_study
from .ode import rk4_integrate

ENV_THREADS = "SOBOLEV_LAB_THREADS"


def _fmt(x) -> str:
    if x is None:
        return "nan"
    xf = float(x)
    if math.isnan(xf):
        return "nan"
    if xf == int(xf) and abs(xf) < 1e15:
        return repr(int(xf)) if float(int(xf)) == xf else f"{xf:.17g}"
    return f"{xf:.17g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def _write_manifest(out_dir: Path, subcommand: str, cfg: dict) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": cfg,
        "package_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < --config JSON < explicit CLI flags."""
    cfg = dict(defaults)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(defaults)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        return max(1, args.threads)
    env = os.environ.get(ENV_THREADS)
    return max(1, int(env)) if env else 1


def _basin_pairs(rng: np.random.Generator, dim: int, count: int, rmin=0.1, rmax=0.9):
    """Unit teacher plus perturbations with |w - w*| uniform in [rmin, rmax]."""
    wstar = rng.standard_normal(dim)
    wstar /= np.linalg.norm(wstar)
    dirs = rng.standard_normal((count, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = rng.uniform(rmin, rmax, size=count)
    return wstar + radii[:, None] * dirs, wstar


# --------------------------------------------------------------------------
# subcommands


def cmd_landscape(args) -> list[Path]:
    cfg = _resolve(args, {"dim": 2, "theta_grid": 64, "norm_w": 1.0, "norm_wstar": 1.0,
                          "seed": 0, "out_dir": "out"})
    out = _prep_out(cfg)
    d = int(cfg["dim"])
    if d < 2:
        raise ValueError("landscape needs dim >= 2")
    n = int(cfg["theta_grid"])
    rows = []
    for i in range(1, n + 1):
        theta = i * (math.pi / 2) / (n + 1)
        w = np.zeros(d)
        w[0] = math.cos(theta) * cfg["norm_w"]
        w[1] = math.sin(theta) * cfg["norm_w"]
        wstar = np.zeros(d)
        wstar[0] = cfg["norm_wstar"]
        rep = relu1.hessians(w, wstar)
        geom = pair_geometry(w, wstar)
        rows.append(
            (
                theta,
                geom.alpha,
                rep.kappa_l2,
                rep.kappa_h1,
                rep.spectrum_l2.lam_min,
                rep.spectrum_h1.lam_min,
            )
        )
    path = out / "landscape.csv"
    _write_csv(path, ["theta", "alpha", "kappa_l2", "kappa_h1", "lam_min_l2", "lam_min_h1"], rows)
    _write_manifest(out, "landscape", cfg)
    return [path]


def cmd_gd_compare(args) -> list[Path]:
    cfg = _resolve(args, {"dim": 8, "points": 500, "eta_factor": 0.9, "seed": 0, "out_dir": "out"})
    out = _prep_out(cfg)
    rng = np.random.default_rng(cfg["seed"])
    ws, wstar = _basin_pairs(rng, int(cfg["dim"]), int(cfg["points"]))
    rows = []
    for i, w in enumerate(ws):
        pre = relu1.gd_compare(w, wstar, 1.0)  # probe C with any eta, then use it
        eta = cfg["eta_factor"] * pre.max_step_c
        rep = relu1.gd_compare(w, wstar, eta)
        rows.append(
            (i, pair_geometry(w, wstar).theta, rep.max_step_c, eta, rep.err_l2, rep.err_h1, rep.gain_f)
        )
    path = out / "gd_compare.csv"
    _write_csv(path, ["point_id", "theta", "max_step_c", "eta", "err_l2", "err_h1", "gain_f"], rows)
    _write_manifest(out, "gd-compare", cfg)
    return [path]


def cmd_flow(args) -> list[Path]:
    cfg = _resolve(
        args,
        {"kind": "both", "dim": 8, "inits": 100, "step": 1e-3, "t_end": 10.0,
         "record_every": 10, "seed": 0, "out_dir": "out"},
    )
    out = _prep_out(cfg)
    kinds = ["l2", "h1"] if cfg["kind"] == "both" else [cfg["kind"]]
    rng = np.random.default_rng(cfg["seed"])
    w0, wstar = _basin_pairs(rng, int(cfg["dim"]), int(cfg["inits"]))
    rows = []
    for kind in kinds:
        trace = rk4_integrate(
            lambda s, k=kind: relu1.flow_rhs(k, s, wstar),
            w0,
            cfg["step"],
            cfg["t_end"],
            wstar,
            record_every=int(cfg["record_every"]),
        )
        for init_id in range(w0.shape[0]):
            for t, v in zip(trace.times, trace.v_values[:, init_id]):
                rows.append((init_id, kind, t, v))
    rows.sort(key=lambda r: (r[0], r[1]))
    path = out / "flow.csv"
    _write_csv(path, ["init_id", "kind", "t", "v"], rows)
    _write_manifest(out, "flow", cfg)
    return [path]


def cmd_relusq(args) -> list[Path]:
    cfg = _resolve(
        args,
        {"dim": 4, "points": 1000, "inits": 100, "step": 1e-3, "t_end": 4.0,
         "record_every": 20, "seed": 0, "out_dir": "out"},
    )
    out = _prep_out(cfg)
    rng = np.random.default_rng(cfg["seed"])
    ws, wstar = _basin_pairs(rng, int(cfg["dim"]), int(cfg["points"]))
    rows = []
    for i, w in enumerate(ws):
        b = relusq.h2_gradients(w, wstar)
        e = w - wstar
        rows.append((i, -float(e @ b.grad_i1), -float(e @ b.grad_i2), -float(e @ b.grad_i3)))
    descent_path = out / "relusq_descent.csv"
    _write_csv(descent_path, ["point_id", "ip1", "ip2", "ip3"], rows)

    w0, wstar2 = _basin_pairs(rng, int(cfg["dim"]), int(cfg["inits"]), rmin=0.1, rmax=0.7)
    flow_rows = []
    for variant, parts in (("h2", ("i1", "i2", "i3")), ("i1", ("i1",))):
        trace = rk4_integrate(relusq.h2_flow_field(wstar2, parts), w0, cfg["step"],
                              cfg["t_end"], wstar2, record_every=int(cfg["record_every"]))
        for init_id in range(w0.shape[0]):
            for t, v in zip(trace.times, trace.v_values[:, init_id]):
                flow_rows.append((init_id, variant, t, v))
    flow_rows.sort(key=lambda r: (r[0], r[1]))
    flow_path = out / "relusq_flow.csv"
    _write_csv(flow_path, ["init_id", "variant", "t", "v"], flow_rows)
    _write_manifest(out, "relusq", cfg)
    return [descent_path, flow_path]


def cmd_multinode(args) -> list[Path]:
    cfg = _resolve(
        args,
        {"k_list": "2,4,8", "starts": 100, "ratio_starts": 20, "step": 1e-3,
         "t_end": 60.0, "seed": 0, "out_dir": "out"},
    )
    out = _prep_out(cfg)
    ks = _parse_int_list(cfg["k_list"])
    rng = np.random.default_rng(cfg["seed"])
    rows = []
    for k in ks:
        x_l2, x_h1 = mn.saddle_points(k)
        f_l2 = mn.reduced_field("l2", mn.ReducedState(x=x_l2, y=x_l2, k=k))
        f_h1 = mn.reduced_field("h1", mn.ReducedState(x=x_h1, y=x_h1, k=k))
        exp_l2 = mn.diagonal_decay("l2", k, 0.95, t_end=min(30.0 / k, 12.0)).exponent
        exp_h1 = mn.diagonal_decay("h1", k, 0.95, t_end=min(15.0 / k, 6.0)).exponent

        # convergence of the H1 planar flow from random Omega starts
        n = int(cfg["starts"])
        x0 = rng.uniform(0.15, 1.0, size=n)
        y0 = np.array([rng.uniform(0.0, max(x - 0.05, 0.0)) for x in x0])
        starts = np.stack([x0, y0], axis=1)
        trace = rk4_integrate(mn.reduced_flow_field("h1", k), starts, cfg["step"],
                              cfg["t_end"], np.array([1.0, 0.0]), record_every=100)
        final_dist = np.sqrt(trace.v_values[-1])
        converged = float(np.mean(final_dist < 1e-6))

        # near-fixed-point time-to-threshold ratio
        m = int(cfg["ratio_starts"])
        angs = rng.uniform(0.15, math.pi / 2 - 0.15, size=m)
        near = np.stack([1.0 - 1e-3 * np.cos(angs), 1e-3 * np.sin(angs)], axis=1)
        t_l2 = mn.times_to_threshold("l2", k, near, 1e-4, step=cfg["step"])
        t_h1 = mn.times_to_threshold("h1", k, near, 1e-4, step=cfg["step"])
        ratios = t_l2 / t_h1
        rows.append(
            (k, x_l2, x_h1, abs(f_l2[0]), abs(f_h1[0]), exp_l2, exp_h1,
             float(np.median(ratios)), converged, float(final_dist.max()))
        )
    path = out / "multinode.csv"
    _write_csv(
        path,
        ["k", "x_saddle_l2", "x_saddle_h1", "saddle_field_l2", "saddle_field_h1",
         "decay_exp_l2", "decay_exp_h1", "time_ratio_median", "converged_frac", "max_final_dist"],
        rows,
    )
    _write_manifest(out, "multinode", cfg)
    return [path]


def cmd_toeplitz(args) -> list[Path]:
    cfg = _resolve(args, {"k_list": "3,5,8", "fd_step": 1e-5, "seed": 0, "out_dir": "out"})
    out = _prep_out(cfg)
    rows = []
    for k in _parse_int_list(cfg["k_list"]):
        j_l2 = _toeplitz_jacobian("l2", k, cfg["fd_step"])
        j_h1 = _toeplitz_jacobian("h1", k, cfg["fd_step"])
        eigs = np.sort(np.linalg.eigvals(-j_l2).real)
        _, expected = mn.toeplitz_linearization(k)
        expected = np.sort(expected)
        maxdiff = float(np.abs(j_h1 - 2.0 * j_l2).max())
        for i in range(k):
            rows.append((k, i, float(eigs[i]), float(expected[i]), maxdiff))
    path = out / "toeplitz.csv"
    _write_csv(path, ["k", "eig_index", "eig_l2", "expected_eig", "h1_vs_2l2_maxdiff"], rows)
    _write_manifest(out, "toeplitz", cfg)
    return [path]


def _toeplitz_jacobian(kind: str, k: int, h: float) -> np.ndarray:
    e1 = np.zeros(k)
    e1[0] = 1.0
    jac = np.zeros((k, k))
    for m in range(k):
        dp = e1.copy()
        dp[m] += h
        dm = e1.copy()
        dm[m] -= h
        fp = mn.toeplitz_field(kind, mn.ToeplitzState(t=dp, k=k))
        fm = mn.toeplitz_field(kind, mn.ToeplitzState(t=dm, k=k))
        jac[:, m] = (fp - fm) / (2.0 * h)
    return jac


def cmd_sgd(args) -> list[Path]:
    cfg = _resolve(
        args,
        {"dim": 16, "lr": 1e-2, "batch": 64, "n_train": 10000, "steps": 2000,
         "seeds": 12, "log_every": 20, "seed": 0, "out_dir": "out"},
    )
    out = _prep_out(cfg)
    rows = []
    for s in range(int(cfg["seeds"])):
        for kind in ("l2", "h1"):
            trace = sgd_mod.sgd_run(
                sgd_mod.SgdConfig(
                    dim=int(cfg["dim"]),
                    batch_size=int(cfg["batch"]),
                    n_train=int(cfg["n_train"]),
                    learning_rate=cfg["lr"],
                    n_steps=int(cfg["steps"]),
                    seed=int(cfg["seed"]) * 1000 + s,
                    loss_kind=kind,
                    log_every=int(cfg["log_every"]),
                )
            )
            for st, err, kap in zip(trace.steps, trace.err_sq, trace.kappa):
                rows.append((s, kind, int(st), err, kap))
    path = out / "sgd.csv"
    _write_csv(path, ["seed", "kind", "step", "err_sq", "kappa"], rows)
    _write_manifest(out, "sgd", cfg)
    return [path]


def cmd_verify_gradients(args) -> list[Path]:
    # estimators whose per-sample gradients live in span{w, w*} have ~2
    # effective dof per trial, so their slope fits need ~25 trials; the
    # x-valued estimators are tame at any of the default dims
    cfg = _resolve(
        args,
        {"dims": "4,16,64", "n_min": 10, "n_max": 17, "trials": 25,
         "forms": "relu:l2,relu:h1_semi,relu_sq:i1,relu_sq:i2,relu_sq:i3,multinode:l2",
         "seed": 0, "out_dir": "out"},
    )
    out = _prep_out(cfg)
    dims = _parse_int_list(cfg["dims"])
    n_grid = [2**p for p in range(int(cfg["n_min"]), int(cfg["n_max"]) + 1)]
    threads = _threads(args)
    rows = []
    for token in str(cfg["forms"]).split(","):
        model, kind = token.strip().split(":")
        table = mc.convergence_study(model, kind, dims, n_grid, int(cfg["trials"]),
                                     int(cfg["seed"]), threads=threads)
        for dim, n, mse in table:
            rows.append((model, kind, dim, int(math.log2(n)), mse))
    path = out / "convergence.csv"
    _write_csv(path, ["model", "kind", "dim", "log2_n", "mse"], rows)
    _write_manifest(out, "verify-gradients", cfg)
    return [path]


def cmd_linear(args) -> list[Path]:
    cfg = _resolve(
        args,
        {"n": 200, "dim": 8, "sigma": 1.0, "lambdas": "0.5,1.0,2.0",
         "trials": 10000, "seed": 0, "out_dir": "out"},
    )
    out = _prep_out(cfg)
    rng = np.random.default_rng(cfg["seed"])
    X = rng.standard_normal((int(cfg["n"]), int(cfg["dim"])))
    wstar = rng.standard_normal(int(cfg["dim"]))
    rows = []
    for lam in _parse_float_list(cfg["lambdas"]):
        p = LinearProblem(x_matrix=X, wstar=wstar, noise_sigma=cfg["sigma"], ridge_lambda=lam)
        kl, kh = conditioning(p)
        ve_l2, ve_h1, vf_l2, vf_h1 = variance_study(p, int(cfg["trials"]), int(cfg["seed"]) + 1)
        rows.append((lam, kl, kh, ve_l2, ve_h1, vf_l2, vf_h1))
    path = out / "linear.csv"
    _write_csv(
        path,
        ["lambda", "kappa_l2", "kappa_h1", "var_l2_emp", "var_h1_emp", "var_l2_formula", "var_h1_formula"],
        rows,
    )
    _write_manifest(out, "linear", cfg)
    return [path]


def cmd_chebyshev(args) -> list[Path]:
    cfg = _resolve(args, {"n_max": 20, "seed": 0, "out_dir": "out"})
    out = _prep_out(cfg)
    rows = []
    for n in range(1, int(cfg["n_max"]) + 1):
        x = cheb_points(n)
        d = cheb_diff_matrix(n)
        worst = 0.0
        for k in range(n + 1):
            expected = k * x ** (k - 1) if k > 0 else np.zeros_like(x)
            worst = max(worst, float(np.abs(d @ x**k - expected).max()))
        rows.append((n, worst, float(np.abs(d.sum(axis=1)).max())))
    path = out / "chebyshev.csv"
    _write_csv(path, ["n", "max_monomial_err", "row_sum_max"], rows)
    _write_manifest(out, "chebyshev", cfg)
    return [path]


# --------------------------------------------------------------------------
# summarize

CRITERIA = [
    ("c1_condition_number_law", "landscape.csv"),
    ("c2_hessian_spectra", "landscape.csv"),
    ("c3_one_step_gd", "gd_compare.csv"),
    ("c4_h1_flow_acceleration", "flow.csv"),
    ("c5_flow_quadratic_forms", None),
    ("c6_relusq_descent", "relusq_descent.csv"),
    ("c7_multinode_dynamics", "multinode.csv"),
    ("c8_toeplitz_linearization", "toeplitz.csv"),
    ("c9_mc_verification", "convergence.csv"),
    ("c10_empirical_sgd", "sgd.csv"),
    ("c11_linear_model", "linear.csv"),
    ("c12_chebyshev_diff", "chebyshev.csv"),
    ("c13_determinism", None),
]


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return [dict(r) for r in csv.DictReader(fh)]


def _eval_landscape(rows, crit):
    kl = np.array([float(r["kappa_l2"]) for r in rows])
    kh = np.array([float(r["kappa_h1"]) for r in rows])
    th = np.array([float(r["theta"]) for r in rows])
    ml = np.array([float(r["lam_min_l2"]) for r in rows])
    mh = np.array([float(r["lam_min_h1"]) for r in rows])
    rel_l = np.abs(kl - 0.5 / ml) / kl
    rel_h = np.abs(kh - 1.0 / mh) / kh
    if crit == "c1_condition_number_law":
        ok = bool(np.all(rel_l <= 1e-8) and np.all(rel_h <= 1e-8) and np.all(kh[th > 1e-6] < kl[th > 1e-6]))
        return ok, {"max_rel_err_l2": float(rel_l.max()), "max_rel_err_h1": float(rel_h.max())}
    # c2: formula-vs-numeric minimum eigenvalues at the grid resolution
    ok = bool(np.all(rel_l <= 1e-8) and np.all(rel_h <= 1e-8))
    return ok, {"max_rel_err": float(max(rel_l.max(), rel_h.max()))}


def _eval_flow(rows):
    by = {}
    for r in rows:
        by.setdefault((r["init_id"], r["kind"]), []).append((float(r["t"]), float(r["v"])))
    inits = sorted({k[0] for k in by})
    ordered_ok = True
    final_l2 = []
    final_h1 = []
    for i in inits:
        l2 = sorted(by[(i, "l2")])
        h1 = sorted(by[(i, "h1")])
        if any(vh > vl + 1e-15 for (_, vl), (_, vh) in zip(l2, h1)):
            ordered_ok = False
        final_l2.append(l2[-1][1])
        final_h1.append(h1[-1][1])
    worst_l2, worst_h1 = max(final_l2), max(final_h1)
    ok = ordered_ok and worst_l2 < 1e-8 and worst_h1 < 1e-8
    return ok, {
        "ordering_holds": ordered_ok,
        "worst_final_v_l2": worst_l2,
        "worst_final_v_h1": worst_h1,
    }


def _eval_relusq(out_dir, rows):
    vals = [max(float(r["ip1"]), float(r["ip2"]), float(r["ip3"])) for r in rows]
    descent_ok = max(vals) < 0.0
    info = {"worst_inner_product": max(vals)}
    flow_path = out_dir / "relusq_flow.csv"
    flow_ok = True
    if flow_path.exists():
        frows = _read_csv(flow_path)
        by = {}
        for r in frows:
            by.setdefault((r["init_id"], r["variant"]), []).append((float(r["t"]), float(r["v"])))
        for i in sorted({k[0] for k in by}):
            h2 = sorted(by[(i, "h2")])
            i1 = sorted(by[(i, "i1")])
            if any(v2 > v1 + 1e-15 for (_, v2), (_, v1) in zip(h2, i1)):
                flow_ok = False
        info["h2_below_i1"] = flow_ok
    return descent_ok and flow_ok, info


def _eval_multinode(rows):
    ok = True
    info = {}
    for r in rows:
        k = int(r["k"])
        ok &= float(r["saddle_field_l2"]) <= 1e-10 and float(r["saddle_field_h1"]) <= 1e-10
        ok &= abs(float(r["decay_exp_l2"]) + k / 2.0) <= 0.02 * (k / 2.0)
        ok &= abs(float(r["decay_exp_h1"]) + float(k)) <= 0.02 * k
        ok &= 1.8 <= float(r["time_ratio_median"]) <= 2.2
        ok &= float(r["converged_frac"]) == 1.0 and float(r["max_final_dist"]) < 1e-6
        info[f"k{k}_ratio"] = float(r["time_ratio_median"])
        info[f"k{k}_decay_l2"] = float(r["decay_exp_l2"])
        info[f"k{k}_decay_h1"] = float(r["decay_exp_h1"])
    return bool(ok), info


def _eval_toeplitz(rows):
    worst = 0.0
    maxdiff = 0.0
    for r in rows:
        worst = max(worst, abs(float(r["eig_l2"]) - float(r["expected_eig"])))
        maxdiff = max(maxdiff, float(r["h1_vs_2l2_maxdiff"]))
    ok = worst <= 1e-6 and maxdiff <= 1e-6
    return ok, {"worst_eig_deviation": worst, "h1_vs_2l2_maxdiff": maxdiff}


def _eval_convergence(rows):
    cells = {}
    for r in rows:
        cells.setdefault((r["model"], r["kind"], int(r["dim"])), []).append(
            (int(r["log2_n"]), float(r["mse"]))
        )
    ok = True
    slopes = {}
    for key, pts in cells.items():
        pts.sort()
        ns = np.array([2.0**p for p, _ in pts])
        ms = np.array([m for _, m in pts])
        slope = mc.fit_loglog_slope(ns, ms)
        slopes["{}:{}:d{}".format(*key)] = slope
        ok &= -1.2 <= slope <= -0.8 and ms[-1] < ms[0]
    return bool(ok), {"slopes": slopes}


def _eval_sgd(rows):
    finals = {}
    pairs = {}
    for r in rows:
        key = (r["seed"], r["kind"])
        step = int(r["step"])
        finals.setdefault(key, (step, float(r["err_sq"])))
        if step >= finals[key][0]:
            finals[key] = (step, float(r["err_sq"]))
        pairs.setdefault((r["seed"], step), {})[r["kind"]] = float(r["kappa"])
    med_l2 = float(np.median([v for (s, k), (_, v) in finals.items() if k == "l2"]))
    med_h1 = float(np.median([v for (s, k), (_, v) in finals.items() if k == "h1"]))
    kappa_ok = True
    for both in pairs.values():
        if "l2" in both and "h1" in both:
            kl, kh = both["l2"], both["h1"]
            if not (math.isnan(kl) or math.isnan(kh)) and kh > kl + 1e-12:
                kappa_ok = False
    ok = med_h1 < med_l2 and kappa_ok
    return ok, {"median_final_l2": med_l2, "median_final_h1": med_h1, "kappa_ordered": kappa_ok}


def _eval_linear(rows):
    ok = True
    worst_rel = 0.0
    for r in rows:
        lam = float(r["lambda"])
        if lam > 0:
            ok &= float(r["kappa_h1"]) < float(r["kappa_l2"])
        ok &= float(r["var_h1_emp"]) < float(r["var_l2_emp"])
        for emp, form in (("var_l2_emp", "var_l2_formula"), ("var_h1_emp", "var_h1_formula")):
            rel = abs(float(r[emp]) - float(r[form])) / float(r[form])
            worst_rel = max(worst_rel, rel)
            ok &= rel <= 0.03
    return bool(ok), {"worst_rel_var_err": worst_rel}


def _eval_chebyshev(rows):
    ok = True
    worst = 0.0
    for r in rows:
        n = int(r["n"])
        err = float(r["max_monomial_err"])
        worst = max(worst, err / (1e-10 * n * n))
        ok &= err <= 1e-10 * n * n
    return bool(ok), {"worst_err_over_tol": worst}


def summarize(out_dir: Path) -> dict:
    """Evaluate every acceptance check whose CSV artifacts are present."""
    report = {"out_dir": str(out_dir), "package_version": __version__, "criteria": {}}
    for crit, fname in CRITERIA:
        entry: dict = {}
        if fname is None:
            entry["status"] = "missing"
            entry["note"] = (
                "evaluated by the test suite only"
                if crit == "c5_flow_quadratic_forms"
                else "requires re-running a subcommand twice; covered by the test suite"
            )
            report["criteria"][crit] = entry
            continue
        path = out_dir / fname
        if not path.exists():
            entry["status"] = "missing"
            report["criteria"][crit] = entry
            continue
        rows = _read_csv(path)
        try:
            if crit in ("c1_condition_number_law", "c2_hessian_spectra"):
                ok, info = _eval_landscape(rows, crit)
            elif crit == "c3_one_step_gd":
                gains = [float(r["gain_f"]) for r in rows]
                ok, info = min(gains) > 0.0, {"min_gain": min(gains)}
            elif crit == "c4_h1_flow_acceleration":
                ok, info = _eval_flow(rows)
            elif crit == "c6_relusq_descent":
                ok, info = _eval_relusq(out_dir, rows)
            elif crit == "c7_multinode_dynamics":
                ok, info = _eval_multinode(rows)
            elif crit == "c8_toeplitz_linearization":
                ok, info = _eval_toeplitz(rows)
            elif crit == "c9_mc_verification":
                ok, info = _eval_convergence(rows)
            elif crit == "c10_empirical_sgd":
                ok, info = _eval_sgd(rows)
            elif crit == "c11_linear_model":
                ok, info = _eval_linear(rows)
            else:
                ok, info = _eval_chebyshev(rows)
            entry["status"] = "pass" if ok else "fail"
            entry["measured"] = info
        except Exception as exc:  # malformed CSV: report, don't crash the summary
            entry["status"] = "error"
            entry["note"] = str(exc)
        report["criteria"][crit] = entry
    return report


def cmd_summarize(args) -> list[Path]:
    out_dir = Path(args.out_dir_pos)
    if not out_dir.is_dir():
        raise ValueError(f"not a directory: {out_dir}")
    report = summarize(out_dir)
    path = out_dir / "report.json"
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return [path]


# --------------------------------------------------------------------------
# plumbing


def _prep_out(cfg: dict) -> Path:
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_int_list(s) -> list[int]:
    if isinstance(s, (list, tuple)):
        return [int(v) for v in s]
    return [int(tok) for tok in str(s).split(",") if tok.strip()]


def _parse_float_list(s) -> list[float]:
    if isinstance(s, (list, tuple)):
        return [float(v) for v in s]
    return [float(tok) for tok in str(s).split(",") if tok.strip()]


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--seed", type=int, default=None, help="base RNG seed (default 0)")
    sp.add_argument("--out-dir", dest="out_dir", type=str, default=None,
                    help="output directory (default ./out)")
    sp.add_argument("--config", type=str, default=None,
                    help="JSON file with defaults; explicit flags override it")
    sp.add_argument("--threads", type=int, default=None,
                    help=f"worker cap (or ${ENV_THREADS}); never affects results")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sobolev-lab",
        description="Reproducible experiments for the Sobolev-training landscape laboratory.",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("landscape", help="condition numbers and spectra over a theta grid")
    sp.add_argument("--dim", type=int, default=None)
    sp.add_argument("--theta-grid", dest="theta_grid", type=int, default=None)
    sp.add_argument("--norm-w", dest="norm_w", type=float, default=None)
    sp.add_argument("--norm-wstar", dest="norm_wstar", type=float, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_landscape)

    sp = sub.add_parser("gd-compare", help="one-step GD comparison at random basin points")
    sp.add_argument("--dim", type=int, default=None)
    sp.add_argument("--points", type=int, default=None)
    sp.add_argument("--eta-factor", dest="eta_factor", type=float, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_gd_compare)

    sp = sub.add_parser("flow", help="single-node gradient-flow traces")
    sp.add_argument("--kind", choices=["l2", "h1", "both"], default=None)
    sp.add_argument("--dim", type=int, default=None)
    sp.add_argument("--inits", type=int, default=None)
    sp.add_argument("--step", type=float, default=None)
    sp.add_argument("--t-end", dest="t_end", type=float, default=None)
    sp.add_argument("--record-every", dest="record_every", type=int, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_flow)

    sp = sub.add_parser("relusq", help="second-order descent checks and flows")
    sp.add_argument("--dim", type=int, default=None)
    sp.add_argument("--points", type=int, default=None)
    sp.add_argument("--inits", type=int, default=None)
    sp.add_argument("--step", type=float, default=None)
    sp.add_argument("--t-end", dest="t_end", type=float, default=None)
    sp.add_argument("--record-every", dest="record_every", type=int, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_relusq)

    sp = sub.add_parser("multinode", help="planar multi-node dynamics")
    sp.add_argument("--k-list", dest="k_list", type=str, default=None)
    sp.add_argument("--starts", type=int, default=None)
    sp.add_argument("--ratio-starts", dest="ratio_starts", type=int, default=None)
    sp.add_argument("--step", type=float, default=None)
    sp.add_argument("--t-end", dest="t_end", type=float, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_multinode)

    sp = sub.add_parser("toeplitz", help="cyclic-coefficient field Jacobians")
    sp.add_argument("--k-list", dest="k_list", type=str, default=None)
    sp.add_argument("--fd-step", dest="fd_step", type=float, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_toeplitz)

    sp = sub.add_parser("sgd", help="empirical SGD traces with conditioning")
    sp.add_argument("--dim", type=int, default=None)
    sp.add_argument("--lr", type=float, default=None)
    sp.add_argument("--batch", type=int, default=None)
    sp.add_argument("--n-train", dest="n_train", type=int, default=None)
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--seeds", type=int, default=None)
    sp.add_argument("--log-every", dest="log_every", type=int, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_sgd)

    sp = sub.add_parser("verify-gradients", help="MC convergence study of the closed forms")
    sp.add_argument("--dims", type=str, default=None)
    sp.add_argument("--n-min", dest="n_min", type=int, default=None)
    sp.add_argument("--n-max", dest="n_max", type=int, default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--forms", type=str, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_verify_gradients)

    sp = sub.add_parser("linear", help="linear-model conditioning and variances")
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--dim", type=int, default=None)
    sp.add_argument("--sigma", type=float, default=None)
    sp.add_argument("--lambdas", type=str, default=None)
    sp.add_argument("--trials", type=int, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_linear)

    sp = sub.add_parser("chebyshev", help="differentiation-matrix exactness sweep")
    sp.add_argument("--n-max", dest="n_max", type=int, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_chebyshev)

    sp = sub.add_parser("summarize", help="evaluate acceptance checks from CSVs in a directory")
    sp.add_argument("out_dir_pos", metavar="out_dir", type=str)
    sp.set_defaults(func=cmd_summarize)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        paths = args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and signal internal failure
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
