"""Command line experiment runner.

Subcommands: approx-error, solve, halo, compare, gallery-list. Results are
written as CSV and JSON only, each file first to a temporary name and then
renamed, so a failing run leaves no partial output behind.

Exit codes: 0 success, 2 convergence failure, 1 any other error.
"""
import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .analysis import HaloLabel, classify_halo, linear_pencil_eigenvalues, match_greedy
from .baseline import BeynConfig, beyn_solve
from .config import experiment_config, load_config
from .contour import build_rational_approx, quadrature_rule, approx_error
from .errors import ConfigError, ConvergenceFailure, IncompatibleRuns, RatNlevpError
from .gallery import EXPERIMENTS, load_problem, make_problem, reference_eigenvalues
from .nlevp import build_surrogate, linear_surrogate
from .solvers import SolveConfig, solve, solve_dense_linearization

HALO_DELTA = 0.05


# ------------------------------------------------------------------ output

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return None if np.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def to_json(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def to_csv(header, rows, comments=()):
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def write_outputs(out_dir, files):
    """Write {name: text} atomically: every file goes to a temp name first."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out)
            staged.append((tmp, out / name))
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, dest in staged:
        os.replace(tmp, dest)
    return [str(d) for _, d in staged]


# ------------------------------------------------------------------ runs

def build_problem(cfg):
    p = cfg.problem
    if p.path is not None:
        return load_problem(p.path)
    try:
        return make_problem(p.name, **p.params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {p.name!r} ({exc})", "problem.params") from exc


def build_approximation(cfg, prob, m=None):
    a = cfg.approximation
    rule = quadrature_rule(cfg.contour, a.m if m is None else m, per_side=a.per_side)
    ra = build_rational_approx(rule, prob.functions, principal_parts=a.principal_parts)
    return ra, build_surrogate(prob, ra)


def solver_config(cfg):
    sv = cfg.solver
    return SolveConfig(method=sv.method, sigma=sv.sigma, k=sv.k, nu=sv.nu, q=sv.q,
                       max_outer=sv.max_outer, tol=sv.tol, seed=sv.seed)


def run_solve(cfg):
    """Run the configured solver; returns (problem, surrogate or None, report)."""
    prob = build_problem(cfg)
    sv = cfg.solver
    if sv.method == "beyn":
        rep = beyn_solve(prob, cfg.contour, BeynConfig(N=sv.beyn_N, ell=sv.beyn_ell,
                                                       rank_tol=sv.beyn_rank_tol, seed=sv.seed,
                                                       hankel=sv.beyn_hankel))
        return prob, None, rep
    try:
        scfg = solver_config(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc), "solver") from exc
    _, s = build_approximation(cfg, prob)
    rep = solve(s, scfg, cfg.contour, prob)
    return prob, s, rep


def _labels(prob, s, rep, contour):
    lams = [p.lam for p in rep.pairs]
    s_lab = s if s is not None else linear_surrogate(prob.B0, prob.A0)
    return [c.label.value for c in classify_halo(lams, s_lab, contour, delta=HALO_DELTA)]


def cmd_approx_error(cfg):
    prob = build_problem(cfg)
    a = cfg.approximation
    ms = a.m_values if a.m_values is not None else (a.m,)
    inner = cfg.contour.scaled(a.inner_scale)
    mu = float(np.sum(prob.norms[2]))
    rows = []
    for m in ms:
        ra, _ = build_approximation(cfg, prob, m)
        errs = [approx_error(ra, f, inner, term=j) for j, f in enumerate(prob.functions)]
        rows.append([m, ra.m] + errs + [mu * max(errs, default=0.0)])
    header = ["m", "n_poles"] + [f"e_{j + 1}" for j in range(prob.p)] + ["mu_times_e"]
    comments = [f"problem={prob.name} inner_scale={a.inner_scale} per_side={a.per_side}"]
    return {"approx_error.csv": to_csv(header, rows, comments)}


def cmd_solve(cfg):
    prob, s, rep = run_solve(cfg)
    labels = _labels(prob, s, rep, cfg.contour)
    rows = [[p.lam.real, p.lam.imag, p.residual_T, int(p.inside), lab]
            for p, lab in zip(rep.pairs, labels)]
    report = rep.to_dict()
    report["config"] = cfg.to_dict()
    return {"report.json": to_json(report),
            "eigenvalues.csv": to_csv(["re", "im", "residual_T", "inside", "label"], rows)}


def cmd_halo(cfg):
    prob = build_problem(cfg)
    _, s = build_approximation(cfg, prob)
    rep = solve_dense_linearization(s, cfg.contour)
    ref = reference_eigenvalues(prob)
    lams = [p.lam for p in rep.pairs] + [p.lam for p in rep.rejected]
    cls = classify_halo(lams, s, cfg.contour, reference=ref, delta=HALO_DELTA)
    rows = [["surrogate", c.lam.real, c.lam.imag, c.label.value, int(c.low_confidence)] for c in cls]
    if ref is not None:
        rows += [["true", z.real, z.imag, "", 0] for z in ref]
    rows += [["pencil", z.real, z.imag, "", 0] for z in linear_pencil_eigenvalues(s)]
    rows += [["contour", z.real, z.imag, "", 0] for z in cfg.contour.boundary(400)]
    comments = [f"problem={prob.name} m={cfg.approximation.m} delta={HALO_DELTA}",
                "reference: " + ("quadrature-free linearization" if ref is not None
                                 else "none (InteriorTrue labels are unmatched)")]
    counts = {lab.value: sum(c.label == lab for c in cls) for lab in HaloLabel}
    summary = {"counts": counts, "delta": HALO_DELTA, "n_surrogate": len(cls),
               "reference_available": ref is not None, "config": cfg.to_dict()}
    return {"halo.csv": to_csv(["kind", "re", "im", "label", "low_confidence"], rows, comments),
            "halo_summary.json": to_json(summary)}


def cmd_compare(cfg_a, cfg_b):
    if cfg_a.problem != cfg_b.problem or cfg_a.contour != cfg_b.contour:
        raise IncompatibleRuns("the two configurations differ in problem or contour")
    _, _, ra = run_solve(cfg_a)
    _, _, rb = run_solve(cfg_b)
    a, b = ra.interior_eigenvalues, rb.interior_eigenvalues
    pairs, ua, ub = match_greedy(a, b)
    d = [x[2] for x in pairs]
    diff = {"pairs": [{"a": a[i], "b": b[j], "distance": dist} for i, j, dist in pairs],
            "max_distance": max(d) if d else None, "mean_distance": float(np.mean(d)) if d else None,
            "unmatched_a": [a[i] for i in ua], "unmatched_b": [b[j] for j in ub],
            "methods": [cfg_a.solver.method, cfg_b.solver.method]}
    return {"compare.json": to_json(diff)}


def cmd_gallery_list():
    rows = {}
    for name, e in EXPERIMENTS.items():
        rows[name] = {"problem": e.get("problem", name), "params": e["params"],
                      "contour": e["contour"].to_dict(), "m": e["m"],
                      "per_side": e.get("per_side", False), "solver": e["solver"],
                      "beyn": e.get("beyn", {}),
                      "expected_interior": e["expected"]}
    return {"gallery.json": to_json(rows)}


# ------------------------------------------------------------------ entry

def _thread_cap():
    v = os.environ.get("RATNLEVP_THREADS")
    if v is None:
        return None
    try:
        k = int(v)
    except ValueError:
        k = 0
    if k < 1:
        raise ConfigError(f"RATNLEVP_THREADS must be a positive integer, got {v!r}")
    return k


def _load(path, args):
    cfg = load_config(path) if not path.startswith("experiment:") else \
        experiment_config(path.split(":", 1)[1])
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def build_parser():
    ap = argparse.ArgumentParser(prog="ratnlevp",
                                 description="Nonlinear eigenvalue problems via rational approximation.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, nconf=1):
        p.add_argument("--config", action="append", required=True, metavar="PATH",
                       help="JSON config file, or experiment:NAME for a built-in experiment"
                            + (" (give twice)" if nconf == 2 else ""))
        p.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="random seed (overrides solver.seed)")

    common(sub.add_parser("approx-error", help="rational approximation errors e_m over an m range"))
    common(sub.add_parser("solve", help="compute eigenvalues inside the contour"))
    common(sub.add_parser("halo", help="label every surrogate eigenvalue of a dense solve"))
    common(sub.add_parser("compare", help="match interior eigenvalues of two runs"), nconf=2)
    gl = sub.add_parser("gallery-list", help="list the built-in experiments")
    gl.add_argument("--out", metavar="DIR", help="also write gallery.json here")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _thread_cap()
        if args.command == "gallery-list":
            files = cmd_gallery_list()
            sys.stdout.write(files["gallery.json"])
            if args.out:
                write_outputs(args.out, files)
            return 0
        if args.command == "compare":
            if len(args.config) != 2:
                raise ConfigError("compare needs --config twice")
            cfgs = [_load(p, args) for p in args.config]
            files = cmd_compare(*cfgs)
            out = args.out or cfgs[0].output_dir
        else:
            if len(args.config) != 1:
                raise ConfigError(f"{args.command} takes one --config")
            cfg = _load(args.config[0], args)
            files = {"approx-error": cmd_approx_error, "solve": cmd_solve,
                     "halo": cmd_halo}[args.command](cfg)
            out = args.out or cfg.output_dir
        for path in write_outputs(out, files):
            print(path)
        return 0
    except ConvergenceFailure as exc:
        print(f"error: convergence failure: {exc}", file=sys.stderr)
        return 2
    except (RatNlevpError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
