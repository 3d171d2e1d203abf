"""Command-line front end.

Subcommands: observe, sweep, trace-g1, trace-g2, verify {cond4|ss-pq|oracle|
regime}, predict, fit.  Output is JSON (one document per invocation) or
RFC-4180 CSV with 17-significant-digit floats, suitable for offline
plotting; no plots are produced in-process (``--gnuplot`` emits a companion
script).  Exit codes: 0 success, 1 verification failure, 2 usage error,
3 solver error.  A TOML config file can mirror any flag (flags win);
``WORKERS`` in the environment overrides the worker count.
"""

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analytics, observables, verify
from .errors import (InsufficientSamples, InvalidParams, LaserbandError,
                     OutOfDomain)
from .models import Family, ModelParams
from .superop import liouvillian_for, pq_norm_diagnostics

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3

USAGE_ERRORS = (InvalidParams, OutOfDomain, InsufficientSamples)

CSV_COLUMNS = ["family", "p", "lambda", "q", "D", "mu", "flux", "coherence",
               "linewidth", "mandel_q", "wall_time_s", "solver_residual", "error"]
ALLOWED_OUTPUTS = {"coherence", "mandel_q", "flux", "linewidth", "w_fit"}


def _fmt(x):
    if x is None or x == "":
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _emit(doc, out_path):
    text = json.dumps(doc, indent=2, sort_keys=False)
    if out_path and out_path != "-":
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _error_doc(exc):
    return {"schema": "laserband/error/v1",
            "error": {"type": type(exc).__name__, "message": str(exc)}}


def _parse_grid(text):
    """Parse '1,2,3' or 'start:stop:step' into a list of floats."""
    if text is None:
        return None
    text = str(text)
    if ":" in text:
        parts = [float(t) for t in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1.0
        n = int(round((stop - start) / step))
        return [start + i * step for i in range(n + 1)]
    return [float(t) for t in text.split(",") if t != ""]


def _parse_dims(text):
    grid = _parse_grid(text)
    return None if grid is None else [int(round(d)) for d in grid]


def _params_from_args(args):
    fam = Family(args.family)
    return ModelParams(family=fam, p=args.p, dim=args.dim,
                       lam=args.lam if args.lam is not None else 0.0,
                       q=args.q if args.q is not None else 0.0)


def _workers(args):
    env = os.environ.get("WORKERS")
    if args.workers is not None:
        return int(args.workers)
    if env:
        return int(env)
    return 1


# ---------------------------------------------------------------------------
# observe / predict


def _prediction_block(params):
    if params.p <= 3.0:
        return None
    return {
        "coherence_formula": analytics.coherence_formula(params),
        "optimal_p": analytics.optimal_p(),
        "heisenberg_bound_mse": analytics.heisenberg_bound(params.mu),
    }


def cmd_observe(args):
    params = _params_from_args(args)
    t0 = time.perf_counter()
    liou = liouvillian_for(params)
    obs = observables.compute_observables(liou)
    wall = time.perf_counter() - t0
    doc = {
        "schema": "laserband/observe/v1",
        "params": {"family": params.family.value, "p": params.p,
                   "lambda": params.lam, "q": params.q, "dim": params.dim},
        "mu": params.mu,
        "flux": obs.flux,
        "coherence": obs.coherence,
        "linewidth": obs.linewidth,
        "mandel_q": obs.mandel_q,
        "solver_residual": obs.solver_residual,
        "wall_time_s": wall,
        "notes": list(params.regime_notes()),
    }
    pred = _prediction_block(params)
    doc["prediction"] = pred
    if pred is None:
        doc["notes"].append("asymptotic formula not applicable (p <= 3)")
    else:
        doc["prediction"]["relative_difference"] = (
            pred["coherence_formula"] / obs.coherence - 1.0)
    _emit(doc, args.out)
    return EXIT_OK


def cmd_predict(args):
    target = args.target
    if target == "optimal-p":
        _emit({"schema": "laserband/predict/v1", "optimal_p": analytics.optimal_p()},
              args.out)
        return EXIT_OK
    if target == "bound":
        if args.mu is None and args.dim is None:
            raise InvalidParams("predict bound needs --mu or --dim")
        mu = args.mu if args.mu is not None else (args.dim - 1) / 2.0
        _emit({"schema": "laserband/predict/v1", "mu": mu,
               "heisenberg_bound_mse": analytics.heisenberg_bound(mu)}, args.out)
        return EXIT_OK
    params = _params_from_args(args)
    doc = {
        "schema": "laserband/predict/v1",
        "params": {"family": params.family.value, "p": params.p,
                   "lambda": params.lam, "q": params.q, "dim": params.dim},
        "mu": params.mu,
        "coherence_formula": analytics.coherence_formula(params),
        "coherence_prefactor": analytics.coherence_prefactor(params.p)
                               / analytics.family_divisor(params),
        "optimal_p": analytics.optimal_p(),
        "heisenberg_bound_mse": analytics.heisenberg_bound(params.mu),
    }
    _emit(doc, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


@dataclass(frozen=True)
class SweepSpec:
    families: tuple
    p_grid: tuple
    extra_grid: dict      # family -> tuple of lambda/q values
    d_grid: tuple
    outputs: frozenset
    workers: int
    seed: int

    def tasks(self):
        out = []
        for fam in self.families:
            for p in self.p_grid:
                for extra in self.extra_grid[fam]:
                    for d in self.d_grid:
                        out.append((fam, float(p), float(extra), int(d)))
        return out


def _sweep_task_key(task):
    fam, p, extra, d = task
    return f"{fam}|{_fmt(p)}|{_fmt(extra)}|{d}"


def _sweep_row(task_and_outputs):
    (fam, p, extra, d), outputs = task_and_outputs
    lam = extra if fam == "plambda" else 0.0
    q = extra if fam == "pq" else 0.0
    row = {"family": fam, "p": p, "lambda": lam, "q": q, "D": d,
           "mu": (d - 1) / 2.0, "flux": "", "coherence": "", "linewidth": "",
           "mandel_q": "", "wall_time_s": "", "solver_residual": "", "error": ""}
    t0 = time.perf_counter()
    try:
        params = ModelParams(family=Family(fam), p=p, dim=d, lam=lam, q=q)
        liou = liouvillian_for(params)
        observables.steady_state(liou, check_unique=False)  # positivity gate
        F = observables.flux(liou)
        resid = 0.0
        row["flux"] = F
        need_c = outputs & {"coherence", "linewidth", "w_fit"}
        if need_c:
            c, resid = observables.coherence_with_residual(liou)
            row["coherence"] = c
            row["linewidth"] = 4.0 * F / c
        if "mandel_q" in outputs:
            row["mandel_q"] = observables.mandel_q(liou)
        row["solver_residual"] = resid
    except Exception as exc:  # a failed grid point must not kill the sweep
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["wall_time_s"] = time.perf_counter() - t0
    return row


def _read_journal(path):
    done = {}
    if os.path.exists(path):
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                done[rec["key"]] = rec["row"]
    return done


def cmd_sweep(args):
    families = [f.strip() for f in (args.family or "").split(",") if f.strip()]
    if not families:
        raise InvalidParams("sweep needs --family (comma-separated list)")
    for f in families:
        Family(f)
    p_grid = _parse_grid(args.p_list if args.p_list is not None else
                         (str(args.p) if args.p is not None else None))
    if not p_grid:
        raise InvalidParams("sweep needs --p or --p-grid")
    d_grid = _parse_dims(args.dims)
    if not d_grid:
        raise InvalidParams("sweep needs --dims")
    outputs = frozenset(t.strip() for t in (args.outputs or "").split(",") if t.strip())
    if not outputs:
        raise InvalidParams("sweep needs a nonempty --outputs set")
    unknown = outputs - ALLOWED_OUTPUTS
    if unknown:
        raise InvalidParams(f"unknown outputs: {sorted(unknown)}")
    extra = {}
    for f in families:
        if f == "plambda":
            grid = _parse_grid(args.lam_list if args.lam_list is not None else
                               (str(args.lam) if args.lam is not None else "0"))
        elif f == "pq":
            grid = _parse_grid(args.q_list if args.q_list is not None else
                               (str(args.q) if args.q is not None else "0"))
        else:
            grid = [0.0]
        extra[f] = tuple(grid)
    spec = SweepSpec(families=tuple(families), p_grid=tuple(p_grid),
                     extra_grid=extra, d_grid=tuple(d_grid), outputs=outputs,
                     workers=_workers(args), seed=args.seed or 0)
    tasks = spec.tasks()
    print(f"sweep: {len(tasks)} grid points "
          f"({len(families)} families x {len(p_grid)} p x D-grid {len(d_grid)})",
          file=sys.stderr)
    if not args.out:
        raise InvalidParams("sweep needs --out CSV path")

    journal_path = args.out + ".journal"
    done = _read_journal(journal_path) if args.resume else {}
    pending = [t for t in tasks if _sweep_task_key(t) not in done]
    rows_by_key = dict(done)
    mode = "a" if (args.resume and os.path.exists(journal_path)) else "w"
    with open(journal_path, mode) as journal:
        if spec.workers > 1 and len(pending) > 1:
            with ProcessPoolExecutor(max_workers=spec.workers) as pool:
                results = pool.map(_sweep_row, [(t, outputs) for t in pending])
                for task, row in zip(pending, results):
                    rows_by_key[_sweep_task_key(task)] = row
                    journal.write(json.dumps({"key": _sweep_task_key(task),
                                              "row": row}) + "\n")
                    journal.flush()
        else:
            for task in pending:
                row = _sweep_row((task, outputs))
                rows_by_key[_sweep_task_key(task)] = row
                journal.write(json.dumps({"key": _sweep_task_key(task),
                                          "row": row}) + "\n")
                journal.flush()

    ordered = [rows_by_key[_sweep_task_key(t)] for t in tasks]
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in ordered:
            writer.writerow([str(row["D"]) if c == "D" else _fmt(row[c])
                             for c in CSV_COLUMNS])

    if "w_fit" in outputs:
        _write_fit_companion(args.out, spec, ordered)
    if args.gnuplot:
        _write_gnuplot(args.out)
    failures = [r for r in ordered if r["error"]]
    if failures:
        print(f"sweep: {len(failures)} grid points failed", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _write_fit_companion(out_path, spec, rows):
    path = out_path + ".fits.csv"
    groups = {}
    for r in rows:
        if r["error"] or r["coherence"] == "":
            continue
        key = (r["family"], r["p"], r["lambda"], r["q"])
        groups.setdefault(key, []).append((r["mu"], r["coherence"]))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["family", "p", "lambda", "q", "prefactor", "exponent",
                         "stderr_exponent"])
        for key, samples in groups.items():
            try:
                fit = verify.fit_power_law(samples)
            except InsufficientSamples:
                continue
            writer.writerow([key[0], _fmt(key[1]), _fmt(key[2]), _fmt(key[3]),
                             _fmt(fit.prefactor), _fmt(fit.exponent),
                             _fmt(fit.stderr_exponent)])


def _write_gnuplot(out_path):
    script = out_path + ".gp"
    with open(script, "w") as fh:
        fh.write(
            "set datafile separator ','\n"
            "set logscale xy\n"
            "set key autotitle columnhead\n"
            f"plot '{out_path}' using 5:8 with points title 'coherence vs D'\n")


# ---------------------------------------------------------------------------
# traces


def _trace_common(args, kind):
    params = _params_from_args(args)
    liou = liouvillian_for(params)
    obs = observables.compute_observables(liou)
    tmax = (args.tmax_coh if args.tmax_coh is not None else 10.0) / obs.linewidth
    num = args.num if args.num is not None else 200
    times = np.linspace(0.0, tmax, int(num))
    if kind == "g1":
        trace = observables.g1_trace(liou, times)
        ideal = analytics.ideal_g1(analytics.IdealBeam.from_observables(obs), times)
    else:
        trace = observables.g2_ps_trace(liou, times)
        ideal = np.ones_like(times)
    if (args.format or "csv") == "json":
        _emit({"schema": f"laserband/trace-{kind}/v1",
               "params": {"family": params.family.value, "p": params.p,
                          "lambda": params.lam, "q": params.q, "dim": params.dim},
               "linewidth": obs.linewidth,
               "times": [float(t) for t in trace.times],
               "values": [float(v) for v in trace.values],
               "ideal": [float(v) for v in ideal]}, args.out)
    else:
        dest = open(args.out, "w", newline="") if args.out and args.out != "-" else sys.stdout
        writer = csv.writer(dest)
        writer.writerow(["time", kind, "ideal"])
        for t, v, vi in zip(trace.times, trace.values, ideal):
            writer.writerow([_fmt(float(t)), _fmt(float(v)), _fmt(float(vi))])
        if dest is not sys.stdout:
            dest.close()
    if args.gnuplot and args.out and args.out != "-":
        _write_gnuplot(args.out)
    return EXIT_OK


def cmd_trace_g1(args):
    return _trace_common(args, "g1")


def cmd_trace_g2(args):
    return _trace_common(args, "g2ps")


# ---------------------------------------------------------------------------
# verify


def cmd_verify_oracle(args):
    report = verify.oracle_equivalence(seed=args.seed or 0)
    doc = {"schema": "laserband/verify-oracle/v1", "seed": report.seed,
           "tolerance": report.tolerance, "n_draws": len(report.draws),
           "passed": report.passed,
           "draws": [{"family": d.params.family.value, "p": d.params.p,
                      "lambda": d.params.lam, "q": d.params.q,
                      "dim": d.params.dim, "passed": d.passed}
                     for d in report.draws]}
    fail = report.first_failure
    if fail is not None:
        doc["first_failure"] = {"params": str(fail.params),
                                "diffs": {k: str(v) for k, v in fail.diffs.items()}}
    _emit(doc, args.out)
    return EXIT_OK if report.passed else EXIT_VERIFY_FAIL


def _fit_exponent(rows, attr):
    samples = [(r.dim, getattr(r, attr)) for r in rows]
    if all(v < 1e-12 for _, v in samples):
        return None  # machine-zero series: already converged
    return verify.loglog_slope(samples)


def cmd_verify_ss_pq(args):
    p = args.p if args.p is not None else 3.0
    dims = _parse_dims(args.dims) or [100, 200, 400]
    q_list = _parse_grid(args.q_list) if args.q_list else [args.q if args.q is not None else -1.0]
    results = []
    ok = True
    for q in q_list:
        params = ModelParams(family=Family.PQ, p=p, dim=dims[0], q=q)
        rows = pq_norm_diagnostics(params, dims)
        exps = {
            "loss_norm": _fit_exponent(rows, "loss_norm"),
            "gain_defect_norm": _fit_exponent(rows, "gain_defect_norm"),
            "pi_top_norm": _fit_exponent(rows, "pi_top_norm"),
            "generator_residual": _fit_exponent(rows, "generator_residual"),
        }
        gen_ok = exps["generator_residual"] is None or exps["generator_residual"] <= -1.5
        pi_ok = (exps["pi_top_norm"] is None or exps["gain_defect_norm"] is None
                 or exps["pi_top_norm"] < exps["gain_defect_norm"])
        ok = ok and gen_ok and pi_ok
        results.append({"q": q, "dims": dims, "exponents": exps,
                        "norms": [{"D": r.dim, "loss": r.loss_norm,
                                   "gain_defect": r.gain_defect_norm,
                                   "pi_top": r.pi_top_norm,
                                   "generator_residual": r.generator_residual}
                                  for r in rows],
                        "generator_exponent_leq_-1.5": gen_ok,
                        "pi_top_decays_faster": pi_ok})
    _emit({"schema": "laserband/verify-ss-pq/v1", "p": p, "passed": ok,
           "tolerance": {"generator_exponent": -1.5},
           "results": results}, args.out)
    return EXIT_OK if ok else EXIT_VERIFY_FAIL


def cmd_verify_cond4(args):
    dmax = args.dmax if args.dmax is not None else 250
    if dmax > 450:
        print("warning: cond4 beyond D=450 is outside the validated range",
              file=sys.stderr)
    d_list = [d for d in (50, 100, 150, 200, 250, 300, 350, 400, 450) if d <= dmax]
    seed = args.seed or 0
    p = args.p if args.p is not None else 4.1479
    doc = {"schema": "laserband/verify-cond4/v1", "seed": seed, "p": p,
           "d_list": d_list,
           "tolerance": {"exponent": (-0.5, 0.1), "prefactor": (0.9, 1.7)},
           "families": {}}
    ok = True
    for fam, kw in (("plambda", {"lam": 0.5}), ("pq", {"q": -1.0})):
        params_list = [ModelParams(family=Family(fam), p=p, dim=d, **kw)
                       for d in d_list]
        rep = verify.condition4_g2(params_list, n_starts=args.starts or 8, seed=seed)
        g1_max = [r.max_dev for r in rep.delta_g1]
        g1_decreasing = all(b < a for a, b in zip(g1_max, g1_max[1:]))
        if rep.fit_g2 is None:  # scaling fit needs >= 4 dims (dmax >= 200)
            exp_ok = pref_ok = False
        else:
            exp_ok = abs(rep.fit_g2.exponent + 0.5) <= 0.1
            pref_ok = 0.9 <= rep.fit_g2.prefactor <= 1.7
        ok = ok and g1_decreasing and exp_ok and pref_ok
        doc["families"][fam] = {
            "delta_g1": [{"D": r.dim, "max": r.max_dev, "arg_time": r.arg_time}
                         for r in rep.delta_g1],
            "delta_g1_decreasing": g1_decreasing,
            "delta_g2_global": [{"D": r.dim, "coherence": r.coherence,
                                 "max": r.max_dev, "arg_times": list(r.arg_times),
                                 "tau": r.tau} for r in rep.delta_g2],
            "delta_g2_corner": [{"D": r.dim, "max": r.max_dev,
                                 "arg_times": list(r.arg_times)}
                                for r in rep.delta_g2_corner],
            "fit_vs_coherence": None if rep.fit_g2 is None else {
                "prefactor": rep.fit_g2.prefactor,
                "exponent": rep.fit_g2.exponent,
                "stderr": rep.fit_g2.stderr_exponent},
            "fit_vs_coherence_global": None if rep.fit_g2_global is None else {
                "prefactor": rep.fit_g2_global.prefactor,
                "exponent": rep.fit_g2_global.exponent},
            "mse_inflation_bound": [{"D": d, "value": v}
                                    for d, v in rep.mse_inflation_bounds()],
            "exponent_ok": exp_ok, "prefactor_ok": pref_ok,
        }
    doc["passed"] = ok
    _emit(doc, args.out)
    return EXIT_OK if ok else EXIT_VERIFY_FAIL


def cmd_verify_regime(args):
    fam = args.family or "p"
    p_grid = _parse_grid(args.p_grid) or [1.0, 2.0, 3.0, 4.0, 5.0]
    dims = _parse_dims(args.dims) or [50, 71, 100, 141, 200, 283]
    rows = verify.regime_scan(Family(fam), p_grid, dims,
                              lam=args.lam or 0.0, q=args.q or 0.0)
    results = []
    ok = True
    for r in rows:
        guide = min(r.p + 1.0, 4.0)
        within = abs(r.exponent - guide) <= 0.3
        ok = ok and within
        results.append({"p": r.p, "exponent": r.exponent, "stderr": r.stderr,
                        "classification": r.classification, "guide": guide,
                        "within_0.3": within})
    _emit({"schema": "laserband/verify-regime/v1", "family": fam, "dims": dims,
           "tolerance": {"exponent_vs_min(p+1,4)": 0.3},
           "passed": ok, "points": results}, args.out)
    return EXIT_OK if ok else EXIT_VERIFY_FAIL


# ---------------------------------------------------------------------------
# fit


def cmd_fit(args):
    if not args.infile:
        raise InvalidParams("fit needs --in CSV path")
    xcol = args.x or "D"
    ycol = args.y or "coherence"
    samples = []
    with open(args.infile, newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                x = float(row[xcol])
                y = float(row[ycol])
            except (KeyError, ValueError):
                continue
            samples.append((x, y))
    window = None
    if args.window:
        lo, hi = args.window.split(":")
        window = (float(lo), float(hi))
    fit = verify.fit_power_law(samples, window=window,
                               fixed_exponent=args.fixed_exponent)
    _emit({"schema": "laserband/fit/v1", "x": xcol, "y": ycol,
           "window": list(window) if window else None,
           "prefactor": fit.prefactor, "exponent": fit.exponent,
           "stderr_exponent": fit.stderr_exponent,
           "runs_pvalue": fit.runs_pvalue,
           "n_samples": len(fit.samples)}, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser plumbing


def _add_model_flags(sp, dim_required=True):
    sp.add_argument("--family", type=str, default=None)
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument("--q", type=float, default=None)
    sp.add_argument("--dim", type=int, default=None, required=False)


def _add_common_flags(sp):
    sp.add_argument("--out", type=str, default=None)
    sp.add_argument("--format", type=str, choices=["csv", "json"], default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--config", type=str, default=None)
    sp.add_argument("--gnuplot", action="store_true")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="laserband",
        description="Heisenberg-limited laser model laboratory (band-resolved "
                    "superoperator numerics). NO_COLOR is honored trivially: "
                    "output is never colorized.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("observe", help="single-point beam observables")
    _add_model_flags(sp)
    _add_common_flags(sp)
    sp.set_defaults(fn=cmd_observe)

    sp = sub.add_parser("sweep", help="parameter sweep to CSV")
    _add_model_flags(sp)
    sp.add_argument("--p-grid", dest="p_list", type=str, default=None)
    sp.add_argument("--lambda-grid", dest="lam_list", type=str, default=None)
    sp.add_argument("--q-grid", dest="q_list", type=str, default=None)
    sp.add_argument("--dims", type=str, default=None)
    sp.add_argument("--outputs", type=str, default=None)
    sp.add_argument("--resume", action="store_true")
    _add_common_flags(sp)
    sp.set_defaults(fn=cmd_sweep)

    for name, fn in (("trace-g1", cmd_trace_g1), ("trace-g2", cmd_trace_g2)):
        sp = sub.add_parser(name, help=f"{name} over a time grid")
        _add_model_flags(sp)
        sp.add_argument("--tmax-coh", type=float, default=None,
                        help="horizon in coherence times 1/ell (default 10)")
        sp.add_argument("--num", type=int, default=None)
        _add_common_flags(sp)
        sp.set_defaults(fn=fn)

    vp = sub.add_parser("verify", help="verification suites")
    vsub = vp.add_subparsers(dest="suite", required=True)

    sp = vsub.add_parser("oracle")
    _add_common_flags(sp)
    sp.set_defaults(fn=cmd_verify_oracle)

    sp = vsub.add_parser("ss-pq")
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--q", type=float, default=None)
    sp.add_argument("--q-grid", dest="q_list", type=str, default=None)
    sp.add_argument("--dims", type=str, default=None)
    _add_common_flags(sp)
    sp.set_defaults(fn=cmd_verify_ss_pq)

    sp = vsub.add_parser("cond4")
    sp.add_argument("--dmax", type=int, default=None)
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--starts", type=int, default=None)
    _add_common_flags(sp)
    sp.set_defaults(fn=cmd_verify_cond4)

    sp = vsub.add_parser("regime")
    sp.add_argument("--family", type=str, default=None)
    sp.add_argument("--p-grid", dest="p_grid", type=str, default=None)
    sp.add_argument("--dims", type=str, default=None)
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument("--q", type=float, default=None)
    _add_common_flags(sp)
    sp.set_defaults(fn=cmd_verify_regime)

    sp = sub.add_parser("predict", help="closed-form predictions")
    sp.add_argument("target", nargs="?", default="coherence",
                    choices=["coherence", "optimal-p", "bound"])
    _add_model_flags(sp)
    sp.add_argument("--mu", type=float, default=None)
    _add_common_flags(sp)
    sp.set_defaults(fn=cmd_predict)

    sp = sub.add_parser("fit", help="power-law fit of CSV columns")
    sp.add_argument("--in", dest="infile", type=str, default=None)
    sp.add_argument("--x", type=str, default=None)
    sp.add_argument("--y", type=str, default=None)
    sp.add_argument("--window", type=str, default=None)
    sp.add_argument("--fixed-exponent", type=float, default=None)
    _add_common_flags(sp)
    sp.set_defaults(fn=cmd_fit)

    return ap


def _apply_config(args):
    """Fill still-unset flags from the TOML section named after the command."""
    if not getattr(args, "config", None):
        return args
    with open(args.config, "rb") as fh:
        config = tomllib.load(fh)
    if getattr(args, "suite", None):
        table = config.get(args.command, {}).get(args.suite, {})
    else:
        table = config.get(args.command, {})
    for key, value in table.items():
        attr = key.replace("-", "_")
        if attr == "lambda":
            attr = "lam"
        if hasattr(args, attr) and getattr(args, attr) in (None, False):
            setattr(args, attr, value)
    return args


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args)
        return args.fn(args)
    except USAGE_ERRORS as exc:
        _emit(_error_doc(exc), None)
        return EXIT_USAGE
    except OSError as exc:  # unreadable config, unwritable output, ...
        _emit(_error_doc(exc), None)
        return EXIT_USAGE
    except LaserbandError as exc:
        _emit(_error_doc(exc), None)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
