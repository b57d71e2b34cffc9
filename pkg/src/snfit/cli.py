"""Command-line front end.

    snfit <command> --input data.csv --response Fe --covariates BMI,LBM \
          --alphas 0,0.1,0.3,0.5,0.7,1 --hypothesis "BMI=0" --level 0.05 \
          --seed 42 --out report.json --format json

Commands: fit, test, are, influence, simulate, tune, qq, reldiff.
JSON is the canonical structured output; CSV emits two-dimensional
plot-feed tables.  Reports embed the config echo, seed and package
version so a run can be reproduced bit-identically; wall-clock time goes
to stderr only, keeping the report bytes deterministic.  SNFIT_THREADS
caps the worker count.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
import numpy as np

from . import __version__
from .asymptotics import are_table
from .dpd_fit import FitConfig, RegressionData, fit
from .errors import ConfigError, DataError, SnfitError
from .influence import if_curve
from .numerics import RngStream
from .simulate import SimConfig, run_bias_mse, run_level_power
from .sn_dist import ParamVector, SnParams, sn_quantile
from .tuning import iwj_select, targeted_select
from .wald import (fill_standard_errors, parse_hypothesis, significance_tests,
                   wald_statistic)

logger = logging.getLogger("snfit")

_DEFAULT_ARE_LAWS = "1,0;4,0;1,2;1,-2"


def load_csv(path: str, response_column: str, covariate_columns: list[str],
             intercept: bool = True) -> RegressionData:
    """Read an RFC-4180 CSV with a header row into RegressionData.

    Rows with a missing or non-numeric entry in any used column are
    dropped (and counted in a warning).  An intercept column of ones is
    prepended when ``intercept`` is true.
    """
    if not path:
        raise ConfigError("--input is required for this command")
    if not response_column:
        raise ConfigError("--response is required for this command")
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in [response_column] + covariate_columns:
            if col not in header:
                raise ConfigError(f"column {col!r} not found in {path} "
                                  f"(available: {header})")
        rows_y, rows_x, dropped = [], [], 0
        for row in reader:
            try:
                yv = float(row[response_column])
                xv = [float(row[c]) for c in covariate_columns]
            except (TypeError, ValueError):
                dropped += 1
                continue
            if not np.isfinite(yv) or not all(np.isfinite(v) for v in xv):
                dropped += 1
                continue
            rows_y.append(yv)
            rows_x.append(xv)
    if dropped:
        logger.warning("dropped %d rows with missing/non-numeric values", dropped)
    p = len(covariate_columns) + (1 if intercept else 0)
    if len(rows_y) < p + 3:
        raise DataError(f"only {len(rows_y)} usable rows; need at least {p + 3}")
    X = np.asarray(rows_x, dtype=float)
    names = list(covariate_columns)
    if intercept:
        X = np.column_stack([np.ones(len(rows_y)), X])
        names = ["intercept"] + names
    return RegressionData(X=X, y=np.asarray(rows_y, dtype=float),
                          column_names=names)


# ---------------------------------------------------------------- output

def _report(command: str, args: argparse.Namespace, results: dict,
            failures: list[str]) -> dict:
    # "out" and "verbose" do not affect the computation and would break
    # byte-identity of reports written to different destinations
    config_echo = {k: v for k, v in sorted(vars(args).items())
                   if k not in ("func", "out", "verbose") and v is not None}
    return {
        "command": command,
        "snfit_version": __version__,
        "seed": getattr(args, "seed", None),
        "config": config_echo,
        "results": results,
        "status": {"ok": not failures, "failures": failures},
    }


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return "" if v is None else str(v)


def _write(args, report: dict, rows: list[dict], fieldnames: list[str]) -> None:
    if args.format == "json":
        payload = json.dumps(report, indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k)) for k in fieldnames})
        payload = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


def _parse_alphas(text: str) -> tuple[float, ...]:
    try:
        alphas = tuple(float(a) for a in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse alphas {text!r}") from exc
    if not alphas or any(not 0.0 <= a <= 2.0 for a in alphas):
        raise ConfigError("alphas must lie in [0, 2]")
    return alphas


def _parse_triple(text: str, what: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse {what} {text!r}") from exc
    if len(parts) != 3:
        raise ConfigError(f"{what} needs three comma-separated numbers")
    return parts


# ---------------------------------------------------------------- commands

def cmd_fit(args) -> int:
    data = load_csv(args.input, args.response, args.covariates, args.intercept)
    alphas = _parse_alphas(args.alphas)
    levels = (args.level,)
    rows, failures = [], []
    convergence = {}
    for a in sorted(set(alphas)):
        try:
            res = fit(data, FitConfig(alpha=a))
            am = fill_standard_errors(res, data)
            tests = significance_tests(res, am, data.column_names, levels)
        except SnfitError as exc:
            failures.append(f"alpha={a:g}: {exc}")
            continue
        est = res.theta_hat.as_array()
        names = data.column_names + ["sigma", "gamma"]
        p = data.p
        for j, name in enumerate(names):
            if j < p:
                pv = tests[j].p_value          # coefficient = 0
            elif j == p:
                pv = None                      # no test attached to the scale
            else:
                pv = tests[-1].p_value         # symmetry: gamma = 0
            rows.append({"parameter": name, "alpha": a, "estimate": est[j],
                         "se": res.se[j], "p_value": pv})
        convergence[f"{a:g}"] = {
            "converged": res.converged, "n_iter": res.n_iter,
            "grad_norm": res.grad_norm, "objective": res.objective,
        }
    report = _report("fit", args, {"estimates": rows, "convergence": convergence},
                     failures)
    _write(args, report, rows, ["parameter", "alpha", "estimate", "se", "p_value"])
    return 2 if failures and rows else (1 if failures else 0)


def cmd_test(args) -> int:
    if not args.hypothesis:
        raise ConfigError("--hypothesis is required for the test command")
    data = load_csv(args.input, args.response, args.covariates, args.intercept)
    hyp = parse_hypothesis(args.hypothesis, data.column_names)
    alphas = _parse_alphas(args.alphas)
    rows, failures = [], []
    for a in sorted(set(alphas)):
        try:
            res = fit(data, FitConfig(alpha=a))
            am = fill_standard_errors(res, data)
            tr = wald_statistic(res, am, hyp, levels=(args.level,))
        except SnfitError as exc:
            failures.append(f"alpha={a:g}: {exc}")
            continue
        rows.append({"alpha": a, "statistic": tr.statistic, "df": tr.df,
                     "p_value": tr.p_value,
                     "reject": tr.reject_at[args.level]})
    report = _report("test", args,
                     {"hypothesis": hyp.description, "tests": rows}, failures)
    _write(args, report, rows, ["alpha", "statistic", "df", "p_value", "reject"])
    return 2 if failures and rows else (1 if failures else 0)


def cmd_are(args) -> int:
    alphas = _parse_alphas(args.alphas)
    if 0.0 not in alphas:
        alphas = (0.0,) + alphas
    laws = []
    for part in args.are_laws.split(";"):
        sg = part.split(",")
        if len(sg) != 2:
            raise ConfigError(f"cannot parse error law {part!r}; "
                              "expected 'sigma,gamma'")
        laws.append((float(sg[0]), float(sg[1])))
    rows = []
    results = {}
    for sigma, gamma in laws:
        table = are_table(SnParams(0.0, sigma, gamma), alphas, seed=args.seed)
        label = f"SN(0,{sigma:g},{gamma:g})"
        results[label] = {
            "alphas": list(table.alphas),
            "are": {comp: table.values[c].tolist()
                    for c, comp in enumerate(table.components)},
            "closed_form_beta": (table.closed_form_beta.tolist()
                                 if table.closed_form_beta is not None else None),
            "design": {"seed": table.design_seed, "n": table.design_n},
        }
        for c, comp in enumerate(table.components):
            for k, a in enumerate(table.alphas):
                rows.append({"error_law": label, "component": comp,
                             "alpha": a, "are": table.values[c, k]})
    report = _report("are", args, results, [])
    _write(args, report, rows, ["error_law", "component", "alpha", "are"])
    return 0


def cmd_influence(args) -> int:
    alphas = _parse_alphas(args.alphas)
    if args.theta:
        vals = [float(v) for v in args.theta.split(",")]
        if len(vals) < 3:
            raise ConfigError("--theta needs at least beta, sigma, gamma")
        theta = ParamVector(beta=np.asarray(vals[:-2]), sigma=vals[-2],
                            gamma=vals[-1])
        g = RngStream(args.seed, 0).generator()
        X = 1.0 + g.standard_normal((args.synthetic_n, theta.p))
        data = RegressionData(X=X, y=X @ theta.beta,
                              column_names=[f"x{j}" for j in range(theta.p)])
    elif args.input:
        data = load_csv(args.input, args.response, args.covariates, args.intercept)
        theta = None
    else:
        raise ConfigError("influence needs either --theta or --input")
    rows, failures = [], []
    results = {}
    names = data.column_names + ["sigma", "gamma"]
    for a in sorted(set(alphas)):
        try:
            th = theta if theta is not None else \
                fit(data, FitConfig(alpha=a)).theta_hat
            curve = if_curve(th, data, a, direction=args.direction, i0=args.i0,
                             n_points=args.grid_points)
        except SnfitError as exc:
            failures.append(f"alpha={a:g}: {exc}")
            continue
        results[f"{a:g}"] = {
            "contamination_points": curve.contamination_points.tolist(),
            "values": {nm: curve.values[:, j].tolist()
                       for j, nm in enumerate(names)},
        }
        for k, y0 in enumerate(curve.contamination_points):
            for j, nm in enumerate(names):
                rows.append({"alpha": a, "y": y0, "parameter": nm,
                             "influence": curve.values[k, j]})
    report = _report("influence", args, results, failures)
    _write(args, report, rows, ["alpha", "y", "parameter", "influence"])
    return 2 if failures and rows else (1 if failures else 0)


def _sim_config(args) -> SimConfig:
    laws = tuple(tuple(float(v) for v in part.split(","))
                 for part in args.covariate_laws.split(";"))
    cont = None
    if args.epsilon > 0:
        cont = SnParams(*_parse_triple(args.contamination, "contamination law"))
    return SimConfig(
        n=args.n, reps=args.reps,
        beta_true=tuple(float(v) for v in args.beta_true.split(",")),
        sigma_true=args.sigma_true, gamma_true=args.gamma_true,
        covariate_laws=laws, contamination_fraction=args.epsilon,
        contamination_error=cont, alphas=_parse_alphas(args.alphas),
        master_seed=args.seed)


def cmd_simulate(args) -> int:
    cfg = _sim_config(args)
    if args.sim_mode == "bias_mse":
        rep = run_bias_mse(cfg)
        rows = []
        for ia, a in enumerate(rep.alphas):
            for j, nm in enumerate(rep.parameter_names):
                rows.append({"alpha": a, "parameter": nm,
                             "bias": rep.bias[ia, j], "mse": rep.mse[ia, j],
                             "n_failed": int(rep.n_failed[ia])})
        fields = ["alpha", "parameter", "bias", "mse", "n_failed"]
    else:
        data_names = ["intercept"] + [f"x{j+1}" for j in range(len(cfg.covariate_laws))]
        hyp_text = args.hypothesis or "x1=2"
        hyp = parse_hypothesis(hyp_text, data_names)
        d = args.d if args.sim_mode == "power" else None
        rep = run_level_power(cfg, hyp, tau=args.level, contiguous_d=d)
        rows = [{"alpha": a, "rejection_rate": rep.rejection_rate[ia],
                 "mc_standard_error": rep.mc_standard_error[ia],
                 "n_failed": int(rep.n_failed[ia])}
                for ia, a in enumerate(rep.alphas)]
        fields = ["alpha", "rejection_rate", "mc_standard_error", "n_failed"]
    failures = [f"alpha={a:g}: failure rate above 5%"
                for a, bad in zip(rep.alphas, rep.invalid) if bad]
    report = _report("simulate", args, rep.to_dict(), failures)
    _write(args, report, rows, fields)
    return 2 if failures else 0


def cmd_tune(args) -> int:
    data = load_csv(args.input, args.response, args.covariates, args.intercept)
    if args.hypothesis:
        hyp = parse_hypothesis(args.hypothesis, data.column_names)
        trace = targeted_select(data, hyp, grid_size=args.grid_size,
                                pilot_alpha=args.pilot_alpha,
                                max_rounds=args.max_rounds)
    else:
        trace = iwj_select(data, grid_size=args.grid_size,
                           pilot_alpha=args.pilot_alpha,
                           max_rounds=args.max_rounds)
    final = trace.final_fit
    names = data.column_names + ["sigma", "gamma"]
    results = {
        "final_alpha": trace.final_alpha,
        "converged": trace.converged,
        "pilot_alpha": trace.pilot_alpha,
        "alpha_grid": trace.alpha_grid.tolist(),
        "chosen_alpha_per_iter": trace.chosen_alpha_per_iter,
        "amse_per_iter": [v.tolist() for v in trace.amse_values],
        "final_estimates": dict(zip(names, final.theta_hat.as_array().tolist())),
    }
    rows = [{"round": i + 1, "chosen_alpha": a}
            for i, a in enumerate(trace.chosen_alpha_per_iter)]
    report = _report("tune", args, results, [])
    _write(args, report, rows, ["round", "chosen_alpha"])
    return 0


def qq_points(residuals: np.ndarray, sigma: float, gamma: float):
    """Sorted residuals against the fitted-error-law quantiles.

    Theoretical quantiles are taken at (i + 0.5)/n under SN(0, sigma,
    gamma); returns (theoretical, empirical) arrays of length n.
    """
    resid = np.sort(np.asarray(residuals, dtype=float))
    n = resid.size
    params = SnParams(0.0, sigma, gamma)
    theo = np.array([sn_quantile((i + 0.5) / n, params) for i in range(n)])
    return theo, resid


def cmd_qq(args) -> int:
    data = load_csv(args.input, args.response, args.covariates, args.intercept)
    alphas = _parse_alphas(args.alphas)
    a = sorted(set(alphas))[0]
    res = fit(data, FitConfig(alpha=a))
    theo, resid = qq_points(res.residuals, res.theta_hat.sigma,
                            res.theta_hat.gamma)
    rows = [{"theoretical_quantile": t, "empirical_quantile": e}
            for t, e in zip(theo, resid)]
    report = _report("qq", args, {
        "alpha": a,
        "theoretical_quantile": theo.tolist(),
        "empirical_quantile": resid.tolist(),
    }, [])
    _write(args, report, rows, ["theoretical_quantile", "empirical_quantile"])
    return 0


def cmd_reldiff(args) -> int:
    def read_estimates(path):
        with open(path, encoding="utf-8") as fh:
            rep = json.load(fh)
        out = {}
        for row in rep["results"]["estimates"]:
            out[(row["parameter"], row["alpha"])] = row["estimate"]
        return out

    full = read_estimates(args.fit_full)
    clean = read_estimates(args.fit_clean)
    rows = []
    for (param, a), v_full in sorted(full.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if (param, a) not in clean or v_full == 0:
            continue
        rows.append({"parameter": param, "alpha": a,
                     "relative_difference": abs((v_full - clean[(param, a)]) / v_full)})
    report = _report("reldiff", args, {"relative_differences": rows}, [])
    _write(args, report, rows, ["parameter", "alpha", "relative_difference"])
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snfit",
        description="Robust skew-normal regression via density power divergence")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp, data=True):
        if data:
            sp.add_argument("--input", help="CSV file with a header row")
            sp.add_argument("--response", help="response column name")
            sp.add_argument("--covariates", type=lambda s: s.split(","),
                            default=[], help="comma-separated covariate columns")
            sp.add_argument("--no-intercept", dest="intercept",
                            action="store_false", help="do not prepend a column of ones")
        sp.add_argument("--alphas", default="0,0.1,0.3,0.5,0.7,1",
                        help="comma-separated tuning constants")
        sp.add_argument("--hypothesis", help="'name=value' or 'symmetry'")
        sp.add_argument("--level", type=float, default=0.05)
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("fit", help="estimates, SEs and significance tests per alpha")
    add_common(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("test", help="Wald-type test of one hypothesis per alpha")
    add_common(sp)
    sp.set_defaults(func=cmd_test)

    sp = sub.add_parser("are", help="asymptotic relative efficiency table")
    add_common(sp, data=False)
    sp.add_argument("--are-laws", default=_DEFAULT_ARE_LAWS,
                    help="semicolon-separated 'sigma,gamma' error laws")
    sp.set_defaults(func=cmd_are)

    sp = sub.add_parser("influence", help="influence curves on a contamination grid")
    add_common(sp)
    sp.add_argument("--theta", help="comma-separated beta...,sigma,gamma "
                    "(synthetic design mode)")
    sp.add_argument("--synthetic-n", type=int, default=100)
    sp.add_argument("--direction", choices=("single", "all"), default="single")
    sp.add_argument("--i0", type=int, default=0)
    sp.add_argument("--grid-points", type=int, default=400)
    sp.set_defaults(func=cmd_influence)

    sp = sub.add_parser("simulate", help="Monte-Carlo bias/MSE or level/power study")
    add_common(sp, data=False)
    sp.add_argument("--sim-mode", choices=("bias_mse", "level", "power"),
                    default="bias_mse")
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--reps", type=int, default=100)
    sp.add_argument("--epsilon", type=float, default=0.0,
                    help="contamination fraction")
    sp.add_argument("--contamination", default="-10,1,2",
                    help="contaminating law 'mu,sigma,gamma'")
    sp.add_argument("--beta-true", default="1,2,3")
    sp.add_argument("--sigma-true", type=float, default=1.0)
    sp.add_argument("--gamma-true", type=float, default=2.0)
    sp.add_argument("--covariate-laws", default="1,1;-1,1",
                    help="semicolon-separated 'mean,sd' per covariate")
    sp.add_argument("--d", type=float, default=1.5,
                    help="contiguous shift for power mode")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("tune", help="data-driven choice of alpha")
    add_common(sp)
    sp.add_argument("--grid-size", type=int, default=21)
    sp.add_argument("--pilot-alpha", type=float, default=0.5)
    sp.add_argument("--max-rounds", type=int, default=20)
    sp.set_defaults(func=cmd_tune)

    sp = sub.add_parser("qq", help="QQ-plot data for the fitted residuals")
    add_common(sp)
    sp.set_defaults(func=cmd_qq)

    sp = sub.add_parser("reldiff", help="relative differences between two fit reports")
    add_common(sp, data=False)
    sp.add_argument("--fit-full", required=True, help="JSON report of the full-data fit")
    sp.add_argument("--fit-clean", required=True, help="JSON report of the reduced fit")
    sp.set_defaults(func=cmd_reldiff)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr,
                        level=logging.DEBUG if getattr(args, "verbose", False)
                        else logging.INFO,
                        format="snfit: %(message)s")
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except (ConfigError, DataError) as exc:
        logger.error("%s", exc)
        return 1
    except SnfitError as exc:
        logger.error("%s", exc)
        return 1
    logger.info("wall clock: %.3f s", time.perf_counter() - t0)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
