"""Monte-Carlo harness for bias/MSE of the estimator and level/power of the test.

Every replication owns the stream (master_seed, rep_index), so reports
are reproducible bit-for-bit regardless of worker count; aggregation
always runs in replication order.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._parallel import pmap
from .dpd_fit import FitConfig, RegressionData, fit, fit_alpha_path
from .errors import FitError, SingularityError
from .numerics import RngStream
from .sn_dist import ParamVector, SnParams, sn_sample
from .wald import HypothesisSpec, chi2_quantile, fill_standard_errors, wald_statistic

__all__ = ["SimConfig", "SimReport", "generate_dataset", "run_bias_mse",
           "run_level_power"]

logger = logging.getLogger("snfit")


@dataclass(frozen=True)
class SimConfig:
    """Design of one simulation study.

    Covariates are drawn as independent normals per ``covariate_laws``
    (an intercept column is always prepended); a seeded-shuffle fraction
    of the errors comes from ``contamination_error`` instead of
    SN(0, sigma_true, gamma_true).
    """

    n: int
    reps: int
    beta_true: tuple[float, ...] = (1.0, 2.0, 3.0)
    sigma_true: float = 1.0
    gamma_true: float = 2.0
    covariate_laws: tuple[tuple[float, float], ...] = ((1.0, 1.0), (-1.0, 1.0))
    contamination_fraction: float = 0.0
    contamination_error: SnParams | None = None
    alphas: tuple[float, ...] = (0.0, 0.1, 0.3, 0.5, 0.7, 1.0)
    master_seed: int = 0
    # fit settings (slim multistart; the alpha path warm-starts)
    fit_tol: float = 1e-8
    multistart_gammas: tuple[float, ...] = (-2.0, 0.0, 2.0)

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not 0.0 <= self.contamination_fraction < 0.5:
            raise ValueError("contamination fraction must lie in [0, 0.5)")
        if self.contamination_fraction > 0 and self.contamination_error is None:
            raise ValueError("contamination_error required when fraction > 0")
        if len(self.beta_true) != len(self.covariate_laws) + 1:
            raise ValueError("beta_true must have one entry per covariate "
                             "plus the intercept")
        if any(not 0.0 <= a <= 2.0 for a in self.alphas):
            raise ValueError("alphas must lie in [0, 2]")

    def theta_true(self) -> ParamVector:
        return ParamVector(beta=np.asarray(self.beta_true, dtype=float),
                           sigma=self.sigma_true, gamma=self.gamma_true)

    def fit_config(self, alpha: float) -> FitConfig:
        return FitConfig(alpha=alpha, tol=self.fit_tol,
                         multistart_gammas=self.multistart_gammas)

    def parameter_names(self) -> list[str]:
        return (["intercept"]
                + [f"x{j + 1}" for j in range(len(self.covariate_laws))]
                + ["sigma", "gamma"])


@dataclass(eq=False)
class SimReport:
    """Aggregates of one study; ``to_dict`` gives a JSON-ready payload."""

    mode: str
    alphas: tuple[float, ...]
    parameter_names: list[str]
    rep_count: int
    master_seed: int
    bias: np.ndarray | None = None        # (n_alphas, p+2)
    mse: np.ndarray | None = None         # (n_alphas, p+2)
    rejection_rate: np.ndarray | None = None   # (n_alphas,)
    mc_standard_error: np.ndarray | None = None
    n_failed: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    invalid: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    tau: float | None = None
    contiguous_d: float | None = None

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "alphas": list(self.alphas),
            "parameter_names": list(self.parameter_names),
            "rep_count": self.rep_count,
            "master_seed": self.master_seed,
            "n_failed": self.n_failed.tolist(),
            "invalid": self.invalid.tolist(),
        }
        if self.bias is not None:
            out["bias"] = {f"{a:g}": dict(zip(self.parameter_names, row.tolist()))
                           for a, row in zip(self.alphas, self.bias)}
            out["mse"] = {f"{a:g}": dict(zip(self.parameter_names, row.tolist()))
                          for a, row in zip(self.alphas, self.mse)}
        if self.rejection_rate is not None:
            out["rejection_rate"] = dict(zip((f"{a:g}" for a in self.alphas),
                                             self.rejection_rate.tolist()))
            out["mc_standard_error"] = dict(zip((f"{a:g}" for a in self.alphas),
                                                self.mc_standard_error.tolist()))
            out["tau"] = self.tau
            out["contiguous_d"] = self.contiguous_d
        return out


def generate_dataset(cfg: SimConfig, rep_index: int,
                     beta_override: np.ndarray | None = None) -> RegressionData:
    """One replication's data, fully determined by (master_seed, rep_index).

    Draw order: covariate columns, the contamination shuffle, clean
    errors, contaminated errors.  floor(fraction * n) rows (the first k
    after the shuffle) get errors from the contaminating law.
    """
    g = RngStream(cfg.master_seed, rep_index).generator()
    n = cfg.n
    cols = [mean + sd * g.standard_normal(n) for mean, sd in cfg.covariate_laws]
    X = np.column_stack([np.ones(n)] + cols)
    k = int(np.floor(cfg.contamination_fraction * n))
    contaminated = g.permutation(n)[:k]
    eps = sn_sample(n, SnParams(0.0, cfg.sigma_true, cfg.gamma_true), g)
    if k > 0:
        eps[contaminated] = sn_sample(k, cfg.contamination_error, g)
    beta = np.asarray(cfg.beta_true, dtype=float) if beta_override is None \
        else np.asarray(beta_override, dtype=float)
    names = ["intercept"] + [f"x{j + 1}" for j in range(len(cfg.covariate_laws))]
    return RegressionData(X=X, y=X @ beta + eps, column_names=names)


def run_bias_mse(cfg: SimConfig) -> SimReport:
    """Empirical bias and MSE of every parameter across the alpha grid.

    Failed or non-converged fits are excluded per alpha and counted; an
    alpha with more than 5% failures is flagged invalid.
    """
    alphas = tuple(sorted(set(float(a) for a in cfg.alphas)))
    theta_true = cfg.theta_true().as_array()
    dim = theta_true.size

    def one_rep(rep: int):
        data = generate_dataset(cfg, rep)
        est = {}
        try:
            path = fit_alpha_path(data, alphas, cfg.fit_config(alphas[0]))
        except FitError:
            return {a: None for a in alphas}
        for a in alphas:
            res = path.get(a)
            est[a] = res.theta_hat.as_array() if res is not None and res.converged \
                else None
        return est

    results = pmap(one_rep, range(cfg.reps))

    bias = np.full((len(alphas), dim), np.nan)
    mse = np.full((len(alphas), dim), np.nan)
    n_failed = np.zeros(len(alphas), dtype=int)
    for ia, a in enumerate(alphas):
        errors = [r[a] - theta_true for r in results if r[a] is not None]
        n_failed[ia] = cfg.reps - len(errors)
        if errors:
            err = np.vstack(errors)
            bias[ia] = err.mean(axis=0)
            mse[ia] = (err ** 2).mean(axis=0)
    invalid = n_failed > 0.05 * cfg.reps
    if invalid.any():
        logger.warning("bias/MSE report invalid at alphas %s (failure rate > 5%%)",
                       [a for a, bad in zip(alphas, invalid) if bad])
    return SimReport(mode="bias_mse", alphas=alphas,
                     parameter_names=cfg.parameter_names(), rep_count=cfg.reps,
                     master_seed=cfg.master_seed, bias=bias, mse=mse,
                     n_failed=n_failed, invalid=invalid)


def _shift_direction(cfg: SimConfig, hyp: HypothesisSpec) -> int:
    """Coefficient index moved under the contiguous alternative."""
    if hyp.r != 1:
        raise ValueError("power mode needs a scalar (r = 1) hypothesis")
    M = hyp.jacobian_at(cfg.theta_true())
    support = np.flatnonzero(np.abs(M[:, 0]) > 1e-12)
    if support.size != 1 or support[0] >= len(cfg.beta_true):
        raise ValueError("power mode needs a single-coefficient hypothesis "
                         "on a regression coefficient")
    return int(support[0])


def run_level_power(cfg: SimConfig, hyp: HypothesisSpec, tau: float = 0.05,
                    contiguous_d: float | None = None) -> SimReport:
    """Empirical rejection rate of the Wald-type test across alphas.

    Level mode (contiguous_d None) simulates under the null; power mode
    shifts the hypothesis coefficient by contiguous_d / sqrt(n).  Each
    rejection fraction is reported with its binomial Monte-Carlo
    standard error.
    """
    alphas = tuple(sorted(set(float(a) for a in cfg.alphas)))
    crit = chi2_quantile(hyp.r, tau)
    beta_override = None
    if contiguous_d is not None:
        j = _shift_direction(cfg, hyp)
        beta_override = np.asarray(cfg.beta_true, dtype=float)
        beta_override[j] += contiguous_d / np.sqrt(cfg.n)

    def one_rep(rep: int):
        data = generate_dataset(cfg, rep, beta_override=beta_override)
        out = {}
        try:
            path = fit_alpha_path(data, alphas, cfg.fit_config(alphas[0]))
        except FitError:
            return {a: None for a in alphas}
        for a in alphas:
            res = path.get(a)
            if res is None or not res.converged:
                out[a] = None
                continue
            try:
                am = fill_standard_errors(res, data)
                tr = wald_statistic(res, am, hyp, levels=(tau,))
                out[a] = bool(tr.statistic > crit)
            except (FitError, SingularityError):
                out[a] = None
        return out

    results = pmap(one_rep, range(cfg.reps))

    rate = np.full(len(alphas), np.nan)
    mc_se = np.full(len(alphas), np.nan)
    n_failed = np.zeros(len(alphas), dtype=int)
    for ia, a in enumerate(alphas):
        flags = [r[a] for r in results if r[a] is not None]
        n_failed[ia] = cfg.reps - len(flags)
        if flags:
            phat = float(np.mean(flags))
            rate[ia] = phat
            mc_se[ia] = float(np.sqrt(phat * (1.0 - phat) / len(flags)))
    invalid = n_failed > 0.05 * cfg.reps
    if invalid.any():
        logger.warning("level/power report invalid at alphas %s",
                       [a for a, bad in zip(alphas, invalid) if bad])
    return SimReport(mode="power" if contiguous_d is not None else "level",
                     alphas=alphas, parameter_names=cfg.parameter_names(),
                     rep_count=cfg.reps, master_seed=cfg.master_seed,
                     rejection_rate=rate, mc_standard_error=mc_se,
                     n_failed=n_failed, invalid=invalid, tau=tau,
                     contiguous_d=contiguous_d)
