"""Wald-type tests of composite restrictions m(theta) = 0.

The statistic is W = n * m(th)' [M(th)' Sigma M(th)]^-1 m(th) with Sigma
the per-observation sandwich covariance, referred to a chi-square with
r = dim(m) degrees of freedom.  Also provides the noncentral chi-square
machinery for asymptotic power under contiguous alternatives.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammainc, gammaincc, gammaln

from .asymptotics import AsymptoticMatrices, sandwich, standard_errors
from .dpd_fit import FitResult, RegressionData
from .errors import HypothesisDegeneracyError, SeriesError
from .numerics import find_root
from .sn_dist import ParamVector

__all__ = [
    "HypothesisSpec",
    "TestResult",
    "coefficient_hypothesis",
    "symmetry_hypothesis",
    "parse_hypothesis",
    "chi2_cdf",
    "chi2_sf",
    "chi2_quantile",
    "noncentral_chi2_cdf",
    "q_matrix",
    "wald_statistic",
    "contiguous_power",
    "significance_tests",
    "fill_standard_errors",
]


def chi2_cdf(x: float, df: float) -> float:
    """P(chi2_df <= x) via the regularized lower incomplete gamma."""
    if x <= 0:
        return 0.0
    return float(gammainc(df / 2.0, x / 2.0))


def chi2_sf(x: float, df: float) -> float:
    """P(chi2_df > x) via the regularized upper incomplete gamma."""
    if x <= 0:
        return 1.0
    return float(gammaincc(df / 2.0, x / 2.0))


_quantile_cache: dict[tuple[float, float], float] = {}


def chi2_quantile(df: float, tau: float) -> float:
    """Upper-tau quantile of chi2_df by monotone root finding, cached."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    key = (float(df), float(tau))
    if key in _quantile_cache:
        return _quantile_cache[key]
    hi = max(4.0 * df, 10.0)
    while chi2_sf(hi, df) > tau:
        hi *= 2.0
    q = find_root(lambda x: chi2_sf(x, df) - tau, 0.0, hi, tol=1e-14)
    _quantile_cache[key] = q
    return q


def noncentral_chi2_cdf(x: float, df: int, delta: float,
                        tol: float = 1e-12, max_terms: int = 100_000) -> float:
    """cdf of the noncentral chi-square chi2_df(delta) at x.

    Poisson(delta/2)-weighted series of central cdfs; the truncation
    error is bounded by the unassigned Poisson mass, which is pushed
    below ``tol``.  At delta = 0 only the j = 0 term survives, so the
    series reduces exactly to the central cdf.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if delta == 0.0:
        return chi2_cdf(x, df)
    lam = delta / 2.0
    log_lam = np.log(lam)
    total = 0.0
    mass = 0.0
    for j in range(max_terms):
        w = np.exp(-lam + j * log_lam - gammaln(j + 1))
        total += w * chi2_cdf(x, df + 2 * j)
        mass += w
        if 1.0 - mass < tol and j >= lam:
            return float(total)
    raise SeriesError("noncentral chi-square series did not converge")


@dataclass(eq=False)
class HypothesisSpec:
    """Restrictions m(theta) = 0 with Jacobian M(theta) = d m'/d theta.

    ``m`` maps a ParamVector to an r-vector, ``M`` to a (p+2) x r matrix
    of full column rank at the evaluation points.
    """

    m: Callable[[ParamVector], np.ndarray]
    M: Callable[[ParamVector], np.ndarray]
    r: int
    description: str = ""

    def m_at(self, theta: ParamVector) -> np.ndarray:
        v = np.atleast_1d(np.asarray(self.m(theta), dtype=float))
        if v.size != self.r:
            raise ValueError(f"m(theta) returned {v.size} values, expected r={self.r}")
        return v

    def jacobian_at(self, theta: ParamVector) -> np.ndarray:
        M = np.asarray(self.M(theta), dtype=float)
        if M.ndim == 1:
            M = M[:, None]
        if M.shape != (theta.p + 2, self.r):
            raise ValueError(f"M(theta) has shape {M.shape}, expected "
                             f"{(theta.p + 2, self.r)}")
        sv = np.linalg.svd(M, compute_uv=False)
        if sv[-1] <= 1e-10 * max(sv[0], 1.0):
            raise HypothesisDegeneracyError(
                f"restriction Jacobian is rank deficient for {self.description!r}")
        return M


def coefficient_hypothesis(j: int, value: float, dim: int,
                           name: str | None = None) -> HypothesisSpec:
    """Scalar restriction theta_j = value (j indexes the full parameter)."""
    if not 0 <= j < dim:
        raise ValueError(f"index {j} outside parameter vector of length {dim}")
    e = np.zeros((dim, 1))
    e[j, 0] = 1.0
    label = name if name is not None else f"theta[{j}]"
    return HypothesisSpec(
        m=lambda th: np.array([th.as_array()[j] - value]),
        M=lambda th: e,
        r=1,
        description=f"{label} = {value:g}",
    )


def symmetry_hypothesis(dim: int) -> HypothesisSpec:
    """gamma = 0: the errors are symmetric (ordinary normal model)."""
    hyp = coefficient_hypothesis(dim - 1, 0.0, dim, name="gamma")
    hyp.description = "symmetry (gamma = 0)"
    return hyp


def parse_hypothesis(text: str, column_names: list[str]) -> HypothesisSpec:
    """Parse CLI syntax: either 'symmetry' or '<column>=<value>'."""
    from .errors import ConfigError

    dim = len(column_names) + 2
    text = text.strip()
    if text.lower() == "symmetry":
        return symmetry_hypothesis(dim)
    if "=" not in text:
        raise ConfigError(f"cannot parse hypothesis {text!r}; "
                          "expected 'name=value' or 'symmetry'")
    name, value_s = (part.strip() for part in text.split("=", 1))
    if name not in column_names:
        raise ConfigError(f"unknown coefficient {name!r}; "
                          f"available: {column_names}")
    try:
        value = float(value_s)
    except ValueError as exc:
        raise ConfigError(f"cannot parse null value {value_s!r}") from exc
    return coefficient_hypothesis(column_names.index(name), value, dim, name=name)


@dataclass(eq=False)
class TestResult:
    statistic: float
    df: int
    p_value: float
    reject_at: dict[float, bool]
    alpha: float
    description: str = ""


def q_matrix(sigma: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Q = M (M' Sigma M)^-1 M', the restriction-space precision."""
    inner = M.T @ sigma @ M
    inner = 0.5 * (inner + inner.T)
    cond = np.linalg.cond(inner)
    if not np.isfinite(cond) or cond > 1e12:
        raise HypothesisDegeneracyError(
            f"M' Sigma M is numerically singular (cond={cond:.3g})")
    return M @ np.linalg.solve(inner, M.T)


def wald_statistic(fit: FitResult, am: AsymptoticMatrices, hyp: HypothesisSpec,
                   levels: tuple[float, ...] = (0.05,)) -> TestResult:
    """W = n m' (M' Sigma M)^-1 m at the fitted parameter, with p-value.

    For a scalar coefficient restriction this reduces to
    n (theta_j - value)^2 / Sigma[j, j].
    """
    theta = fit.theta_hat
    n = fit.n
    mv = hyp.m_at(theta)
    M = hyp.jacobian_at(theta)
    inner = M.T @ am.sigma @ M
    inner = 0.5 * (inner + inner.T)
    cond = np.linalg.cond(inner)
    if not np.isfinite(cond) or cond > 1e12:
        raise HypothesisDegeneracyError(
            f"M' Sigma M is numerically singular (cond={cond:.3g})")
    w = float(n * mv @ np.linalg.solve(inner, mv))
    w = max(w, 0.0)
    p = chi2_sf(w, hyp.r)
    reject = {tau: w > chi2_quantile(hyp.r, tau) for tau in levels}
    return TestResult(statistic=w, df=hyp.r, p_value=p, reject_at=reject,
                      alpha=am.alpha, description=hyp.description)


def contiguous_power(theta0: ParamVector, hyp: HypothesisSpec, d: np.ndarray,
                     tau: float, am: AsymptoticMatrices) -> float:
    """Asymptotic power against theta0 + d/sqrt(n) at significance tau.

    Equals 1 - G(chi2 upper-tau quantile) where G is the cdf of a
    noncentral chi-square with r degrees of freedom and noncentrality
    d' Q d, Q = M (M' Sigma M)^-1 M'.
    """
    mv = hyp.m_at(theta0)
    if np.max(np.abs(mv)) > 1e-8:
        raise ValueError("theta0 must satisfy the null restriction m(theta0)=0")
    d = np.asarray(d, dtype=float)
    M = hyp.jacobian_at(theta0)
    Q = q_matrix(am.sigma, M)
    delta = float(d @ Q @ d)
    crit = chi2_quantile(hyp.r, tau)
    return 1.0 - noncentral_chi2_cdf(crit, hyp.r, delta)


def significance_tests(fit: FitResult, am: AsymptoticMatrices,
                       column_names: list[str] | None = None,
                       levels: tuple[float, ...] = (0.05,)) -> list[TestResult]:
    """One zero-coefficient test per regression coefficient plus symmetry."""
    p = fit.theta_hat.p
    dim = p + 2
    names = column_names if column_names else [f"x{j}" for j in range(p)]
    out = []
    for j in range(p):
        hyp = coefficient_hypothesis(j, 0.0, dim, name=names[j])
        out.append(wald_statistic(fit, am, hyp, levels))
    out.append(wald_statistic(fit, am, symmetry_hypothesis(dim), levels))
    return out


def fill_standard_errors(fit: FitResult, data: RegressionData) -> AsymptoticMatrices:
    """Compute the sandwich at the fitted parameter and fill fit.se."""
    am = sandwich(fit.theta_hat, data, fit.alpha)
    fit.se = standard_errors(am, fit.n)
    return am
