"""Influence diagnostics for the estimator and the Wald-type test.

First-order influence functions of the estimator under point
contamination in one or all observation directions, the second-order
influence of the test statistic, and the power influence function.  The
influence of the estimator stays bounded in the contamination point for
every alpha > 0, which is the robustness signature of the method; at
alpha = 0 it inherits the unbounded maximum-likelihood influence.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .asymptotics import AsymptoticMatrices, sandwich, xi_alpha
from .errors import SeriesError
from .sn_dist import ParamVector, score_matrix, sn_logpdf, SnParams
from .wald import HypothesisSpec, chi2_quantile, chi2_sf, q_matrix

__all__ = [
    "IfCurve",
    "if_single",
    "if_all",
    "if_curve",
    "if2_test",
    "pif",
    "lif",
    "c_star",
]

#: Default grid used by curve builders: 400 points spanning +/- 12 scales.
DEFAULT_GRID_POINTS = 400
DEFAULT_GRID_HALFWIDTH = 12.0


@dataclass(eq=False)
class IfCurve:
    """Influence values on a grid of contamination points.

    ``values`` has one row per grid point; columns are the p+2 parameter
    components (or a single column for scalar influence measures).
    """

    contamination_points: np.ndarray
    values: np.ndarray
    direction: str
    alpha: float
    i0: int | None = None

    def __post_init__(self):
        self.contamination_points = np.asarray(self.contamination_points, float)
        self.values = np.atleast_2d(np.asarray(self.values, float))
        if not np.all(np.diff(self.contamination_points) > 0):
            raise ValueError("grid must be strictly increasing")
        if self.direction not in ("single", "all"):
            raise ValueError("direction must be 'single' or 'all'")
        if self.alpha > 0 and not np.all(np.isfinite(self.values)):
            raise ValueError("influence values must be finite for alpha > 0")


def _psi(theta, data, alpha):
    return sandwich(theta, data, alpha).psi


def _bracket_single(y0, i0, theta, data, alpha):
    """u_{i0}(y0) f_{i0}(y0)^alpha - xi_{i0}, vectorized over y0."""
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    x_row = np.asarray(data.X[i0], dtype=float)
    X_rep = np.broadcast_to(x_row, (y0.size, x_row.size))
    u = score_matrix(y0, X_rep, theta)
    if alpha == 0:
        w = np.ones(y0.size)
    else:
        mu = float(x_row @ theta.beta)
        w = np.exp(alpha * sn_logpdf(y0, SnParams(mu, theta.sigma, theta.gamma)))
    return w[:, None] * u - xi_alpha(i0, theta, data, alpha)[None, :]


def if_single(y0: float, i0: int, theta: ParamVector, data, alpha: float,
              psi: np.ndarray | None = None) -> np.ndarray:
    """Influence of contamination at y0 in the i0-th direction only.

    Psi^-1 (1/n) [u_{i0}(y0) f_{i0}(y0)^alpha - xi_{i0}] via a symmetric
    solve.
    """
    if not 0 <= i0 < data.n:
        raise IndexError(f"i0 = {i0} outside 0..{data.n - 1}")
    if psi is None:
        psi = _psi(theta, data, alpha)
    b = _bracket_single(y0, i0, theta, data, alpha)[0] / data.n
    return np.linalg.solve(psi, b)


def if_all(y, theta: ParamVector, data, alpha: float,
           psi: np.ndarray | None = None) -> np.ndarray:
    """Influence of simultaneous contamination at y = (y_1, ..., y_n).

    Psi^-1 (1/n) sum_i [u_i(y_i) f_i(y_i)^alpha - xi_i].
    """
    y = np.asarray(y, dtype=float)
    if y.size != data.n:
        raise ValueError(f"need {data.n} contamination points, got {y.size}")
    if psi is None:
        psi = _psi(theta, data, alpha)
    u = score_matrix(y, data.X, theta)
    if alpha == 0:
        w = np.ones(data.n)
    else:
        from scipy.special import log_ndtr
        z = (y - data.X @ theta.beta) / theta.sigma
        logf = (np.log(2.0) - np.log(theta.sigma) - 0.5 * z * z
                - 0.5 * np.log(2 * np.pi) + log_ndtr(theta.gamma * z))
        w = np.exp(alpha * logf)
    b = (w[:, None] * u - _xi_matrix(theta, data, alpha)).mean(axis=0)
    return np.linalg.solve(psi, b)


def _xi_matrix(theta, data, alpha):
    """xi_i stacked for all i, shape (n, p+2)."""
    from .asymptotics import _kernels
    k = _kernels(theta.gamma, 1.0 + alpha)
    sig = theta.sigma
    p = data.p
    out = np.empty((data.n, p + 2))
    out[:, :p] = k["a"] * data.X / sig ** (1.0 + alpha)
    out[:, p] = k["b"] / sig ** (1.0 + alpha)
    out[:, p + 1] = k["c"] / sig ** alpha
    return out


def if_curve(theta: ParamVector, data, alpha: float, direction: str = "single",
             i0: int = 0, n_points: int = DEFAULT_GRID_POINTS,
             halfwidth_scales: float = DEFAULT_GRID_HALFWIDTH) -> IfCurve:
    """Influence curve on a grid centered at the i0-th (or mean) location."""
    psi = _psi(theta, data, alpha)
    if direction == "single":
        center = float(data.X[i0] @ theta.beta)
    else:
        center = float(np.mean(data.X @ theta.beta))
    grid = np.linspace(center - halfwidth_scales * theta.sigma,
                       center + halfwidth_scales * theta.sigma, n_points)
    if direction == "single":
        B = _bracket_single(grid, i0, theta, data, alpha) / data.n
        vals = np.linalg.solve(psi, B.T).T
        return IfCurve(grid, vals, "single", alpha, i0=i0)
    vals = np.empty((n_points, theta.p + 2))
    for k, y0 in enumerate(grid):
        vals[k] = if_all(np.full(data.n, y0), theta, data, alpha, psi=psi)
    return IfCurve(grid, vals, "all", alpha)


def if_tail_limit(i0: int, theta: ParamVector, data, alpha: float) -> np.ndarray:
    """Limit of if_single as the contamination point runs to +/- infinity.

    For alpha > 0 the score-times-density term dies off, leaving
    -Psi^-1 xi_{i0} / n.
    """
    if alpha <= 0:
        raise ValueError("the tail limit exists only for alpha > 0")
    psi = _psi(theta, data, alpha)
    return np.linalg.solve(psi, -xi_alpha(i0, theta, data, alpha) / data.n)


def _resolve_if(y_or_pair, theta0, data, alpha, psi=None):
    if isinstance(y_or_pair, tuple) and len(y_or_pair) == 2 \
            and np.ndim(y_or_pair[0]) == 0:
        y0, i0 = y_or_pair
        return if_single(float(y0), int(i0), theta0, data, alpha, psi=psi)
    return if_all(np.asarray(y_or_pair, dtype=float), theta0, data, alpha, psi=psi)


def if2_test(y_or_pair, theta0: ParamVector, hyp: HypothesisSpec, data,
             alpha: float, am: AsymptoticMatrices | None = None) -> float:
    """Second-order influence of the Wald-type statistic at the null.

    2 IF' Q IF with Q = M (M' Sigma M)^-1 M'.  The first-order influence
    of the statistic vanishes identically at the null, so it is not
    computed.
    """
    if np.max(np.abs(hyp.m_at(theta0))) > 1e-8:
        raise ValueError("theta0 must satisfy m(theta0) = 0")
    if am is None:
        am = sandwich(theta0, data, alpha)
    M = hyp.jacobian_at(theta0)
    Q = q_matrix(am.sigma, M)
    iv = _resolve_if(y_or_pair, theta0, data, alpha, psi=am.psi)
    return float(2.0 * iv @ Q @ iv)


def c_star(s: float, r: int, tau: float, tol: float = 1e-14,
           max_terms: int = 500) -> float:
    """The scalar factor C*_r(s) relating power influence to estimator influence.

    C*_r(s) = exp(-s/2) * sum_{v>=0} s^(v-1) 2^-v (2v - s)
              P(chi2_{r+2v} > chi2_{r,tau}) / v!

    The v = 0 term is simplified algebraically to
    -exp(-s/2) P(chi2_r > chi2_{r,tau}) (the apparent s^-1 singularity is
    removable), so s = 0 is handled exactly.  Terms are added until one
    falls below tol * (|partial sum| + 1e-300); hitting ``max_terms``
    raises SeriesError.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    crit = chi2_quantile(r, tau)
    damp = np.exp(-0.5 * s)
    total = -damp * chi2_sf(crit, r)
    coef = 0.5 * damp  # damp * s^(v-1) / (2^v v!) at v = 1
    for v in range(1, max_terms + 1):
        term = coef * (2.0 * v - s) * chi2_sf(crit, r + 2 * v)
        total += term
        if abs(term) < tol * (abs(total) + 1e-300):
            return float(total)
        coef *= s / (2.0 * (v + 1.0))
    raise SeriesError("c_star series hit the term cap without converging")


def pif(y, theta0: ParamVector, hyp: HypothesisSpec, d, tau: float, data,
        alpha: float, am: AsymptoticMatrices | None = None) -> float:
    """Power influence of contamination y against the contiguous shift d.

    C*_r(d' Q d) * d' Q IF(y); linear in the estimator influence and
    therefore bounded exactly when the estimator influence is.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    if np.max(np.abs(hyp.m_at(theta0))) > 1e-8:
        raise ValueError("theta0 must satisfy m(theta0) = 0")
    if am is None:
        am = sandwich(theta0, data, alpha)
    d = np.asarray(d, dtype=float)
    M = hyp.jacobian_at(theta0)
    Q = q_matrix(am.sigma, M)
    iv = _resolve_if(y, theta0, data, alpha, psi=am.psi)
    s = float(d @ Q @ d)
    return float(c_star(s, hyp.r, tau) * (d @ Q @ iv))


def lif(*_args, **_kwargs) -> float:
    """Level influence function: identically zero at every order.

    Exposed for API completeness; the level of the Wald-type test is
    insensitive to contiguous contamination, so this always returns 0.
    """
    return 0.0
