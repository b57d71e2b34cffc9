"""Asymptotic machinery for the minimum-divergence estimator.

Per-observation bread/meat matrices J and K, their averages Psi and
Omega, the sandwich covariance Sigma = Psi^-1 Omega Psi^-1, standard
errors, asymptotic relative efficiencies, and the closed forms available
when the skewness is zero (used as oracles by the test suite).

Everything reduces to nine scalar kernels: with the standardized score
pieces

    a(t) = t - gamma * lam(gamma t)
    b(t) = t^2 - 1 - gamma t * lam(gamma t)
    c(t) = t * lam(gamma t)

(lam = inverse Mills ratio) and s(t) the standard SN(0, 1, gamma)
density, every entry of J, K and xi is a first or second moment of
(a, b, c) under s^expo, scaled by powers of sigma and the design
moments.  The kernels depend only on (gamma, expo), so one quadrature
serves all observations.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import log_ndtr

from .errors import SingularityError
from .numerics import RngStream, integrate_real_line
from .sn_dist import ParamVector, SnParams, mills_ratio

if TYPE_CHECKING:  # pragma: no cover
    from .dpd_fit import RegressionData

__all__ = [
    "AsymptoticMatrices",
    "AreTable",
    "xi_alpha",
    "xi_bar",
    "j_matrix",
    "k_matrix",
    "sandwich",
    "standard_errors",
    "are_table",
    "closed_form_psi_omega_gamma0",
    "closed_form_sigma_gamma0",
    "closed_form_are_beta_gamma0",
]

_LOG2 = np.log(2.0)
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)

#: Fixed seed for the synthetic single-covariate design used by ARE tables.
ARE_DESIGN_SEED = 20240801


@dataclass(eq=False)
class AsymptoticMatrices:
    """Psi, Omega and the sandwich Sigma = Psi^-1 Omega Psi^-1 at one alpha."""

    psi: np.ndarray
    omega: np.ndarray
    sigma: np.ndarray
    alpha: float

    def __post_init__(self):
        for name in ("psi", "omega", "sigma"):
            m = np.asarray(getattr(self, name), dtype=float)
            scale = max(1.0, float(np.max(np.abs(m))))
            if np.max(np.abs(m - m.T)) > 1e-10 * scale:
                raise ValueError(f"{name} is not symmetric")
            setattr(self, name, m)
        eigs = np.linalg.eigvalsh(self.sigma)
        if eigs.min() < -1e-8 * max(np.trace(self.sigma), 1.0):
            raise ValueError("sigma is not positive semi-definite")


@lru_cache(maxsize=512)
def _kernels(gamma: float, expo: float, tol: float = 1e-11) -> dict:
    """First and second moments of (a, b, c) under s(t)^expo dt."""
    def f(t):
        lam = mills_ratio(gamma * t)
        a = t - gamma * lam
        b = t * t - 1.0 - gamma * t * lam
        c = t * lam
        s_pow = np.exp(expo * (_LOG2 - 0.5 * t * t - _LOG_SQRT_2PI
                               + log_ndtr(gamma * t)))
        return np.stack([a, b, c, a * a, b * b, c * c, a * b, a * c, b * c],
                        axis=-1) * s_pow[:, None]
    v = integrate_real_line(f, tol)
    return dict(zip(["a", "b", "c", "aa", "bb", "cc", "ab", "ac", "bc"], v))


def _assemble_matrix(k: dict, x_outer: np.ndarray, x_mean: np.ndarray,
                     sigma: float, prefactor: float) -> np.ndarray:
    """Build a (p+2) x (p+2) moment matrix from kernels and design moments.

    ``x_outer`` is (an average of) x x', ``x_mean`` the matching average
    of x.  The sigma powers restore the unstandardized score scale.
    """
    p = x_mean.size
    m = np.zeros((p + 2, p + 2))
    s = sigma
    m[:p, :p] = prefactor / s ** 2 * k["aa"] * x_outer
    m[:p, p] = m[p, :p] = prefactor / s ** 2 * k["ab"] * x_mean
    m[:p, p + 1] = m[p + 1, :p] = prefactor / s * k["ac"] * x_mean
    m[p, p] = prefactor / s ** 2 * k["bb"]
    m[p, p + 1] = m[p + 1, p] = prefactor / s * k["bc"]
    m[p + 1, p + 1] = prefactor * k["cc"]
    return m


def _xi_from_kernels(k: dict, x_row: np.ndarray, sigma: float,
                     alpha: float) -> np.ndarray:
    p = x_row.size
    out = np.empty(p + 2)
    out[:p] = k["a"] * x_row / sigma ** (1.0 + alpha)
    out[p] = k["b"] / sigma ** (1.0 + alpha)
    out[p + 1] = k["c"] / sigma ** alpha
    return out


def xi_alpha(i: int, theta: ParamVector, data, alpha: float,
             tol: float = 1e-11) -> np.ndarray:
    """Model-side score expectation xi_i = int u_i f_i^(1+alpha) dy."""
    k = _kernels(theta.gamma, 1.0 + alpha, tol)
    return _xi_from_kernels(k, np.asarray(data.X[i], dtype=float),
                            theta.sigma, alpha)


def xi_bar(theta: ParamVector, data, alpha: float,
           tol: float = 1e-11) -> np.ndarray:
    """Average of xi_i over the observations (used by the fit gradient)."""
    k = _kernels(theta.gamma, 1.0 + alpha, tol)
    return _xi_from_kernels(k, data.X.mean(axis=0), theta.sigma, alpha)


def j_matrix(i: int, theta: ParamVector, data, alpha: float,
             tol: float = 1e-11) -> np.ndarray:
    """J_i = int u_i u_i' f_i^(1+alpha) dy, the per-observation bread."""
    x = np.asarray(data.X[i], dtype=float)
    k = _kernels(theta.gamma, 1.0 + alpha, tol)
    return _assemble_matrix(k, np.outer(x, x), x, theta.sigma,
                            theta.sigma ** -alpha)


def k_matrix(i: int, theta: ParamVector, data, alpha: float,
             tol: float = 1e-11) -> np.ndarray:
    """K_i = int u_i u_i' f_i^(1+2 alpha) dy - xi_i xi_i', the meat."""
    x = np.asarray(data.X[i], dtype=float)
    k2 = _kernels(theta.gamma, 1.0 + 2.0 * alpha, tol)
    n2 = _assemble_matrix(k2, np.outer(x, x), x, theta.sigma,
                          theta.sigma ** (-2.0 * alpha))
    xi = xi_alpha(i, theta, data, alpha, tol)
    return n2 - np.outer(xi, xi)


def sandwich(theta: ParamVector, data, alpha: float,
             tol: float = 1e-11) -> AsymptoticMatrices:
    """Average Psi and Omega over the design, and Sigma via symmetric solves.

    Sigma is the per-observation asymptotic covariance of the estimator,
    i.e. the covariance of sqrt(n) (theta_hat - theta); standard errors
    divide the diagonal by n.
    """
    X = np.asarray(data.X, dtype=float)
    n, p = X.shape
    x_outer = X.T @ X / n
    x_mean = X.mean(axis=0)
    sig = theta.sigma

    kJ = _kernels(theta.gamma, 1.0 + alpha, tol)
    psi = _assemble_matrix(kJ, x_outer, x_mean, sig, sig ** -alpha)

    kN = _kernels(theta.gamma, 1.0 + 2.0 * alpha, tol)
    n2 = _assemble_matrix(kN, x_outer, x_mean, sig, sig ** (-2.0 * alpha))
    # mean over i of xi_i xi_i' expressed through the same design moments
    a1, b1, c1 = kJ["a"], kJ["b"], kJ["c"]
    xx = np.zeros((p + 2, p + 2))
    s1a = sig ** (1.0 + alpha)
    sa = sig ** alpha
    xx[:p, :p] = a1 * a1 * x_outer / s1a ** 2
    xx[:p, p] = xx[p, :p] = a1 * b1 * x_mean / s1a ** 2
    xx[:p, p + 1] = xx[p + 1, :p] = a1 * c1 * x_mean / (s1a * sa)
    xx[p, p] = b1 * b1 / s1a ** 2
    xx[p, p + 1] = xx[p + 1, p] = b1 * c1 / (s1a * sa)
    xx[p + 1, p + 1] = c1 * c1 / sa ** 2
    omega = n2 - xx

    cond = np.linalg.cond(psi)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularityError(f"bread matrix is numerically singular (cond={cond:.3g})")
    half = np.linalg.solve(psi, omega)
    sigma_mat = np.linalg.solve(psi, half.T).T
    sigma_mat = 0.5 * (sigma_mat + sigma_mat.T)
    return AsymptoticMatrices(psi=psi, omega=omega, sigma=sigma_mat, alpha=alpha)


def standard_errors(am: AsymptoticMatrices, n: int) -> np.ndarray:
    """sqrt(diag(Sigma)/n)."""
    d = np.diag(am.sigma).copy()
    tol = 1e-8 * max(np.trace(am.sigma), 1.0)
    if np.any(d < -tol):
        raise SingularityError("sandwich covariance has a negative diagonal entry")
    return np.sqrt(np.clip(d, 0.0, None) / n)


@dataclass(eq=False)
class AreTable:
    """Asymptotic relative efficiencies (percent) for one error law.

    ``values[c, k]`` is 100 * Sigma_0[c, c] / Sigma_alpha[c, c] at
    ``alphas[k]`` for component c in (beta, sigma, gamma).
    ``closed_form_beta`` holds the zero-skewness closed-form beta row for
    comparison whenever the error law has gamma = 0.
    """

    alphas: tuple[float, ...]
    components: tuple[str, str, str]
    values: np.ndarray
    error_params: SnParams
    design_seed: int
    design_n: int
    closed_form_beta: np.ndarray | None = None


def are_table(error_params: SnParams, alphas, x_law: tuple[float, float] = (1.0, 1.0),
              n_design: int = 10_000, seed: int = ARE_DESIGN_SEED) -> AreTable:
    """Efficiency of the estimator relative to alpha = 0, component-wise.

    Uses a fixed-seed synthetic single-covariate design with x drawn once
    from N(x_law[0], x_law[1]^2); the ratio is computed from the sandwich
    covariance at the true parameter.
    """
    if error_params.mu != 0:
        raise ValueError("error_params must have mu = 0")
    alphas = tuple(float(a) for a in alphas)
    if 0.0 not in alphas:
        raise ValueError("alphas must include 0")
    from .dpd_fit import RegressionData  # local import to avoid a cycle

    g = RngStream(seed, 0).generator()
    x = x_law[0] + x_law[1] * g.standard_normal(n_design)
    data = RegressionData(X=x[:, None], y=np.zeros(n_design), column_names=["x"])
    theta = ParamVector(beta=np.array([1.0]), sigma=error_params.sigma,
                        gamma=error_params.gamma)

    diags = {a: np.diag(sandwich(theta, data, a).sigma) for a in alphas}
    base = diags[0.0]
    values = np.empty((3, len(alphas)))
    for kx, a in enumerate(alphas):
        values[:, kx] = 100.0 * base / diags[a]
    closed = None
    if error_params.gamma == 0.0:
        closed = np.array([closed_form_are_beta_gamma0(a) for a in alphas])
    return AreTable(alphas=alphas, components=("beta", "sigma", "gamma"),
                    values=values, error_params=error_params,
                    design_seed=seed, design_n=n_design, closed_form_beta=closed)


# ----------------------------------------------------------------------
# Zero-skewness closed forms (single covariate, no intercept).
#
# With phi_a = (2 pi)^(-alpha/2) (1+alpha)^(-3/2), m2 = mean(x^2) and
# m1 = mean(x), the standardized matrices are
#
#   Psi~   = phi_a * [[m2, 0, sqrt(2/pi) m1], [0, (a^2+2)/(a+1), 0],
#                     [sqrt(2/pi) m1, 0, 2/pi]]
#   Omega~ = (2 pi)^-a * [[(1+2a)^-3/2 m2, 0, (1+2a)^-3/2 sqrt(2/pi) m1],
#                         [0, (1+2a)^-5/2 (4a^2+2) - a^2 (1+a)^-3, 0],
#                         [(1+2a)^-3/2 sqrt(2/pi) m1, 0, (2/pi)(1+2a)^-3/2]]
#
# and the unstandardized versions are sigma^-a S Psi~ S and
# sigma^-2a S Omega~ S with S = diag(1/sigma, 1/sigma, 1): the beta and
# scale scores carry a 1/sigma each, the skewness score none.
# ----------------------------------------------------------------------

def _phi_factor(alpha: float) -> float:
    return (2.0 * np.pi) ** (-alpha / 2.0) * (1.0 + alpha) ** -1.5


def closed_form_psi_omega_gamma0(x, sigma: float, alpha: float):
    """Closed-form Psi and Omega for gamma = 0 with a single covariate."""
    x = np.asarray(x, dtype=float)
    m2 = float(np.mean(x * x))
    m1 = float(np.mean(x))
    r2pi = np.sqrt(2.0 / np.pi)
    pa = _phi_factor(alpha)
    psi_std = np.array([
        [pa * m2, 0.0, pa * r2pi * m1],
        [0.0, pa * (alpha ** 2 + 2.0) / (alpha + 1.0), 0.0],
        [pa * r2pi * m1, 0.0, pa * 2.0 / np.pi],
    ])
    c = (2.0 * np.pi) ** -alpha
    om22 = c * ((1.0 + 2.0 * alpha) ** -2.5 * (4.0 * alpha ** 2 + 2.0)
                - alpha ** 2 * (1.0 + alpha) ** -3)
    om_cross = c * (1.0 + 2.0 * alpha) ** -1.5
    omega_std = np.array([
        [om_cross * m2, 0.0, om_cross * r2pi * m1],
        [0.0, om22, 0.0],
        [om_cross * r2pi * m1, 0.0, om_cross * 2.0 / np.pi],
    ])
    S = np.diag([1.0 / sigma, 1.0 / sigma, 1.0])
    psi = sigma ** -alpha * S @ psi_std @ S
    omega = sigma ** (-2.0 * alpha) * S @ omega_std @ S
    return psi, omega


def closed_form_sigma_gamma0(x, sigma: float, alpha: float) -> np.ndarray:
    """Sandwich covariance implied by the gamma = 0 closed forms."""
    psi, omega = closed_form_psi_omega_gamma0(x, sigma, alpha)
    half = np.linalg.solve(psi, omega)
    out = np.linalg.solve(psi, half.T).T
    return 0.5 * (out + out.T)


def closed_form_are_beta_gamma0(alpha: float) -> float:
    """Closed-form beta efficiency 100 (1+2 alpha)^(3/2) (1+alpha)^(-3)."""
    return 100.0 * (1.0 + 2.0 * alpha) ** 1.5 * (1.0 + alpha) ** -3
