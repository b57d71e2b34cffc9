"""Data-driven choice of the robustness tuning constant alpha.

The selection objective is an empirical estimate of the summed
asymptotic mean squared error at tuning constant alpha,

    amse(alpha) = ||theta_hat_alpha - pilot||^2
                  + trace(sandwich covariance at theta_hat_alpha) / n,

minimized over a grid of alphas in [0, 1].  The iterated scheme then
replaces the pilot by the chosen fit and repeats until the chosen alpha
stops moving, which removes the dependence on the initial pilot.  A
hypothesis-targeted variant restricts both terms to the coordinates a
test actually involves.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .asymptotics import sandwich
from .dpd_fit import FitConfig, FitResult, RegressionData, fit
from .errors import FitError, SingularityError
from .sn_dist import ParamVector
from .wald import HypothesisSpec

__all__ = ["TuningTrace", "empirical_amse", "iwj_select", "targeted_select"]

logger = logging.getLogger("snfit")

#: Default fit settings for grid evaluations: a slim multistart is enough
#: because successive grid points warm-start each other.
_GRID_FIT_GAMMAS = (-2.0, 0.0, 2.0)


@dataclass(eq=False)
class TuningTrace:
    alpha_grid: np.ndarray
    amse_values: list[np.ndarray]
    chosen_alpha_per_iter: list[float]
    pilot_alpha: float
    converged: bool
    final_alpha: float
    final_fit: FitResult


def _variance_term(fit_res: FitResult, data: RegressionData) -> float:
    am = sandwich(fit_res.theta_hat, data, fit_res.alpha)
    return float(np.trace(am.sigma)) / data.n


def empirical_amse(alpha: float, data: RegressionData, pilot: ParamVector,
                   fit_config: FitConfig | None = None) -> float:
    """Empirical summed AMSE of the fit at ``alpha`` against ``pilot``."""
    cfg = replace(fit_config, alpha=alpha) if fit_config is not None \
        else FitConfig(alpha=alpha)
    res = fit(data, cfg)
    diff = res.theta_hat.as_array() - pilot.as_array()
    return float(diff @ diff) + _variance_term(res, data)


def _fit_grid(data: RegressionData, grid: np.ndarray,
              fit_config: FitConfig | None):
    """Fit every grid alpha once (warm-started); failures are excluded."""
    base = fit_config if fit_config is not None else \
        FitConfig(alpha=0.0, multistart_gammas=_GRID_FIT_GAMMAS)
    fits: dict[float, FitResult] = {}
    variances: dict[float, float] = {}
    prev = None
    for a in grid:
        a = float(a)
        try:
            # multistart plus the neighboring solution as a warm start; the
            # warm start alone can follow a spurious basin near gamma = 0
            res = fit(data, replace(base, alpha=a), theta0=prev)
            variances[a] = _variance_term(res, data)
            fits[a] = res
            prev = res.theta_hat
        except (FitError, SingularityError) as exc:
            logger.warning("tuning grid point alpha=%.3f excluded: %s", a, exc)
    if not fits:
        raise FitError("every tuning grid point failed to fit")
    return fits, variances


def _select(data: RegressionData, grid_size: int, pilot_alpha: float,
            max_rounds: int, fit_config: FitConfig | None,
            coord_subset: np.ndarray | None) -> TuningTrace:
    grid = np.linspace(0.0, 1.0, grid_size)
    fits, variances = _fit_grid(data, grid, fit_config)
    alphas = sorted(fits)

    if coord_subset is None:
        def amse_of(a, pilot_arr):
            th = fits[a].theta_hat.as_array()
            d = th - pilot_arr
            return float(d @ d) + variances[a]
    else:
        sub_var = {}
        for a in alphas:
            am = sandwich(fits[a].theta_hat, data, a)
            sub_var[a] = float(np.trace(am.sigma[np.ix_(coord_subset,
                                                        coord_subset)])) / data.n

        def amse_of(a, pilot_arr):
            th = fits[a].theta_hat.as_array()
            d = (th - pilot_arr)[coord_subset]
            return float(d @ d) + sub_var[a]

    if float(pilot_alpha) in fits:
        pilot = fits[float(pilot_alpha)].theta_hat
    else:
        base = fit_config if fit_config is not None else \
            FitConfig(alpha=0.0, multistart_gammas=_GRID_FIT_GAMMAS)
        pilot = fit(data, replace(base, alpha=float(pilot_alpha))).theta_hat

    amse_rounds: list[np.ndarray] = []
    chosen_hist: list[float] = []
    converged = False
    final_alpha = None
    for _ in range(max_rounds):
        pilot_arr = pilot.as_array()
        amse = np.array([amse_of(a, pilot_arr) for a in alphas])
        amse_rounds.append(amse)
        chosen = alphas[int(np.argmin(amse))]
        chosen_hist.append(chosen)
        if len(chosen_hist) >= 2 and chosen == chosen_hist[-2]:
            converged = True
            final_alpha = chosen
            break
        if chosen in chosen_hist[:-1]:
            # cycle: keep the member with the smaller AMSE at its round
            prev_idx = chosen_hist.index(chosen)
            other = chosen_hist[-2]
            cand = {chosen: amse_rounds[-1][alphas.index(chosen)],
                    other: amse_rounds[-2][alphas.index(other)]}
            final_alpha = min(cand, key=cand.get)
            logger.warning("tuning oscillation detected; returning alpha=%.3f",
                           final_alpha)
            break
        pilot = fits[chosen].theta_hat
    if final_alpha is None:
        final_alpha = chosen_hist[-1]
    return TuningTrace(alpha_grid=grid, amse_values=amse_rounds,
                       chosen_alpha_per_iter=chosen_hist,
                       pilot_alpha=float(pilot_alpha), converged=converged,
                       final_alpha=float(final_alpha),
                       final_fit=fits[final_alpha])


def iwj_select(data: RegressionData, grid_size: int = 21,
               pilot_alpha: float = 0.5, max_rounds: int = 20,
               fit_config: FitConfig | None = None) -> TuningTrace:
    """Iterated pilot-updating AMSE minimization over an alpha grid."""
    return _select(data, grid_size, pilot_alpha, max_rounds, fit_config, None)


def targeted_select(data: RegressionData, hyp: HypothesisSpec,
                    grid_size: int = 21, pilot_alpha: float = 0.5,
                    max_rounds: int = 20,
                    fit_config: FitConfig | None = None) -> TuningTrace:
    """Like ``iwj_select`` but scoring only the hypothesis coordinates.

    The coordinates are the nonzero rows of the restriction Jacobian; the
    chosen alpha is then used to fit the whole model (the returned
    ``final_fit`` estimates every parameter).
    """
    theta_probe = ParamVector(beta=np.zeros(data.p) + 1.0, sigma=1.0, gamma=0.0)
    M = hyp.jacobian_at(theta_probe)
    support = np.flatnonzero(np.any(np.abs(M) > 1e-12, axis=1))
    if support.size == 0:
        raise ValueError("restriction Jacobian has empty row support")
    if support.size == data.p + 2:
        return _select(data, grid_size, pilot_alpha, max_rounds, fit_config, None)
    return _select(data, grid_size, pilot_alpha, max_rounds, fit_config, support)
