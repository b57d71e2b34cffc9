"""snfit: robust skew-normal regression via density power divergence.

Library surface re-exported here; the ``snfit`` console script in
``snfit.cli`` drives CSV fitting, testing, efficiency tables, influence
curves, simulations and tuning.
"""

__version__ = "0.1.0"

from .asymptotics import (AreTable, AsymptoticMatrices, are_table, sandwich,
                          standard_errors, xi_alpha)
from .dpd_fit import (FitConfig, FitResult, RegressionData, dpd_divergence,
                      fit, gradient, neg_loglik, objective)
from .influence import IfCurve, c_star, if_all, if_curve, if_single, if2_test, lif, pif
from .numerics import QuadratureRule, RngStream, find_root, integrate_real_line, owens_t
from .simulate import SimConfig, SimReport, generate_dataset, run_bias_mse, run_level_power
from .sn_dist import (ParamVector, SnParams, score, sn_cdf, sn_logpdf, sn_moments,
                      sn_pdf, sn_quantile, sn_sample)
from .tuning import TuningTrace, empirical_amse, iwj_select, targeted_select
from .wald import (HypothesisSpec, TestResult, coefficient_hypothesis,
                   contiguous_power, fill_standard_errors, significance_tests,
                   symmetry_hypothesis, wald_statistic)

__all__ = [
    "__version__",
    "AreTable", "AsymptoticMatrices", "are_table", "sandwich",
    "standard_errors", "xi_alpha",
    "FitConfig", "FitResult", "RegressionData", "dpd_divergence", "fit",
    "gradient", "neg_loglik", "objective",
    "IfCurve", "c_star", "if_all", "if_curve", "if_single", "if2_test",
    "lif", "pif",
    "QuadratureRule", "RngStream", "find_root", "integrate_real_line", "owens_t",
    "SimConfig", "SimReport", "generate_dataset", "run_bias_mse", "run_level_power",
    "ParamVector", "SnParams", "score", "sn_cdf", "sn_logpdf", "sn_moments",
    "sn_pdf", "sn_quantile", "sn_sample",
    "TuningTrace", "empirical_amse", "iwj_select", "targeted_select",
    "HypothesisSpec", "TestResult", "coefficient_hypothesis", "contiguous_power",
    "fill_standard_errors", "significance_tests", "symmetry_hypothesis",
    "wald_statistic",
]
