import numpy as np
import pytest

from snfit.dpd_fit import FitConfig, RegressionData, fit
from snfit.simulate import SimConfig, generate_dataset
from snfit.sn_dist import SnParams
from snfit.wald import fill_standard_errors

SLIM_GAMMAS = (-2.0, 0.0, 2.0)


@pytest.fixture(scope="session")
def make_dataset():
    """Factory for seeded skew-normal regression datasets."""

    def _make(n=150, beta=(1.0, 2.0, 3.0), sigma=1.0, gamma=2.0, seed=5,
              frac=0.0, contamination=None, laws=((1.0, 1.0), (-1.0, 1.0))):
        cfg = SimConfig(n=n, reps=1, beta_true=tuple(beta), sigma_true=sigma,
                        gamma_true=gamma, covariate_laws=tuple(laws),
                        contamination_fraction=frac,
                        contamination_error=contamination, master_seed=seed)
        return generate_dataset(cfg, 0)

    return _make


@pytest.fixture(scope="session")
def make_single_covariate():
    """Single-covariate, no-intercept design with x ~ N(1, 1)."""

    def _make(n=200, beta=3.0, sigma=2.0, gamma=2.0, seed=17):
        from snfit.numerics import RngStream
        from snfit.sn_dist import ParamVector, sn_sample

        g = RngStream(seed, 0).generator()
        x = 1.0 + g.standard_normal(n)
        eps = sn_sample(n, SnParams(0.0, sigma, gamma), g)
        data = RegressionData(X=x[:, None], y=x * beta + eps, column_names=["x"])
        theta = ParamVector(beta=np.array([beta]), sigma=sigma, gamma=gamma)
        return data, theta

    return _make


@pytest.fixture(scope="session")
def std_fit(make_dataset):
    """A converged fit at alpha = 0.3 with its sandwich, reused across tests."""
    data = make_dataset(n=200, seed=11)
    res = fit(data, FitConfig(alpha=0.3, multistart_gammas=SLIM_GAMMAS))
    am = fill_standard_errors(res, data)
    return data, res, am
