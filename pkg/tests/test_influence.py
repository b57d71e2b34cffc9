import numpy as np
import pytest

from snfit.asymptotics import sandwich
from snfit.influence import (IfCurve, c_star, if_all, if_curve, if_single,
                             if_tail_limit, if2_test, lif, pif)
from snfit.numerics import RngStream
from snfit.sn_dist import ParamVector
from snfit.wald import chi2_quantile, coefficient_hypothesis


@pytest.fixture(scope="module")
def fig_setting(make_single_covariate):
    """Single covariate, theta = (3, 2, 2), x ~ N(1, 1)."""
    data, _ = make_single_covariate(n=100, beta=3.0, sigma=2.0, gamma=2.0,
                                    seed=21)
    theta = ParamVector(beta=np.array([3.0]), sigma=2.0, gamma=2.0)
    return data, theta


@pytest.fixture(scope="module")
def null_setting(make_single_covariate):
    """theta0 = (3, 1, 2) with the null beta = 3 true."""
    data, _ = make_single_covariate(n=100, beta=3.0, sigma=1.0, gamma=2.0,
                                    seed=22)
    theta0 = ParamVector(beta=np.array([3.0]), sigma=1.0, gamma=2.0)
    hyp = coefficient_hypothesis(0, 3.0, 3, name="x")
    return data, theta0, hyp


class TestIfSingle:
    def test_beta_block_vanishes_at_location(self, make_single_covariate):
        data, _ = make_single_covariate(n=80, gamma=0.0, seed=23)
        theta = ParamVector(beta=np.array([3.0]), sigma=1.0, gamma=0.0)
        mu = float(data.X[4, 0] * 3.0)
        iv = if_single(mu, 4, theta, data, 0.0)
        assert iv[0] == pytest.approx(0.0, abs=1e-10)

    def test_tail_limit(self, fig_setting):
        data, theta = fig_setting
        alpha = 0.5
        mu = float(data.X[0] @ theta.beta)
        limit = if_tail_limit(0, theta, data, alpha)
        at_40 = if_single(mu + 40 * theta.sigma, 0, theta, data, alpha)
        assert np.max(np.abs(at_40 - limit)) <= 1e-6
        at_neg = if_single(mu - 40 * theta.sigma, 0, theta, data, alpha)
        assert np.all(np.isfinite(at_neg))

    def test_unbounded_at_zero_bounded_at_one(self, fig_setting):
        data, theta = fig_setting
        mu = float(data.X[0] @ theta.beta)
        ks = np.arange(10, 51, 5)
        if0 = np.array([np.abs(if_single(mu + k * theta.sigma, 0, theta, data, 0.0))
                        for k in ks])
        assert np.all(np.diff(if0[:, 0]) > 0)   # beta component grows
        if1 = np.array([np.abs(if_single(mu + k * theta.sigma, 0, theta, data, 1.0))
                        for k in ks])
        limit = np.abs(if_tail_limit(0, theta, data, 1.0))
        assert np.all(if1[-1] <= limit + 1e-6)

    def test_index_validated(self, fig_setting):
        data, theta = fig_setting
        with pytest.raises(IndexError):
            if_single(0.0, data.n, theta, data, 0.3)


class TestIfAll:
    def test_linearity_against_single(self, fig_setting):
        data, theta = fig_setting
        alpha = 0.4
        rng = RngStream(3, 0).generator()
        y = data.X @ theta.beta + rng.standard_normal(data.n)
        total = if_all(y, theta, data, alpha)
        per_direction = np.array([if_single(float(y[i]), i, theta, data, alpha)
                                  for i in range(data.n)])
        assert np.allclose(total, data.n * per_direction.mean(axis=0),
                           rtol=1e-10, atol=1e-12)

    def test_degenerate_design_matches_single(self):
        from snfit.dpd_fit import RegressionData
        n = 12
        X = np.full((n, 1), 1.4)
        data = RegressionData(X=X, y=np.zeros(n))
        theta = ParamVector(beta=np.array([2.0]), sigma=1.0, gamma=1.0)
        y0 = 3.3
        total = if_all(np.full(n, y0), theta, data, 0.3)
        single = if_single(y0, 0, theta, data, 0.3)
        assert np.allclose(total, n * single, rtol=1e-12)

    def test_bounded_sweep(self, fig_setting):
        data, theta = fig_setting
        curve3 = if_curve(theta, data, 0.3, direction="all", n_points=60,
                          halfwidth_scales=50.0)
        assert np.all(np.isfinite(curve3.values))
        # the likelihood influence keeps growing where the robust one saturated
        curve0 = if_curve(theta, data, 0.0, direction="all", n_points=60,
                          halfwidth_scales=50.0)
        grow = np.abs(curve0.values[:, 0])
        assert grow[-1] > 2 * np.max(np.abs(curve3.values[:, 0]))

    def test_length_validated(self, fig_setting):
        data, theta = fig_setting
        with pytest.raises(ValueError):
            if_all(np.zeros(3), theta, data, 0.3)


class TestIfCurve:
    def test_default_grid_size(self, fig_setting):
        data, theta = fig_setting
        curve = if_curve(theta, data, 0.3, i0=9)
        assert curve.contamination_points.size == 400
        assert curve.values.shape == (400, 3)

    def test_validation(self):
        with pytest.raises(ValueError):
            IfCurve(np.array([1.0, 0.5]), np.zeros((2, 1)), "single", 0.3)
        with pytest.raises(ValueError):
            IfCurve(np.array([0.0, 1.0]), np.array([[np.inf], [0.0]]), "all", 0.3)


class TestIf2:
    def test_zero_influence_gives_zero(self, make_single_covariate):
        data, _ = make_single_covariate(n=80, gamma=0.0, seed=24)
        theta0 = ParamVector(beta=np.array([3.0]), sigma=1.0, gamma=0.0)
        hyp = coefficient_hypothesis(0, 3.0, 3)
        mu = float(data.X[4, 0] * 3.0)
        # at the location the beta influence vanishes and Q projects on beta
        val = if2_test((mu, 4), theta0, hyp, data, 0.0)
        assert val == pytest.approx(0.0, abs=1e-12)

    def test_nonnegative_on_grid(self, null_setting):
        data, theta0, hyp = null_setting
        am = sandwich(theta0, data, 0.5)
        mu = float(data.X[0] @ theta0.beta)
        for y0 in np.linspace(mu - 10, mu + 10, 25):
            assert if2_test((y0, 0), theta0, hyp, data, 0.5, am=am) >= 0.0

    def test_scalar_reduction(self, null_setting):
        data, theta0, hyp = null_setting
        alpha = 0.5
        am = sandwich(theta0, data, alpha)
        y0 = 5.5
        iv = if_single(y0, 0, theta0, data, alpha, psi=am.psi)
        expected = 2.0 * iv[0] ** 2 / am.sigma[0, 0]
        assert if2_test((y0, 0), theta0, hyp, data, alpha, am=am) == \
            pytest.approx(expected, rel=1e-10)

    def test_null_enforced(self, null_setting):
        data, theta0, hyp = null_setting
        off = ParamVector(beta=np.array([4.0]), sigma=1.0, gamma=2.0)
        with pytest.raises(ValueError):
            if2_test((0.0, 0), off, hyp, data, 0.5)


class TestCStar:
    def test_monte_carlo_oracle(self):
        # C*_r(s) = E[(2V - s)/s * 1{W > c}] with V ~ Poisson(s/2) and
        # W | V ~ chi-square(r + 2V)
        r, tau, s = 1, 0.05, 1.0
        crit = chi2_quantile(r, tau)
        g = RngStream(31415, 0).generator()
        n = 200_000
        v = g.poisson(s / 2.0, size=n)
        w = g.chisquare(r + 2 * v)
        draws = (2.0 * v - s) / s * (w > crit)
        mc = draws.mean()
        se = draws.std() / np.sqrt(n)
        assert c_star(s, r, tau) == pytest.approx(mc, abs=4 * se)

    def test_zero_shift_limit(self):
        from snfit.wald import chi2_sf
        r, tau = 2, 0.05
        crit = chi2_quantile(r, tau)
        expected = -chi2_sf(crit, r) + chi2_sf(crit, r + 2)
        assert c_star(0.0, r, tau) == pytest.approx(expected, abs=1e-14)

    def test_negative_s_rejected(self):
        with pytest.raises(ValueError):
            c_star(-1.0, 1, 0.05)


class TestPif:
    def test_composition_and_linearity(self, null_setting):
        data, theta0, hyp = null_setting
        alpha = 0.5
        am = sandwich(theta0, data, alpha)
        d = np.array([0.01, 0.0, 0.0])
        rng = RngStream(7, 0).generator()
        y = data.X @ theta0.beta + rng.standard_normal(data.n)
        M = hyp.jacobian_at(theta0)
        from snfit.wald import q_matrix
        Q = q_matrix(am.sigma, M)
        iv = if_all(y, theta0, data, alpha, psi=am.psi)
        s = float(d @ Q @ d)
        expected = c_star(s, hyp.r, 0.05) * float(d @ Q @ iv)
        val = pif(y, theta0, hyp, d, 0.05, data, alpha, am=am)
        assert val == pytest.approx(expected, rel=1e-12)
        # linear in the influence: doubling IF (at fixed s) doubles PIF
        assert c_star(s, hyp.r, 0.05) * float(d @ Q @ (2 * iv)) == \
            pytest.approx(2 * expected, rel=1e-12)

    def test_odd_in_shift_direction(self, null_setting):
        data, theta0, hyp = null_setting
        am = sandwich(theta0, data, 0.5)
        rng = RngStream(8, 0).generator()
        y = data.X @ theta0.beta + rng.standard_normal(data.n)
        d = np.array([0.01, 0.0, 0.0])
        plus = pif(y, theta0, hyp, d, 0.05, data, 0.5, am=am)
        minus = pif(y, theta0, hyp, -d, 0.05, data, 0.5, am=am)
        assert minus == pytest.approx(-plus, rel=1e-12)

    def test_bounded_over_grid(self, null_setting):
        data, theta0, hyp = null_setting
        alpha = 0.5
        am = sandwich(theta0, data, alpha)
        d = np.array([0.01, 0.0, 0.0])
        mu = float(np.mean(data.X @ theta0.beta))
        vals = [pif(np.full(data.n, y0), theta0, hyp, d, 0.05, data, alpha, am=am)
                for y0 in np.linspace(mu - 12, mu + 12, 40)]
        assert np.all(np.isfinite(vals))

    def test_tau_domain(self, null_setting):
        data, theta0, hyp = null_setting
        with pytest.raises(ValueError):
            pif(np.zeros(data.n), theta0, hyp, np.zeros(3), 1.5, data, 0.5)


def test_lif_identically_zero():
    assert lif() == 0.0
    assert lif(1.0, "anything", tau=0.05) == 0.0
