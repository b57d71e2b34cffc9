import numpy as np
import pytest
from scipy.integrate import quad

from snfit.asymptotics import (AsymptoticMatrices, are_table,
                               closed_form_are_beta_gamma0,
                               closed_form_psi_omega_gamma0,
                               closed_form_sigma_gamma0, j_matrix, k_matrix,
                               sandwich, standard_errors, xi_alpha)
from snfit.dpd_fit import RegressionData
from snfit.errors import SingularityError
from snfit.numerics import RngStream
from snfit.sn_dist import ParamVector, SnParams, score, sn_pdf, sn_sample


class TestXi:
    def test_zero_at_alpha_zero(self, make_single_covariate):
        data, theta = make_single_covariate()
        xi = xi_alpha(3, theta, data, 0.0)
        assert np.allclose(xi, 0.0, atol=1e-8)

    def test_gamma0_closed_form(self, make_single_covariate):
        # at gamma = 0 only the scale component survives:
        # xi = (0, -alpha (2 pi)^(-alpha/2) (1+alpha)^(-3/2) / sigma^(1+alpha), 0)
        data, _ = make_single_covariate()
        alpha, sigma = 0.4, 1.7
        theta = ParamVector(beta=np.array([3.0]), sigma=sigma, gamma=0.0)
        xi = xi_alpha(0, theta, data, alpha)
        expected2 = (-alpha * (2 * np.pi) ** (-alpha / 2)
                     * (1 + alpha) ** -1.5 / sigma ** (1 + alpha))
        assert xi[0] == pytest.approx(0.0, abs=1e-10)
        assert xi[1] == pytest.approx(expected2, rel=1e-9)
        assert xi[2] == pytest.approx(0.0, abs=1e-10)

    def test_sigma_scaling(self, make_single_covariate):
        data, _ = make_single_covariate()
        alpha = 0.3
        th1 = ParamVector(beta=np.array([3.0]), sigma=1.0, gamma=1.5)
        th2 = ParamVector(beta=np.array([3.0]), sigma=2.0, gamma=1.5)
        xi1 = xi_alpha(0, th1, data, alpha)
        xi2 = xi_alpha(0, th2, data, alpha)
        scale = np.array([2.0 ** -(1 + alpha), 2.0 ** -(1 + alpha), 2.0 ** -alpha])
        assert np.allclose(xi2, xi1 * scale, rtol=1e-10)

    def test_brute_force_quadrature(self, make_single_covariate):
        data, _ = make_single_covariate()
        theta = ParamVector(beta=np.array([3.0]), sigma=1.3, gamma=1.3)
        alpha = 0.4
        i = 5
        mu = float(data.X[i, 0] * 3.0)
        p = SnParams(mu, 1.3, 1.3)
        brute = np.array([
            quad(lambda y, c=c: score(y, data.X[i], theta)[c]
                 * sn_pdf(y, p) ** (1 + alpha),
                 mu - 25 * 1.3, mu + 25 * 1.3, limit=300)[0]
            for c in range(3)])
        assert np.allclose(xi_alpha(i, theta, data, alpha), brute,
                           rtol=1e-8, atol=1e-12)


class TestJK:
    def test_k_equals_j_at_alpha_zero(self, make_single_covariate):
        data, theta = make_single_covariate()
        J = j_matrix(2, theta, data, 0.0)
        K = k_matrix(2, theta, data, 0.0)
        assert np.allclose(J, K, atol=1e-8)

    def test_exact_symmetry(self, make_single_covariate):
        data, theta = make_single_covariate()
        J = j_matrix(0, theta, data, 0.7)
        assert np.array_equal(J, J.T)
        K = k_matrix(0, theta, data, 0.7)
        assert np.array_equal(K, K.T)

    def test_j_brute_force(self, make_single_covariate):
        data, _ = make_single_covariate()
        theta = ParamVector(beta=np.array([3.0]), sigma=1.3, gamma=1.3)
        alpha = 0.4
        i = 7
        mu = float(data.X[i, 0] * 3.0)
        p = SnParams(mu, 1.3, 1.3)
        brute = np.empty((3, 3))
        for a in range(3):
            for b in range(3):
                brute[a, b] = quad(
                    lambda y, a=a, b=b: score(y, data.X[i], theta)[a]
                    * score(y, data.X[i], theta)[b]
                    * sn_pdf(y, p) ** (1 + alpha),
                    mu - 25 * 1.3, mu + 25 * 1.3, limit=300)[0]
        assert np.allclose(j_matrix(i, theta, data, alpha), brute,
                           rtol=1e-8, atol=1e-12)

    def test_k_variance_monte_carlo(self, make_single_covariate):
        # K equals the covariance of f^alpha * u under the model; check one
        # case against 10^6 simulated draws, entrywise within 4 MC errors
        data, _ = make_single_covariate()
        theta = ParamVector(beta=np.array([3.0]), sigma=1.0, gamma=1.2)
        alpha = 0.4
        i = 1
        x = data.X[i]
        mu = float(x @ theta.beta)
        p = SnParams(mu, theta.sigma, theta.gamma)
        n = 1_000_000
        y = sn_sample(n, p, RngStream(515, 0))
        from snfit.sn_dist import score_matrix
        u = score_matrix(y, np.broadcast_to(x, (n, 1)), theta)
        w = sn_pdf(y, p) ** alpha
        v = w[:, None] * u
        centered = v - v.mean(axis=0)
        k_mc = centered.T @ centered / n
        prod_sd = np.einsum("ni,nj->ijn", centered, centered).std(axis=2)
        K = k_matrix(i, theta, data, alpha)
        assert np.all(np.abs(K - k_mc) <= 4 * prod_sd / np.sqrt(n) + 1e-12)


@pytest.fixture(scope="module")
def design():
    g = RngStream(606, 0).generator()
    x = 1.0 + g.standard_normal(400)
    return RegressionData(X=x[:, None], y=np.zeros(400), column_names=["x"])


class TestSandwichClosedForms:
    @pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0])
    def test_psi_omega_match_at_unit_scale(self, design, alpha):
        theta = ParamVector(beta=np.array([2.0]), sigma=1.0, gamma=0.0)
        am = sandwich(theta, design, alpha)
        psi_cf, omega_cf = closed_form_psi_omega_gamma0(design.X[:, 0], 1.0, alpha)
        assert np.allclose(am.psi, psi_cf, atol=1e-8)
        assert np.allclose(am.omega, omega_cf, atol=1e-8)

    @pytest.mark.parametrize("alpha", [0.1, 0.5])
    def test_psi_omega_match_general_scale(self, design, alpha):
        # exercises the per-component sigma powers of the closed form
        theta = ParamVector(beta=np.array([2.0]), sigma=2.0, gamma=0.0)
        am = sandwich(theta, design, alpha)
        psi_cf, omega_cf = closed_form_psi_omega_gamma0(design.X[:, 0], 2.0, alpha)
        assert np.allclose(am.psi, psi_cf, rtol=1e-8)
        assert np.allclose(am.omega, omega_cf, rtol=1e-8)

    def test_sigma_entries_match_reference_forms(self, design):
        # sigma11, sigma13 and sigma22 have simple closed expressions;
        # the quadrature sandwich must reproduce them at sigma = 1
        alpha = 0.5
        x = design.X[:, 0]
        m1, sxx = x.mean(), x.var()
        theta = ParamVector(beta=np.array([2.0]), sigma=1.0, gamma=0.0)
        S = sandwich(theta, design, alpha).sigma
        s11 = (1 + 2 * alpha) ** -1.5 * (1 + alpha) ** 3 / sxx
        s13 = -np.sqrt(np.pi / 2) * m1 * (1 + 2 * alpha) ** -1.5 \
            * (1 + alpha) ** 3 / sxx
        s22 = (1 + alpha) ** 5 / (alpha ** 2 + 2) ** 2 * (
            (1 + 2 * alpha) ** -2.5 * (4 * alpha ** 2 + 2)
            - alpha ** 2 * (1 + alpha) ** -3)
        assert S[0, 0] == pytest.approx(s11, rel=1e-6)
        assert S[0, 2] == pytest.approx(s13, rel=1e-6)
        assert S[1, 1] == pytest.approx(s22, rel=1e-6)
        assert np.allclose(S, closed_form_sigma_gamma0(x, 1.0, alpha), rtol=1e-8)

    def test_zero_pattern(self, design):
        theta = ParamVector(beta=np.array([2.0]), sigma=1.0, gamma=0.0)
        S = sandwich(theta, design, 0.3).sigma
        for i, j in [(0, 1), (1, 0), (1, 2), (2, 1)]:
            assert abs(S[i, j]) <= 1e-8

    def test_sigma22_free_of_design(self):
        # the scale-component variance does not depend on the x spread
        theta = ParamVector(beta=np.array([2.0]), sigma=1.0, gamma=0.0)
        vals = []
        for seed, scale in ((1, 1.0), (2, 3.0)):
            g = RngStream(seed, 0).generator()
            x = 1.0 + scale * g.standard_normal(300)
            d = RegressionData(X=x[:, None], y=np.zeros(300))
            vals.append(sandwich(theta, d, 0.6).sigma[1, 1])
        assert vals[0] == pytest.approx(vals[1], rel=1e-8)


class TestSandwich:
    def test_information_identity_at_alpha_zero(self, make_single_covariate):
        data, theta = make_single_covariate()
        am = sandwich(theta, data, 0.0)
        psi_inv = np.linalg.inv(am.psi)
        assert np.allclose(am.sigma, psi_inv, rtol=1e-6)

    def test_permutation_invariance(self, make_single_covariate):
        data, theta = make_single_covariate()
        perm = np.random.default_rng(5).permutation(data.n)
        shuffled = RegressionData(X=data.X[perm], y=data.y[perm],
                                  column_names=data.column_names)
        a = sandwich(theta, data, 0.4)
        b = sandwich(theta, shuffled, 0.4)
        assert np.allclose(a.psi, b.psi, atol=1e-12)
        assert np.allclose(a.omega, b.omega, atol=1e-12)

    def test_singular_bread_raises(self):
        x = np.ones(50)  # constant covariate duplicates the gamma direction
        data = RegressionData(X=x[:, None], y=np.zeros(50))
        theta = ParamVector(beta=np.array([1.0]), sigma=1.0, gamma=0.0)
        with pytest.raises(SingularityError):
            sandwich(theta, data, 0.3)

    def test_validation(self):
        good = np.eye(3)
        with pytest.raises(ValueError):
            AsymptoticMatrices(psi=np.array([[1.0, 2.0], [0.0, 1.0]]),
                               omega=np.eye(2), sigma=np.eye(2), alpha=0.1)
        with pytest.raises(ValueError):
            AsymptoticMatrices(psi=good, omega=good, sigma=-good, alpha=0.1)


class TestStandardErrors:
    def test_direct_values(self):
        am = AsymptoticMatrices(psi=np.eye(3), omega=np.eye(3),
                                sigma=np.diag([4.0, 1.0, 9.0]), alpha=0.0)
        assert np.allclose(standard_errors(am, 100), [0.2, 0.1, 0.3])

    def test_root_n_scaling(self):
        am = AsymptoticMatrices(psi=np.eye(2), omega=np.eye(2),
                                sigma=np.diag([2.0, 3.0]), alpha=0.0)
        assert np.allclose(standard_errors(am, 200),
                           standard_errors(am, 100) / np.sqrt(2.0))

    def test_finite_positive_on_fitted_model(self, std_fit):
        _, res, _ = std_fit
        assert res.se is not None
        assert np.all(np.isfinite(res.se)) and np.all(res.se > 0)


ARE_ALPHAS = (0.0, 0.1, 0.3, 0.5, 0.7, 1.0)


@pytest.fixture(scope="module")
def tables():
    laws = {"sn_1_0": SnParams(0, 1, 0), "sn_4_0": SnParams(0, 4, 0),
            "sn_1_2": SnParams(0, 1, 2), "sn_1_m2": SnParams(0, 1, -2)}
    return {k: are_table(p, ARE_ALPHAS) for k, p in laws.items()}


class TestAreTable:
    ALPHAS = ARE_ALPHAS

    def test_alpha_zero_is_100(self, tables):
        for t in tables.values():
            assert np.allclose(t.values[:, 0], 100.0, atol=1e-12)

    def test_scale_invariance(self, tables):
        assert np.allclose(tables["sn_1_0"].values, tables["sn_4_0"].values,
                           atol=1e-6)

    def test_beta_gamma_identity_at_zero_skewness(self, tables):
        t = tables["sn_1_0"]
        assert np.allclose(t.values[0], t.values[2], atol=1e-6)

    def test_monotone_decreasing_in_alpha(self, tables):
        for t in tables.values():
            diffs = np.diff(t.values, axis=1)
            assert np.all(diffs <= 1e-9)

    def test_reflection_symmetry_in_gamma(self, tables):
        assert np.allclose(tables["sn_1_2"].values, tables["sn_1_m2"].values,
                           atol=1e-9)

    def test_reference_beta_value(self, tables):
        # 98.75 at alpha = 0.1 for the symmetric law
        assert abs(tables["sn_1_0"].values[0, 1] - 98.75) <= 0.7

    def test_closed_form_beta_row(self, tables):
        t = tables["sn_1_0"]
        assert t.closed_form_beta is not None
        assert np.allclose(t.values[0], t.closed_form_beta, atol=5e-3)
        assert closed_form_are_beta_gamma0(1.0) == pytest.approx(64.95, abs=0.01)

    def test_requires_zero_location_and_alpha0(self):
        with pytest.raises(ValueError):
            are_table(SnParams(1.0, 1.0, 0.0), self.ALPHAS)
        with pytest.raises(ValueError):
            are_table(SnParams(0.0, 1.0, 0.0), (0.1, 0.5))
