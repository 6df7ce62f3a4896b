import numpy as np
import pytest

from eivreg.linalg import frobenius_norm
from eivreg.loss import (
    Covariance,
    CovarianceSpec,
    SurrogatePair,
    as_covariance,
    audit_curvature,
    build_additive_pair,
    build_missing_pair,
    build_uncorrected_pair,
    modified_taylor,
    regularity_params,
)
from eivreg.penalties import McpPenalty, NuclearPenalty
from eivreg.simulate import identity_cov_spec, simulate_dataset, TruthSpec


def identity_pair(d1, d2, upsilon=None):
    """Pair with gamma exactly the identity on vectorized matrices."""
    m = d1 * d2
    design = np.sqrt(m) * np.eye(m)
    ups = np.zeros(m) if upsilon is None else np.asarray(upsilon, float).ravel()
    return SurrogatePair(design, ups, d1, d2, "none")


class TestCovariance:
    def test_kinds_and_norms(self):
        c = Covariance.scaled_identity(2.0)
        assert c.opnorm() == 2.0 and c.lambda_min() == 2.0
        d = Covariance.diagonal([1.0, 3.0, 0.5])
        assert d.opnorm() == 3.0 and d.lambda_min() == 0.5
        s = Covariance.dense(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert s.lambda_max() == pytest.approx(3.0)
        assert s.lambda_min() == pytest.approx(1.0)

    def test_dense_requires_symmetry_psd(self):
        with pytest.raises(ValueError):
            Covariance.dense(np.array([[1.0, 2.0], [0.0, 1.0]]))
        with pytest.raises(ValueError):
            Covariance.dense(np.array([[1.0, 2.0], [2.0, 1.0]]))  # eigenvalue -1

    def test_sqrt_factor_reconstructs(self):
        mat = np.array([[2.0, 0.5], [0.5, 1.0]])
        c = Covariance.dense(mat)
        l = c.sqrt_factor()
        assert np.allclose(l @ l.T, mat, atol=1e-12)

    def test_as_covariance_dispatch(self):
        assert as_covariance(0.5).kind == "scaled_identity"
        assert as_covariance([1.0, 2.0]).kind == "diagonal"
        assert as_covariance(np.eye(2)).kind == "dense"


class TestAdditiveBuilder:
    def test_scalar_hand_value(self):
        z = np.array([[[1.0]], [[3.0]]])
        y = np.array([0.0, 0.0])
        pair = build_additive_pair(z, y, Covariance.scaled_identity(0.5))
        assert pair.gamma_dense()[0, 0] == pytest.approx(4.5)

    def test_zero_noise_reduces_to_clean_gram(self):
        rng = np.random.default_rng(0)
        z = rng.standard_normal((7, 2, 3))
        y = rng.standard_normal(7)
        pair = build_additive_pair(z, y, Covariance.scaled_identity(0.0))
        design = z.reshape(7, -1)
        assert np.allclose(pair.gamma_dense(), design.T @ design / 7, atol=1e-12)

    def test_zero_response_zero_upsilon(self):
        rng = np.random.default_rng(1)
        pair = build_additive_pair(rng.standard_normal((4, 2, 2)), np.zeros(4), 0.1)
        assert np.abs(pair.upsilon).max() == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            build_additive_pair(np.zeros((3, 2, 2)), np.zeros(4), 0.1)

    def test_gamma_symmetric(self):
        rng = np.random.default_rng(2)
        pair = build_additive_pair(
            rng.standard_normal((5, 3, 2)), rng.standard_normal(5), 0.3
        )
        g = pair.gamma_dense()
        assert np.abs(g - g.T).max() <= 1e-10


class TestMissingBuilder:
    def test_rho_zero_reduces_to_uncorrected(self):
        rng = np.random.default_rng(3)
        z = rng.standard_normal((6, 2, 2))
        y = rng.standard_normal(6)
        mask = np.zeros_like(z, dtype=bool)
        pair = build_missing_pair(z, mask, y, 0.0)
        naive = build_uncorrected_pair(z, y)
        assert np.allclose(pair.gamma_dense(), naive.gamma_dense(), atol=1e-12)
        assert np.allclose(pair.upsilon, naive.upsilon, atol=1e-12)

    def test_scalar_hand_value_and_unbiasedness_enumeration(self):
        # observed z=2 at rho=0.5: inflated to 4, gamma = 16 - 0.5*16 = 8;
        # averaging the observed/missing outcomes recovers x^2 = 4
        y = np.zeros(1)
        observed = build_missing_pair(np.array([[[2.0]]]), np.array([[[False]]]), y, 0.5)
        missing = build_missing_pair(np.array([[[0.0]]]), np.array([[[True]]]), y, 0.5)
        g_obs = observed.gamma_dense()[0, 0]
        g_mis = missing.gamma_dense()[0, 0]
        assert g_obs == pytest.approx(8.0)
        assert g_mis == pytest.approx(0.0)
        assert 0.5 * (g_obs + g_mis) == pytest.approx(4.0)

    def test_fully_missing_sample_contributes_nothing(self):
        rng = np.random.default_rng(4)
        z = rng.standard_normal((3, 2, 2))
        mask = np.zeros_like(z, dtype=bool)
        mask[1] = True
        z = np.where(mask, 0.0, z)
        y = rng.standard_normal(3)
        pair = build_missing_pair(z, mask, y, 0.25)
        kept = build_missing_pair(z[[0, 2]], mask[[0, 2]], y[[0, 2]], 0.25)
        # row 1 adds zeros to both sums; only the 1/n normalization differs
        assert np.allclose(pair.gamma_dense() * 3, kept.gamma_dense() * 2, atol=1e-12)
        assert np.allclose(pair.upsilon * 3, kept.upsilon * 2, atol=1e-12)

    def test_rho_validation(self):
        with pytest.raises(ValueError):
            build_missing_pair(np.zeros((1, 1, 1)), np.zeros((1, 1, 1), bool), np.zeros(1), 1.0)


class TestLossGradTaylor:
    def test_zero_theta_zero_loss(self):
        rng = np.random.default_rng(5)
        pair = build_uncorrected_pair(rng.standard_normal((5, 2, 3)), rng.standard_normal(5))
        assert pair.loss(np.zeros((2, 3))) == 0.0

    def test_identity_gamma_loss_is_half_frobenius(self):
        pair = identity_pair(2, 3)
        rng = np.random.default_rng(6)
        theta = rng.standard_normal((2, 3))
        assert pair.loss(theta) == pytest.approx(0.5 * frobenius_norm(theta) ** 2)
        assert np.allclose(pair.grad(theta), theta, atol=1e-12)

    def test_loss_matches_dense_quadratic(self):
        rng = np.random.default_rng(7)
        pair = build_additive_pair(
            rng.standard_normal((8, 3, 2)), rng.standard_normal(8), 0.2
        )
        theta = rng.standard_normal((3, 2))
        v = theta.ravel()
        expect = 0.5 * v @ pair.gamma_dense() @ v - pair.upsilon @ v
        assert pair.loss(theta) == pytest.approx(expect, abs=1e-10)

    def test_grad_at_zero_is_minus_upsilon(self):
        rng = np.random.default_rng(8)
        pair = build_uncorrected_pair(rng.standard_normal((5, 2, 2)), rng.standard_normal(5))
        assert np.allclose(pair.grad(np.zeros((2, 2))), -pair.upsilon.reshape(2, 2))

    def test_grad_matches_finite_differences(self):
        rng = np.random.default_rng(9)
        pair = build_additive_pair(
            rng.standard_normal((10, 2, 2)), rng.standard_normal(10), 0.3
        )
        theta = rng.standard_normal((2, 2))
        grad = pair.grad(theta)
        h = 1e-6
        fd = np.zeros_like(theta)
        for i in range(2):
            for j in range(2):
                e = np.zeros_like(theta)
                e[i, j] = h
                fd[i, j] = (pair.loss(theta + e) - pair.loss(theta - e)) / (2 * h)
        assert np.linalg.norm(fd - grad) / max(np.linalg.norm(grad), 1e-12) <= 1e-6

    def test_taylor_identities(self):
        rng = np.random.default_rng(10)
        pair = build_additive_pair(
            rng.standard_normal((6, 2, 3)), rng.standard_normal(6), 0.4
        )
        a, b = rng.standard_normal((2, 3)), rng.standard_normal((2, 3))
        assert pair.taylor_error(a, a) == 0.0
        # closed form equals the definitional evaluation
        definitional = pair.loss(a) - pair.loss(b) - np.sum(pair.grad(b) * (a - b))
        assert pair.taylor_error(a, b) == pytest.approx(definitional, abs=1e-10)
        assert pair.taylor_error(a, b) == pytest.approx(pair.taylor_error(b, a), abs=1e-10)

    def test_taylor_identity_gamma(self):
        pair = identity_pair(2, 2)
        rng = np.random.default_rng(11)
        a, b = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
        assert pair.taylor_error(a, b) == pytest.approx(0.5 * frobenius_norm(a - b) ** 2)

    def test_matrix_free_matches_dense_on_probes(self):
        rng = np.random.default_rng(12)
        for builder in ("additive", "missing"):
            if builder == "additive":
                pair = build_additive_pair(
                    rng.standard_normal((9, 3, 3)), rng.standard_normal(9), 0.2
                )
            else:
                z = rng.standard_normal((9, 3, 3))
                mask = rng.uniform(size=z.shape) < 0.3
                pair = build_missing_pair(np.where(mask, 0.0, z), mask, rng.standard_normal(9), 0.3)
            g = pair.gamma_dense()
            for _ in range(100):
                v = rng.standard_normal(9)
                assert np.abs(pair.apply_gamma(v, matrix_free=True) - g @ v).max() <= 1e-10


class TestModifiedTaylor:
    def test_nuclear_reduces_to_plain_taylor(self):
        rng = np.random.default_rng(13)
        pair = build_uncorrected_pair(rng.standard_normal((5, 2, 2)), rng.standard_normal(5))
        a, b = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
        pen = NuclearPenalty(0.5)
        assert modified_taylor(pair, pen, a, b) == pytest.approx(pair.taylor_error(a, b))

    def test_equal_arguments_zero(self):
        rng = np.random.default_rng(14)
        pair = build_uncorrected_pair(rng.standard_normal((5, 2, 2)), rng.standard_normal(5))
        a = rng.standard_normal((2, 2))
        assert modified_taylor(pair, McpPenalty(1.0, b=2.0), a, a) == pytest.approx(0.0)

    def test_mcp_lower_bound(self):
        rng = np.random.default_rng(15)
        pen = McpPenalty(1.0, b=2.0)
        pair = build_additive_pair(
            rng.standard_normal((8, 2, 2)), rng.standard_normal(8), 0.3
        )
        for _ in range(200):
            a, b = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
            bar = modified_taylor(pair, pen, a, b)
            plain = pair.taylor_error(a, b)
            assert bar >= plain - pen.mu / 2 * frobenius_norm(a - b) ** 2 - 1e-8


class TestRegularityParams:
    def test_alphas_identity_covariance(self):
        spec = identity_cov_spec(x_var=1.0, w_std=0.5, eps_std=0.1)
        p = regularity_params(spec, 5, 5, 100, "additive")
        assert p.alpha1 == pytest.approx(0.5)
        assert p.alpha2 == pytest.approx(0.25)
        assert p.alpha3 == pytest.approx(0.75)

    def test_tau_corr_additive_hand_value(self):
        spec = identity_cov_spec(x_var=1.0, w_std=0.5)
        p = regularity_params(spec, 5, 5, 100, "additive", c0=1.0)
        # corruption factor max{(1 + 0.0625)/1, 1} = 1.0625 times the size factor
        size = np.sqrt(25) * (np.log(5) + np.log(5)) / 100
        assert p.tau1 == pytest.approx(1.0625 * size)
        assert p.tau == p.tau2 == p.tau3 == p.tau1

    def test_tau_corr_missing_hand_value(self):
        spec = identity_cov_spec(x_var=1.0, rho=0.5)
        p = regularity_params(spec, 5, 5, 100, "missing", c0=1.0)
        size = np.sqrt(25) * (np.log(5) + np.log(5)) / 100
        assert p.tau1 == pytest.approx(16.0 * size)

    def test_phi_scales_with_truth_norm(self):
        spec = identity_cov_spec(x_var=1.0, w_std=0.5, eps_std=0.2)
        p1 = regularity_params(spec, 4, 4, 50, "additive", theta_star_fnorm=1.0)
        p2 = regularity_params(spec, 4, 4, 50, "additive", theta_star_fnorm=3.0)
        assert p2.phi == pytest.approx(3.0 * p1.phi)
        assert p1.phi == pytest.approx((1.0 + 0.25) * (1.0 + 0.2))

    def test_requires_positive_definite_sigma_x(self):
        spec = CovarianceSpec(
            sigma_x=Covariance.diagonal([1.0, 0.0]),
            sigma_w=Covariance.scaled_identity(0.0),
        )
        with pytest.raises(ValueError):
            regularity_params(spec, 1, 2, 10, "additive")


class TestCurvatureAudit:
    def test_identity_gamma_no_violations(self):
        pair = identity_pair(3, 3)
        params = regularity_params(identity_cov_spec(), 3, 3, 9, "none", c0=0.0)
        # alpha2 = 0.25 <= 0.5 = quadratic/2 on unit directions: exact identity
        report = audit_curvature(pair, params, trials=200, seed=0)
        assert report.violations["alg_rsc"] == 0

    def test_falsified_alpha_triggers_violations(self):
        rng = np.random.default_rng(16)
        pair = build_uncorrected_pair(rng.standard_normal((20, 3, 3)), rng.standard_normal(20))
        top = np.linalg.eigvalsh(pair.gamma_dense()).max()
        params = regularity_params(identity_cov_spec(x_var=10 * top), 3, 3, 20, "none", c0=0.0)
        report = audit_curvature(pair, params, trials=200, seed=1)
        assert report.violations["alg_rsc"] > 0
        assert not report.clean()

    def test_clean_well_conditioned_instance_passes(self):
        spec = identity_cov_spec(x_var=1.0, eps_std=0.1)
        truth = TruthSpec(d1=8, d2=8, mode="exact", r=2, scale=1.0)
        data = simulate_dataset(truth, spec, 1500, "none", seed=7)
        pair = build_uncorrected_pair(data.z, data.y)
        params = regularity_params(spec, 8, 8, 1500, "none", c0=1.0)
        report = audit_curvature(pair, params, trials=500, seed=2)
        assert report.clean()


class TestGradientNorms:
    def test_population_identity_is_exact_zero(self):
        rng = np.random.default_rng(17)
        theta = rng.standard_normal((2, 3))
        pair = identity_pair(2, 3, upsilon=theta.ravel())
        opnorm, maxabs = pair.gradient_norms_at(theta)
        assert opnorm <= 1e-12 and maxabs <= 1e-12

    def test_zero_truth_zero_response(self):
        rng = np.random.default_rng(18)
        pair = build_uncorrected_pair(rng.standard_normal((5, 2, 2)), np.zeros(5))
        opnorm, maxabs = pair.gradient_norms_at(np.zeros((2, 2)))
        assert opnorm == 0.0 and maxabs == 0.0

    def test_scaling_against_deviation_constant(self):
        # median op-norm over 50 replications within factor 5 of phi*sqrt(log(d1*d2)/n)
        spec = identity_cov_spec(x_var=1.0, w_std=0.5, eps_std=0.1)
        truth = TruthSpec(d1=10, d2=10, mode="exact", r=2, scale=1.0)
        n = 500
        norms = []
        for rep in range(50):
            data = simulate_dataset(truth, spec, n, "additive", seed=100 + rep)
            pair = build_additive_pair(data.z, data.y, spec.sigma_w)
            norms.append(pair.gradient_norms_at(data.theta_star)[0])
        params = regularity_params(spec, 10, 10, n, "additive", theta_star_fnorm=1.0)
        scale = params.phi * np.sqrt((np.log(10) + np.log(10)) / n)
        ratio = np.median(norms) / scale
        assert 0.2 <= ratio <= 5.0


class TestIndefiniteness:
    def test_corrected_gamma_indefinite_when_underdetermined(self):
        spec = identity_cov_spec(x_var=1.0, w_std=0.5, eps_std=0.1)
        truth = TruthSpec(d1=10, d2=10, mode="exact", r=2, scale=1.0)
        for seed in range(5):
            data = simulate_dataset(truth, spec, 50, "additive", seed=200 + seed)
            pair = build_additive_pair(data.z, data.y, spec.sigma_w)
            assert pair.min_eigenvalue() < 0


class TestUnbiasednessLight:
    def test_additive_mean_close_to_identity(self):
        # light version of the Monte-Carlo check; the acceptance suite runs it in full
        spec = identity_cov_spec(x_var=1.0, w_std=0.5, eps_std=0.1)
        truth = TruthSpec(d1=3, d2=3, mode="exact", r=1, scale=1.0)
        reps = 400
        acc = np.zeros((9, 9))
        for rep in range(reps):
            data = simulate_dataset(truth, spec, 100, "additive", seed=300 + rep, theta_star=np.eye(3))
            acc += build_additive_pair(data.z, data.y, spec.sigma_w).gamma_dense()
        err = np.abs(acc / reps - np.eye(9)).max()
        assert err <= 8.0 / np.sqrt(reps * 100)
