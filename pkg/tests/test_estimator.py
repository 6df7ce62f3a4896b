import numpy as np
import pytest
from sklearn.base import clone
from sklearn.model_selection import GridSearchCV

from eivreg.estimator import LowRankMatrixRegressor
from eivreg.simulate import TruthSpec, identity_cov_spec, simulate_dataset


def make_data(corruption="none", n=400, d=6, seed=0, w_std=0.0, rho=0.0):
    spec = identity_cov_spec(x_var=1.0, w_std=w_std, rho=rho, eps_std=0.05)
    truth = TruthSpec(d1=d, d2=d, mode="exact", r=2, scale=1.0)
    return simulate_dataset(truth, spec, n, corruption, seed=seed)


class TestSklearnCompat:
    def test_get_set_params_roundtrip(self):
        est = LowRankMatrixRegressor(penalty="mcp", lam=0.2, b=1.5)
        params = est.get_params()
        assert params["penalty"] == "mcp" and params["b"] == 1.5
        est2 = clone(est).set_params(lam=0.3)
        assert est2.lam == 0.3 and est2.penalty == "mcp"

    def test_grid_search_composes(self):
        data = make_data(n=200, d=4, seed=1)
        X = data.z.reshape(200, -1)
        gs = GridSearchCV(
            LowRankMatrixRegressor(penalty="nuclear", omega=2.0, matrix_shape=(4, 4)),
            {"lam": [0.05, 0.5]},
            cv=2,
        )
        gs.fit(X, data.y)
        assert gs.best_params_["lam"] in (0.05, 0.5)


class TestFitPredict:
    def test_recovers_clean_truth(self):
        data = make_data(n=600, d=6, seed=2)
        est = LowRankMatrixRegressor(penalty="scad", lam=0.05, omega=2.0)
        est.fit(data.z, data.y)
        err = np.linalg.norm(est.coef_ - data.theta_star, "fro")
        assert err <= 0.25
        assert est.rank_ <= 6
        pred = est.predict(data.x)
        assert pred.shape == (600,)
        resid = np.linalg.norm(pred - data.y) / np.linalg.norm(data.y)
        assert resid <= 0.5

    def test_additive_correction_beats_naive(self):
        data = make_data("additive", n=1500, d=6, seed=3, w_std=0.6)
        corrected = LowRankMatrixRegressor(
            penalty="scad", lam=0.1, omega=2.0, corruption="additive", noise_cov=0.36
        ).fit(data.z, data.y)
        naive = LowRankMatrixRegressor(
            penalty="scad", lam=0.1, omega=2.0, corruption="none"
        ).fit(data.z, data.y)
        err_c = np.linalg.norm(corrected.coef_ - data.theta_star, "fro")
        err_n = np.linalg.norm(naive.coef_ - data.theta_star, "fro")
        assert err_c < err_n

    def test_missing_data_via_nan(self):
        data = make_data("missing", n=1500, d=6, seed=4, rho=0.25)
        X = np.where(data.mask, np.nan, data.z)
        est = LowRankMatrixRegressor(
            penalty="nuclear", lam=0.1, omega=2.0, corruption="missing", missing_rate=0.25
        ).fit(X, data.y)
        err = np.linalg.norm(est.coef_ - data.theta_star, "fro")
        assert err <= 0.6
        est_auto = LowRankMatrixRegressor(
            penalty="nuclear", lam=0.1, omega=2.0, corruption="missing", missing_rate=None
        ).fit(X, data.y)
        assert np.linalg.norm(est_auto.coef_ - est.coef_, "fro") <= 0.2

    def test_huge_lambda_gives_zero(self):
        data = make_data(n=200, d=4, seed=5)
        est = LowRankMatrixRegressor(penalty="nuclear", lam=1e4, omega=5.0).fit(data.z, data.y)
        assert np.abs(est.coef_).max() <= 1e-10

    def test_vectorized_input_needs_shape(self):
        data = make_data(n=50, d=4, seed=6)
        X = data.z.reshape(50, -1)
        with pytest.raises(ValueError):
            LowRankMatrixRegressor().fit(X, data.y)
        est = LowRankMatrixRegressor(
            penalty="nuclear", lam=0.3, omega=2.0, matrix_shape=(4, 4)
        ).fit(X, data.y)
        assert est.coef_.shape == (4, 4)

    def test_additive_requires_noise_cov(self):
        data = make_data(n=50, d=4, seed=7)
        with pytest.raises(ValueError):
            LowRankMatrixRegressor(corruption="additive").fit(data.z, data.y)

    def test_default_omega_is_set(self):
        data = make_data(n=300, d=4, seed=8)
        est = LowRankMatrixRegressor(penalty="nuclear", lam=0.05).fit(data.z, data.y)
        assert est.omega_ > 0
