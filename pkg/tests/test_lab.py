import json
import warnings

import numpy as np
import pytest
from scipy import stats

from conformal_ts import PredictionInterval
from conformal_ts.lab import (
    GENERATOR_DEFAULTS,
    ConstantStub,
    GeneratorSpec,
    KnnRegressor,
    KnnResidualScale,
    LinearAR,
    LinearQuantile,
    Metrics,
    coverage,
    generate,
    joint_coverage,
    lag_embed,
    make_forecaster,
    mean_width,
    miscoverage,
    rolling_coverage,
)
from conformal_ts.lab.generators import heteroscedastic_scale


class TestForecasters:
    def test_constant_data_matches_stub(self, rng):
        X = rng.normal(size=(50, 2))
        Y = np.full(50, 3.25)
        for model in (LinearAR(), KnnRegressor(5)):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                pred = model.fit(X, Y).predict(rng.normal(size=(7, 2)))
            np.testing.assert_allclose(pred, ConstantStub().fit(X, Y).predict(np.zeros((7, 2))),
                                       atol=1e-9)

    def test_noiseless_ar1_coefficients(self):
        y = np.empty(30)
        y[0] = 10.0
        for t in range(1, 30):
            y[t] = 0.3 + 0.7 * y[t - 1]
        d = lag_embed(y, 1)
        # closed-form least squares on the same rows
        A = np.column_stack([np.ones(len(d)), d.X[:, 0]])
        beta = np.linalg.solve(A.T @ A, A.T @ d.Y[:, 0])
        m = LinearAR().fit(d.X, d.Y)
        assert m.intercept_[0] == pytest.approx(beta[0], abs=1e-6)
        assert m.coef_[0, 0] == pytest.approx(beta[1], abs=1e-6)
        assert m.coef_[0, 0] == pytest.approx(0.7, abs=1e-6)
        assert m.intercept_[0] == pytest.approx(0.3, abs=1e-6)

    def test_singular_design_falls_back_to_ridge(self, rng):
        x = rng.normal(size=30)
        X = np.column_stack([x, 2 * x])
        with pytest.warns(RuntimeWarning, match="ridge"):
            m = LinearAR().fit(X, 3 * x)
        np.testing.assert_allclose(m.predict(X)[:, 0], 3 * x, atol=1e-4)

    def test_order_uses_most_recent_lags(self, rng):
        d = lag_embed(rng.normal(size=100), 3)
        a = LinearAR(order=1).fit(d.X, d.Y)
        b = LinearAR().fit(d.X[:, -1:], d.Y)
        np.testing.assert_allclose(a.predict(d.X), b.predict(d.X[:, -1:]))

    def test_knn_with_all_neighbours_is_global_mean(self, rng):
        X, Y = rng.normal(size=(25, 3)), rng.normal(size=25)
        pred = KnnRegressor(25).fit(X, Y).predict(rng.normal(size=(4, 3)))
        np.testing.assert_allclose(pred, Y.mean())

    def test_knn_one_neighbour_brute_force(self, rng):
        X, Y = rng.normal(size=(30, 2)), rng.normal(size=30)
        Q = rng.normal(size=(6, 2))
        nearest = np.argmin(((Q[:, None, :] - X[None]) ** 2).sum(axis=2), axis=1)
        np.testing.assert_allclose(KnnRegressor(1).fit(X, Y).predict(Q)[:, 0], Y[nearest])

    def test_residual_scale_is_positive(self, rng):
        X = rng.normal(size=(40, 1))
        u = KnnResidualScale(5).fit(X, np.zeros(40))(X)
        assert np.all(u > 0)

    def test_linear_quantile_orders_and_covers(self):
        d = generate(GeneratorSpec("heteroscedastic", {"n": 2000, "outlier_rate": 0.0}, seed=1))
        m = LinearQuantile(0.1, 0.9).fit(d.X, d.Y)
        lo, hi = m.predict_quantiles(d.X)
        assert np.all(lo <= hi)
        inside = np.mean((lo <= d.Y) & (d.Y <= hi))
        assert abs(inside - 0.8) < 0.05

    def test_linear_quantile_repairs_crossing(self):
        m = LinearQuantile(0.4, 0.6, n_iter=5)
        m.fit(np.arange(10.0), np.arange(10.0))
        m.beta_ = np.array([[0.0, 1.0], [0.0, -1.0]])
        lo, hi = m.predict_quantiles(np.linspace(-5, 15, 9))
        assert np.all(lo <= hi)

    def test_predict_before_fit(self):
        with pytest.raises(RuntimeError):
            LinearAR().predict([[1.0]])

    def test_registry(self):
        assert isinstance(make_forecaster("knn", k=3), KnnRegressor)
        with pytest.raises(ValueError, match="unknown forecaster"):
            make_forecaster("rnn")


class TestGenerators:
    def test_seed_reproducible(self):
        spec = GeneratorSpec("ar1", {"T": 300}, seed=9)
        np.testing.assert_array_equal(generate(spec), generate(spec))

    def test_json_round_trip(self):
        spec = GeneratorSpec("shift_series", {"changepoints": [[10, 2.0]]}, seed=3)
        assert GeneratorSpec.from_json(spec.to_json()) == spec
        assert json.loads(spec.to_json())["kind"] == "shift_series"

    @pytest.mark.parametrize("rho", [1.0, -1.0, 1.5])
    def test_rejects_nonstationary_rho(self, rho):
        with pytest.raises(ValueError):
            GeneratorSpec("ar1", {"rho": rho})

    def test_rejects_unknown_parameters(self):
        with pytest.raises(ValueError, match="unknown parameters"):
            GeneratorSpec("ar1", {"phi": 0.3})

    def test_iid_noise_moments(self):
        n, noise = 20000, 0.7
        d = generate(GeneratorSpec("iid_regression", {"n": n, "d": 3, "noise": noise}, seed=2))
        e = d.Y[:, 0] - d.X.sum(axis=1)
        assert abs(e.mean()) < 3 * noise / np.sqrt(n)
        # standard error of the sample variance for normal data is sigma^2 sqrt(2 / (n - 1))
        assert abs(e.var(ddof=1) - noise**2) < 3 * noise**2 * np.sqrt(2 / (n - 1))

    @pytest.mark.parametrize("rho", [0.0, 0.6, -0.4])
    def test_ar1_lag_one_autocorrelation(self, rho):
        y = generate(GeneratorSpec("ar1", {"T": 20000, "rho": rho}, seed=4))
        r = np.corrcoef(y[:-1], y[1:])[0, 1]
        assert abs(r - rho) < 4 / np.sqrt(20000)

    def test_zero_rho_is_white_noise(self):
        y = generate(GeneratorSpec("ar1", {"T": 5000, "rho": 0.0}, seed=5))
        assert stats.normaltest(y).pvalue > 1e-3
        assert abs(np.corrcoef(y[:-2], y[2:])[0, 1]) < 4 / np.sqrt(5000)

    def test_no_changepoints_is_stationary_series(self):
        a = generate(GeneratorSpec("shift_series", {"T": 400, "changepoints": []}, seed=8))
        b = generate(GeneratorSpec("ar1", {"T": 400}, seed=8))
        np.testing.assert_array_equal(a, b)

    def test_changepoint_moves_mean(self):
        y = generate(GeneratorSpec("shift_series", {"T": 4000, "changepoints": [[2000, 5.0]]}, seed=1))
        assert abs(y[:2000].mean()) < 0.3 and abs(y[2000:].mean() - 5.0) < 0.3

    def test_full_correlation_gives_identical_residual_ranks(self):
        ms = generate(GeneratorSpec("multi_horizon", {"n": 300, "correlation": 1.0}, seed=2))
        e = ms.targets - ms.signal
        ranks = np.argsort(np.argsort(e, axis=0), axis=0)
        for h in range(1, ms.horizon):
            np.testing.assert_array_equal(ranks[:, h], ranks[:, 0])

    def test_multi_horizon_correlation_parameter(self):
        ms = generate(GeneratorSpec("multi_horizon", {"n": 20000, "correlation": 0.6}, seed=3))
        R = np.corrcoef((ms.targets - ms.signal).T)
        np.testing.assert_allclose(R[np.triu_indices(ms.horizon, 1)], 0.6, atol=0.03)

    def test_heteroscedastic_scale_matches_residual_spread(self):
        d = generate(GeneratorSpec("heteroscedastic", {"n": 40000, "outlier_rate": 0.0}, seed=6))
        x, e = d.X[:, 0], d.Y[:, 0] - (1 + 0.5 * d.X[:, 0])
        for a, b in [(0.0, 1.0), (4.0, 5.0)]:
            sel = (x >= a) & (x < b)
            expected = np.sqrt(np.mean(heteroscedastic_scale(x[sel, None]) ** 2))
            assert e[sel].std() == pytest.approx(expected, rel=0.05)

    def test_safety_has_both_classes(self):
        phi, phi_hat = generate(GeneratorSpec("safety", {"n": 2000}, seed=0))
        frac = np.mean(phi <= 0.0)
        assert 0.1 < frac < 0.25  # P(N(1, 1) <= 0) = 0.159
        assert phi.shape == phi_hat.shape

    def test_defaults_cover_every_kind(self):
        for kind in GENERATOR_DEFAULTS:
            generate(GeneratorSpec(kind, {"n": 50} if "n" in GENERATOR_DEFAULTS[kind] else {"T": 50}))


class TestMetrics:
    def test_coverage_extremes(self):
        iv = PredictionInterval(np.zeros(4), np.ones(4))
        assert coverage(iv, [0.5, 0.0, 1.0, 0.2]) == 1.0
        assert coverage(iv, [2.0, -1.0, 3.0, 1.5]) == 0.0

    def test_coverage_hand_table(self):
        lo = np.array([0, 0, 0, 1, 1, 1, 2, 2, 2, 3], dtype=float)
        hi = lo + 1
        y = np.array([0.5, 1.5, 0.0, 2.0, 0.9, 1.1, 3.5, 2.2, 1.0, 4.0])
        # inside: rows 0, 2, 3, 5, 7, 9
        assert coverage(PredictionInterval(lo, hi), y) == 0.6

    def test_coverage_permutation_invariant(self, rng):
        lo = rng.normal(size=50)
        hi = lo + rng.random(50)
        y = rng.normal(size=50)
        p = rng.permutation(50)
        assert coverage(PredictionInterval(lo, hi), y) == coverage(PredictionInterval(lo[p], hi[p]), y[p])

    def test_joint_coverage_one_step_is_coverage(self, rng):
        lo = rng.normal(size=(30, 1))
        hi = lo + 1
        y = rng.normal(size=(30, 1))
        assert joint_coverage((lo, hi), y) == coverage(PredictionInterval(lo, hi), y)

    def test_joint_coverage_hand_table(self):
        lo = np.zeros((5, 3))
        hi = np.ones((5, 3))
        traj = np.array([
            [0.5, 0.5, 0.5],
            [0.5, 1.5, 0.5],  # one step out
            [1.0, 0.0, 0.2],
            [-0.1, 0.5, 0.5],
            [0.9, 0.9, 0.9],
        ])
        assert joint_coverage((lo, hi), traj) == 3 / 5

    def test_mean_width(self):
        iv = PredictionInterval(np.array([[0.0], [1.0]]), np.array([[2.0], [5.0]]))
        assert mean_width(iv) == 3.0

    def test_rolling_constant(self):
        np.testing.assert_array_equal(rolling_coverage(np.zeros(10), 3), np.ones(8))

    def test_rolling_full_window(self):
        errs = np.array([0, 1, 0, 0, 1])
        np.testing.assert_array_equal(rolling_coverage(errs, 5), [0.6])

    def test_rolling_hand_sequence(self):
        errs = [0, 1, 1, 0, 0, 0, 1, 0]
        expected = [np.mean([1 - e for e in errs[j:j + 4]]) for j in range(5)]
        np.testing.assert_allclose(rolling_coverage(errs, 4), expected)
        np.testing.assert_allclose(rolling_coverage(errs, 4), [0.5, 0.5, 0.75, 0.75, 0.75])

    def test_rolling_bad_window(self):
        with pytest.raises(ValueError):
            rolling_coverage([0, 1], 3)

    def test_miscoverage_and_dict(self):
        m = Metrics(coverage=0.9, miscoverage=miscoverage([0, 0, 1, 0]))
        assert m.to_dict() == {"coverage": 0.9, "miscoverage": 0.25}
