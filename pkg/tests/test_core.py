import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conformal_ts import (
    AbsoluteResidual,
    ConfidenceLevel,
    CqrScore,
    Dataset,
    NormalizedResidual,
    PredictionInterval,
    SplitConformalRegressor,
    calibrate,
    empirical_quantile,
    predict_interval,
    score,
    split,
)
from conformal_ts.core import PredictionContext, quantile_rank, scores_of
from conformal_ts.lab import ConstantStub, LinearAR

from conftest import scan_quantile


class EchoModel:
    """Predicts the first feature column; lets tests pick y_hat directly."""

    def fit(self, X, Y):
        return self

    def predict(self, X):
        return np.asarray(X, dtype=float)[:, :1]


class BandModel:
    """Quantile pair read from the first two feature columns."""

    def predict_quantiles(self, X):
        X = np.asarray(X, dtype=float)
        return X[:, 0], X[:, 1]


finite_scores = st.lists(
    st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False), min_size=1, max_size=40
)
levels = st.floats(1e-6, 1.0)


class TestConfidenceLevel:
    def test_one_minus_alpha(self):
        assert ConfidenceLevel(0.1).one_minus_alpha == pytest.approx(0.9)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5])
    def test_rejects_out_of_range(self, alpha):
        with pytest.raises(ValueError):
            ConfidenceLevel(alpha)


class TestDataset:
    def test_promotes_vectors_to_columns(self):
        d = Dataset(np.arange(4.0), np.arange(4.0))
        assert d.X.shape == (4, 1) and d.Y.shape == (4, 1)
        assert (d.feature_dim, d.target_dim) == (1, 1)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="non-finite"):
            Dataset([[1.0], [np.nan]], [1.0, 2.0])

    def test_rejects_row_mismatch(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((3, 2)), np.zeros(4))

    def test_is_read_only(self):
        d = Dataset(np.zeros((3, 2)), np.zeros(3))
        with pytest.raises(ValueError):
            d.X[0, 0] = 1.0


class TestEmpiricalQuantile:
    @pytest.mark.parametrize(
        "p, scores, augment, expected",
        [
            (1.0, [1, 2, 3], False, 3.0),
            (0.5, [10, 20, 30, 40], False, 20.0),
            (0.9, range(1, 10), True, 9.0),
            (0.99, range(1, 10), True, math.inf),
        ],
    )
    def test_examples(self, p, scores, augment, expected):
        assert empirical_quantile(p, list(scores), augment) == expected

    def test_examples_match_scan_oracle(self):
        for p, s, aug in [(0.5, [10, 20, 30, 40], False), (0.9, range(1, 10), True)]:
            assert empirical_quantile(p, list(s), aug) == scan_quantile(p, s, aug)

    def test_empty_set_is_an_error(self):
        with pytest.raises(ValueError, match="empty calibration set"):
            empirical_quantile(0.5, [])

    @pytest.mark.parametrize("p", [0.0, -0.2, 1.01])
    def test_p_out_of_range(self, p):
        with pytest.raises(ValueError):
            empirical_quantile(p, [1.0, 2.0])

    def test_float_rounding_at_exact_ranks(self):
        # 0.7 * 10 evaluates to 7.000000000000001 in binary floating point
        assert quantile_rank(0.7, 10) == 7
        assert empirical_quantile(0.7, np.arange(1.0, 11.0)) == 7.0

    @settings(max_examples=300, deadline=None)
    @given(finite_scores, levels, st.booleans())
    def test_agrees_with_scan(self, scores, p, augment):
        assert empirical_quantile(p, scores, augment) == scan_quantile(p, scores, augment)

    @settings(max_examples=200, deadline=None)
    @given(finite_scores, levels, levels)
    def test_nondecreasing_in_level(self, scores, p1, p2):
        lo, hi = sorted([p1, p2])
        assert empirical_quantile(lo, scores, True) <= empirical_quantile(hi, scores, True)


class TestScores:
    def test_absolute(self):
        ctx = PredictionContext(center=np.array([[5.0]]))
        assert score(AbsoluteResidual(), [3.0], ctx)[0] == 2.0

    def test_absolute_uses_max_over_dimensions(self):
        ctx = PredictionContext(center=np.array([[0.0, 0.0]]))
        assert score(AbsoluteResidual(), [[1.0, -3.0]], ctx)[0] == 3.0

    def test_normalized(self):
        s = NormalizedResidual(lambda X: np.full(len(X), 4.0))
        ctx = s.context(EchoModel(), [[5.0]])
        assert score(s, [3.0], ctx)[0] == 0.5

    @pytest.mark.parametrize("u", [0.0, -1.0])
    def test_normalized_rejects_degenerate_scale(self, u):
        s = NormalizedResidual(lambda X: np.full(len(X), u))
        ctx = s.context(EchoModel(), [[5.0]])
        with pytest.raises(ValueError, match="degenerate uncertainty scale"):
            score(s, [3.0], ctx)

    @pytest.mark.parametrize("y, expected", [(7.0, 1.0), (4.0, -2.0)])
    def test_cqr(self, y, expected):
        ctx = CqrScore().context(BandModel(), [[2.0, 6.0]])
        assert score(CqrScore(), [y], ctx)[0] == expected

    def test_cqr_rejects_crossed_quantiles(self):
        ctx = CqrScore().context(BandModel(), [[6.0, 2.0]])
        with pytest.raises(ValueError, match="crossed quantiles"):
            score(CqrScore(), [4.0], ctx)


class TestSplit:
    def test_even_split_is_reproducible(self):
        d = Dataset(np.arange(10.0), np.arange(10.0))
        a, b = split(d, 0.5, seed=4), split(d, 0.5, seed=4)
        assert (len(a.train), len(a.cal)) == (5, 5)
        np.testing.assert_array_equal(a.train_index, b.train_index)

    def test_floor_sizes(self):
        d = Dataset(np.arange(3.0), np.arange(3.0))
        s = split(d, 0.9, seed=0)
        assert (len(s.train), len(s.cal)) == (2, 1)

    def test_single_row_errors(self):
        with pytest.raises(ValueError, match="empty partition"):
            split(Dataset([1.0], [1.0]), 0.5, seed=0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 60), st.floats(0.05, 0.95), st.integers(0, 2**31))
    def test_disjoint_cover(self, n, frac, seed):
        d = Dataset(np.arange(float(n)), np.arange(float(n)))
        if math.floor(n * frac) in (0, n):
            return
        s = split(d, frac, seed)
        both = np.concatenate([s.train.X[:, 0], s.cal.X[:, 0]])
        np.testing.assert_array_equal(np.sort(both), np.arange(float(n)))


class TestCalibrate:
    def _cal(self, residuals):
        r = np.asarray(residuals, dtype=float)
        return Dataset(np.zeros((len(r), 1)), r)

    def test_scores_one_to_nine(self):
        assert calibrate(self._cal(range(1, 10)), EchoModel(), AbsoluteResidual(), 0.1) == 9.0

    def test_small_alpha_gives_infinity(self):
        # ceil((1 - 0.05) * 10) = 10 = n + 1
        assert calibrate(self._cal(range(1, 10)), EchoModel(), AbsoluteResidual(), 0.05) == math.inf

    @pytest.mark.parametrize("alpha", [0.2, 0.5, 0.9])
    def test_zero_residuals(self, alpha):
        assert calibrate(self._cal(np.zeros(20)), EchoModel(), AbsoluteResidual(), alpha) == 0.0

    def test_accepts_confidence_level(self):
        cal = self._cal(range(1, 10))
        assert calibrate(cal, EchoModel(), AbsoluteResidual(), ConfidenceLevel(0.1)) == 9.0

    def test_permutation_invariant(self, rng):
        X = rng.normal(size=(50, 1))
        Y = rng.normal(size=50)
        perm = rng.permutation(50)
        sf = AbsoluteResidual()
        a = calibrate(Dataset(X, Y), EchoModel(), sf, 0.1)
        b = calibrate(Dataset(X[perm], Y[perm]), EchoModel(), sf, 0.1)
        assert a == b


class TestPredictInterval:
    def test_absolute(self):
        iv = predict_interval([[5.0]], EchoModel(), AbsoluteResidual(), 2.0)
        assert (iv.lo[0, 0], iv.hi[0, 0]) == (3.0, 7.0)

    def test_zero_threshold(self):
        iv = predict_interval([[5.0]], EchoModel(), AbsoluteResidual(), 0.0)
        assert (iv.lo[0, 0], iv.hi[0, 0]) == (5.0, 5.0)

    def test_cqr(self):
        iv = predict_interval([[2.0, 6.0]], BandModel(), CqrScore(), 1.0)
        assert (iv.lo[0, 0], iv.hi[0, 0]) == (1.0, 7.0)

    def test_normalized(self):
        sf = NormalizedResidual(lambda X: np.full(len(X), 4.0))
        iv = predict_interval([[5.0]], EchoModel(), sf, 0.5)
        assert (iv.lo[0, 0], iv.hi[0, 0]) == (3.0, 7.0)

    @pytest.mark.parametrize("sf", [AbsoluteResidual(), NormalizedResidual(lambda X: np.ones(len(X)))])
    def test_infinite_threshold_is_unbounded(self, sf):
        iv = predict_interval([[5.0]], EchoModel(), sf, math.inf)
        assert iv.lo[0, 0] == -math.inf and iv.hi[0, 0] == math.inf

    def test_negative_infinite_threshold_is_empty(self):
        iv = predict_interval([[5.0]], EchoModel(), AbsoluteResidual(), -math.inf)
        assert iv.is_empty[0] and iv.width[0, 0] == 0.0
        assert not iv.contains([5.0])[0]

    @pytest.mark.parametrize("q", [0.0, 0.3, 1.0, 2.5])
    def test_width_nondecreasing_in_threshold(self, q):
        a = predict_interval([[1.0]], EchoModel(), AbsoluteResidual(), q)
        b = predict_interval([[1.0]], EchoModel(), AbsoluteResidual(), q + 0.1)
        assert b.width[0, 0] >= a.width[0, 0]


class TestDuality:
    """y in the interval exactly when its score is at most q."""

    grid = np.linspace(-10, 10, 2001)

    def _check(self, sf, model, x, q):
        X = np.repeat(np.atleast_2d(x), len(self.grid), axis=0)
        ctx = sf.context(model, X)
        inside = sf.interval(ctx, q).contains(self.grid)
        np.testing.assert_array_equal(inside, sf.scores(self.grid, ctx) <= q)

    @pytest.mark.parametrize("q", [-1.0, 0.0, 0.7, 3.0])
    def test_absolute(self, q):
        self._check(AbsoluteResidual(), EchoModel(), [1.3], q)

    @pytest.mark.parametrize("q", [0.0, 0.25, 2.0])
    def test_normalized(self, q):
        sf = NormalizedResidual(lambda X: np.full(len(X), 1.5))
        self._check(sf, EchoModel(), [-0.4], q)

    @pytest.mark.parametrize("q", [-1.5, 0.0, 0.5, 2.0])
    def test_cqr(self, q):
        self._check(CqrScore(), BandModel(), [-2.0, 3.0], q)


class TestPredictionInterval:
    def test_unbounded_and_empty(self):
        u = PredictionInterval.unbounded((2, 1))
        e = PredictionInterval.empty((2, 1))
        assert u.contains([1e300, -1e300]).all()
        assert not e.contains([0.0, 1.0]).any()
        assert e.is_empty.all()

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            PredictionInterval([np.nan], [1.0])

    def test_vector_contains_requires_all_dimensions(self):
        iv = PredictionInterval([[0.0, 0.0]], [[1.0, 1.0]])
        assert iv.contains([[0.5, 0.5]])[0]
        assert not iv.contains([[0.5, 1.5]])[0]


class TestSplitConformalRegressor:
    def test_requires_fit(self):
        with pytest.raises(RuntimeError):
            SplitConformalRegressor(ConstantStub(0.0)).predict_interval([[1.0]])

    def test_threshold_matches_manual_pipeline(self, rng):
        X = rng.normal(size=(200, 2))
        d = Dataset(X, X.sum(axis=1) + rng.normal(size=200))
        cp = SplitConformalRegressor(LinearAR(), alpha=0.2).fit(d, seed=7)
        parts = split(d, 0.5, seed=7)
        m = LinearAR().fit(parts.train.X, parts.train.Y)
        s = scores_of(parts.cal, m, AbsoluteResidual())
        assert cp.q_ == pytest.approx(scan_quantile(0.8, s, augment=True))


class TestQuantileRankLaw:
    def test_fresh_score_coverage(self):
        rng = np.random.default_rng(3)
        N, trials, p = 19, 20000, 0.9
        s = rng.normal(size=(trials, N + 1))
        q = np.array([empirical_quantile(p, row[:N], True) for row in s])
        cov = np.mean(s[:, N] <= q)
        # exact value is ceil(p (N + 1)) / (N + 1) = 18 / 20
        assert abs(cov - 0.9) < 4 * math.sqrt(0.09 / trials)
