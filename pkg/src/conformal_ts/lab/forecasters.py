"""Small deterministic forecasters used to exercise the conformal layers.

All models follow the same ``fit(X, Y) -> self`` / ``predict(X)``
convention with 2-D arrays. ``LinearQuantile`` additionally exposes
``predict_quantiles`` for the CQR score.
"""

from __future__ import annotations

import warnings
from typing import Any, Callable, Dict, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial import cKDTree

__all__ = [
    "Forecaster",
    "ConstantStub",
    "LinearAR",
    "KnnRegressor",
    "LinearQuantile",
    "KnnResidualScale",
    "make_forecaster",
    "lag_embed",
]


def _2d(a: ArrayLike) -> NDArray[np.float64]:
    a = np.asarray(a, dtype=float)
    return a.reshape(-1, 1) if a.ndim <= 1 else a


class Forecaster:
    """Base class. ``predict`` is deterministic once ``fit`` has run."""

    kind = "forecaster"

    def fit(self, X: ArrayLike, Y: ArrayLike) -> "Forecaster":
        raise NotImplementedError

    def predict(self, X: ArrayLike) -> NDArray[np.float64]:
        raise NotImplementedError

    def _check_fitted(self, attr: str):
        if getattr(self, attr, None) is None:
            raise RuntimeError(f"{type(self).__name__} is not fitted")


class ConstantStub(Forecaster):
    """Predicts a fixed value, or the training mean when ``value`` is None."""

    kind = "constant"

    def __init__(self, value: Optional[float] = None):
        self.value = value
        self.mean_: Optional[NDArray] = None

    def fit(self, X, Y):
        Y = _2d(Y)
        if Y.shape[0] == 0:
            raise ValueError("cannot fit on an empty training set")
        self.mean_ = (
            np.full(Y.shape[1], float(self.value)) if self.value is not None else Y.mean(axis=0)
        )
        return self

    def predict(self, X):
        n = _2d(X).shape[0]
        if self.mean_ is None and self.value is not None:
            return np.full((n, 1), float(self.value))
        self._check_fitted("mean_")
        return np.tile(self.mean_, (n, 1))


class LinearAR(Forecaster):
    """Ordinary least squares with intercept on (lagged) features.

    With ``order`` set, only the last ``order`` feature columns are used,
    which for a lag-embedded series are the most recent lags. A
    rank-deficient design falls back to ridge with a warning.
    """

    kind = "linear_ar"

    def __init__(self, order: Optional[int] = None, ridge: float = 1e-8):
        if order is not None and order < 1:
            raise ValueError("order must be >= 1")
        self.order = order
        self.ridge = ridge
        self.coef_: Optional[NDArray] = None
        self.intercept_: Optional[NDArray] = None

    def _design(self, X):
        X = _2d(X)
        if self.order is not None:
            if X.shape[1] < self.order:
                raise ValueError(f"need at least {self.order} feature columns, got {X.shape[1]}")
            X = X[:, -self.order:]
        return X

    def fit(self, X, Y):
        X = self._design(X)
        Y = _2d(Y)
        if X.shape[0] == 0:
            raise ValueError("cannot fit on an empty training set")
        A = np.hstack([np.ones((X.shape[0], 1)), X])
        if np.linalg.matrix_rank(A) < A.shape[1]:
            warnings.warn("singular design matrix; falling back to ridge", RuntimeWarning)
            lam = self.ridge * max(np.trace(A.T @ A), 1.0)
            beta = np.linalg.solve(A.T @ A + lam * np.eye(A.shape[1]), A.T @ Y)
        else:
            beta, *_ = np.linalg.lstsq(A, Y, rcond=None)
        self.intercept_ = beta[0]
        self.coef_ = beta[1:]
        return self

    def predict(self, X):
        self._check_fitted("coef_")
        return self._design(X) @ self.coef_ + self.intercept_


class KnnRegressor(Forecaster):
    """Mean target of the ``k`` nearest training inputs (Euclidean)."""

    kind = "knn"

    def __init__(self, k: int = 5):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.tree_: Optional[cKDTree] = None

    def fit(self, X, Y):
        X, Y = _2d(X), _2d(Y)
        if X.shape[0] == 0:
            raise ValueError("cannot fit on an empty training set")
        self.tree_ = cKDTree(X)
        self.Y_ = Y
        return self

    def _neighbours(self, X):
        self._check_fitted("tree_")
        k = min(self.k, self.Y_.shape[0])
        _, idx = self.tree_.query(_2d(X), k=k)
        return idx.reshape(_2d(X).shape[0], k)

    def predict(self, X):
        return self.Y_[self._neighbours(X)].mean(axis=1)


class KnnResidualScale:
    """``u(x)``: mean absolute training residual of the ``k`` nearest inputs.

    A small positive ``floor`` keeps the scale strictly positive.
    """

    def __init__(self, k: int = 20, floor: float = 1e-8):
        self.k = k
        self.floor = floor
        self._knn = KnnRegressor(k)

    def fit(self, X, abs_residuals) -> "KnnResidualScale":
        r = np.abs(_2d(abs_residuals)).max(axis=1)
        self._knn.fit(X, r)
        return self

    def __call__(self, X) -> NDArray[np.float64]:
        return np.maximum(self._knn.predict(X)[:, 0], self.floor)


class LinearQuantile(Forecaster):
    """Pair of linear quantile regressions fitted by pinball-loss subgradient descent.

    Features are standardised; the step size decays as ``lr / sqrt(t)``
    over a fixed number of full-batch iterations and the averaged iterate
    is kept. Predictions are repaired by sorting so that ``lo <= hi``.
    """

    kind = "linear_quantile"

    def __init__(
        self,
        gamma_lo: float = 0.05,
        gamma_hi: float = 0.95,
        n_iter: int = 2000,
        lr: float = 0.5,
        features: Optional[Callable[[NDArray], NDArray]] = None,
    ):
        if not 0.0 < gamma_lo < gamma_hi < 1.0:
            raise ValueError("need 0 < gamma_lo < gamma_hi < 1")
        self.gamma_lo = gamma_lo
        self.gamma_hi = gamma_hi
        self.n_iter = n_iter
        self.lr = lr
        self.features = features
        self.beta_: Optional[NDArray] = None

    def _phi(self, X):
        X = _2d(X)
        return self.features(X) if self.features is not None else X

    def _fit_one(self, A, y, tau):
        beta = np.zeros(A.shape[1])
        beta[0] = np.quantile(y, tau)
        avg = np.zeros_like(beta)
        n = A.shape[0]
        for t in range(1, self.n_iter + 1):
            r = y - A @ beta
            # d/dbeta of mean pinball loss
            g = -(A.T @ np.where(r > 0, tau, tau - 1.0)) / n
            beta = beta - (self.lr / np.sqrt(t)) * g
            avg += (beta - avg) / t
        return avg

    def fit(self, X, Y):
        F = self._phi(X)
        y = _2d(Y)
        if y.shape[1] != 1:
            raise ValueError("LinearQuantile supports scalar targets only")
        y = y[:, 0]
        self.mu_ = F.mean(axis=0)
        self.sd_ = np.where(F.std(axis=0) > 0, F.std(axis=0), 1.0)
        self.y_scale_ = y.std() if y.std() > 0 else 1.0
        A = np.hstack([np.ones((F.shape[0], 1)), (F - self.mu_) / self.sd_])
        ys = y / self.y_scale_
        self.beta_ = np.stack(
            [self._fit_one(A, ys, self.gamma_lo), self._fit_one(A, ys, self.gamma_hi)]
        )
        return self

    def _raw(self, X):
        self._check_fitted("beta_")
        F = self._phi(X)
        A = np.hstack([np.ones((F.shape[0], 1)), (F - self.mu_) / self.sd_])
        return (A @ self.beta_.T) * self.y_scale_

    def predict_quantiles(self, X):
        raw = np.sort(self._raw(X), axis=1)
        return raw[:, :1], raw[:, 1:]

    def predict(self, X):
        lo, hi = self.predict_quantiles(X)
        return 0.5 * (lo + hi)


_REGISTRY: Dict[str, type] = {
    "constant": ConstantStub,
    "linear_ar": LinearAR,
    "knn": KnnRegressor,
    "linear_quantile": LinearQuantile,
}


def make_forecaster(kind: str, **params: Any) -> Forecaster:
    """Build an unfitted forecaster from a recipe name and parameters."""
    try:
        cls = _REGISTRY[kind]
    except KeyError:
        raise ValueError(f"unknown forecaster kind {kind!r}; choose from {sorted(_REGISTRY)}")
    return cls(**params)


def lag_embed(series: ArrayLike, order: int):
    """Turn a 1-D series into a supervised dataset of ``order`` lags.

    Row ``i`` has features ``(y[i], ..., y[i+order-1])`` and target
    ``y[i+order]``.
    """
    from ..core import Dataset

    y = np.asarray(series, dtype=float).ravel()
    if order < 1 or y.size <= order:
        raise ValueError(f"series of length {y.size} too short for order {order}")
    X = np.lib.stride_tricks.sliding_window_view(y[:-1], order)
    return Dataset(X.copy(), y[order:])
