"""Split conformal prediction for exchangeable data.

Empirical quantiles, nonconformity scores, dataset splitting and the
calibrate / predict pair that turns any fitted point (or quantile) model
into prediction intervals with finite-sample marginal coverage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "ConfidenceLevel",
    "Dataset",
    "SplitDataset",
    "PredictionInterval",
    "PredictionContext",
    "ScoreFunction",
    "AbsoluteResidual",
    "NormalizedResidual",
    "CqrScore",
    "empirical_quantile",
    "quantile_rank",
    "score",
    "split",
    "calibrate",
    "predict_interval",
    "SplitConformalRegressor",
]


def _check_alpha(alpha: float, name: str = "alpha") -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {alpha}")
    return alpha


@dataclass(frozen=True)
class ConfidenceLevel:
    """Target miscoverage ``alpha``; the coverage target is ``1 - alpha``."""

    alpha: float

    def __post_init__(self):
        _check_alpha(self.alpha)

    @property
    def one_minus_alpha(self) -> float:
        return 1.0 - self.alpha


AlphaLike = Union[float, ConfidenceLevel]


def _alpha(level: AlphaLike) -> float:
    if isinstance(level, ConfidenceLevel):
        return level.alpha
    return _check_alpha(level)


def _as_2d(a: ArrayLike, name: str) -> NDArray[np.float64]:
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise ValueError(f"{name} must be at most 2-dimensional, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class Dataset:
    """Rows of ``(x, y)`` pairs stored as two aligned 2-D arrays.

    ``X`` has shape ``(n, feature_dim)`` and ``Y`` has shape
    ``(n, target_dim)``. One-dimensional inputs are promoted to column
    vectors. Values must be finite.
    """

    X: NDArray[np.float64]
    Y: NDArray[np.float64]

    def __post_init__(self):
        X = _as_2d(self.X, "X")
        Y = _as_2d(self.Y, "Y")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ValueError("dataset contains non-finite values")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.X.shape[1]

    @property
    def target_dim(self) -> int:
        return self.Y.shape[1]

    def subset(self, idx: ArrayLike) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.X[idx], self.Y[idx])


@dataclass(frozen=True)
class SplitDataset:
    train: Dataset
    cal: Dataset
    seed: int
    train_index: NDArray[np.int64] = field(repr=False)
    cal_index: NDArray[np.int64] = field(repr=False)


@dataclass(frozen=True)
class PredictionInterval:
    """Axis-aligned box ``[lo, hi]`` per row and target dimension.

    Bounds may be infinite. A row whose ``lo > hi`` in any dimension is
    the empty set; this is how a threshold of ``-inf`` is represented.
    """

    lo: NDArray[np.float64]
    hi: NDArray[np.float64]

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape:
            raise ValueError(f"lo {lo.shape} and hi {hi.shape} differ in shape")
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise ValueError("interval bounds must not be NaN")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unbounded(cls, shape) -> "PredictionInterval":
        return cls(np.full(shape, -np.inf), np.full(shape, np.inf))

    @classmethod
    def empty(cls, shape) -> "PredictionInterval":
        return cls(np.full(shape, np.inf), np.full(shape, -np.inf))

    @property
    def is_empty(self) -> NDArray[np.bool_]:
        crossed = self.lo > self.hi
        return crossed.any(axis=-1) if crossed.ndim else crossed

    @property
    def width(self) -> NDArray[np.float64]:
        """Per-dimension width, zero for empty rows."""
        with np.errstate(invalid="ignore"):
            w = np.clip(self.hi - self.lo, 0.0, None)
        return np.where(self.lo > self.hi, 0.0, w)

    def contains(self, y: ArrayLike) -> NDArray[np.bool_]:
        """Whether each row of ``y`` lies inside its box (all dimensions)."""
        y = np.asarray(y, dtype=float).reshape(self.lo.shape)
        inside = (self.lo <= y) & (y <= self.hi)
        return inside.all(axis=-1) if inside.ndim > 1 else inside

    def __len__(self) -> int:
        return self.lo.shape[0]


@dataclass(frozen=True)
class PredictionContext:
    """What a score function needs from the model at a batch of inputs."""

    center: Optional[NDArray[np.float64]] = None
    scale: Optional[NDArray[np.float64]] = None
    lower: Optional[NDArray[np.float64]] = None
    upper: Optional[NDArray[np.float64]] = None


# ---------------------------------------------------------------------------
# Empirical quantile
# ---------------------------------------------------------------------------


def quantile_rank(p: float, n: int, augment_with_infinity: bool = False) -> int:
    """Smallest ``k`` with ``k / N >= p``, where ``N = n (+1 if augmented)``.

    The returned rank is 1-based. ``k == n + 1`` means the augmented
    infinity is the quantile.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    N = n + 1 if augment_with_infinity else n
    k = max(1, math.ceil(p * N))
    # p * N can round up past an exact integer (0.7 * 10 -> 7.000000000000001)
    while k > 1 and (k - 1) / N >= p:
        k -= 1
    while k / N < p:
        k += 1
    return k


def empirical_quantile(
    p: float, scores: ArrayLike, augment_with_infinity: bool = False
) -> float:
    """Empirical ``p``-quantile of a score multiset.

    Returns ``inf{s : (1/N) * #{s_i <= s} >= p}``, the ``ceil(p N)``-th
    order statistic. With ``augment_with_infinity`` the set is
    ``scores U {+inf}`` and ``+inf`` is returned when only the added
    point reaches the rank.

    Parameters
    ----------
    p : float
        Level in ``(0, 1]``.
    scores : array-like
        Finite calibration scores.
    augment_with_infinity : bool
        Include ``+inf`` in the set (conformal calibration).

    Raises
    ------
    ValueError
        If ``scores`` is empty or non-finite, or ``p`` is outside ``(0, 1]``.
    """
    s = np.asarray(scores, dtype=float).ravel()
    if s.size == 0:
        raise ValueError("empty calibration set")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    k = quantile_rank(p, s.size, augment_with_infinity)
    if k > s.size:
        return math.inf
    return float(np.partition(s, k - 1)[k - 1])


# ---------------------------------------------------------------------------
# Nonconformity scores
# ---------------------------------------------------------------------------


class ScoreFunction:
    """Base class: maps (y, model context) to a real score and back.

    Subclasses implement ``context`` (ask the model), ``scores`` (one real
    per row) and ``interval`` (the set ``{y : score <= q}``).
    """

    name = "score"

    def context(self, model, X: ArrayLike) -> PredictionContext:
        raise NotImplementedError

    def scores(self, Y: ArrayLike, ctx: PredictionContext) -> NDArray[np.float64]:
        raise NotImplementedError

    def interval(self, ctx: PredictionContext, q: float) -> PredictionInterval:
        raise NotImplementedError


class AbsoluteResidual(ScoreFunction):
    """``|y - y_hat|``; the infinity norm over dimensions for vector targets."""

    name = "absolute"

    def context(self, model, X):
        return PredictionContext(center=_as_2d(model.predict(X), "prediction"))

    def scores(self, Y, ctx):
        Y = _as_2d(Y, "y")
        return np.max(np.abs(Y - ctx.center), axis=1)

    def interval(self, ctx, q):
        return PredictionInterval(ctx.center - q, ctx.center + q)


class NormalizedResidual(ScoreFunction):
    """``|y - y_hat| / u(x)`` for a caller-supplied positive scale ``u``.

    ``scale_fn`` maps an input batch to an array of shape ``(n,)`` or
    ``(n, target_dim)``.
    """

    name = "normalized"

    def __init__(self, scale_fn: Callable[[NDArray], ArrayLike]):
        self.scale_fn = scale_fn

    def context(self, model, X):
        center = _as_2d(model.predict(X), "prediction")
        u = np.asarray(self.scale_fn(X), dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        return PredictionContext(center=center, scale=np.broadcast_to(u, center.shape))

    @staticmethod
    def _check_scale(u):
        if np.any(~(u > 0)):
            raise ValueError("degenerate uncertainty scale: u(x) must be > 0")

    def scores(self, Y, ctx):
        self._check_scale(ctx.scale)
        Y = _as_2d(Y, "y")
        return np.max(np.abs(Y - ctx.center) / ctx.scale, axis=1)

    def interval(self, ctx, q):
        self._check_scale(ctx.scale)
        # q * u with q = -inf must stay -inf, never nan
        half = np.where(np.isinf(q), q, q * ctx.scale)
        return PredictionInterval(ctx.center - half, ctx.center + half)


class CqrScore(ScoreFunction):
    """Conformalized quantile regression score ``max(lo - y, y - hi)``.

    The model must expose ``predict_quantiles(X) -> (lo, hi)``. The pair is
    fitted for one target miscoverage; calibrate and predict at that level.
    """

    name = "cqr"

    def context(self, model, X):
        lo, hi = model.predict_quantiles(X)
        return PredictionContext(lower=_as_2d(lo, "lower"), upper=_as_2d(hi, "upper"))

    @staticmethod
    def _check_order(ctx):
        if np.any(ctx.lower > ctx.upper):
            raise ValueError("crossed quantiles: lower quantile exceeds upper")

    def scores(self, Y, ctx):
        self._check_order(ctx)
        Y = _as_2d(Y, "y")
        return np.max(np.maximum(ctx.lower - Y, Y - ctx.upper), axis=1)

    def interval(self, ctx, q):
        self._check_order(ctx)
        return PredictionInterval(ctx.lower - q, ctx.upper + q)


def score(score_fn: ScoreFunction, y: ArrayLike, ctx: PredictionContext) -> NDArray[np.float64]:
    """Evaluate ``score_fn`` on targets ``y`` given a prediction context."""
    return score_fn.scores(y, ctx)


# ---------------------------------------------------------------------------
# Split conformal procedure
# ---------------------------------------------------------------------------


def split(dataset: Dataset, train_fraction: float, seed: int) -> SplitDataset:
    """Seeded uniform shuffle into proper-training and calibration parts.

    The training part holds ``floor(n * train_fraction)`` rows.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = len(dataset)
    m = int(math.floor(n * train_fraction))
    if m == 0 or m == n:
        raise ValueError(
            f"split of {n} rows at fraction {train_fraction} leaves an empty partition"
        )
    perm = np.random.default_rng(seed).permutation(n)
    train_idx, cal_idx = perm[:m], perm[m:]
    return SplitDataset(
        train=dataset.subset(train_idx),
        cal=dataset.subset(cal_idx),
        seed=seed,
        train_index=train_idx,
        cal_index=cal_idx,
    )


def calibrate(cal: Dataset, model, score_fn: ScoreFunction, level: AlphaLike) -> float:
    """Conformal threshold: the ``(1 - alpha)`` quantile of ``scores U {inf}``.

    ``model`` must have been fitted without the calibration rows.
    """
    alpha = _alpha(level)
    ctx = score_fn.context(model, cal.X)
    s = score_fn.scores(cal.Y, ctx)
    return empirical_quantile(1.0 - alpha, s, augment_with_infinity=True)


def predict_interval(
    X: ArrayLike, model, score_fn: ScoreFunction, q: float
) -> PredictionInterval:
    """Invert the score: ``{y : score((x, y)) <= q}`` for each row of ``X``."""
    ctx = score_fn.context(model, _as_2d(X, "X"))
    return score_fn.interval(ctx, q)


class SplitConformalRegressor:
    """Convenience wrapper: split, fit on the training part, calibrate.

    Examples
    --------
    >>> from conformal_ts.lab import LinearAR, generate, GeneratorSpec
    >>> data = generate(GeneratorSpec("iid_regression", {"n": 400}, seed=0))
    >>> cp = SplitConformalRegressor(LinearAR(), alpha=0.1).fit(data, seed=0)
    >>> cp.predict_interval(data.X[:3]).lo.shape
    (3, 1)
    """

    def __init__(
        self,
        model,
        alpha: AlphaLike = 0.1,
        score_fn: Optional[ScoreFunction] = None,
        train_fraction: float = 0.5,
    ):
        self.model = model
        self.alpha = _alpha(alpha)
        self.score_fn = score_fn if score_fn is not None else AbsoluteResidual()
        self.train_fraction = train_fraction
        self.q_: Optional[float] = None

    def fit(self, data: Dataset, seed: int = 0) -> "SplitConformalRegressor":
        parts = split(data, self.train_fraction, seed)
        self.model.fit(parts.train.X, parts.train.Y)
        self.q_ = calibrate(parts.cal, self.model, self.score_fn, self.alpha)
        return self

    def predict_interval(self, X: ArrayLike) -> PredictionInterval:
        if self.q_ is None:
            raise RuntimeError("call fit before predict_interval")
        return predict_interval(X, self.model, self.score_fn, self.q_)


def scores_of(cal: Dataset, model, score_fn: ScoreFunction) -> NDArray[np.float64]:
    """Calibration scores of ``cal`` under ``model``."""
    return score_fn.scores(cal.Y, score_fn.context(model, cal.X))

