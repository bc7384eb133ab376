"""Conformal intervals for a single time series under distribution shift.

EnbPI
    A bootstrap ensemble gives leave-one-out residuals on the training
    stretch; intervals are the ensemble prediction plus or minus a
    residual quantile, and the residual buffer slides forward every ``h``
    observations without refitting any model.

ACI
    Online tracking of the working miscoverage level ``alpha_t``:
    ``alpha_{t+1} = alpha_t + gamma * (alpha - err_t)``. The long-run
    error frequency is within ``(max(alpha_1, 1 - alpha_1) + gamma) /
    (gamma T)`` of ``alpha`` for every sequence of observations.
"""

from __future__ import annotations

import logging
import math
import warnings
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Deque, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .core import (
    AbsoluteResidual,
    Dataset,
    PredictionInterval,
    ScoreFunction,
    _alpha,
    _as_2d,
    _check_alpha,
    empirical_quantile,
)

logger = logging.getLogger(__name__)

__all__ = [
    "EnbpiState",
    "enbpi_fit",
    "enbpi_interval",
    "enbpi_recalibrate",
    "enbpi_run",
    "AciState",
    "aci_update",
    "aci_observe",
    "aci_interval",
    "aci_bound_check",
    "aci_replay",
    "aci_run",
    "StreamRecords",
]

_AGGREGATORS: Dict[str, Callable] = {"mean": np.mean, "median": np.median}


@dataclass(frozen=True)
class StreamRecords:
    """Per-step output of a streaming run.

    ``alpha_t`` is the working level used at each step (constant ``alpha``
    for EnbPI).
    """

    t: NDArray[np.int64]
    lo: NDArray[np.float64]
    hi: NDArray[np.float64]
    y: NDArray[np.float64]
    err: NDArray[np.int64]
    alpha_t: NDArray[np.float64]

    def __len__(self) -> int:
        return self.t.size

    def rows(self) -> List[tuple]:
        return list(zip(self.t.tolist(), self.lo.tolist(), self.hi.tolist(),
                        self.y.tolist(), self.err.tolist(), self.alpha_t.tolist()))


# ---------------------------------------------------------------------------
# EnbPI
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnbpiState:
    """Fitted bootstrap ensemble and its sliding residual buffer.

    ``membership[b]`` is the resampled index multiset the ``b``-th model
    was trained on. ``n_fallback`` counts training points that appeared in
    every resample and were scored with the full ensemble instead.
    """

    models: Tuple
    membership: Tuple[NDArray[np.int64], ...]
    aggregation: str
    residuals: NDArray[np.float64]
    window: int
    T: int
    n_fallback: int = 0
    loo_predictions: Optional[NDArray[np.float64]] = field(default=None, repr=False)

    @property
    def B(self) -> int:
        return len(self.models)

    def aggregate(self, X: ArrayLike) -> NDArray[np.float64]:
        """``phi`` over all ``B`` model predictions at ``X``."""
        X = _as_2d(X, "X")
        preds = np.stack([_as_2d(m.predict(X), "prediction") for m in self.models])
        return _AGGREGATORS[self.aggregation](preds, axis=0)


def enbpi_fit(
    series: Dataset,
    algorithm: Callable[[], object],
    B: int,
    aggregation: str = "mean",
    seed: int = 0,
    window: int = 1,
    membership: Optional[Sequence[ArrayLike]] = None,
) -> EnbpiState:
    """Train ``B`` bootstrap models and compute leave-one-out residuals.

    Parameters
    ----------
    series : Dataset
        Training stretch ``(x_i, y_i), i = 1..T`` in time order.
    algorithm : callable
        Zero-argument factory returning an unfitted forecaster.
    B : int
        Number of bootstrap models.
    aggregation : {"mean", "median"}
        The aggregation ``phi``.
    seed : int
        Each model's resample is drawn from its own child of
        ``SeedSequence(seed)``, so the state does not depend on fit order.
    window : int
        Recalibration batch size ``h``.
    membership : sequence of index arrays, optional
        Use these resamples instead of drawing them.

    Returns
    -------
    EnbpiState
        Residual ``i`` aggregates only models whose resample omits ``i``.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    if aggregation not in _AGGREGATORS:
        raise ValueError(f"aggregation must be one of {sorted(_AGGREGATORS)}")
    if window < 1:
        raise ValueError("window h must be >= 1")
    T = len(series)
    if T < 2:
        raise ValueError("need at least two training points")

    if membership is None:
        children = np.random.SeedSequence(seed).spawn(B)
        membership = [np.random.default_rng(c).integers(0, T, size=T) for c in children]
    else:
        membership = [np.asarray(s, dtype=int) for s in membership]
        if len(membership) != B:
            raise ValueError(f"got {len(membership)} index sets for B={B}")
    membership = tuple(membership)

    models = []
    for S in membership:
        m = algorithm()
        m.fit(series.X[S], series.Y[S])
        models.append(m)

    preds = np.stack([_as_2d(m.predict(series.X), "prediction") for m in models])  # (B, T, m)
    in_sample = np.zeros((B, T), dtype=bool)
    for b, S in enumerate(membership):
        in_sample[b, S] = True

    agg = _AGGREGATORS[aggregation]
    loo = np.empty((T, preds.shape[2]))
    n_fallback = 0
    for i in range(T):
        keep = ~in_sample[:, i]
        if keep.any():
            loo[i] = agg(preds[keep, i], axis=0)
        else:
            n_fallback += 1
            loo[i] = agg(preds[:, i], axis=0)
    if n_fallback:
        warnings.warn(
            f"{n_fallback} training points appear in every bootstrap sample; "
            "their residuals use the full ensemble",
            RuntimeWarning,
        )
    residuals = np.max(np.abs(series.Y - loo), axis=1)
    return EnbpiState(
        models=tuple(models),
        membership=membership,
        aggregation=aggregation,
        residuals=residuals,
        window=window,
        T=T,
        n_fallback=n_fallback,
        loo_predictions=loo,
    )


def enbpi_interval(state: EnbpiState, X_t: ArrayLike, level) -> PredictionInterval:
    """Ensemble prediction plus or minus the ``(1 - alpha)`` residual quantile."""
    alpha = _alpha(level)
    w = empirical_quantile(1.0 - alpha, state.residuals)
    center = state.aggregate(X_t)
    return PredictionInterval(center - w, center + w)


def enbpi_recalibrate(state: EnbpiState, X_recent: ArrayLike, Y_recent: ArrayLike) -> EnbpiState:
    """Slide the residual buffer by ``h`` new observations (FIFO).

    Models are left untouched; the buffer keeps its length.
    """
    X_recent = _as_2d(X_recent, "X")
    Y_recent = _as_2d(Y_recent, "Y")
    if X_recent.shape[0] != state.window or Y_recent.shape[0] != state.window:
        raise ValueError(f"recalibration needs exactly h={state.window} observations")
    new = np.max(np.abs(Y_recent - state.aggregate(X_recent)), axis=1)
    return replace(state, residuals=_fifo_push(state.residuals, new))


def _fifo_push(buffer: NDArray, new: NDArray) -> NDArray:
    n = buffer.size
    merged = np.concatenate([buffer, new])
    return merged[merged.size - n:].copy()


def enbpi_run(
    state: EnbpiState, test: Dataset, level, t0: Optional[int] = None
) -> Tuple[StreamRecords, EnbpiState]:
    """Predict sequentially over ``test``, recalibrating after every ``h`` points.

    Returns the per-step records and the final state. Time stamps start at
    ``t0`` (default ``state.T + 1``).
    """
    alpha = _alpha(level)
    t0 = state.T + 1 if t0 is None else t0
    n = len(test)
    lo = np.empty(n)
    hi = np.empty(n)
    h = state.window
    for j in range(n):
        iv = enbpi_interval(state, test.X[j:j + 1], alpha)
        lo[j], hi[j] = iv.lo[0, 0], iv.hi[0, 0]
        if (j + 1) % h == 0:
            state = enbpi_recalibrate(state, test.X[j + 1 - h:j + 1], test.Y[j + 1 - h:j + 1])
    y = test.Y[:, 0]
    err = (~((lo <= y) & (y <= hi))).astype(int)
    rec = StreamRecords(np.arange(t0, t0 + n), lo, hi, y.copy(), err, np.full(n, alpha))
    return rec, state


# ---------------------------------------------------------------------------
# ACI
# ---------------------------------------------------------------------------


@dataclass
class AciState:
    """Working level, step size and the recent-score window.

    This is a single-writer object: ``aci_update`` and ``aci_observe``
    mutate it in place and must be applied in time order.
    """

    target_alpha: float
    gamma: float = 0.005
    window_size: int = 100
    alpha_t: float = float("nan")
    alpha_1: float = float("nan")
    err_history: List[int] = field(default_factory=list)
    alpha_history: List[float] = field(default_factory=list)
    window_scores: Deque[float] = field(default_factory=deque)

    def __post_init__(self):
        _check_alpha(self.target_alpha, "target_alpha")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        if math.isnan(self.alpha_t):
            self.alpha_t = self.target_alpha
        if math.isnan(self.alpha_1):
            self.alpha_1 = self.alpha_t
        self.window_scores = deque(self.window_scores, maxlen=self.window_size)

    @classmethod
    def start(
        cls,
        target_alpha: float,
        initial_scores: ArrayLike = (),
        gamma: float = 0.005,
        window_size: int = 100,
        alpha_1: Optional[float] = None,
    ) -> "AciState":
        """Fresh state whose window holds the last ``window_size`` initial scores."""
        s = np.asarray(initial_scores, dtype=float).ravel()
        a1 = target_alpha if alpha_1 is None else float(alpha_1)
        return cls(
            target_alpha=target_alpha,
            gamma=gamma,
            window_size=window_size,
            alpha_t=a1,
            alpha_1=a1,
            window_scores=deque(s.tolist(), maxlen=window_size),
        )

    @property
    def T(self) -> int:
        return len(self.err_history)


def aci_update(state: AciState, covered: bool) -> AciState:
    """Record one outcome and step ``alpha_t``.

    At ``alpha_t <= 0`` the interval is the whole line, so the step counts
    as covered; at ``alpha_t >= 1`` it is empty and counts as an error,
    whatever ``covered`` says.
    """
    if state.alpha_t <= 0.0:
        covered = True
    elif state.alpha_t >= 1.0:
        covered = False
    err = 0 if covered else 1
    state.alpha_history.append(state.alpha_t)
    state.err_history.append(err)
    state.alpha_t = state.alpha_t + state.gamma * (state.target_alpha - err)
    return state


def aci_observe(state: AciState, score: float) -> AciState:
    """Push a newly observed nonconformity score into the window."""
    state.window_scores.append(float(score))
    return state


def aci_threshold(state: AciState) -> float:
    """``Q_t(1 - alpha_t)`` over the window, with ``Q(>=1) = inf`` and ``Q(<=0) = -inf``."""
    if len(state.window_scores) == 0:
        raise ValueError("empty calibration set")
    if state.alpha_t <= 0.0:
        return math.inf
    if state.alpha_t >= 1.0:
        return -math.inf
    return empirical_quantile(1.0 - state.alpha_t, np.fromiter(state.window_scores, float),
                              augment_with_infinity=True)


def aci_interval(
    state: AciState, x_t: ArrayLike, model, score_fn: Optional[ScoreFunction] = None
) -> PredictionInterval:
    """Prediction interval at the current working level ``alpha_t``."""
    score_fn = score_fn if score_fn is not None else AbsoluteResidual()
    q = aci_threshold(state)
    x = np.asarray(x_t, dtype=float)
    x = x.reshape(1, -1) if x.ndim <= 1 else x
    return score_fn.interval(score_fn.context(model, x), q)


def aci_bound_check(state: AciState) -> Tuple[float, float]:
    """``(|mean(err) - alpha|, (max(alpha_1, 1 - alpha_1) + gamma) / (gamma T))``."""
    T = state.T
    if T < 1:
        raise ValueError("no updates performed yet")
    lhs = abs(sum(state.err_history) / T - state.target_alpha)
    if state.gamma == 0:
        return lhs, math.inf
    rhs = (max(state.alpha_1, 1.0 - state.alpha_1) + state.gamma) / (state.gamma * T)
    return lhs, rhs


def aci_replay(
    misses: ArrayLike, target_alpha: float, gamma: float, alpha_1: Optional[float] = None
) -> Tuple[NDArray[np.int64], NDArray[np.float64]]:
    """Run the ``alpha_t`` recursion over proposed outcomes, vectorized.

    Parameters
    ----------
    misses : array_like of {0, 1}, shape (..., T)
        Proposed miss indicators; leading axes are independent streams.
    target_alpha, gamma, alpha_1
        As for ``AciState.start``.

    Returns
    -------
    err : ndarray, shape (..., T)
        Outcomes after the same boundary rule as ``aci_update``.
    alpha : ndarray, shape (..., T)
        ``alpha_t`` in force at each step.
    """
    target_alpha = _check_alpha(target_alpha, "alpha")
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    m = np.asarray(misses).astype(np.int64)
    a = np.full(m.shape[:-1], target_alpha if alpha_1 is None else float(alpha_1))
    err = np.empty_like(m)
    alpha = np.empty(m.shape, dtype=float)
    for t in range(m.shape[-1]):
        e = np.where(a <= 0.0, 0, np.where(a >= 1.0, 1, m[..., t]))
        err[..., t] = e
        alpha[..., t] = a
        a = a + gamma * (target_alpha - e)
    return err, alpha


def aci_run(
    state: AciState,
    test: Dataset,
    model,
    score_fn: Optional[ScoreFunction] = None,
    t0: int = 1,
) -> StreamRecords:
    """Stream over ``test``: interval, observe ``y``, update ``alpha_t``, slide window."""
    score_fn = score_fn if score_fn is not None else AbsoluteResidual()
    n = len(test)
    lo = np.empty(n)
    hi = np.empty(n)
    err = np.empty(n, dtype=int)
    alphas = np.empty(n)
    for j in range(n):
        x, y = test.X[j:j + 1], test.Y[j:j + 1]
        ctx = score_fn.context(model, x)
        iv = score_fn.interval(ctx, aci_threshold(state))
        lo[j], hi[j] = iv.lo[0, 0], iv.hi[0, 0]
        alphas[j] = state.alpha_t
        aci_update(state, bool(iv.contains(y)[0]))
        err[j] = state.err_history[-1]
        aci_observe(state, float(score_fn.scores(y, ctx)[0]))
    return StreamRecords(np.arange(t0, t0 + n), lo, hi, test.Y[:, 0].copy(), err, alphas)
