"""Joint prediction regions over ``k`` future steps for exchangeable series.

Two calibrators share one score table (one absolute residual per
calibration series and horizon step):

* ``cfrnn_calibrate`` splits the miscoverage budget evenly across steps
  (Bonferroni, per-step level ``1 - alpha / k``).
* ``copula_calibrate`` searches per-step thresholds against the empirical
  copula of the per-step score ranks, which exploits dependence between
  steps and gives sharper regions when residuals are correlated.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .core import PredictionInterval, _check_alpha, empirical_quantile

__all__ = [
    "MultiSeries",
    "HorizonScores",
    "EmpiricalCdf",
    "EmpiricalCopula",
    "RegionSet",
    "collect_horizon_scores",
    "bonferroni_level",
    "cfrnn_calibrate",
    "copula_calibrate",
    "copula_eval",
    "frechet_bounds",
    "predict_regions",
]


@dataclass(frozen=True)
class MultiSeries:
    """``n`` series, each an input window and ``k`` future targets.

    ``inputs`` has shape ``(n, t_in)`` (or ``(n, t_in, d)``), ``targets``
    has shape ``(n, k)`` or ``(n, k, m)`` for vector-valued steps.
    ``ids`` defaults to ``0..n-1``.
    """

    inputs: NDArray[np.float64]
    targets: NDArray[np.float64]
    ids: Optional[NDArray] = None
    signal: Optional[NDArray[np.float64]] = field(default=None, repr=False)

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=float)
        targets = np.asarray(self.targets, dtype=float)
        if inputs.ndim < 2 or targets.ndim < 2:
            raise ValueError("inputs and targets need one row per series")
        if inputs.shape[0] != targets.shape[0]:
            raise ValueError(
                f"{inputs.shape[0]} input windows but {targets.shape[0]} target blocks"
            )
        ids = np.arange(inputs.shape[0]) if self.ids is None else np.asarray(self.ids)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def horizon(self) -> int:
        return self.targets.shape[1]

    def subset(self, idx) -> "MultiSeries":
        idx = np.asarray(idx, dtype=int)
        sig = None if self.signal is None else np.asarray(self.signal)[idx]
        return MultiSeries(self.inputs[idx], self.targets[idx], self.ids[idx], sig)

    @classmethod
    def from_sequences(
        cls, inputs: Sequence[ArrayLike], targets: Sequence[ArrayLike], ids=None
    ) -> "MultiSeries":
        """Stack per-series arrays; ragged lengths raise ``ValueError``."""
        in_lens = {np.shape(a) for a in inputs}
        out_lens = {np.shape(a) for a in targets}
        if len(in_lens) > 1 or len(out_lens) > 1:
            raise ValueError("ragged series lengths")
        return cls(np.stack(inputs), np.stack(targets), ids)


@dataclass(frozen=True)
class HorizonScores:
    """Score table of shape ``(n_cal, k)``: column ``h`` is the set ``s_h``."""

    scores: NDArray[np.float64]

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float)
        if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] < 1:
            raise ValueError(f"need a non-empty (n_cal, k) table, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("scores must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)

    @property
    def k(self) -> int:
        return self.scores.shape[1]

    @property
    def n_cal(self) -> int:
        return self.scores.shape[0]

    def step(self, h: int) -> NDArray[np.float64]:
        """Scores of horizon step ``h`` (1-based)."""
        return self.scores[:, h - 1]


class EmpiricalCdf:
    """Right-continuous step function ``F(s) = #{s_i <= s} / n``."""

    def __init__(self, scores: ArrayLike):
        self.sorted = np.sort(np.asarray(scores, dtype=float).ravel())
        if self.sorted.size == 0:
            raise ValueError("empty calibration set")
        self.n = self.sorted.size

    def __call__(self, s: ArrayLike) -> NDArray[np.float64]:
        return np.searchsorted(self.sorted, s, side="right") / self.n

    def inverse(self, u: float) -> float:
        """Smallest observed score whose CDF value reaches ``u``; ``+inf`` above 1."""
        if u <= 0:
            return -math.inf
        if u > 1:
            return math.inf
        return empirical_quantile(u, self.sorted)


class EmpiricalCopula:
    """Empirical copula of the per-step score ranks.

    ``u_matrix[i, t] = F_t(s^i_t)`` where ``F_t`` is the empirical CDF of
    step ``t`` built from the same calibration table. Evaluation counts
    rows lying strictly below the query in every coordinate.
    """

    def __init__(self, hs: HorizonScores):
        self.cdfs = [EmpiricalCdf(hs.scores[:, t]) for t in range(hs.k)]
        self.u_matrix = np.column_stack([F(hs.scores[:, t]) for t, F in enumerate(self.cdfs)])
        self.k = hs.k
        self.n_cal = hs.n_cal

    def __call__(self, u: ArrayLike) -> float:
        return copula_eval(self, u)

    def levels(self, thresholds: ArrayLike) -> NDArray[np.float64]:
        """``F_t(s_t)`` per step; ``+inf`` thresholds map to ``+inf`` (no constraint)."""
        thr = np.asarray(thresholds, dtype=float)
        return np.array(
            [math.inf if np.isposinf(s) else float(F(s)) for F, s in zip(self.cdfs, thr)]
        )

    def value_at_thresholds(self, thresholds: ArrayLike) -> float:
        """Copula evaluated at ``(F_1(s_1), ..., F_k(s_k))``.

        A ``+inf`` threshold leaves its coordinate unconstrained, so the
        top corner reaches 1 even though every finite level is attained by
        some row.
        """
        return float(np.mean(np.all(self.u_matrix < self.levels(thresholds), axis=1)))


@dataclass(frozen=True)
class RegionSet:
    """One interval per horizon step for each forecast series."""

    intervals: List[PredictionInterval]
    thresholds: NDArray[np.float64]
    epsilon: float

    @property
    def k(self) -> int:
        return len(self.intervals)

    @property
    def lo(self) -> NDArray[np.float64]:
        """Lower bounds, shape ``(n, k)`` (or ``(n, k, m)``)."""
        return np.stack([iv.lo for iv in self.intervals], axis=1)

    @property
    def hi(self) -> NDArray[np.float64]:
        return np.stack([iv.hi for iv in self.intervals], axis=1)

    def covers(self, targets: ArrayLike) -> NDArray[np.bool_]:
        """Per series: every step inside its interval."""
        t = np.asarray(targets, dtype=float)
        inside = (self.lo <= t) & (t <= self.hi)
        return inside.reshape(inside.shape[0], -1).all(axis=1)

    def total_width(self) -> NDArray[np.float64]:
        w = np.stack([iv.width for iv in self.intervals], axis=1)
        return w.reshape(w.shape[0], -1).sum(axis=1)

    def records(self, ids=None) -> List[dict]:
        """JSON-ready rows ``{series_id, h, lo, hi, threshold, epsilon}``."""
        lo, hi = self.lo, self.hi
        n = lo.shape[0]
        ids = np.arange(n) if ids is None else np.asarray(ids)
        out = []
        for i in range(n):
            for h in range(self.k):
                out.append(
                    {
                        "series_id": ids[i].item() if hasattr(ids[i], "item") else ids[i],
                        "h": h + 1,
                        "lo": _jsonable(lo[i, h]),
                        "hi": _jsonable(hi[i, h]),
                        "threshold": _jsonable(self.thresholds[h]),
                        "epsilon": self.epsilon,
                    }
                )
        return out


def _jsonable(v):
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        f = float(v)
        return f if math.isfinite(f) else ("inf" if f > 0 else "-inf")
    return [_jsonable(x) for x in v]


def _forecast(model, inputs: NDArray, k: int) -> NDArray[np.float64]:
    X = inputs.reshape(inputs.shape[0], -1)
    pred = np.asarray(model.predict(X), dtype=float)
    if pred.shape[0] != inputs.shape[0] or pred.size // pred.shape[0] < k:
        raise ValueError(f"model returned shape {pred.shape}, expected ({inputs.shape[0]}, {k})")
    return pred


def collect_horizon_scores(cal: MultiSeries, model) -> HorizonScores:
    """Absolute residual per calibration series and horizon step.

    ``model.predict`` receives the flattened input windows and must return
    ``k`` (times ``m``) values per series. Vector-valued steps are scored
    with the infinity norm.
    """
    k = cal.horizon
    pred = _forecast(model, cal.inputs, k).reshape(cal.targets.shape)
    resid = np.abs(pred - cal.targets)
    if resid.ndim == 3:
        resid = resid.max(axis=2)
    return HorizonScores(resid)


def bonferroni_level(alpha: float, k: int) -> float:
    """Per-step quantile level ``1 - alpha / k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 1.0 - _check_alpha(alpha) / k


def cfrnn_calibrate(hs: HorizonScores, alpha: float) -> NDArray[np.float64]:
    """Per-step ``(1 - alpha/k)`` conformal quantiles (may be ``+inf``)."""
    p = bonferroni_level(alpha, hs.k)
    return np.array(
        [empirical_quantile(p, hs.step(h), augment_with_infinity=True) for h in range(1, hs.k + 1)]
    )


def copula_eval(cop: EmpiricalCopula, u: ArrayLike) -> float:
    """``(1/n) * sum_i prod_t 1[u^i_t < u_t]``."""
    u = np.asarray(u, dtype=float).ravel()
    if u.size != cop.k:
        raise ValueError(f"query has {u.size} coordinates, copula has {cop.k}")
    if np.any((u < 0) | (u > 1)):
        raise ValueError("copula arguments must lie in [0, 1]")
    return float(np.mean(np.all(cop.u_matrix < u, axis=1)))


def frechet_bounds(u: ArrayLike) -> Tuple[float, float]:
    """Lower and upper envelopes any copula obeys at ``u``."""
    u = np.asarray(u, dtype=float).ravel()
    k = u.size
    return max(1.0 - k + float(np.sum(u)), 0.0), float(np.min(u))


def _candidate_grid(hs: HorizonScores) -> List[NDArray[np.float64]]:
    """Sorted distinct observed scores per step, followed by ``+inf``."""
    return [np.append(np.unique(hs.step(h)), np.inf) for h in range(1, hs.k + 1)]


def copula_calibrate(
    hs: HorizonScores, epsilon: float, refine: bool = False
) -> NDArray[np.float64]:
    """Per-step thresholds whose empirical copula value reaches ``1 - epsilon``.

    The search first bisects a level ``tau`` shared by all steps,
    ``s_t = F_t^{-1}(tau)``, over the order-statistic levels ``j / n``
    (``j = n + 1`` maps every step to ``+inf``). The copula value is
    nondecreasing in ``tau`` so the bisection is exact. With ``refine``,
    each step in turn is then lowered along its own candidate grid while
    the target still holds, which leaves a threshold vector that no
    componentwise-smaller grid vector can replace. Refinement fits the
    calibration copula more tightly and tends to undercover slightly on
    new data, so it is off by default.

    Thresholds are observed scores or ``+inf``.
    """
    epsilon = _check_alpha(epsilon, "epsilon")
    target = 1.0 - epsilon
    cop = EmpiricalCopula(hs)
    n = hs.n_cal
    sorted_steps = np.sort(hs.scores, axis=0)

    def at_level(j: int) -> NDArray[np.float64]:
        if j > n:
            return np.full(hs.k, np.inf)
        return sorted_steps[j - 1].copy()

    def feasible(thr) -> bool:
        return cop.value_at_thresholds(thr) >= target

    lo, hi = 1, n + 1
    if feasible(at_level(lo)):
        hi = lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(at_level(mid)):
            hi = mid
        else:
            lo = mid
    thr = at_level(hi)
    if not feasible(thr):
        warnings.warn("copula target unreachable; returning unbounded thresholds", RuntimeWarning)
        return np.full(hs.k, np.inf)

    if refine:
        grid = _candidate_grid(hs)
        for t in range(hs.k):
            g = grid[t]
            pos = int(np.searchsorted(g, thr[t]))
            # feasibility is monotone in each coordinate: bisect the lowest feasible grid index
            a, b = -1, pos
            while b - a > 1:
                mid = (a + b) // 2
                trial = thr.copy()
                trial[t] = g[mid]
                if feasible(trial):
                    b = mid
                else:
                    a = mid
            thr[t] = g[b]
    return thr


def predict_regions(
    inputs: ArrayLike, model, thresholds: ArrayLike, epsilon: float = float("nan")
) -> RegionSet:
    """``[y_hat_h - thr_h, y_hat_h + thr_h]`` per step for each input window."""
    thr = np.asarray(thresholds, dtype=float).ravel()
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim == 1:
        inputs = inputs[None, :]
    k = thr.size
    pred = _forecast(model, inputs, k)
    pred = pred.reshape(inputs.shape[0], k, -1)
    intervals = []
    for h in range(k):
        c = pred[:, h, :]
        iv = PredictionInterval(c - thr[h], c + thr[h])
        if pred.shape[2] == 1:
            iv = PredictionInterval(iv.lo[:, 0], iv.hi[:, 0])
        intervals.append(iv)
    return RegionSet(intervals, thr, epsilon)
