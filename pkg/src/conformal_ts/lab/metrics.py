"""Coverage and sharpness metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..core import PredictionInterval

__all__ = ["Metrics", "coverage", "joint_coverage", "mean_width", "rolling_coverage", "miscoverage"]


@dataclass
class Metrics:
    coverage: float = float("nan")
    joint_coverage: float = float("nan")
    mean_width: float = float("nan")
    miscoverage: float = float("nan")
    rolling_coverage: Optional[NDArray[np.float64]] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {}
        for key in ("coverage", "joint_coverage", "mean_width", "miscoverage"):
            v = getattr(self, key)
            if not np.isnan(v):
                out[key] = float(v)
        return out


def coverage(intervals: PredictionInterval, truths: ArrayLike) -> float:
    """Fraction of ``truths`` inside their intervals."""
    inside = intervals.contains(truths)
    if inside.size == 0:
        raise ValueError("no test points")
    return float(np.mean(inside))


def joint_coverage(regions, trajectories: ArrayLike) -> float:
    """Fraction of trajectories covered at every horizon step.

    ``regions`` is a ``RegionSet`` (or anything with ``covers``), or a
    pair ``(lo, hi)`` of arrays shaped like ``trajectories``.
    """
    traj = np.asarray(trajectories, dtype=float)
    if hasattr(regions, "covers"):
        hit = regions.covers(traj)
    else:
        lo, hi = (np.asarray(a, dtype=float) for a in regions)
        inside = (lo <= traj) & (traj <= hi)
        hit = inside.reshape(inside.shape[0], -1).all(axis=1)
    if hit.size == 0:
        raise ValueError("no test trajectories")
    return float(np.mean(hit))


def mean_width(intervals: PredictionInterval) -> float:
    """Mean over rows of the summed per-dimension width."""
    w = np.asarray(intervals.width)
    w = w.reshape(w.shape[0], -1).sum(axis=1) if w.ndim > 1 else w
    return float(np.mean(w))


def rolling_coverage(errs: ArrayLike, window: int) -> NDArray[np.float64]:
    """Sliding mean of ``1 - err`` over full windows.

    Returns ``len(errs) - window + 1`` values; entry ``j`` covers steps
    ``j .. j + window - 1``.
    """
    e = np.asarray(errs, dtype=float).ravel()
    if not 1 <= window <= e.size:
        raise ValueError(f"window must lie in [1, {e.size}], got {window}")
    c = np.concatenate([[0.0], np.cumsum(1.0 - e)])
    return (c[window:] - c[:-window]) / window


def miscoverage(errs: ArrayLike) -> float:
    """Empirical miscoverage ``mean(err)``."""
    e = np.asarray(errs, dtype=float)
    return float(np.mean(e)) if e.size else float("nan")
