"""Warning systems with a conformal detection-rate guarantee.

A state is unsafe when its safety score ``phi`` is at or below
``phi_0``. The warning system alerts when the *predicted* score
``phi_hat`` is at or below a threshold. Calibrating that threshold on the
unsafe calibration states with split conformal prediction gives

    P[alert | unsafe] >= 1 - epsilon

for a new exchangeable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike

from .core import _check_alpha, empirical_quantile

__all__ = [
    "SafetyRecord",
    "WarningSystem",
    "records_from_arrays",
    "calibrate_warning",
    "warn",
    "evaluate_warning",
]


@dataclass(frozen=True)
class SafetyRecord:
    phi: float
    phi_hat: float
    unsafe: bool


def records_from_arrays(phi: ArrayLike, phi_hat: ArrayLike, phi_0: float) -> List[SafetyRecord]:
    """Build records, marking ``unsafe = phi <= phi_0``."""
    phi = np.asarray(phi, dtype=float).ravel()
    phi_hat = np.asarray(phi_hat, dtype=float).ravel()
    if phi.shape != phi_hat.shape:
        raise ValueError("phi and phi_hat differ in length")
    return [SafetyRecord(float(a), float(b), bool(a <= phi_0)) for a, b in zip(phi, phi_hat)]


@dataclass(frozen=True)
class WarningSystem:
    """Alert rule ``phi_hat <= alert_threshold`` (closed at equality)."""

    alert_threshold: float
    epsilon: float
    phi_0: float

    def __call__(self, phi_hat) -> np.ndarray:
        return np.asarray(phi_hat, dtype=float) <= self.alert_threshold


def calibrate_warning(cal: Sequence[SafetyRecord], epsilon: float, phi_0: float) -> WarningSystem:
    """Set the alert threshold from the unsafe calibration records.

    The score of an unsafe record is ``phi_hat - phi``, how far the
    predictor overstates safety. With ``q`` the ``(1 - epsilon)``
    quantile of these scores together with ``+inf``, the threshold is
    ``phi_0 + q``: a new unsafe state has ``phi <= phi_0`` and, with
    probability at least ``1 - epsilon``, ``phi_hat <= phi + q``.
    """
    epsilon = _check_alpha(epsilon, "epsilon")
    unsafe = [r for r in cal if r.unsafe]
    if not unsafe:
        raise ValueError("cannot calibrate conditional guarantee: no unsafe calibration records")
    scores = np.array([r.phi_hat - r.phi for r in unsafe])
    q = empirical_quantile(1.0 - epsilon, scores, augment_with_infinity=True)
    return WarningSystem(alert_threshold=phi_0 + q, epsilon=epsilon, phi_0=phi_0)


def warn(ws: WarningSystem, phi_hat: float) -> bool:
    return bool(phi_hat <= ws.alert_threshold)


def evaluate_warning(ws: WarningSystem, test: Iterable[SafetyRecord]) -> Tuple[float, float]:
    """``(P[alert | unsafe], P[alert | safe])`` on ``test``.

    A rate whose conditioning class is absent from ``test`` is ``nan``.
    """
    test = list(test)
    if not test:
        raise ValueError("empty test set")
    alert = np.array([warn(ws, r.phi_hat) for r in test])
    unsafe = np.array([r.unsafe for r in test])
    detection = float(alert[unsafe].mean()) if unsafe.any() else math.nan
    false_alert = float(alert[~unsafe].mean()) if (~unsafe).any() else math.nan
    return detection, false_alert
