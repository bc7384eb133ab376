"""Seeded synthetic data matching each algorithm's assumptions.

Every generator is a pure function of its ``GeneratorSpec``; the same
spec (including ``seed``) always yields identical arrays. Parameter
values are illustrative, not reproductions of any published figure.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, Tuple

import numpy as np
from numpy.typing import NDArray

from ..core import Dataset
from ..multihorizon import MultiSeries

__all__ = [
    "GeneratorSpec",
    "generate",
    "iid_regression",
    "heteroscedastic",
    "heteroscedastic_scale",
    "ar1",
    "shift_series",
    "multi_horizon",
    "safety_scores",
    "GENERATOR_DEFAULTS",
]

# Versioned defaults; bump the version when any value changes.
GENERATOR_DEFAULTS_VERSION = 1
GENERATOR_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "iid_regression": {"n": 1000, "d": 1, "noise": 1.0},
    "heteroscedastic": {"n": 2000, "outlier_rate": 0.01, "outlier_scale": 5.0},
    "ar1": {"T": 1000, "rho": 0.6, "noise": 1.0, "mean": 0.0},
    "shift_series": {"T": 1000, "rho": 0.6, "noise": 1.0, "mean": 0.0, "changepoints": []},
    "multi_horizon": {
        "n": 1000,
        "t_in": 20,
        "k": 5,
        "correlation": 0.8,
        "noise": 0.1,
        "obs_noise": 0.02,
        "omega": 0.4,
        "damping": 0.05,
    },
    "safety": {"n": 1000, "phi_0": 0.0, "noise": 0.3},
}


@dataclass(frozen=True)
class GeneratorSpec:
    """Generator name, its parameters and the seed.

    Unspecified parameters take the values in ``GENERATOR_DEFAULTS``.
    """

    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _GENERATORS:
            raise ValueError(f"unknown generator {self.kind!r}; choose from {sorted(_GENERATORS)}")
        unknown = set(self.params) - set(GENERATOR_DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        rho = self.params.get("rho")
        if rho is not None and not -1.0 < rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {rho}")

    def resolved(self) -> Dict[str, Any]:
        return {**GENERATOR_DEFAULTS[self.kind], **self.params}

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "GeneratorSpec":
        extra = set(d) - {"kind", "params", "seed"}
        if extra:
            raise ValueError(f"unknown generator spec keys: {sorted(extra)}")
        return cls(d["kind"], dict(d.get("params", {})), int(d.get("seed", 0)))

    @classmethod
    def from_json(cls, s: str) -> "GeneratorSpec":
        return cls.from_dict(json.loads(s))


def iid_regression(rng, n, d, noise) -> Dataset:
    """``y = x . 1 + noise * N(0, 1)`` with ``x ~ U(-1, 1)^d``."""
    X = rng.uniform(-1.0, 1.0, size=(n, d))
    y = X.sum(axis=1) + noise * rng.standard_normal(n)
    return Dataset(X, y)


def heteroscedastic_scale(x: NDArray) -> NDArray:
    """True noise standard deviation of the heteroscedastic generator."""
    x = np.asarray(x, dtype=float)
    return 0.1 + 0.4 * x.reshape(x.shape[0], -1)[:, 0]


def heteroscedastic(rng, n, outlier_rate, outlier_scale) -> Dataset:
    """Noise growing linearly in ``x`` plus rare large outliers.

    ``x ~ U(0, 5)``, ``y = 1 + 0.5 x + sigma(x) * N(0, 1)`` with
    ``sigma = heteroscedastic_scale``; a fraction ``outlier_rate`` of rows
    get an extra ``outlier_scale * N(0, 1)``.
    """
    x = rng.uniform(0.0, 5.0, size=n)
    y = 1.0 + 0.5 * x + heteroscedastic_scale(x[:, None]) * rng.standard_normal(n)
    outlier = rng.random(n) < outlier_rate
    y = y + outlier * outlier_scale * rng.standard_normal(n)
    return Dataset(x, y)


def shift_series(rng, T, rho, noise, mean, changepoints) -> NDArray[np.float64]:
    """AR(1) fluctuations around a piecewise-constant mean.

    ``y_t = mu_t + e_t``, ``e_t = rho e_{t-1} + noise * N(0, 1)``, with
    ``e_0`` drawn from the stationary law. ``changepoints`` is a list of
    ``(t, new_mean)`` pairs.
    """
    mu = np.full(T, float(mean))
    for t, m in sorted(changepoints):
        if not 0 <= t < T:
            raise ValueError(f"changepoint {t} outside [0, {T})")
        mu[int(t):] = float(m)
    z = rng.standard_normal(T)
    e = np.empty(T)
    e[0] = noise * z[0] / np.sqrt(1.0 - rho**2)
    for t in range(1, T):
        e[t] = rho * e[t - 1] + noise * z[t]
    return mu + e


def ar1(rng, T, rho, noise, mean) -> NDArray[np.float64]:
    """Stationary AR(1) series; identical to ``shift_series`` without changepoints."""
    return shift_series(rng, T, rho, noise, mean, [])


def multi_horizon(
    rng, n, t_in, k, correlation, noise, obs_noise, omega, damping
) -> MultiSeries:
    """Damped-oscillator trajectories with correlated future noise.

    Each series is ``A exp(-damping t) cos(omega t + phase)`` with random
    amplitude and phase. Inputs are the first ``t_in`` points plus
    ``obs_noise``; targets are the next ``k`` points plus noise

        e_h = sigma_h (sqrt(c) z_0 + sqrt(1 - c) z_h),
        sigma_h = noise * (1 + 0.25 (h - 1)),

    so ``correlation`` ``c`` sets the cross-step residual correlation.
    ``signal`` holds the noiseless targets.
    """
    if not 0.0 <= correlation <= 1.0:
        raise ValueError("correlation must lie in [0, 1]")
    t = np.arange(t_in + k)
    amp = rng.uniform(0.5, 2.0, size=(n, 1))
    phase = rng.uniform(0.0, 2 * np.pi, size=(n, 1))
    path = amp * np.exp(-damping * t) * np.cos(omega * t + phase)
    inputs = path[:, :t_in] + obs_noise * rng.standard_normal((n, t_in))
    sigma = noise * (1.0 + 0.25 * np.arange(k))
    z0 = rng.standard_normal((n, 1))
    zh = rng.standard_normal((n, k))
    e = sigma * (np.sqrt(correlation) * z0 + np.sqrt(1.0 - correlation) * zh)
    signal = path[:, t_in:]
    return MultiSeries(inputs, signal + e, signal=signal)


def safety_scores(rng, n, phi_0, noise) -> Tuple[NDArray, NDArray]:
    """Safety scores ``phi ~ N(1, 1)`` and a noisy predictor of them.

    ``phi_hat = phi + noise * (1 + 0.5 |phi - phi_0|) * N(0, 1)``; states
    with ``phi <= phi_0`` are unsafe. Returns ``(phi, phi_hat)``.
    """
    phi = 1.0 + rng.standard_normal(n)
    phi_hat = phi + noise * (1.0 + 0.5 * np.abs(phi - phi_0)) * rng.standard_normal(n)
    return phi, phi_hat


_GENERATORS: Dict[str, Callable] = {
    "iid_regression": iid_regression,
    "heteroscedastic": heteroscedastic,
    "ar1": ar1,
    "shift_series": shift_series,
    "multi_horizon": multi_horizon,
    "safety": safety_scores,
}


def generate(spec: GeneratorSpec):
    """Draw the data described by ``spec``.

    Returns a ``Dataset`` for ``iid_regression`` and ``heteroscedastic``,
    a 1-D array for ``ar1`` and ``shift_series``, a ``MultiSeries`` for
    ``multi_horizon`` and a ``(phi, phi_hat)`` pair for ``safety``.
    """
    rng = np.random.default_rng(spec.seed)
    return _GENERATORS[spec.kind](rng, **spec.resolved())
