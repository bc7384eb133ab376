"""Desk-scale experiment support: forecasters, generators and metrics."""

from .forecasters import (
    ConstantStub,
    Forecaster,
    KnnRegressor,
    KnnResidualScale,
    LinearAR,
    LinearQuantile,
    lag_embed,
    make_forecaster,
)
from .generators import (
    GENERATOR_DEFAULTS,
    GeneratorSpec,
    generate,
    heteroscedastic_scale,
)
from .metrics import Metrics, coverage, joint_coverage, mean_width, miscoverage, rolling_coverage

__all__ = [
    "ConstantStub",
    "Forecaster",
    "KnnRegressor",
    "KnnResidualScale",
    "LinearAR",
    "LinearQuantile",
    "lag_embed",
    "make_forecaster",
    "GENERATOR_DEFAULTS",
    "GeneratorSpec",
    "generate",
    "heteroscedastic_scale",
    "Metrics",
    "coverage",
    "joint_coverage",
    "mean_width",
    "miscoverage",
    "rolling_coverage",
]
