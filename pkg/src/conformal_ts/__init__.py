"""Distribution-free prediction intervals for regression and time series."""

from .core import (
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
from .multihorizon import (
    EmpiricalCopula,
    HorizonScores,
    MultiSeries,
    RegionSet,
    cfrnn_calibrate,
    collect_horizon_scores,
    copula_calibrate,
    copula_eval,
    frechet_bounds,
    predict_regions,
)
from .online import (
    AciState,
    EnbpiState,
    aci_bound_check,
    aci_interval,
    aci_replay,
    aci_run,
    aci_update,
    enbpi_fit,
    enbpi_interval,
    enbpi_recalibrate,
    enbpi_run,
)
from .safety import SafetyRecord, WarningSystem, calibrate_warning, evaluate_warning, warn

__version__ = "0.1.0"

__all__ = [
    "AbsoluteResidual",
    "ConfidenceLevel",
    "CqrScore",
    "Dataset",
    "NormalizedResidual",
    "PredictionInterval",
    "SplitConformalRegressor",
    "calibrate",
    "empirical_quantile",
    "predict_interval",
    "score",
    "split",
    "EmpiricalCopula",
    "HorizonScores",
    "MultiSeries",
    "RegionSet",
    "cfrnn_calibrate",
    "collect_horizon_scores",
    "copula_calibrate",
    "copula_eval",
    "frechet_bounds",
    "predict_regions",
    "AciState",
    "EnbpiState",
    "aci_bound_check",
    "aci_interval",
    "aci_replay",
    "aci_run",
    "aci_update",
    "enbpi_fit",
    "enbpi_interval",
    "enbpi_recalibrate",
    "enbpi_run",
    "SafetyRecord",
    "WarningSystem",
    "calibrate_warning",
    "evaluate_warning",
    "warn",
]
