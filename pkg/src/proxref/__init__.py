"""Infrared-reflectance estimation and proximity-sensing toolkit."""

from .calibration import (
    CalibrationResult,
    FullFitResult,
    SweepSample,
    SweepSeries,
    fit_alpha,
    fit_full,
    simulate_sweep,
)
from .errors import (
    ConvergenceError,
    DataError,
    DomainError,
    ProxrefError,
    TransportError,
)
from .head import (
    FusionMode,
    HeadParams,
    TrainConfig,
    categorical_expectation,
    fuse,
    gradient_check,
    head_forward,
    mse_loss,
    predict_alpha,
    train_head,
)
from .sensor import (
    CurrentReading,
    Reflectance,
    SensorIntrinsics,
    forward_current,
    invert_distance,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationResult",
    "ConvergenceError",
    "CurrentReading",
    "DataError",
    "DomainError",
    "FullFitResult",
    "FusionMode",
    "HeadParams",
    "ProxrefError",
    "Reflectance",
    "SensorIntrinsics",
    "SweepSample",
    "SweepSeries",
    "TrainConfig",
    "TransportError",
    "categorical_expectation",
    "fit_alpha",
    "fit_full",
    "forward_current",
    "fuse",
    "gradient_check",
    "head_forward",
    "invert_distance",
    "mse_loss",
    "predict_alpha",
    "simulate_sweep",
    "train_head",
    "__version__",
]
