"""Autoencoder-based anomaly detection over mixed tabular features."""

from .autoencoder import (Autoencoder, DimensionMismatch, default_widths,
                          forward, gradients, init_autoencoder, mse_loss,
                          reconstruct, reconstruction_errors, train_autoencoder)
from .detect import AnomalyReport, threshold_and_flag
from .fixture import fixture_plan, make_anomaly_fixture
from .preprocess import (FeaturePlan, NoRowsRemaining, OneHotMap,
                         PreprocessResult, ScalerParams, apply_preprocessor,
                         preprocess)

__all__ = [
    "Autoencoder", "DimensionMismatch", "default_widths", "forward", "gradients",
    "init_autoencoder", "mse_loss", "reconstruct", "reconstruction_errors",
    "train_autoencoder", "AnomalyReport", "threshold_and_flag", "fixture_plan",
    "make_anomaly_fixture", "FeaturePlan", "NoRowsRemaining", "OneHotMap",
    "PreprocessResult", "ScalerParams", "apply_preprocessor", "preprocess",
]
