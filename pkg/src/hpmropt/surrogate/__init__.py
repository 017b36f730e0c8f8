"""Surrogate models: dataset handling, GP and MLP regressors, two-stage pipeline."""

from .dataset import Dataset, Standardizer, correlation_matrix, filter_outliers
from .features import rf_feature_importance, select_features
from .gp import GPModel, gp_fit, gp_predict
from .mlp import MLPConfig, MLPModel, mlp_fit, mlp_predict
from .twostage import (
    SurrogateConfig,
    SurrogateEvaluator,
    TwoStagePredictor,
    fit_two_stage,
    kfold_r2,
    r2_score,
    two_stage_predict,
)

__all__ = [
    "Dataset", "Standardizer", "correlation_matrix", "filter_outliers", "rf_feature_importance",
    "select_features", "GPModel", "gp_fit", "gp_predict", "MLPConfig", "MLPModel", "mlp_fit",
    "mlp_predict", "SurrogateConfig", "SurrogateEvaluator", "TwoStagePredictor", "fit_two_stage",
    "kfold_r2", "r2_score", "two_stage_predict",
]
