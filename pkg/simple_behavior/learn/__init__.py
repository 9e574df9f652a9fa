"""Classification of session feature vectors."""

from simple_behavior.learn.classifiers import (
    ModelSpec,
    TrainedModel,
    train,
)
from simple_behavior.learn.evaluation import (
    ClassifierReport,
    FeatureSet,
    ImportanceEntry,
    ImportanceReport,
    LearnClient,
    MetricValue,
    feature_matrix,
    loocv,
    metrics,
    permutation_importance,
)
from simple_behavior.learn.scaling import ScalerState, apply_scaler, fit_scaler
