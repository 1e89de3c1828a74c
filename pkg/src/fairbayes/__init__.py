"""Plug-in fair classification under a demographic disparity budget."""
from .core import (ConstantClassifier, Dataset, FairClassifier, FunctionClassifier, GroupView,
                   HyperParams, LabeledSample, split_by_group)
from .disparity import DisparityCurve, ThresholdEstimate, empirical_disparity_curve, estimate_thresholds
from .fairclf import FittedFairBayes, OracleFairBayes, fit, fit_with_validation, oracle_classifier
from .lpreg import GAUSSIAN, GAUSSIAN_UNIT, LocalPolyEstimator
from .metrics import empirical_d_E, empirical_ddp, empirical_risk, exact_d_E, exact_d_R, exact_ddp
from .synth import SyntheticIntegrator, SyntheticOracle, SyntheticParams, sample, synthetic_oracle

__all__ = [
    "ConstantClassifier", "Dataset", "FairClassifier", "FunctionClassifier", "GroupView",
    "HyperParams", "LabeledSample", "split_by_group", "DisparityCurve", "ThresholdEstimate",
    "empirical_disparity_curve", "estimate_thresholds", "FittedFairBayes", "OracleFairBayes",
    "fit", "fit_with_validation", "oracle_classifier", "GAUSSIAN", "GAUSSIAN_UNIT",
    "LocalPolyEstimator", "empirical_d_E", "empirical_ddp", "empirical_risk", "exact_d_E",
    "exact_d_R", "exact_ddp", "SyntheticIntegrator", "SyntheticOracle", "SyntheticParams", "sample",
    "synthetic_oracle",
]
