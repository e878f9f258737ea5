from enum import Enum

"""
* =============================================================== *
* This module contains various enumerations shared by the         *
* estimators, the landscape scans and the experiment runner.      *
* =============================================================== *
"""


class ExperimentName(Enum):
    GMM_SWEEP = "gmm_sweep"
    ITERATE_COMPARE = "iterate_compare"
    LOGISTIC_SWEEP = "logistic_sweep"
    LANDSCAPE = "landscape"
    BOUNDS_SUITE = "bounds_suite"
    GAP_FRESH_VS_SUPERVISED = "gap_fresh_vs_supervised"


class Metric(Enum):
    ACCURACY = "accuracy"
    COTANGENT = "cotangent"
    CORRELATION = "correlation"
    FIXED_POINT = "fixed_point"


class Estimator(Enum):
    """Row labels of the sweep tables."""

    INITIAL = "initial"
    SUPERVISED_U = "supervised_u"
    SUPERVISED_U_LOGISTIC = "supervised_u_logistic"
    FRESH_ST = "fresh_st"
    ITERATIVE_ST = "iterative_st"
    FRESH_LOGISTIC = "fresh_logistic"
    REUSE_LOGISTIC = "reuse_logistic"
    FRESH_AVERAGING = "fresh_averaging"
    REUSE_AVERAGING = "reuse_averaging"
    GAP = "fresh_minus_supervised"


class XLawVariant(Enum):
    CONSTANT_ONE = "constant_one"
    FOLDED_NORMAL = "folded_normal"
    BOUNDED_MARGIN = "bounded_margin"


class ScanKind(Enum):
    SUPERVISED = "supervised"
    UNSUPERVISED = "unsupervised"
    SEMISUP_REGULARIZED = "semisup_regularized"
    SEMISUP_CONSTRAINT_INDICATOR = "semisup_constraint_indicator"
    GRADIENT_NORM_SUPERVISED = "gradient_norm_supervised"
    GRADIENT_NORM_UNSUPERVISED = "gradient_norm_unsupervised"
    SCALE_DECAY = "scale_decay"

    def get_gradient(self):
        if self is ScanKind.SUPERVISED:
            return ScanKind.GRADIENT_NORM_SUPERVISED
        if self is ScanKind.UNSUPERVISED:
            return ScanKind.GRADIENT_NORM_UNSUPERVISED
        raise ValueError("no gradient scan for {}".format(self.value))


class ClassificationLoss(Enum):
    LOGISTIC = "logistic"
    EXPONENTIAL = "exponential"
