"""Training: dataset split, five classifier families, prediction, tuning."""
from .split import SplitResult, split_dataset
from .tree import DecisionTree, grow_classification_tree, grow_regression_tree
from .forest import train_rf
from .boosting import train_gbm, train_xgb, softmax_rows, softmax_gradient_hessian, multiclass_log_loss
from .linear import train_lda, train_linear_svm
from .model import TrainedModel, predict, load_model, save_model
from .tune import tune

__all__ = [
    "SplitResult",
    "split_dataset",
    "DecisionTree",
    "grow_classification_tree",
    "grow_regression_tree",
    "train_rf",
    "train_gbm",
    "train_xgb",
    "train_lda",
    "train_linear_svm",
    "softmax_rows",
    "softmax_gradient_hessian",
    "multiclass_log_loss",
    "TrainedModel",
    "predict",
    "load_model",
    "save_model",
    "tune",
]
