"""Pseudo-anomaly generation for semi-supervised anomaly detection.

NNG-Mix (nearest-neighbor Gaussian mixup) plus Mixup, Cutout, CutMix and
Gaussian-noise baselines, three small detectors, and a reproducible
benchmark harness.
"""

from .augment import GeneratorConfig, PseudoAnomalySet, generate
from .dataset import (Dataset, SplitPlan, carve_split, load_csv, make_synthetic_clusters,
                      split_train_test)
from .detect import DetectorConfig, fit_detector
from .errors import ConfigError, DataError, NNGMixError, NumericalError
from .harness import ExperimentConfig, measure_intrusion, run_experiment, run_sweep
from .metrics import auc_roc
from .randgen import RngStream

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DataError", "Dataset", "DetectorConfig", "ExperimentConfig", "GeneratorConfig",
    "NNGMixError", "NumericalError", "PseudoAnomalySet", "RngStream", "SplitPlan", "auc_roc",
    "carve_split", "fit_detector", "generate", "load_csv", "make_synthetic_clusters",
    "measure_intrusion", "run_experiment", "run_sweep", "split_train_test",
]
