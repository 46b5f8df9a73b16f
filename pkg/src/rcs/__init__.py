"""Oversampling of imbalanced vector data with calibrated Gaussian sub-classes."""
from .baselines import random_oversample, smote
from .core import RunReport, calibrate_point, compute_threshold, partition_classes, rcs_oversample
from .dataset import LabeledDataset, class_counts, load_csv, stratified_kfold, write_csv
from .embedder import AutoencoderBundle, decode, encode, train_autoencoder
from .errors import RcsError
from .evaluation import RunConfig, benchmark, evaluate
from .gmm import EmConfig, GmmModel, fit_gmm
from .metrics import bacc, gmean, macro_f1, mcc, metrics_report

__version__ = "0.1.0"
