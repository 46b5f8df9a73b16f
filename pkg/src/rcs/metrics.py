"""Confusion-matrix metrics for imbalanced multiclass evaluation."""
from __future__ import annotations

import numpy as np

from .errors import AbsentClass, InvalidArgument, ShapeMismatch


def confusion_matrix(y_true, y_pred, k: int) -> np.ndarray:
    """``cm[true, predicted]`` counts."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ShapeMismatch("y_true and y_pred differ in length")
    for y in (y_true, y_pred):
        if y.size and (y.min() < 0 or y.max() >= k):
            raise InvalidArgument(f"label outside [0, {k})")
    cm = np.zeros((k, k), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def _recalls(cm) -> np.ndarray:
    cm = np.asarray(cm)
    support = cm.sum(axis=1)
    if np.any(support == 0):
        raise AbsentClass(f"classes {np.flatnonzero(support == 0).tolist()} have no true samples")
    return np.diag(cm) / support


def per_class_recall(cm) -> np.ndarray:
    return _recalls(cm)


def bacc(cm) -> float:
    return float(np.mean(_recalls(cm)))


def gmean(cm) -> float:
    r = _recalls(cm)
    if np.any(r == 0):
        return 0.0
    return float(np.exp(np.mean(np.log(r))))


def mcc(cm) -> float:
    """Multiclass Matthews correlation (Gorodkin's R_K); 0 when undefined."""
    cm = np.asarray(cm, dtype=float)
    s = cm.sum()
    c = np.trace(cm)
    t = cm.sum(axis=1)
    p = cm.sum(axis=0)
    cov_tp = c * s - p @ t
    denom = (s * s - p @ p) * (s * s - t @ t)
    if denom <= 0:
        return 0.0
    return float(cov_tp / np.sqrt(denom))


def macro_f1(cm) -> float:
    cm = np.asarray(cm, dtype=float)
    tp = np.diag(cm)
    pred = cm.sum(axis=0)
    true = cm.sum(axis=1)
    denom = pred + true
    f1 = np.divide(2 * tp, denom, out=np.zeros_like(tp), where=denom > 0)
    return float(np.mean(f1))


def metrics_report(cm) -> dict:
    cm = np.asarray(cm)
    return {
        "bacc": bacc(cm),
        "mcc": mcc(cm),
        "f1_macro": macro_f1(cm),
        "gmean": gmean(cm),
        "per_class_recall": per_class_recall(cm).tolist(),
        "confusion_matrix": cm.tolist(),
    }
