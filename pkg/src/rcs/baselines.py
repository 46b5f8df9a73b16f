"""Reference oversamplers: random duplication and SMOTE."""
from __future__ import annotations

import logging

import numpy as np

from .dataset import LabeledDataset, class_counts
from .errors import EmptyInput, InsufficientSamples
from .rng import derive

log = logging.getLogger(__name__)


def _append(ds: LabeledDataset, xs, ys) -> LabeledDataset:
    if not xs:
        return ds
    x, y = np.vstack(xs), np.concatenate(ys)
    return LabeledDataset(np.vstack([ds.features, x]), np.concatenate([ds.labels, y]), ds.label_names,
                          ds.feature_names, np.concatenate([ds.synthetic, np.ones(len(y), dtype=bool)]))


def random_oversample(ds: LabeledDataset, seed: int = 42) -> LabeledDataset:
    """Duplicate uniformly chosen rows of each class until it reaches the largest count."""
    if len(ds) == 0:
        raise EmptyInput("nothing to oversample")
    counts = class_counts(ds)
    xs, ys = [], []
    for c, n in counts.ordered[1:]:
        need = counts.N1 - n
        if need == 0:
            continue
        rows = ds.class_rows(c)
        pick = derive(seed, "ros", c).integers(0, n, size=need)
        xs.append(rows[pick])
        ys.append(np.full(need, c))
    return _append(ds, xs, ys)


def nearest_neighbors(x: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` nearest other rows (Euclidean), ties by index."""
    d2 = np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(d2, np.inf)
    return np.argsort(d2, axis=1, kind="stable")[:, :k]


def smote(ds: LabeledDataset, k: int = 5, seed: int = 42, return_pairs: bool = False):
    """SMOTE: interpolate between a random class member and one of its k nearest same-class neighbours.

    With ``return_pairs`` the generating ``(base, neighbour)`` rows are also returned.
    """
    if len(ds) == 0:
        raise EmptyInput("nothing to oversample")
    counts = class_counts(ds)
    xs, ys, pairs = [], [], []
    for c, n in counts.ordered[1:]:
        need = counts.N1 - n
        if need == 0:
            continue
        if n < 2:
            raise InsufficientSamples(f"class {ds.label_names[c]!r} has a single sample; SMOTE needs two")
        kc = min(k, n - 1)
        if kc < k:
            log.warning("class %s: k=%d clamped to %d", ds.label_names[c], k, kc)
        rows = ds.class_rows(c)
        nn = nearest_neighbors(rows, kc)
        rng = derive(seed, "smote", c)
        base = rng.integers(0, n, size=need)
        nbr = nn[base, rng.integers(0, kc, size=need)]
        u = rng.uniform(size=(need, 1))
        xs.append(rows[base] + u * (rows[nbr] - rows[base]))
        ys.append(np.full(need, c))
        pairs.append((rows[base], rows[nbr]))
    out = _append(ds, xs, ys)
    if return_pairs:
        if pairs:
            return out, (np.vstack([p[0] for p in pairs]), np.vstack([p[1] for p in pairs]))
        return out, (np.empty((0, ds.dim)), np.empty((0, ds.dim)))
    return out
