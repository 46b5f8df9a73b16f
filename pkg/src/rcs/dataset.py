"""Labeled vector datasets: CSV I/O, class statistics, folds and scaling."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyInput, InsufficientSamples, InvalidArgument, ParseError, ShapeMismatch
from .rng import derive


@dataclass(frozen=True)
class LabeledDataset:
    """Feature rows with dense integer labels in ``[0, K)``.

    ``label_names[c]`` is the original label string of class ``c``;
    ``synthetic`` marks rows produced by an oversampler.
    """

    features: np.ndarray
    labels: np.ndarray
    label_names: tuple[str, ...] = ()
    feature_names: tuple[str, ...] = ()
    synthetic: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2:
            raise ShapeMismatch(f"features must be 2-d, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise ShapeMismatch(f"{x.shape[0]} feature rows but labels of shape {y.shape}")
        if y.size and y.min() < 0:
            raise InvalidArgument("labels must be non-negative class indices")
        names = tuple(self.label_names)
        k = int(y.max()) + 1 if y.size else 0
        if not names:
            names = tuple(str(c) for c in range(k))
        elif k > len(names):
            raise InvalidArgument(f"label {k - 1} has no name ({len(names)} names given)")
        syn = np.zeros(x.shape[0], dtype=bool) if self.synthetic is None else np.asarray(self.synthetic, dtype=bool)
        if syn.shape != y.shape:
            raise ShapeMismatch("synthetic mask must match the number of rows")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "label_names", names)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "synthetic", syn)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    def subset(self, idx) -> LabeledDataset:
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset(self.features[idx], self.labels[idx], self.label_names,
                              self.feature_names, self.synthetic[idx])

    def with_features(self, features) -> LabeledDataset:
        return LabeledDataset(features, self.labels, self.label_names, (), self.synthetic)

    def class_rows(self, c: int) -> np.ndarray:
        return self.features[self.labels == c]


@dataclass(frozen=True)
class ClassCounts:
    ordered: tuple[tuple[int, int], ...]

    @property
    def N1(self) -> int:
        return self.ordered[0][1]

    @property
    def NK(self) -> int:
        return self.ordered[-1][1]

    def as_dict(self) -> dict[int, int]:
        return dict(self.ordered)


def class_counts(ds: LabeledDataset) -> ClassCounts:
    """Present classes sorted by count descending, ties by label ascending."""
    if len(ds) == 0:
        raise EmptyInput("class counts of an empty dataset")
    labels, counts = np.unique(ds.labels, return_counts=True)
    pairs = sorted(zip(labels.tolist(), counts.tolist()), key=lambda p: (-p[1], p[0]))
    return ClassCounts(tuple(pairs))


# ---------------------------------------------------------------- CSV


def _resolve_label_column(header, label_column, ncols):
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if header is None:
            raise InvalidArgument("selecting the label column by name requires a header")
        if label_column not in header:
            raise InvalidArgument(f"label column {label_column!r} not in header")
        return header.index(label_column)
    idx = int(label_column)
    if idx < 0:
        idx += ncols
    if not 0 <= idx < ncols:
        raise InvalidArgument(f"label column index {label_column} out of range for {ncols} columns")
    return idx


def load_csv(path, label_column=-1, has_header: bool = True) -> LabeledDataset:
    """Read a numeric CSV with one label column.

    Labels are re-encoded densely in order of first appearance; the original
    strings are kept in ``label_names``.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    header = None
    if has_header and rows:
        header = [h.strip() for h in rows[0]]
        rows = rows[1:]
    if not rows:
        raise EmptyInput(f"{path} has no data rows")
    ncols = len(header) if header is not None else len(rows[0])
    lab = _resolve_label_column(header, label_column, ncols)
    first_row = 2 if header is not None else 1

    names: dict[str, int] = {}
    feats, labels = [], []
    for i, row in enumerate(rows):
        if len(row) != ncols:
            raise ShapeMismatch(f"row {i + first_row} has {len(row)} columns, expected {ncols}")
        vals = []
        for j, cell in enumerate(row):
            if j == lab:
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise ParseError(i + first_row, j, f"cannot parse {cell!r} as a number") from None
        key = row[lab].strip()
        labels.append(names.setdefault(key, len(names)))
        feats.append(vals)
    fnames = tuple(h for j, h in enumerate(header) if j != lab) if header else ()
    return LabeledDataset(np.array(feats, dtype=float), np.array(labels), tuple(names), fnames)


def write_csv(ds: LabeledDataset, path, label_header: str = "label") -> None:
    """Write features, original label strings and a trailing 0/1 ``synthetic`` column."""
    fnames = list(ds.feature_names) or [f"x{j}" for j in range(ds.dim)]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*fnames, label_header, "synthetic"])
        for x, y, s in zip(ds.features, ds.labels, ds.synthetic):
            w.writerow([*(repr(float(v)) for v in x), ds.label_names[y], int(s)])


# ---------------------------------------------------------------- folds


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        test = np.flatnonzero(self.assignments == fold)
        train = np.flatnonzero(self.assignments != fold)
        return train, test


def stratified_kfold(ds: LabeledDataset, k: int, seed: int) -> FoldPlan:
    """Seeded per-class shuffle, then round-robin fold assignment.

    The round-robin cursor carries over between classes so overall fold
    sizes stay within one of each other too.
    """
    if k < 2:
        raise InvalidArgument("k must be at least 2")
    assign = np.full(len(ds), -1, dtype=np.int64)
    rng = derive(seed, "folds")
    cursor = 0
    for c, n in sorted(class_counts(ds).ordered):
        if n < k:
            raise InsufficientSamples(f"class {ds.label_names[c]!r} has {n} samples, fewer than k={k}")
        idx = np.flatnonzero(ds.labels == c)
        idx = idx[rng.permutation(idx.size)]
        assign[idx] = (cursor + np.arange(idx.size)) % k
        cursor = (cursor + idx.size) % k
    return FoldPlan(k, assign)


# ---------------------------------------------------------------- scaling


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def inverse_transform(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.std + self.mean


STD_FLOOR = 1e-12


def standardize_fit_transform(train: LabeledDataset) -> tuple[Standardizer, LabeledDataset]:
    if len(train) == 0:
        raise EmptyInput("cannot fit a standardizer on no rows")
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)  # population divisor N
    std = np.where(std < STD_FLOOR, 1.0, std)
    s = Standardizer(mean, std)
    return s, standardize_apply(s, train)


def standardize_apply(s: Standardizer, ds: LabeledDataset) -> LabeledDataset:
    return LabeledDataset(s.transform(ds.features), ds.labels, ds.label_names, ds.feature_names, ds.synthetic)
