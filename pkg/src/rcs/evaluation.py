"""Cross-validated and hold-out evaluation of oversamplers."""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .baselines import random_oversample, smote
from .core import rcs_oversample
from .dataset import LabeledDataset, stratified_kfold, standardize_apply, standardize_fit_transform
from .embedder import decode, encode, train_autoencoder
from .errors import InvalidArgument
from .gmm import EmConfig
from .metrics import confusion_matrix, metrics_report
from .nn import predict, train_classifier
from .rng import derive, derive_seed

METHODS = ("none", "ros", "smote", "rcs")
METRICS = ("bacc", "mcc", "f1_macro", "gmean")


@dataclass(frozen=True)
class RunConfig:
    data: str | None = None
    label_col: str = "-1"
    has_header: bool = True
    method: str = "rcs"
    methods: tuple[str, ...] = METHODS
    eta: float = 1.3
    k: int = 3
    smote_k: int = 5
    temp: float = 0.07
    latent_dim: int | None = None
    use_embedder: bool = False
    classify_in: str = "latent"
    ae_epochs: int = 200
    ae_lr: float = 1e-4
    classifier_hidden: tuple[int, ...] = (64, 32)
    epochs: int = 100
    lr: float = 1e-3
    batch: int = 64
    folds: int = 5
    standardize: bool = True
    seed: int = 42
    workers: int = 1
    out_dir: str = "out"
    em: EmConfig = field(default_factory=EmConfig)

    def validate(self) -> RunConfig:
        if self.method not in METHODS:
            raise InvalidArgument(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise InvalidArgument(f"unknown methods {bad}")
        if self.method == "rcs" or "rcs" in self.methods:
            if not self.eta >= 1:
                raise InvalidArgument(f"eta must be >= 1, got {self.eta}")
            if self.k < 1:
                raise InvalidArgument("k must be >= 1")
        if self.smote_k < 1:
            raise InvalidArgument("smote k must be >= 1")
        if self.use_embedder:
            if not self.temp > 0:
                raise InvalidArgument("temperature must be positive")
            if self.latent_dim is not None and self.latent_dim < 1:
                raise InvalidArgument("latent_dim must be >= 1")
            if self.classify_in not in ("input", "latent"):
                raise InvalidArgument("classify_in must be 'input' or 'latent'")
        if self.folds < 2:
            raise InvalidArgument("folds must be >= 2")
        if self.epochs < 0 or self.ae_epochs < 0:
            raise InvalidArgument("epochs must be non-negative")
        if self.workers < 1:
            raise InvalidArgument("workers must be >= 1")
        return self

    def public(self) -> dict:
        d = asdict(self)
        d.pop("out_dir")
        d.pop("workers")
        d["em"] = asdict(self.em)
        return d


def oversample(ds: LabeledDataset, method: str, cfg: RunConfig, seed: int):
    """Apply one oversampler; returns the balanced dataset and an optional RCS report."""
    if method == "none":
        return ds, None
    if method == "ros":
        return random_oversample(ds, seed), None
    if method == "smote":
        return smote(ds, cfg.smote_k, seed), None
    if method == "rcs":
        return rcs_oversample(ds, cfg.eta, cfg.k, cfg.em, seed)
    raise InvalidArgument(f"unknown method {method!r}")


def fit_and_score(train: LabeledDataset, test: LabeledDataset, method: str, cfg: RunConfig, seed: int) -> dict:
    """Scale, optionally embed, oversample the training part only, train, and score on ``test``."""
    if cfg.standardize:
        scaler, train = standardize_fit_transform(train)
        test = standardize_apply(scaler, test)
    bundle = None
    if cfg.use_embedder:
        bundle = train_autoencoder(train, cfg.latent_dim, cfg.temp, cfg.ae_epochs, cfg.ae_lr,
                                   derive_seed(seed, "embedder"), cfg.batch)
        lat_train, lat_test = encode(bundle, train), encode(bundle, test)
        bal, report = oversample(lat_train, method, cfg, derive_seed(seed, "oversample"))
        if cfg.classify_in == "latent":
            fit_set, eval_set = bal, lat_test
        else:
            syn = bal.synthetic
            feats = np.vstack([train.features, decode(bundle, bal.features[syn])])
            fit_set = LabeledDataset(feats, bal.labels, train.label_names, train.feature_names, syn)
            eval_set = test
    else:
        fit_set, report = oversample(train, method, cfg, derive_seed(seed, "oversample"))
        eval_set = test
    if eval_set.synthetic.any():
        raise AssertionError("evaluation rows must all be original samples")
    clf = train_classifier(fit_set, cfg.classifier_hidden, cfg.epochs, cfg.lr, cfg.batch,
                           derive_seed(seed, "classifier"))
    pred = predict(clf, eval_set.features) if len(eval_set) else np.empty(0, dtype=int)
    cm = confusion_matrix(eval_set.labels, pred, train.n_classes)
    out = metrics_report(cm)
    out["n_train"] = int(len(train))
    out["n_synthetic"] = int(fit_set.synthetic.sum())
    out["train_class_counts"] = np.bincount(fit_set.labels, minlength=train.n_classes).tolist()
    if report is not None:
        out["rcs"] = report.to_json()
    return out


def aggregate(rows: Sequence[dict]) -> dict:
    agg = {}
    for m in METRICS:
        vals = np.array([r[m] for r in rows])
        agg[m] = {"mean": float(vals.mean()), "std": float(vals.std(ddof=1)) if len(vals) > 1 else 0.0}
    return agg


def plan_digest(assignments: np.ndarray) -> str:
    return hashlib.sha256(np.asarray(assignments, dtype=np.int64).tobytes()).hexdigest()[:16]


def evaluate(ds: LabeledDataset, cfg: RunConfig, method: str | None = None) -> dict:
    """Stratified k-fold evaluation of one method."""
    method = method or cfg.method
    plan = stratified_kfold(ds, cfg.folds, cfg.seed)

    def run(fold: int) -> dict:
        tr, te = plan.split(fold)
        res = fit_and_score(ds.subset(tr), ds.subset(te), method, cfg, derive_seed(cfg.seed, "fold", fold))
        return {"fold": fold, "n_test": int(len(te)), **res}

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        rows = list(pool.map(run, range(cfg.folds)))
    return {"method": method, "folds": rows, "aggregate": aggregate(rows),
            "fold_plan": plan_digest(plan.assignments), "seed": cfg.seed}


def benchmark(ds: LabeledDataset, cfg: RunConfig, methods: Sequence[str] | None = None) -> dict:
    methods = tuple(methods or cfg.methods)
    if len(methods) < 2:
        raise InvalidArgument("benchmark needs at least two methods")
    results = [evaluate(ds, cfg, m) for m in methods]
    return {
        "config": cfg.public(),
        "methods": list(methods),
        "fold_plans": {r["method"]: r["fold_plan"] for r in results},
        "table": {r["method"]: r["aggregate"] for r in results},
        "results": results,
    }


def format_table(bench: dict) -> str:
    head = ["method", *METRICS]
    lines = [[m, *(f"{bench['table'][m][k]['mean']:.3f} ± {bench['table'][m][k]['std']:.3f}" for k in METRICS)]
             for m in bench["methods"]]
    widths = [max(len(r[i]) for r in [head, *lines]) for i in range(len(head))]
    fmt = lambda r: "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()
    return "\n".join([fmt(head), fmt(["-" * w for w in widths]), *map(fmt, lines)]) + "\n"


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True)


# ---------------------------------------------------------------- synthetic data


MNIST_TRAIN_COUNTS = (4000, 2000, 1000, 750, 500, 350, 200, 100, 60, 40)


def gaussian_classes(counts: Sequence[int], dim: int, seed: int, spread: float = 3.0,
                     noise: float = 1.0, means: np.ndarray | None = None) -> LabeledDataset:
    """One isotropic Gaussian blob per class; class means drawn from ``N(0, spread^2 I)``."""
    rng = derive(seed, "toy")
    if means is None:
        means = rng.normal(0.0, spread, (len(counts), dim))
    xs = [rng.normal(means[c], noise, (n, dim)) for c, n in enumerate(counts)]
    ys = [np.full(n, c) for c, n in enumerate(counts)]
    return LabeledDataset(np.vstack(xs), np.concatenate(ys))


def imbalanced_toy(counts: Sequence[int], test_per_class: int, dim: int, seed: int, spread: float = 3.0,
                   noise: float = 1.0) -> tuple[LabeledDataset, LabeledDataset]:
    """Imbalanced training set and a balanced test set from the same class blobs."""
    means = derive(seed, "toy-means").normal(0.0, spread, (len(counts), dim))
    train = gaussian_classes(counts, dim, derive_seed(seed, "train"), noise=noise, means=means)
    test = gaussian_classes([test_per_class] * len(counts), dim, derive_seed(seed, "test"), noise=noise, means=means)
    return train, test


def holdout(train: LabeledDataset, test: LabeledDataset, cfg: RunConfig, methods: Sequence[str]) -> dict:
    """Score several methods on one fixed split with shared seeds."""
    return {m: fit_and_score(train, test, m, cfg, derive_seed(cfg.seed, "holdout")) for m in methods}
