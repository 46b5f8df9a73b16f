"""Rebalancing with calibrated sub-classes.

Classes are split by a count threshold ``zeta = N1 / eta``:

* the majority class and the intermediate classes (``zeta <= N_c < N1``)
  are modelled by per-class Gaussian mixtures; intermediate classes are
  topped up by sampling their own components;
* each minority sample (``N_c < zeta``) gets a Gaussian whose mean and
  covariance are a convex blend of its nearest pooled components and its
  own class statistics, and synthetic rows are drawn from it.

The output always has exactly ``N1`` rows per class.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .dataset import ClassCounts, LabeledDataset, class_counts
from .errors import EmptyInput, InvalidArgument, ShapeMismatch
from .gmm import EmConfig, GmmModel, component_count, fit_gmm, sample_component
from .linalg import as_rows, covariance_matrix, default_ridge, regularized_cholesky, sample_gaussian
from .rng import derive

log = logging.getLogger(__name__)

# Neighbour mass is held strictly below one half so the sample's own
# coefficient always dominates.
NEIGHBOR_MASS_CAP = 0.5 - 1e-9


@dataclass(frozen=True)
class ClassPartition:
    majority: int
    intermediate: tuple[int, ...]
    minority: tuple[int, ...]
    zeta: float

    def to_json(self) -> dict:
        return {"majority": self.majority, "intermediate": list(self.intermediate),
                "minority": list(self.minority), "zeta": self.zeta}


@dataclass(frozen=True)
class PoolEntry:
    mean: np.ndarray
    cov: np.ndarray
    size: int
    source_class: int


@dataclass(frozen=True)
class ComponentPool:
    entries: tuple[PoolEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def means(self) -> np.ndarray:
        return np.array([e.mean for e in self.entries])

    @property
    def covs(self) -> np.ndarray:
        return np.array([e.cov for e in self.entries])

    @property
    def sizes(self) -> np.ndarray:
        return np.array([e.size for e in self.entries])


@dataclass(frozen=True)
class CalibratedGaussian:
    mean: np.ndarray
    cov: np.ndarray
    neighbors: np.ndarray
    neighbor_weights: np.ndarray
    self_weight: float
    capped: bool = False

    @property
    def coefficients(self) -> np.ndarray:
        """Convex weights: the neighbour weights followed by the self weight."""
        return np.append(self.neighbor_weights, self.self_weight)


@dataclass
class RunReport:
    zeta: float
    eta: float
    k: int
    partition: ClassPartition | None
    per_class: list[dict] = field(default_factory=list)
    pool_size: int = 0
    seed: int = 0
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "zeta": self.zeta,
            "eta": self.eta,
            "k": self.k,
            "seed": self.seed,
            "pool_size": self.pool_size,
            "partition": None if self.partition is None else self.partition.to_json(),
            "per_class": self.per_class,
            "warnings": self.warnings,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


# ---------------------------------------------------------------- partition


def compute_threshold(n1: int, eta: float) -> float:
    if n1 < 1:
        raise InvalidArgument("N1 must be >= 1")
    if not eta >= 1:
        raise InvalidArgument(f"eta must be >= 1, got {eta}")
    return n1 / eta


def partition_classes(counts: ClassCounts, zeta: float) -> ClassPartition:
    (majority, n1), *rest = counts.ordered
    inter = tuple(c for c, n in rest if n >= zeta)
    minor = tuple(c for c, n in rest if n < zeta)
    return ClassPartition(majority, inter, minor, float(zeta))


def split_plan(total: int, units: int) -> np.ndarray:
    """``total`` split over ``units`` as floor share plus one extra for the first ``total % units``."""
    if units < 1:
        raise InvalidArgument("need at least one generation unit")
    base, rem = divmod(int(total), units)
    plan = np.full(units, base, dtype=np.int64)
    plan[:rem] += 1
    return plan


# ---------------------------------------------------------------- pool / calibration


def build_component_pool(majority_gmm: GmmModel, intermediate_gmms=(), *, majority_class: int = 0,
                         intermediate_classes=None) -> ComponentPool:
    """Majority components first, then each intermediate model in the order given."""
    if majority_gmm is None:
        raise InvalidArgument("the majority mixture is required")
    inter = list(intermediate_gmms)
    labels = list(intermediate_classes) if intermediate_classes is not None else [None] * len(inter)
    entries = [PoolEntry(c.mean, c.cov, c.size, majority_class) for c in majority_gmm.components]
    for label, g in zip(labels, inter):
        entries.extend(PoolEntry(c.mean, c.cov, c.size, label) for c in g.components)
    return ComponentPool(tuple(entries))


def component_weights(pool: ComponentPool) -> np.ndarray:
    sizes = pool.sizes
    if np.any(sizes < 1):
        raise InvalidArgument("every component needs a positive size")
    return 1.0 / sizes


def calibrate_point(l, pool: ComponentPool, weights, k: int, sigma_m) -> CalibratedGaussian:
    l = np.asarray(l, dtype=float)
    if not 1 <= k <= len(pool):
        raise InvalidArgument(f"k={k} must lie in [1, pool size {len(pool)}]")
    means = pool.means
    if means.shape[1] != l.shape[0]:
        raise ShapeMismatch("sample and pool dimensions differ")
    dist = np.linalg.norm(means - l, axis=1)
    nbr = np.argsort(dist, kind="stable")[:k]
    w = np.asarray(weights, dtype=float)[nbr]
    mass = float(w.sum())
    capped = mass >= 0.5
    if capped:
        w = w * (NEIGHBOR_MASS_CAP / mass)
        mass = float(w.sum())
    self_w = 1.0 - mass
    mu = w @ means[nbr] + self_w * l
    cov = np.tensordot(w, pool.covs[nbr], axes=1) + self_w * np.asarray(sigma_m, dtype=float)
    return CalibratedGaussian(mu, 0.5 * (cov + cov.T), nbr, w, self_w, capped)


# ---------------------------------------------------------------- generation


def oversample_intermediate(gmm: GmmModel, n_i: int, rng: np.random.Generator) -> np.ndarray:
    d = gmm.means.shape[1]
    if n_i <= 0:
        return np.empty((0, d))
    plan = split_plan(n_i, gmm.n_components)
    return np.vstack([sample_component(gmm, j, int(c), rng) for j, c in enumerate(plan)])


def oversample_minority(class_data, pool: ComponentPool, weights, k: int, n_i: int,
                        rng: np.random.Generator, eps: float = 1e-9,
                        warnings: list | None = None) -> np.ndarray:
    x = as_rows(class_data)
    if x.shape[0] == 0:
        raise EmptyInput("minority class has no samples")
    d = x.shape[1]
    if n_i <= 0:
        return np.empty((0, d))
    sigma_m = covariance_matrix(x) if x.shape[0] >= 2 else eps * np.eye(d)
    plan = split_plan(n_i, x.shape[0])
    out, n_capped = [], 0
    for l, count in zip(x, plan):
        if count == 0:
            continue
        cg = calibrate_point(l, pool, weights, k, sigma_m)
        n_capped += cg.capped
        out.append(sample_gaussian(cg.mean, regularized_cholesky(cg.cov), int(count), rng))
    if n_capped and warnings is not None:
        warnings.append(f"neighbour weight mass capped below 0.5 for {n_capped} sample(s)")
    return np.vstack(out)


def rcs_oversample(ds: LabeledDataset, eta: float, k: int, em_cfg: EmConfig | None = None,
                   seed: int = 42) -> tuple[LabeledDataset, RunReport]:
    """Balance ``ds`` so every class has ``N1`` rows; originals are kept first and unchanged."""
    em_cfg = em_cfg or EmConfig()
    counts = class_counts(ds)
    if len(counts.ordered) < 2:
        raise InvalidArgument("rcs needs at least two classes")
    n1, nk = counts.N1, counts.NK
    zeta = compute_threshold(n1, eta)
    part = partition_classes(counts, zeta)
    count_of = counts.as_dict()
    report = RunReport(zeta, float(eta), int(k), part, seed=seed)

    if n1 == nk:
        report.per_class = [{"label": ds.label_names[c], "N": n, "xi": 0, "n_generated": 0, "group": "balanced"}
                            for c, n in counts.ordered]
        return ds, report

    # Tied-with-N1 classes need nothing and are not modelled.
    modelled = [c for c in part.intermediate if count_of[c] < n1]
    if part.minority:
        modelled.insert(0, part.majority)
    gmms: dict[int, GmmModel] = {}
    for c in modelled:
        xi = component_count(count_of[c], nk)
        gmms[c] = fit_gmm(ds.class_rows(c), xi, em_cfg, derive(seed, "gmm", c))
        report.warnings.extend(f"class {ds.label_names[c]}: {w}" for w in gmms[c].warnings)

    new_x, new_y = [], []
    rows = {}
    for c in part.intermediate:
        n_i = n1 - count_of[c]
        if n_i == 0:
            rows[c] = {"group": "intermediate", "xi": 0, "n_generated": 0}
            continue
        gen = oversample_intermediate(gmms[c], n_i, derive(seed, "gen", c))
        new_x.append(gen)
        new_y.append(np.full(len(gen), c))
        rows[c] = {"group": "intermediate", "xi": gmms[c].n_components, "n_generated": len(gen)}

    if part.minority:
        inter_sorted = [c for c in part.intermediate if c in gmms]
        pool = build_component_pool(gmms[part.majority], [gmms[c] for c in inter_sorted],
                                    majority_class=part.majority, intermediate_classes=inter_sorted)
        report.pool_size = len(pool)
        weights = component_weights(pool)
        k_eff = int(k)
        if k_eff > len(pool):
            report.warnings.append(f"k={k} exceeds pool size {len(pool)}; clamped to {len(pool)}")
            k_eff = len(pool)
        if k_eff < 1:
            raise InvalidArgument("k must be >= 1")
        eps = default_ridge(covariance_matrix(ds.features)) if len(ds) > 1 else 1e-9
        for c in part.minority:
            n_i = n1 - count_of[c]
            notes: list[str] = []
            gen = oversample_minority(ds.class_rows(c), pool, weights, k_eff, n_i,
                                      derive(seed, "gen", c), eps, notes)
            report.warnings.extend(f"class {ds.label_names[c]}: {w}" for w in notes)
            new_x.append(gen)
            new_y.append(np.full(len(gen), c))
            rows[c] = {"group": "minority", "xi": 0, "n_generated": len(gen)}
        report.k = k_eff

    rows[part.majority] = {"group": "majority", "xi": gmms[part.majority].n_components
                           if part.majority in gmms else 0, "n_generated": 0}
    report.per_class = [{"label": ds.label_names[c], "N": n, **rows[c]} for c, n in counts.ordered]
    for w in report.warnings:
        log.warning(w)

    if not new_x:
        return ds, report
    syn_x = np.vstack(new_x)
    syn_y = np.concatenate(new_y)
    out = LabeledDataset(np.vstack([ds.features, syn_x]), np.concatenate([ds.labels, syn_y]),
                         ds.label_names, ds.feature_names,
                         np.concatenate([ds.synthetic, np.ones(len(syn_y), dtype=bool)]))
    return out, report
