"""Autoencoder with a latent classifier, trained on reconstruction +
classification + supervised contrastive loss with unit weights."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import LabeledDataset
from .errors import InvalidArgument, ShapeMismatch
from .nn import (AutoencoderNets, LossSpec, MlpParams, adam_init, adam_step, batch_order, forward,
                 iterate_batches, loss_and_grads, mlp_init)
from .rng import derive_seed


@dataclass(frozen=True)
class AutoencoderBundle:
    encoder: MlpParams
    decoder: MlpParams
    latent_classifier: MlpParams
    latent_dim: int
    temperature: float
    loss_trace: tuple[dict, ...] = ()

    def __post_init__(self):
        if not (self.encoder.out_dim == self.decoder.in_dim == self.latent_classifier.in_dim == self.latent_dim):
            raise ShapeMismatch("encoder output, decoder input and classifier input must equal latent_dim")

    @property
    def nets(self) -> AutoencoderNets:
        return AutoencoderNets(self.encoder, self.decoder, self.latent_classifier)

    def to_json(self) -> dict:
        return {
            "latent_dim": self.latent_dim,
            "temperature": self.temperature,
            "encoder": self.encoder.to_json(),
            "decoder": self.decoder.to_json(),
            "latent_classifier": self.latent_classifier.to_json(),
            "loss_trace": list(self.loss_trace),
        }

    @classmethod
    def from_json(cls, doc: dict) -> AutoencoderBundle:
        return cls(MlpParams.from_json(doc["encoder"]), MlpParams.from_json(doc["decoder"]),
                   MlpParams.from_json(doc["latent_classifier"]), int(doc["latent_dim"]),
                   float(doc["temperature"]), tuple(doc.get("loss_trace", ())))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path) -> AutoencoderBundle:
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def default_latent_dim(d: int) -> int:
    return min(d, 32)


def init_bundle(d: int, n_classes: int, latent_dim: int, t: float, seed: int, hidden: int = 128,
                classifier_hidden: Sequence[int] = (128, 64, 32, 16)) -> AutoencoderBundle:
    return AutoencoderBundle(
        mlp_init([d, hidden, latent_dim], derive_seed(seed, "encoder")),
        mlp_init([latent_dim, hidden, d], derive_seed(seed, "decoder")),
        mlp_init([latent_dim, *classifier_hidden, n_classes], derive_seed(seed, "latent-classifier"),
                 head="softmax"),
        latent_dim, float(t),
    )


def train_autoencoder(ds: LabeledDataset, latent_dim: int | None = None, t: float = 0.07, epochs: int = 200,
                      lr: float = 1e-4, seed: int = 0, batch: int = 64, hidden: int = 128,
                      classifier_hidden: Sequence[int] = (128, 64, 32, 16)) -> AutoencoderBundle:
    """Jointly train encoder, decoder and latent classifier with Adam.

    Mini-batches are class-stratified so the contrastive term sees positives.
    ``loss_trace`` holds the batch-averaged terms of every epoch.
    """
    if len(ds) == 0:
        raise InvalidArgument("cannot train on an empty dataset")
    latent_dim = default_latent_dim(ds.dim) if latent_dim is None else int(latent_dim)
    if latent_dim < 1:
        raise InvalidArgument("latent_dim must be >= 1")
    k = max(ds.n_classes, int(ds.labels.max()) + 1)
    bundle = init_bundle(ds.dim, k, latent_dim, t, seed, hidden, classifier_hidden)
    spec = LossSpec(True, True, True, t)
    nets = bundle.nets
    state = adam_init(nets)
    rng = np.random.default_rng(derive_seed(seed, "ae-batches"))
    X, y = ds.features, ds.labels
    trace = []
    for _ in range(epochs):
        sums = {"AC": 0.0, "CG": 0.0, "CS": 0.0}
        nb = 0
        for idx in iterate_batches(len(y), batch_order(y, rng, stratified=True), batch):
            parts, g = loss_and_grads(nets, X[idx], y[idx], spec)
            nets, state = adam_step(nets, g, state, lr)
            for key in sums:
                sums[key] += parts[key]
            nb += 1
        epoch = {key: v / nb for key, v in sums.items()}
        epoch["total"] = epoch["AC"] + epoch["CG"] + epoch["CS"]
        trace.append(epoch)
    return AutoencoderBundle(nets.encoder, nets.decoder, nets.classifier, latent_dim, float(t), tuple(trace))


def encode(b: AutoencoderBundle, ds: LabeledDataset) -> LabeledDataset:
    if ds.dim != b.encoder.in_dim:
        raise ShapeMismatch(f"dataset dim {ds.dim} vs encoder input {b.encoder.in_dim}")
    z = forward(b.encoder, ds.features)[-1] if len(ds) else np.empty((0, b.latent_dim))
    return LabeledDataset(z, ds.labels, ds.label_names, tuple(f"z{j}" for j in range(b.latent_dim)), ds.synthetic)


def decode(b: AutoencoderBundle, latents) -> np.ndarray:
    z = np.asarray(latents, dtype=float)
    if z.size == 0:
        return np.empty((0, b.decoder.out_dim))
    if z.ndim != 2 or z.shape[1] != b.latent_dim:
        raise ShapeMismatch(f"latents must be (n, {b.latent_dim})")
    return forward(b.decoder, z)[-1]
