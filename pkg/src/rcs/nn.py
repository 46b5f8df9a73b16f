"""A small feed-forward network engine with hand-written gradients.

Weights are stored ``(fan_in, fan_out)`` so a batch ``X`` of shape ``(n, fan_in)``
maps to ``X @ W + b``. Parameter containers are immutable; training steps
return new values.
"""
from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .dataset import LabeledDataset
from .errors import InvalidArgument, ShapeMismatch

log = logging.getLogger(__name__)

ACTIVATIONS = ("relu", "identity", "softmax")
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str = "relu"


@dataclass(frozen=True)
class MlpParams:
    layers: tuple[Layer, ...]

    @property
    def dims(self) -> list[int]:
        return [self.layers[0].weight.shape[0]] + [l.weight.shape[1] for l in self.layers]

    @property
    def in_dim(self) -> int:
        return self.layers[0].weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.layers[-1].weight.shape[1]

    def arrays(self) -> list[np.ndarray]:
        return [a for l in self.layers for a in (l.weight, l.bias)]

    def with_arrays(self, arrays: Sequence[np.ndarray]) -> MlpParams:
        it = iter(arrays)
        return MlpParams(tuple(Layer(next(it), next(it), l.activation) for l in self.layers))

    def to_json(self) -> dict:
        return {"dims": self.dims,
                "layers": [{"activation": l.activation, "weight": l.weight.tolist(), "bias": l.bias.tolist()}
                           for l in self.layers]}

    @classmethod
    def from_json(cls, doc: dict) -> MlpParams:
        return cls(tuple(Layer(np.asarray(l["weight"], dtype=float), np.asarray(l["bias"], dtype=float),
                               l["activation"]) for l in doc["layers"]))


def mlp_init(layer_dims: Sequence[int], seed: int, hidden: str = "relu", head: str = "identity") -> MlpParams:
    """Glorot-uniform weights, zero biases."""
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2:
        raise InvalidArgument("need at least an input and an output dimension")
    if min(dims) < 1:
        raise InvalidArgument(f"layer dims must be positive, got {dims}")
    if hidden not in ACTIVATIONS or head not in ACTIVATIONS:
        raise InvalidArgument("unknown activation")
    rng = np.random.default_rng(seed)
    layers = []
    for i, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
        limit = np.sqrt(6.0 / (a + b))
        act = head if i == len(dims) - 2 else hidden
        layers.append(Layer(rng.uniform(-limit, limit, (a, b)), np.zeros(b), act))
    return MlpParams(tuple(layers))


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "softmax":
        return np.exp(z - logsumexp(z, axis=1, keepdims=True))
    return z


def forward(p: MlpParams, x) -> list[np.ndarray]:
    """Activations of every layer, input first. Accepts one vector or a batch."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.shape[1] != p.in_dim:
        raise ShapeMismatch(f"input dim {h.shape[1]} does not match network input {p.in_dim}")
    acts = [h]
    for l in p.layers:
        h = _activate(h @ l.weight + l.bias, l.activation)
        acts.append(h)
    return [a[0] for a in acts] if single else acts


def predict_output(p: MlpParams, x) -> np.ndarray:
    return forward(p, x)[-1]


def mlp_backward(p: MlpParams, acts: list[np.ndarray], grad_out: np.ndarray):
    """Backpropagate ``dL/d(output)`` through ``p``.

    Returns the parameter gradients (same layout as ``p.arrays()``) and
    ``dL/d(input)``.
    """
    grads: list[np.ndarray] = []
    g = grad_out
    for l, a_in, a_out in zip(reversed(p.layers), reversed(acts[:-1]), reversed(acts[1:])):
        if l.activation == "relu":
            g = g * (a_out > 0)
        elif l.activation == "softmax":
            g = a_out * (g - np.sum(g * a_out, axis=1, keepdims=True))
        grads.append(g.sum(axis=0))
        grads.append(a_in.T @ g)
        g = g @ l.weight.T
    return grads[::-1], g


# ---------------------------------------------------------------- losses


def _check_same(a, b):
    if a.shape != b.shape:
        raise ShapeMismatch(f"shape {a.shape} vs {b.shape}")


def mse_loss(x_hat, x) -> float:
    x_hat, x = np.asarray(x_hat, dtype=float), np.asarray(x, dtype=float)
    _check_same(x_hat, x)
    return float(np.mean((x - x_hat) ** 2)) if x.size else 0.0


def mse_grad(x_hat, x) -> np.ndarray:
    return 2.0 * (x_hat - x) / x.size


def _label_probs(probs, labels):
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels)
    if probs.ndim != 2 or labels.shape != (probs.shape[0],):
        raise ShapeMismatch("probs must be (n, K) with one label per row")
    if labels.size and (labels.min() < 0 or labels.max() >= probs.shape[1]):
        raise InvalidArgument("label outside the probability columns")
    return probs, labels, probs[np.arange(len(labels)), labels]


def cross_entropy_loss(probs, labels) -> float:
    """Mean negative log-probability of the true class."""
    probs, labels, pl = _label_probs(probs, labels)
    if labels.size == 0:
        return 0.0
    if np.any(pl < PROB_FLOOR):
        warnings.warn("probability of the true label below 1e-12; clipped", RuntimeWarning, stacklevel=2)
    return float(-np.mean(np.log(np.maximum(pl, PROB_FLOOR))))


def cross_entropy_grad(probs, labels) -> np.ndarray:
    probs, labels, pl = _label_probs(probs, labels)
    g = np.zeros_like(probs)
    g[np.arange(len(labels)), labels] = -1.0 / (len(labels) * np.maximum(pl, PROB_FLOOR))
    return g


def _supcon_parts(latents, labels, t):
    if not t > 0:
        raise InvalidArgument("temperature must be positive")
    z = np.asarray(latents, dtype=float)
    y = np.asarray(labels)
    if z.ndim != 2 or y.shape != (z.shape[0],):
        raise ShapeMismatch("latents must be (n, m) with one label per row")
    norms = np.maximum(np.linalg.norm(z, axis=1, keepdims=True), 1e-12)
    u = z / norms
    s = u @ u.T / t
    n = z.shape[0]
    off = ~np.eye(n, dtype=bool)
    pos = (y[:, None] == y[None, :]) & off
    npos = pos.sum(axis=1)
    anchors = npos > 0
    s_masked = np.where(off, s, -np.inf)
    lse = logsumexp(s_masked, axis=1)
    return z, u, norms, s, s_masked, pos, npos, anchors, lse


def supcon_loss(latents, labels, t: float) -> float:
    """Supervised contrastive loss summed over anchors with at least one positive.

    Latents are L2-normalized first. For anchor ``i`` the positives are the
    other rows of its class and the denominator runs over every other row.
    """
    z, u, norms, s, s_masked, pos, npos, anchors, lse = _supcon_parts(latents, labels, t)
    if not anchors.any():
        warnings.warn("no anchor has a positive pair; contrastive loss is 0", RuntimeWarning, stacklevel=2)
        return 0.0
    mean_pos = np.where(pos, s, 0.0).sum(axis=1)[anchors] / npos[anchors]
    return float(np.sum(lse[anchors] - mean_pos))


def supcon_grad(latents, labels, t: float) -> np.ndarray:
    z, u, norms, s, s_masked, pos, npos, anchors, lse = _supcon_parts(latents, labels, t)
    if not anchors.any():
        return np.zeros_like(z)
    soft = np.exp(s_masked - lse[:, None])
    g_s = soft - pos / np.maximum(npos, 1)[:, None]
    g_s[~anchors] = 0.0
    g_u = (g_s + g_s.T) @ u / t
    return (g_u - u * np.sum(u * g_u, axis=1, keepdims=True)) / norms


# ---------------------------------------------------------------- joint objective


@dataclass(frozen=True)
class LossSpec:
    reconstruction: bool = True
    guidance: bool = True
    contrastive: bool = True
    temperature: float = 0.07

    def __post_init__(self):
        if self.contrastive and not self.temperature > 0:
            raise InvalidArgument("temperature must be positive when the contrastive term is active")

    @property
    def name(self) -> str:
        parts = [n for n, on in (("AC", self.reconstruction), ("CG", self.guidance), ("CS", self.contrastive)) if on]
        return "+".join(parts) or "none"


@dataclass(frozen=True)
class AutoencoderNets:
    """Encoder, decoder and latent classifier trained together."""

    encoder: MlpParams
    decoder: MlpParams
    classifier: MlpParams

    def arrays(self) -> list[np.ndarray]:
        return self.encoder.arrays() + self.decoder.arrays() + self.classifier.arrays()

    def with_arrays(self, arrays) -> AutoencoderNets:
        a = list(arrays)
        ne, nd = len(self.encoder.arrays()), len(self.decoder.arrays())
        return AutoencoderNets(self.encoder.with_arrays(a[:ne]), self.decoder.with_arrays(a[ne:ne + nd]),
                               self.classifier.with_arrays(a[ne + nd:]))


def _zeros_like(p: MlpParams):
    return [np.zeros_like(a) for a in p.arrays()]


def _joint(nets: AutoencoderNets, X, y, spec: LossSpec, need_grad: bool):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    enc = forward(nets.encoder, X)
    latent = enc[-1]
    parts = {"AC": 0.0, "CG": 0.0, "CS": 0.0}
    g_latent = np.zeros_like(latent)
    g_dec, g_cls = _zeros_like(nets.decoder), _zeros_like(nets.classifier)
    if spec.reconstruction:
        dec = forward(nets.decoder, latent)
        parts["AC"] = mse_loss(dec[-1], X)
        if need_grad:
            g_dec, gl = mlp_backward(nets.decoder, dec, mse_grad(dec[-1], X))
            g_latent += gl
    if spec.guidance:
        cls = forward(nets.classifier, latent)
        parts["CG"] = cross_entropy_loss(cls[-1], y)
        if need_grad:
            g_cls, gl = mlp_backward(nets.classifier, cls, cross_entropy_grad(cls[-1], y))
            g_latent += gl
    if spec.contrastive:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            parts["CS"] = supcon_loss(latent, y, spec.temperature)
        if need_grad:
            g_latent += supcon_grad(latent, y, spec.temperature)
    parts["total"] = parts["AC"] + parts["CG"] + parts["CS"]
    if not need_grad:
        return parts, None
    g_enc, _ = mlp_backward(nets.encoder, enc, g_latent)
    return parts, g_enc + g_dec + g_cls


def _single(p: MlpParams, X, y, spec: LossSpec, need_grad: bool):
    X = np.asarray(X, dtype=float)
    acts = forward(p, X)
    out = acts[-1]
    parts = {"AC": 0.0, "CG": 0.0, "CS": 0.0}
    g = np.zeros_like(out)
    if spec.reconstruction:
        parts["AC"] = mse_loss(out, X)
        g += mse_grad(out, X)
    if spec.guidance:
        parts["CG"] = cross_entropy_loss(out, y)
        g += cross_entropy_grad(out, y)
    if spec.contrastive:
        parts["CS"] = supcon_loss(out, y, spec.temperature)
        g += supcon_grad(out, y, spec.temperature)
    parts["total"] = parts["AC"] + parts["CG"] + parts["CS"]
    if not need_grad:
        return parts, None
    return parts, mlp_backward(p, acts, g)[0]


def loss_and_grads(params, X, y, spec: LossSpec, need_grad: bool = True):
    """Active loss terms and their summed gradient.

    ``params`` is either one network, whose output is scored directly
    (reconstruction of ``X``, cross-entropy against ``y`` on a softmax
    head, contrastive on the output), or an :class:`AutoencoderNets`.
    """
    if isinstance(params, AutoencoderNets):
        return _joint(params, X, y, spec, need_grad)
    return _single(params, X, y, spec, need_grad)


def backward(params, X, y, spec: LossSpec) -> list[np.ndarray]:
    return loss_and_grads(params, X, y, spec)[1]


def finite_diff_gradcheck(params, X, y, spec: LossSpec, eps: float = 1e-5, max_params: int = 1024,
                          subset: int = 256, seed: int = 0, grads=None) -> float:
    """Largest relative error between analytic and central-difference gradients.

    Checks every parameter when there are at most ``max_params`` of them,
    otherwise a seeded random subset of ``subset``. ``grads`` overrides the
    analytic gradient (used to test that corrupted gradients are caught).
    """
    analytic = backward(params, X, y, spec) if grads is None else grads
    arrays = [a.copy() for a in params.arrays()]
    index = [(i, j) for i, a in enumerate(arrays) for j in range(a.size)]
    if len(index) > max_params:
        pick = np.random.default_rng(seed).choice(len(index), size=subset, replace=False)
        index = [index[k] for k in sorted(pick)]

    def total(arrs):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return loss_and_grads(params.with_arrays(arrs), X, y, spec, need_grad=False)[0]["total"]

    worst = 0.0
    for i, j in index:
        flat = arrays[i].reshape(-1)
        orig = flat[j]
        flat[j] = orig + eps
        up = total(arrays)
        flat[j] = orig - eps
        down = total(arrays)
        flat[j] = orig
        g_n = (up - down) / (2 * eps)
        g_a = analytic[i].reshape(-1)[j]
        worst = max(worst, abs(g_a - g_n) / max(1e-8, abs(g_a) + abs(g_n)))
    return worst


# ---------------------------------------------------------------- Adam


@dataclass(frozen=True)
class AdamState:
    m: tuple[np.ndarray, ...]
    v: tuple[np.ndarray, ...]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(params) -> AdamState:
    arrays = params.arrays()
    return AdamState(tuple(np.zeros_like(a) for a in arrays), tuple(np.zeros_like(a) for a in arrays))


def adam_step(params, grads, state: AdamState, lr: float):
    arrays = params.arrays()
    if len(grads) != len(arrays) or any(g.shape != a.shape for g, a in zip(grads, arrays)):
        raise ShapeMismatch("gradients do not match parameter shapes")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    m = tuple(b1 * mi + (1 - b1) * g for mi, g in zip(state.m, grads))
    v = tuple(b2 * vi + (1 - b2) * g * g for vi, g in zip(state.v, grads))
    c1, c2 = 1 - b1 ** t, 1 - b2 ** t
    new = [a - lr * (mi / c1) / (np.sqrt(vi / c2) + state.eps) for a, mi, vi in zip(arrays, m, v)]
    return params.with_arrays(new), replace(state, m=m, v=v, step=t)


# ---------------------------------------------------------------- training loops


def batch_order(labels: np.ndarray, rng: np.random.Generator, stratified: bool) -> np.ndarray:
    """A shuffled visiting order; when stratified, classes are spread evenly through it."""
    n = len(labels)
    if not stratified:
        return rng.permutation(n)
    key = np.empty(n)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        key[idx] = (np.arange(idx.size) + rng.uniform(size=idx.size)) / idx.size
    return np.argsort(key, kind="stable")


def iterate_batches(n: int, order: np.ndarray, batch: int):
    for start in range(0, n, batch):
        yield order[start:start + batch]


def train_classifier(train: LabeledDataset, hidden: Sequence[int] = (64, 32), epochs: int = 100,
                     lr: float = 1e-3, batch: int = 64, seed: int = 0) -> MlpParams:
    """Softmax MLP trained with cross-entropy and Adam on shuffled mini-batches."""
    if len(train) == 0:
        raise InvalidArgument("cannot train on an empty dataset")
    k = max(train.n_classes, int(train.labels.max()) + 1)
    p = mlp_init([train.dim, *hidden, k], seed, head="softmax")
    state = adam_init(p)
    rng = np.random.default_rng(seed)
    spec = LossSpec(reconstruction=False, guidance=True, contrastive=False)
    X, y = train.features, train.labels
    for _ in range(epochs):
        for idx in iterate_batches(len(y), rng.permutation(len(y)), batch):
            _, g = loss_and_grads(p, X[idx], y[idx], spec)
            p, state = adam_step(p, g, state, lr)
    return p


def predict(p: MlpParams, x) -> np.ndarray | int:
    out = predict_output(p, x)
    if out.ndim == 1:
        return int(np.argmax(out))
    return np.argmax(out, axis=1)


def save_params(p: MlpParams, path) -> None:
    with open(path, "w") as fh:
        json.dump(p.to_json(), fh)


def load_params(path) -> MlpParams:
    with open(path) as fh:
        return MlpParams.from_json(json.load(fh))
