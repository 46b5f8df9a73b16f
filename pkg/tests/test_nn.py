import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rcs.dataset import LabeledDataset
from rcs.errors import InvalidArgument, ShapeMismatch
from rcs.nn import (AutoencoderNets, Layer, LossSpec, MlpParams, adam_init, adam_step, backward,
                    cross_entropy_loss, finite_diff_gradcheck, forward, load_params, mlp_init, mse_loss,
                    predict, save_params, supcon_loss, train_classifier)

COMBOS = [LossSpec(*c, temperature=0.07) for c in itertools.product((True, False), repeat=3) if any(c)]


def tiny_nets(seed, d=4, m=3, k=3):
    """Small nets with random biases, so no latent row sits at the origin where normalization has no gradient."""
    nets = AutoencoderNets(mlp_init([d, 5, m], seed), mlp_init([m, 5, d], seed + 100),
                           mlp_init([m, 4, k], seed + 200, head="softmax"))
    r = np.random.default_rng(seed + 300)
    return nets.with_arrays([a if a.ndim == 2 else r.normal(0, 0.1, a.shape) for a in nets.arrays()])


def brute_supcon(z, y, t):
    u = [v / np.linalg.norm(v) for v in z]
    total = 0.0
    for i in range(len(u)):
        pos = [j for j in range(len(u)) if j != i and y[j] == y[i]]
        if not pos:
            continue
        denom = sum(math.exp(u[i] @ u[a] / t) for a in range(len(u)) if a != i)
        total += -sum(math.log(math.exp(u[i] @ u[j] / t) / denom) for j in pos) / len(pos)
    return total


def scalar_param(w):
    return MlpParams((Layer(np.array([[w]]), np.zeros(1), "identity"),))


def test_init_examples():
    p = mlp_init([2, 2], 0)
    assert p.layers[0].weight.shape == (2, 2) and np.array_equal(p.layers[0].bias, [0, 0])
    assert all(np.array_equal(a, b) for a, b in zip(mlp_init([3, 4, 2], 5).arrays(), mlp_init([3, 4, 2], 5).arrays()))
    assert mlp_init([13, 64, 32, 3], 0).dims == [13, 64, 32, 3]
    lim = math.sqrt(6 / (13 + 64))
    assert np.abs(mlp_init([13, 64], 1).layers[0].weight).max() <= lim
    with pytest.raises(InvalidArgument):
        mlp_init([3, 0, 2], 0)


def test_forward_examples():
    ident = MlpParams((Layer(np.eye(2), np.zeros(2), "identity"),))
    assert np.array_equal(forward(ident, [3.0, -1.0])[-1], [3.0, -1.0])
    relu = MlpParams((Layer(np.eye(2), np.zeros(2), "relu"),))
    assert np.array_equal(forward(relu, [-1.0, 2.0])[-1], [0.0, 2.0])
    soft = MlpParams((Layer(np.eye(2), np.zeros(2), "softmax"),))
    assert np.allclose(forward(soft, [0.0, 0.0])[-1], [0.5, 0.5])
    with pytest.raises(ShapeMismatch):
        forward(ident, [1.0, 2.0, 3.0])


@given(st.integers(0, 10_000))
def test_softmax_head_is_on_simplex(seed):
    p = mlp_init([3, 6, 4], seed, head="softmax")
    out = forward(p, np.random.default_rng(seed).normal(0, 5, (10, 3)))[-1]
    assert np.all(out > 0) and np.allclose(out.sum(axis=1), 1, atol=1e-9)


def test_mse_examples(rng):
    x = rng.normal(size=(4, 3))
    assert mse_loss(x, x) == 0
    assert mse_loss([[2.0]], [[0.0]]) == 4
    xh = rng.normal(size=(4, 3))
    oracle = sum((x[i, j] - xh[i, j]) ** 2 for i in range(4) for j in range(3)) / 12
    assert abs(mse_loss(xh, x) - oracle) < 1e-12
    with pytest.raises(ShapeMismatch):
        mse_loss(x, x[:2])


def test_cross_entropy_examples(rng):
    assert cross_entropy_loss(np.eye(3), [0, 1, 2]) == 0
    assert cross_entropy_loss(np.full((2, 4), 0.25), [3, 1]) == pytest.approx(math.log(4))
    p = rng.dirichlet(np.ones(5), size=7)
    y = rng.integers(0, 5, 7)
    oracle = -sum(math.log(p[i, y[i]]) for i in range(7)) / 7
    assert abs(cross_entropy_loss(p, y) - oracle) < 1e-12
    with pytest.warns(RuntimeWarning):
        assert cross_entropy_loss([[1.0, 0.0]], [1]) == pytest.approx(-math.log(1e-12))


def test_supcon_examples(rng):
    same = np.array([[1.0, 0.0], [1.0, 0.0]])
    assert supcon_loss(same, [0, 0], 1.0) == pytest.approx(0.0, abs=1e-12)
    with pytest.warns(RuntimeWarning):
        assert supcon_loss(rng.normal(size=(3, 2)), [0, 1, 2], 0.5) == 0
    z, y = rng.normal(size=(6, 3)), np.array([0, 1, 0, 1, 1, 0])
    assert abs(supcon_loss(z, y, 0.3) - brute_supcon(z, y, 0.3)) < 1e-10
    with pytest.raises(InvalidArgument):
        supcon_loss(z, y, 0.0)


@given(st.integers(0, 10_000))
def test_supcon_permutation_invariant(seed):
    r = np.random.default_rng(seed)
    z, y = r.normal(size=(8, 3)), r.integers(0, 3, 8)
    perm = r.permutation(8)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert abs(supcon_loss(z, y, 0.2) - supcon_loss(z[perm], y[perm], 0.2)) <= 1e-10


def test_backward_examples(rng):
    ident = MlpParams((Layer(np.eye(3), np.zeros(3), "identity"),))
    x = rng.normal(size=(5, 3))
    mse = LossSpec(True, False, False)
    assert all(np.allclose(g, 0) for g in backward(ident, x, None, mse))
    w = MlpParams((Layer(rng.normal(size=(3, 3)), rng.normal(size=3), "identity"),))
    err = x @ w.layers[0].weight + w.layers[0].bias - x
    g_w, g_b = backward(w, x, None, mse)
    assert np.allclose(g_w, 2 / err.size * x.T @ err)
    assert np.allclose(g_b, 2 / err.size * err.sum(axis=0))


@pytest.mark.parametrize("seed", range(20))
def test_gradients_match_finite_differences(seed):
    r = np.random.default_rng(seed)
    x = r.normal(size=(8, 4))
    y = np.arange(8) % 3
    nets = tiny_nets(seed)
    for spec in COMBOS:
        tol = 1e-6 if spec.name == "AC" else 1e-4
        assert finite_diff_gradcheck(nets, x, y, spec) < tol, spec.name


def test_gradcheck_subset_and_corruption_detected(rng):
    nets = AutoencoderNets(mlp_init([10, 40, 6], 0), mlp_init([6, 40, 10], 1), mlp_init([6, 8, 2], 2, head="softmax"))
    x, y = rng.normal(size=(6, 10)), np.array([0, 1] * 3)
    spec = LossSpec()
    assert finite_diff_gradcheck(nets, x, y, spec) < 1e-4
    bad = [g * 1.01 for g in backward(nets, x, y, spec)]
    assert finite_diff_gradcheck(nets, x, y, spec, grads=bad) > 1e-3


def test_adam_examples():
    p = scalar_param(1.0)
    st0 = adam_init(p)
    same, _ = adam_step(p, [np.zeros((1, 1)), np.zeros(1)], st0, 0.1)
    assert same.layers[0].weight[0, 0] == 1.0
    g = [np.array([[0.5]]), np.zeros(1)]
    p1, st1 = adam_step(p, g, st0, 0.1)
    assert p1.layers[0].weight[0, 0] == pytest.approx(1.0 - 0.1, abs=1e-8)
    p2, st2 = adam_step(p1, g, st1, 0.1)
    m = 0.9 * 0.05 + 0.1 * 0.5
    v = 0.999 * 0.00025 + 0.001 * 0.25
    step2 = 0.1 * (m / (1 - 0.9 ** 2)) / (math.sqrt(v / (1 - 0.999 ** 2)) + 1e-8)
    expected = 1.0 - 0.1 * 0.5 / (0.5 + 1e-8) - step2
    assert p2.layers[0].weight[0, 0] == pytest.approx(expected, abs=1e-15)
    assert st2.step == 2
    with pytest.raises(ShapeMismatch):
        adam_step(p, [np.zeros((2, 2)), np.zeros(1)], st0, 0.1)


@given(st.integers(0, 1000))
def test_adam_with_zero_lr_is_identity(seed):
    p = mlp_init([3, 4, 2], seed)
    g = [np.random.default_rng(seed).normal(size=a.shape) for a in p.arrays()]
    q, _ = adam_step(p, g, adam_init(p), 0.0)
    assert all(np.array_equal(a, b) for a, b in zip(p.arrays(), q.arrays()))


def test_classifier_examples(tmp_path):
    r = np.random.default_rng(0)
    x = np.vstack([r.normal((-3, -3), 0.5, (40, 2)), r.normal((3, 3), 0.5, (40, 2))])
    ds = LabeledDataset(x, np.repeat([0, 1], 40))
    p = train_classifier(ds, (8,), epochs=100, seed=1)
    assert np.mean(predict(p, x) == ds.labels) == 1.0
    again = train_classifier(ds, (8,), epochs=100, seed=1)
    assert all(np.array_equal(a, b) for a, b in zip(p.arrays(), again.arrays()))
    one = LabeledDataset(x[:10], np.zeros(10, int))
    assert np.all(predict(train_classifier(one, (4,), epochs=5), x) == 0)
    save_params(p, tmp_path / "p.json")
    assert all(np.array_equal(a, b) for a, b in zip(p.arrays(), load_params(tmp_path / "p.json").arrays()))
