import numpy as np
import pytest

from rcs.dataset import LabeledDataset
from rcs.embedder import AutoencoderBundle, decode, default_latent_dim, encode, init_bundle, train_autoencoder
from rcs.errors import InvalidArgument, ShapeMismatch
from rcs.nn import Layer, MlpParams, mlp_init


@pytest.fixture(scope="module")
def two_classes():
    r = np.random.default_rng(0)
    x = np.vstack([r.normal(-2, 1, (60, 10)), r.normal(2, 1, (60, 10))])
    return LabeledDataset(x, np.repeat([0, 1], 60))


@pytest.fixture(scope="module")
def trained(two_classes):
    return train_autoencoder(two_classes, latent_dim=2, t=0.07, epochs=200, lr=1e-4, seed=0)


def square_identity(d):
    return MlpParams((Layer(np.eye(d), np.zeros(d), "identity"),))


def test_zero_epochs_is_initialization(two_classes):
    b = train_autoencoder(two_classes, 3, epochs=0, seed=4)
    ref = init_bundle(10, 2, 3, 0.07, 4)
    assert all(np.array_equal(a, c) for a, c in zip(b.nets.arrays(), ref.nets.arrays()))
    assert b.loss_trace == ()


def test_latent_classes_separate(two_classes, trained):
    z, y = encode(trained, two_classes).features, two_classes.labels
    cents = [z[y == c].mean(axis=0) for c in (0, 1)]
    spread = np.mean([np.sqrt(np.mean(np.sum((z[y == c] - cents[c]) ** 2, axis=1))) for c in (0, 1)])
    assert np.linalg.norm(cents[0] - cents[1]) > 4 * spread


def test_loss_trace_trends_down_and_decomposes(trained):
    total = np.array([e["total"] for e in trained.loss_trace])
    smooth = np.convolve(total, np.ones(10) / 10, "valid")
    assert np.all(np.diff(smooth) <= 0)
    for e in trained.loss_trace:
        assert abs(e["total"] - (e["AC"] + e["CG"] + e["CS"])) <= 1e-9


def test_training_lowers_reconstruction_error(two_classes, trained):
    untrained = train_autoencoder(two_classes, 2, epochs=0, seed=0)
    err = lambda b: np.mean((decode(b, encode(b, two_classes).features) - two_classes.features) ** 2)
    assert err(trained) < err(untrained)


def test_training_is_deterministic(two_classes):
    a = train_autoencoder(two_classes, 2, epochs=3, seed=5)
    b = train_autoencoder(two_classes, 2, epochs=3, seed=5)
    assert all(np.array_equal(p, q) for p, q in zip(a.nets.arrays(), b.nets.arrays()))
    assert a.loss_trace == b.loss_trace


def test_identity_encoder_passes_inputs_through(two_classes):
    b = AutoencoderBundle(square_identity(10), square_identity(10), mlp_init([10, 2], 0, head="softmax"), 10, 0.07)
    assert np.array_equal(encode(b, two_classes).features, two_classes.features)


def test_encode_preserves_rows_and_rejects_wrong_dim(two_classes, trained):
    lat = encode(trained, two_classes)
    assert len(lat) == len(two_classes) and np.array_equal(lat.labels, two_classes.labels)
    with pytest.raises(ShapeMismatch):
        encode(trained, lat)


def test_decode_examples(trained):
    zero_dec = MlpParams((Layer(np.zeros((2, 3)), np.array([1.0, 2.0, 3.0]), "identity"),))
    b = AutoencoderBundle(mlp_init([3, 2], 0), zero_dec, mlp_init([2, 2], 0, head="softmax"), 2, 0.07)
    assert np.array_equal(decode(b, [[0.0, 0.0]]), [[1.0, 2.0, 3.0]])
    assert decode(trained, []).shape == (0, 10)
    assert decode(trained, np.zeros((4, 2))).shape == (4, 10)
    with pytest.raises(ShapeMismatch):
        decode(trained, np.zeros((1, 3)))


def test_bundle_shape_chain_and_save(tmp_path, trained):
    with pytest.raises(ShapeMismatch):
        AutoencoderBundle(mlp_init([4, 3], 0), mlp_init([2, 4], 0), mlp_init([3, 2], 0), 3, 0.07)
    trained.save(tmp_path / "b.json")
    back = AutoencoderBundle.load(tmp_path / "b.json")
    assert all(np.array_equal(p, q) for p, q in zip(back.nets.arrays(), trained.nets.arrays()))


def test_latent_dim_default_and_validation(two_classes):
    assert default_latent_dim(13) == 13 and default_latent_dim(617) == 32
    with pytest.raises(InvalidArgument):
        train_autoencoder(two_classes, 0, epochs=1)
    with pytest.raises(InvalidArgument):
        train_autoencoder(two_classes.subset([]), 2, epochs=1)
