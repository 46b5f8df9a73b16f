import numpy as np
import pytest
from hypothesis import given, strategies as st

from rcs.dataset import (LabeledDataset, class_counts, load_csv, standardize_apply, standardize_fit_transform,
                         stratified_kfold, write_csv)
from rcs.errors import EmptyInput, InsufficientSamples, InvalidArgument, ParseError, ShapeMismatch

from conftest import wine_fold

label_lists = st.lists(st.integers(0, 4), min_size=1, max_size=60)


def test_load_small_file(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("x,y,label\n1,2,a\n3,4,b\n5,6,a\n")
    ds = load_csv(p, "label")
    assert ds.n_classes == 2
    assert {ds.label_names[c]: n for c, n in class_counts(ds).ordered} == {"a": 2, "b": 1}
    assert ds.feature_names == ("x", "y")


def test_load_by_index_without_header(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("b,1,2\na,3,4\n")
    ds = load_csv(p, 0, has_header=False)
    assert ds.label_names == ("b", "a")
    assert np.array_equal(ds.features, [[1, 2], [3, 4]])


def test_load_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,label\n1,a\nfoo,b\n")
    with pytest.raises(ParseError) as err:
        load_csv(bad, "label")
    assert (err.value.row, err.value.col) == (3, 0)
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("x,y,label\n1,2,a\n1,a\n")
    with pytest.raises(ShapeMismatch):
        load_csv(ragged)
    empty = tmp_path / "empty.csv"
    empty.write_text("x,label\n")
    with pytest.raises(EmptyInput):
        load_csv(empty)
    with pytest.raises(InvalidArgument):
        load_csv(bad, "missing")


def test_wine_shape(wine):
    assert (len(wine), wine.dim, wine.n_classes) == (178, 13, 3)


def test_csv_round_trip_keeps_labels_and_flags(tmp_path):
    ds = LabeledDataset([[0.1, 2.0], [3.0, 4.5]], [1, 0], ("x", "y"), ("f", "g"), [False, True])
    write_csv(ds, tmp_path / "o.csv", "cls")
    lines = (tmp_path / "o.csv").read_text().splitlines()
    assert lines[0] == "f,g,cls,synthetic"
    assert lines[2].endswith(",x,1")
    back = load_csv(tmp_path / "o.csv", "cls")
    assert np.array_equal(back.features[:, :2], ds.features)


def test_class_counts_examples(wine):
    c = class_counts(LabeledDataset(np.zeros((3, 1)), [0, 0, 1]))
    assert c.ordered == ((0, 2), (1, 1)) and (c.N1, c.NK) == (2, 1)
    f = class_counts(wine_fold(wine))
    assert (f.N1, f.NK) == (50, 35)
    eq = class_counts(LabeledDataset(np.zeros((4, 1)), [1, 0, 1, 0]))
    assert eq.N1 == eq.NK and eq.ordered == ((0, 2), (1, 2))


@given(label_lists)
def test_class_counts_is_sorted_permutation(labels):
    ds = LabeledDataset(np.zeros((len(labels), 1)), labels)
    counts = [n for _, n in class_counts(ds).ordered]
    assert counts == sorted(counts, reverse=True)
    assert sorted(counts) == sorted(np.bincount(labels)[np.bincount(labels) > 0].tolist())
    assert sum(counts) == len(labels)


def test_kfold_examples(wine):
    one = LabeledDataset(np.zeros((10, 1)), np.zeros(10, int))
    assert np.array_equal(np.bincount(stratified_kfold(one, 5, 0).assignments), [2] * 5)
    ds = wine_fold(wine)
    plan = stratified_kfold(ds, 5, 42)
    for fold in range(5):
        per_class = np.bincount(ds.labels[plan.assignments == fold], minlength=3)
        expected = np.array([50, 42, 35])[np.argsort([ds.label_names.index(n) for n in ("2", "1", "3")])] / 5
        assert np.all(np.abs(per_class - expected) <= 1)
    assert np.array_equal(plan.assignments, stratified_kfold(ds, 5, 42).assignments)
    with pytest.raises(InsufficientSamples):
        stratified_kfold(LabeledDataset(np.zeros((3, 1)), [0, 0, 1]), 2, 0)


@given(st.lists(st.integers(3, 25), min_size=1, max_size=5), st.integers(2, 3), st.integers(0, 1000))
def test_kfold_is_partition_and_stratified(counts, k, seed):
    labels = np.repeat(np.arange(len(counts)), counts)
    ds = LabeledDataset(np.zeros((len(labels), 1)), labels)
    plan = stratified_kfold(ds, k, seed)
    tests = np.concatenate([plan.split(f)[1] for f in range(k)])
    assert np.array_equal(np.sort(tests), np.arange(len(labels)))
    for c in range(len(counts)):
        sizes = np.bincount(plan.assignments[labels == c], minlength=k)
        assert sizes.min() >= 1 and sizes.max() - sizes.min() <= 1


def test_standardize_examples():
    s, z = standardize_fit_transform(LabeledDataset([[0.0, 5.0], [2.0, 5.0]], [0, 1]))
    assert np.allclose(z.features, [[-1, 0], [1, 0]])
    held = standardize_apply(s, LabeledDataset([[1.0, 5.0]], [0]))
    assert np.allclose(held.features, 0)


@given(st.integers(0, 10_000))
def test_standardize_round_trip(seed):
    x = np.random.default_rng(seed).normal(3, 5, (20, 4))
    s, z = standardize_fit_transform(LabeledDataset(x, np.zeros(20, int)))
    assert np.allclose(z.features.mean(axis=0), 0, atol=1e-12)
    assert np.max(np.abs(s.inverse_transform(s.transform(x)) - x)) <= 1e-10


def test_dataset_validation():
    with pytest.raises(ShapeMismatch):
        LabeledDataset(np.zeros((3, 2)), [0, 1])
    with pytest.raises(InvalidArgument):
        LabeledDataset(np.zeros((2, 2)), [0, -1])
