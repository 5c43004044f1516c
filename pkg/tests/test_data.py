"""Mixture dataset generation, benign sampling, CSV loading."""

import numpy as np
import pytest

from extractlab import (
    ConfigError,
    GenerationError,
    InvalidInputError,
    NeuralClassifier,
    SeededRng,
    derive_seed,
    generate_mixture_dataset,
    load_tabular,
    sample_mixture,
)


def test_same_seed_same_dataset():
    a = generate_mixture_dataset(n_classes=3, n_features=6, per_class=20, seed=5)
    b = generate_mixture_dataset(n_classes=3, n_features=6, per_class=20, seed=5)
    assert np.array_equal(a.X_train, b.X_train)
    assert np.array_equal(a.y_train, b.y_train)
    assert np.array_equal(a.X_test, b.X_test)
    assert np.array_equal(a.centers, b.centers)
    c = generate_mixture_dataset(n_classes=3, n_features=6, per_class=20, seed=6)
    assert not np.array_equal(a.centers, c.centers)


def test_center_separation_floor():
    ds = generate_mixture_dataset(n_classes=5, n_features=8, per_class=20,
                                  spread=0.7, seed=1)
    diffs = ds.centers[:, None, :] - ds.centers[None, :, :]
    dists = np.sqrt((diffs**2).sum(axis=2))
    off = dists[~np.eye(5, dtype=bool)]
    assert off.min() >= 4.0 * 0.7


def test_split_counts_and_label_histogram():
    ds = generate_mixture_dataset(n_classes=4, n_features=5, per_class=30,
                                  train_fraction=0.8, seed=2)
    assert ds.X_train.shape == (96, 5)
    assert ds.X_test.shape == (24, 5)
    assert np.bincount(ds.y_train, minlength=4).tolist() == [24] * 4
    assert np.bincount(ds.y_test, minlength=4).tolist() == [6] * 4
    assert ds.n_features == 5 and ds.n_classes == 4


def test_impossible_separation_raises():
    # unit-scale centers cannot sit 40 spreads apart
    with pytest.raises(GenerationError):
        generate_mixture_dataset(n_classes=8, n_features=2, per_class=10,
                                 spread=10.0, center_scale=1.0, seed=0,
                                 max_center_attempts=20)


def test_config_validation():
    with pytest.raises(ConfigError):
        generate_mixture_dataset(n_classes=1)
    with pytest.raises(ConfigError):
        generate_mixture_dataset(n_features=1)
    with pytest.raises(ConfigError):
        generate_mixture_dataset(per_class=5)
    with pytest.raises(ConfigError):
        generate_mixture_dataset(spread=0.0)
    with pytest.raises(ConfigError):
        generate_mixture_dataset(train_fraction=1.0)
    with pytest.raises(ConfigError):
        generate_mixture_dataset(per_class=10, train_fraction=0.05)


def test_victim_learns_the_task():
    ds = generate_mixture_dataset(n_classes=2, n_features=2, per_class=60,
                                  spread=0.4, seed=3)
    clf = NeuralClassifier(hidden_layers=(16,), epochs=30, seed=0)
    clf.fit(ds.X_train, ds.y_train)
    assert (clf.predict(ds.X_test) == ds.y_test).mean() >= 0.98


def test_sample_mixture_shapes_and_determinism():
    centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    X1, y1 = sample_mixture(centers, 0.5, 40, SeededRng(derive_seed(0, "s")))
    X2, y2 = sample_mixture(centers, 0.5, 40, SeededRng(derive_seed(0, "s")))
    assert X1.shape == (40, 2) and y1.shape == (40,)
    assert np.array_equal(X1, X2) and np.array_equal(y1, y2)
    assert set(np.unique(y1)) <= {0, 1, 2}
    # points land near their assigned centers at this spread
    assert np.all(np.linalg.norm(X1 - centers[y1], axis=1) < 4.0)


def test_sample_mixture_validation():
    centers = np.zeros((2, 3))
    with pytest.raises(InvalidInputError):
        sample_mixture(centers, 0.0, 5, SeededRng(0))
    with pytest.raises(InvalidInputError):
        sample_mixture(centers, 1.0, 0, SeededRng(0))


def test_center_sampler_pathway():
    grid = np.array([[0.0, 0.0], [20.0, 0.0], [0.0, 20.0]])

    def sampler(rng):
        return grid + 0.0 * rng.normal((3, 2))

    ds = generate_mixture_dataset(n_classes=3, n_features=2, per_class=10,
                                  spread=1.0, seed=9, center_sampler=sampler)
    assert np.array_equal(ds.centers, grid)


def test_center_sampler_shape_check():
    def bad(rng):
        return rng.normal((2, 2))

    with pytest.raises(InvalidInputError):
        generate_mixture_dataset(n_classes=3, n_features=2, per_class=10,
                                 seed=0, center_sampler=bad)


def test_load_tabular_round_trip(tmp_path):
    rng = SeededRng(derive_seed(0, "csv"))
    X = rng.normal((12, 3))
    y = rng.integers(4, size=12)
    path = tmp_path / "rows.csv"
    np.savetxt(path, np.column_stack([X, y]), delimiter=",")
    X2, y2 = load_tabular(path)
    assert np.allclose(X2, X, atol=1e-12)
    assert np.array_equal(y2, y)


def test_load_tabular_rejects_garbage(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,oops\n")
    with pytest.raises(InvalidInputError):
        load_tabular(path)
    narrow = tmp_path / "narrow.csv"
    np.savetxt(narrow, np.array([[1.0], [0.0]]), delimiter=",")
    with pytest.raises(InvalidInputError):
        load_tabular(narrow)


def test_load_tabular_label_bound(tmp_path):
    path = tmp_path / "rows.csv"
    np.savetxt(path, np.array([[0.1, 0.2, 5.0]]), delimiter=",")
    with pytest.raises(InvalidInputError):
        load_tabular(path, n_classes=3)
