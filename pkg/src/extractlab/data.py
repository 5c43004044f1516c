"""Synthetic tabular tasks and benign query streams.

The standard task is a Gaussian mixture: one isotropic cluster per class
with centers resampled until they are pairwise well separated, so a
small MLP reaches high accuracy and the victim/surrogate agreement axis
has headroom. Center placement is pluggable: the default draws isotropic
Gaussian centers, while the experiment harness places centers on a
generator's output manifold so that query strategies with and without
access to that manifold can be told apart. Benign traffic for defense
calibration is drawn from the same mixture.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, GenerationError, InvalidInputError
from .rng import SeededRng, derive_seed
from .validation import as_labels, as_matrix

# centers at least this many spreads apart keep the clusters separable
_SEPARATION_FACTOR = 4.0


@dataclass(frozen=True)
class Dataset:
    """A train/test split plus the mixture that produced it."""

    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    centers: np.ndarray
    spread: float
    seed: int

    @property
    def n_features(self) -> int:
        return self.X_train.shape[1]

    @property
    def n_classes(self) -> int:
        return self.centers.shape[0]


def _draw_separated_centers(draw, n_classes: int, n_features: int,
                            min_separation: float,
                            max_attempts: int) -> np.ndarray:
    for _ in range(max_attempts):
        centers = np.asarray(draw(), dtype=np.float64)
        if centers.shape != (n_classes, n_features):
            raise InvalidInputError(
                f"center sampler returned shape {centers.shape}, "
                f"expected {(n_classes, n_features)}"
            )
        diffs = centers[:, None, :] - centers[None, :, :]
        dists = np.sqrt((diffs * diffs).sum(axis=2))
        off_diag = dists[~np.eye(n_classes, dtype=bool)]
        if off_diag.min() >= min_separation:
            return centers
    raise GenerationError(
        f"could not place {n_classes} centers at least "
        f"{min_separation:.3g} apart in {max_attempts} attempts; "
        "raise center_scale or lower spread"
    )


def generate_mixture_dataset(
    n_classes: int = 10,
    n_features: int = 32,
    per_class: int = 150,
    spread: float = 1.0,
    center_scale: float = 4.0,
    train_fraction: float = 0.8,
    seed: int = 0,
    max_center_attempts: int = 200,
    center_sampler=None,
) -> Dataset:
    """Build a separable Gaussian-mixture classification task.

    Exactly ``per_class`` samples per class, split deterministically and
    stratified into train/test; both splits are shuffled. Centers are
    redrawn wholesale until every pair is at least ``4 * spread`` apart,
    failing with :class:`GenerationError` after ``max_center_attempts``.

    ``center_sampler``, when given, replaces the default isotropic
    center draw: it is called with a :class:`SeededRng` and must return
    an ``(n_classes, n_features)`` array of candidate centers. The
    rejection loop and separation guarantee apply to it unchanged.
    """
    if n_classes < 2:
        raise ConfigError("n_classes must be >= 2", field="n_classes")
    if n_features < 2:
        raise ConfigError("n_features must be >= 2", field="n_features")
    if per_class < 10:
        raise ConfigError("per_class must be >= 10", field="per_class")
    if spread <= 0:
        raise ConfigError("spread must be positive", field="spread")
    if center_scale <= 0:
        raise ConfigError("center_scale must be positive", field="center_scale")
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(
            "train_fraction must lie strictly between 0 and 1",
            field="train_fraction",
        )
    n_train_per_class = int(per_class * train_fraction + 1e-9)
    n_test_per_class = per_class - n_train_per_class
    if n_train_per_class < 1 or n_test_per_class < 1:
        raise ConfigError(
            "train_fraction leaves an empty split", field="train_fraction"
        )

    center_rng = SeededRng(derive_seed(seed, "centers"))
    if center_sampler is None:
        def draw():
            return center_scale * center_rng.normal((n_classes, n_features))
    else:
        def draw():
            return center_sampler(center_rng)
    centers = _draw_separated_centers(
        draw, n_classes, n_features,
        _SEPARATION_FACTOR * spread, max_center_attempts,
    )

    train_parts, test_parts = [], []
    for c in range(n_classes):
        rng_c = SeededRng(derive_seed(seed, "class", c))
        Xc = centers[c] + spread * rng_c.normal((per_class, n_features))
        train_parts.append(Xc[:n_train_per_class])
        test_parts.append(Xc[n_train_per_class:])
    X_train = np.concatenate(train_parts)
    y_train = np.repeat(np.arange(n_classes, dtype=np.int64), n_train_per_class)
    X_test = np.concatenate(test_parts)
    y_test = np.repeat(np.arange(n_classes, dtype=np.int64), n_test_per_class)

    perm_train = SeededRng(derive_seed(seed, "shuffle-train")).permutation(
        X_train.shape[0]
    )
    perm_test = SeededRng(derive_seed(seed, "shuffle-test")).permutation(
        X_test.shape[0]
    )
    return Dataset(
        X_train=X_train[perm_train],
        y_train=y_train[perm_train],
        X_test=X_test[perm_test],
        y_test=y_test[perm_test],
        centers=centers,
        spread=float(spread),
        seed=int(seed),
    )


def sample_mixture(centers, spread: float, n: int, rng: SeededRng):
    """Draw a benign i.i.d. stream from the mixture: (X, labels)."""
    C = as_matrix(centers, "centers")
    if spread <= 0:
        raise InvalidInputError("spread must be positive")
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    labels = rng.integers(C.shape[0], size=n).astype(np.int64)
    X = C[labels] + spread * rng.normal((n, C.shape[1]))
    return X, labels


def load_tabular(path, n_classes: int | None = None):
    """Load a numeric CSV whose final column is an integer class label."""
    try:
        raw = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise InvalidInputError(f"could not parse {path} as numeric CSV: {exc}")
    if raw.shape[1] < 2:
        raise InvalidInputError(
            "tabular file needs at least one feature column plus a label column"
        )
    X = as_matrix(raw[:, :-1], "features")
    y = as_labels(raw[:, -1], "labels", n_classes=n_classes)
    return X, y
