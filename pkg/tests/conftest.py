"""Shared fixtures: a fast miniature world and hand-built models."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import extractlab as xl

settings.register_profile(
    "suite",
    derandomize=True,
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


# Small-but-real overrides: every pipeline stage runs in well under a
# second so wiring tests stay cheap. Constraint to respect: the ensemble
# subsample (0.8 * per_class * n_classes * fraction) must stay >= the
# victim batch size.
FAST_WORLD = {
    "data.n_classes": 3,
    "data.n_features": 8,
    "data.per_class": 30,
    "victim.hidden_width": 8,
    "victim.epochs": 6,
    "surrogate.hidden_width": 8,
    "surrogate.epochs": 4,
    "prior.latent_dim": 4,
    "prior.hidden_width": 8,
    "attack.budget": 120,
    "attack.retrain_interval": 40,
    "attack.pool_size": 64,
    "attack.subspace_dim": 2,
    "defense.n_submodels": 3,
    "defense.sub_epochs": 3,
    "defense.window": 10,
    "benign.calibration_queries": 120,
    "benign.eval_queries": 200,
}


@pytest.fixture(scope="session")
def fast_world():
    return xl.build_world(xl.effective_config(FAST_WORLD), seed=0)


@pytest.fixture(scope="session")
def blob_data():
    """Two separable Gaussian blobs at +-3 sigma along the first axis."""
    rng = xl.SeededRng(xl.derive_seed(17, "blobs"))
    X = np.vstack(
        [
            rng.normal((50, 2)) + np.array([3.0, 0.0]),
            rng.normal((50, 2)) - np.array([3.0, 0.0]),
        ]
    )
    y = np.array([0] * 50 + [1] * 50)
    perm = xl.SeededRng(xl.derive_seed(17, "blob-split")).permutation(100)
    return X[perm[:80]], y[perm[:80]], X[perm[80:]], y[perm[80:]]


def constant_model(n_features: int, n_classes: int, cls: int):
    """Linear classifier that outputs ``cls`` for every input."""
    W = np.zeros((n_classes, n_features))
    b = np.zeros(n_classes)
    b[cls] = 5.0
    return xl.NeuralClassifier.from_layers([W], [b])


def scalar_feature_master(n_features: int, n_classes: int = 3):
    """Two-layer master whose single hidden unit reads the first input
    coordinate, so hidden-feature displacements have a controllable sign."""
    W1 = np.zeros((1, n_features))
    W1[0, 0] = 1.0
    b1 = np.zeros(1)
    W2 = np.arange(n_classes, dtype=np.float64).reshape(n_classes, 1)
    b2 = np.zeros(n_classes)
    return xl.NeuralClassifier.from_layers([W1, W2], [b1, b2])
