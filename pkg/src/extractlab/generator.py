"""Frozen latent-variable decoders used as query-synthesis priors.

A decoder maps a bounded latent vector ``z`` to an input-space point
through two affine maps with a tanh in between:

    x = W2 @ tanh(W1 @ z + b1) + b2

Decoders are frozen at construction (their arrays are marked read-only)
and come from one of two builders: :func:`build_seeded_prior` draws the
weights from a seeded Gaussian, and :func:`train_world_prior` trains a
small autoencoder on world data and keeps the decoder half.
"""

from __future__ import annotations

import hashlib
import logging

import numpy as np

from .exceptions import DimensionMismatchError, InvalidInputError
from .rng import SeededRng
from .validation import as_matrix, as_vector, check_non_negative, check_positive

logger = logging.getLogger(__name__)

DEFAULT_BOX_HALF_WIDTH = 3.0


class LatentDecoder:
    """Immutable two-layer tanh decoder with a box-bounded latent space.

    Parameters
    ----------
    w1, b1 : hidden affine map, shapes (hidden, latent_dim) and (hidden,)
    w2, b2 : output affine map, shapes (output_dim, hidden) and (output_dim,)
    box_low, box_high : per-coordinate latent bounds, shapes (latent_dim,)
    provenance : {"seeded", "world"}
    """

    def __init__(self, w1, b1, w2, b2, box_low, box_high, provenance="seeded"):
        self.w1 = np.array(w1, dtype=np.float64)
        self.b1 = np.array(b1, dtype=np.float64)
        self.w2 = np.array(w2, dtype=np.float64)
        self.b2 = np.array(b2, dtype=np.float64)
        if (
            self.w1.ndim != 2
            or self.w2.ndim != 2
            or self.w1.shape[0] != self.b1.shape[0]
            or self.w2.shape[0] != self.b2.shape[0]
            or self.w2.shape[1] != self.w1.shape[0]
        ):
            raise DimensionMismatchError("decoder layer shapes are inconsistent")
        self.box_low = np.array(box_low, dtype=np.float64)
        self.box_high = np.array(box_high, dtype=np.float64)
        if (
            self.box_low.shape != (self.w1.shape[1],)
            or self.box_high.shape != (self.w1.shape[1],)
        ):
            raise DimensionMismatchError("latent box does not match latent dimension")
        if np.any(self.box_low >= self.box_high):
            raise InvalidInputError("latent box must have low < high per coordinate")
        self.provenance = str(provenance)
        for arr in (self.w1, self.b1, self.w2, self.b2, self.box_low, self.box_high):
            arr.flags.writeable = False

    @property
    def latent_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def output_dim(self) -> int:
        return self.w2.shape[0]

    @property
    def hidden_width(self) -> int:
        return self.w1.shape[0]

    def __repr__(self):
        return (
            f"LatentDecoder(latent_dim={self.latent_dim}, "
            f"output_dim={self.output_dim}, hidden_width={self.hidden_width}, "
            f"provenance={self.provenance!r})"
        )

    def clip(self, z) -> tuple[np.ndarray, bool]:
        """Clip one latent vector into the box; report whether anything moved."""
        z = as_vector(z, "z", dim=self.latent_dim)
        clipped = np.clip(z, self.box_low, self.box_high)
        return clipped, bool(np.any(clipped != z))

    def clip_batch(self, Z) -> tuple[np.ndarray, int]:
        """Clip latent rows into the box; return (rows, count of rows that moved)."""
        Z = as_matrix(Z, "Z", cols=self.latent_dim)
        clipped = np.clip(Z, self.box_low, self.box_high)
        moved = int(np.any(clipped != Z, axis=1).sum())
        return clipped, moved

    def decode(self, z) -> np.ndarray:
        """Decode one latent vector. Out-of-box coordinates are clipped first."""
        z, moved = self.clip(z)
        if moved:
            logger.debug("latent vector clipped into box before decoding")
        return self.w2 @ np.tanh(self.w1 @ z + self.b1) + self.b2

    def decode_batch(self, Z) -> np.ndarray:
        """Decode latent rows. Out-of-box coordinates are clipped first."""
        Z, moved = self.clip_batch(Z)
        if moved:
            logger.debug("%d latent rows clipped into box before decoding", moved)
        return np.tanh(Z @ self.w1.T + self.b1) @ self.w2.T + self.b2

    def sample_latent(self, rng: SeededRng, n: int) -> np.ndarray:
        """n latent rows drawn uniformly inside the box."""
        if n < 1:
            raise InvalidInputError("n must be >= 1")
        u = rng.uniform((n, self.latent_dim))
        return self.box_low + (self.box_high - self.box_low) * u

    def lipschitz_bound(self) -> float:
        """Upper bound on the decoder's Lipschitz constant.

        tanh is 1-Lipschitz, so the product of the two operator norms
        bounds the map.
        """
        return float(
            np.linalg.norm(self.w2, 2) * np.linalg.norm(self.w1, 2)
        )

    def weights_hash(self) -> str:
        """SHA-256 over all parameter bytes; lets tests assert immutability."""
        digest = hashlib.sha256()
        for arr in (self.w1, self.b1, self.w2, self.b2, self.box_low, self.box_high):
            digest.update(np.ascontiguousarray(arr).tobytes())
        return digest.hexdigest()


def build_seeded_prior(
    seed: int,
    latent_dim: int = 8,
    output_dim: int = 32,
    hidden_width: int = 64,
    scale: float = 2.0,
    box_half_width: float = DEFAULT_BOX_HALF_WIDTH,
) -> LatentDecoder:
    """Random frozen decoder with i.i.d. normal weights.

    Layer weights are drawn N(0, (scale / sqrt(fan_in))^2), biases are
    zero, and the latent box is [-box_half_width, box_half_width] per
    coordinate. scale = 0 collapses the decoder to the constant bias map.
    """
    if min(latent_dim, output_dim, hidden_width) < 1:
        raise InvalidInputError("latent_dim, output_dim, hidden_width must be >= 1")
    check_non_negative(scale, "scale")
    check_positive(box_half_width, "box_half_width")
    rng = SeededRng(seed)
    w1 = (scale / np.sqrt(latent_dim)) * rng.normal((hidden_width, latent_dim))
    w2 = (scale / np.sqrt(hidden_width)) * rng.normal((output_dim, hidden_width))
    low = np.full(latent_dim, -float(box_half_width))
    high = np.full(latent_dim, float(box_half_width))
    return LatentDecoder(
        w1, np.zeros(hidden_width), w2, np.zeros(output_dim), low, high,
        provenance="seeded",
    )


def train_world_prior(
    world_X,
    latent_dim: int = 8,
    hidden_width: int = 64,
    epochs: int = 80,
    batch_size: int = 32,
    learning_rate: float = 0.01,
    momentum: float = 0.9,
    seed: int = 0,
    box_half_width: float = DEFAULT_BOX_HALF_WIDTH,
) -> tuple[LatentDecoder, float]:
    """Train a tanh autoencoder on world rows and freeze its decoder half.

    The encoder head is ``box_half_width * tanh(.)`` so every encoded
    latent lands inside the decoder's box. Returns the frozen decoder and
    the final per-coordinate mean squared reconstruction error on the
    training rows.
    """
    X = as_matrix(world_X, "world_X")
    if min(latent_dim, hidden_width) < 1:
        raise InvalidInputError("latent_dim and hidden_width must be >= 1")
    if epochs < 1 or batch_size < 1:
        raise InvalidInputError("epochs and batch_size must be >= 1")
    check_positive(learning_rate, "learning_rate")
    bh = check_positive(box_half_width, "box_half_width")

    n, dim = X.shape
    rng = SeededRng(seed)

    def glorot(fan_out, fan_in):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return bound * (2.0 * rng.uniform((fan_out, fan_in)) - 1.0)

    # encoder: x -> tanh -> affine -> bh*tanh -> z; decoder: z -> tanh -> x_hat
    we1, be1 = glorot(hidden_width, dim), np.zeros(hidden_width)
    we2, be2 = glorot(latent_dim, hidden_width), np.zeros(latent_dim)
    w1, b1 = glorot(hidden_width, latent_dim), np.zeros(hidden_width)
    w2, b2 = glorot(dim, hidden_width), np.zeros(dim)
    params = [we1, be1, we2, be2, w1, b1, w2, b2]
    velocity = [np.zeros_like(p) for p in params]
    lr, mu = float(learning_rate), float(momentum)

    def forward(xb):
        a1 = np.tanh(xb @ we1.T + be1)
        z2 = a1 @ we2.T + be2
        zlat = bh * np.tanh(z2)
        a3 = np.tanh(zlat @ w1.T + b1)
        xhat = a3 @ w2.T + b2
        return a1, z2, zlat, a3, xhat

    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            xb = X[order[start : start + batch_size]]
            a1, z2, zlat, a3, xhat = forward(xb)
            g4 = 2.0 * (xhat - xb) / (xb.shape[0] * dim)
            grads = [None] * 8
            grads[6] = g4.T @ a3
            grads[7] = g4.sum(axis=0)
            g3 = (g4 @ w2) * (1.0 - a3 * a3)
            grads[4] = g3.T @ zlat
            grads[5] = g3.sum(axis=0)
            t2 = np.tanh(z2)
            gz = (g3 @ w1) * (bh * (1.0 - t2 * t2))
            grads[2] = gz.T @ a1
            grads[3] = gz.sum(axis=0)
            g1 = (gz @ we2) * (1.0 - a1 * a1)
            grads[0] = g1.T @ xb
            grads[1] = g1.sum(axis=0)
            for i, (p, g) in enumerate(zip(params, grads)):
                velocity[i] = mu * velocity[i] - lr * g
                p += velocity[i]

    _, _, _, _, xhat = forward(X)
    recon_error = float(np.mean((xhat - X) ** 2))
    low = np.full(latent_dim, -bh)
    high = np.full(latent_dim, bh)
    decoder = LatentDecoder(w1, b1, w2, b2, low, high, provenance="world")
    return decoder, recon_error
