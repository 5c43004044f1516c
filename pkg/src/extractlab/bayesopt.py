"""Bayesian optimization in a random low-dimensional subspace.

The search lives in a box Theta = [-sqrt(d_sub), sqrt(d_sub)]^d_sub and is
carried into the latent space of a decoder by a fixed random matrix. A
Gaussian-process surrogate with a squared-exponential kernel scores
candidates, and an upper-confidence-bound rule picks the next query point
from a seeded uniform pool.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import InvalidInputError, NumericalError
from .numerics import cholesky_factor
from .rng import SeededRng
from .validation import as_vector, check_non_negative, check_positive

_JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)


class RandomEmbedding:
    """Fixed random linear map from the search box into a latent box.

    The matrix has i.i.d. standard-normal entries drawn from the seed, so
    the same seed always produces the same subspace. Projection clips the
    image coordinate-wise into the latent box and reports whether any
    coordinate moved.
    """

    def __init__(self, seed: int, latent_dim: int, subspace_dim: int,
                 box_low, box_high):
        if latent_dim < 1 or subspace_dim < 1:
            raise InvalidInputError("latent_dim and subspace_dim must be >= 1")
        if subspace_dim > latent_dim:
            raise InvalidInputError(
                "subspace_dim must not exceed the latent dimension"
            )
        self.latent_dim = int(latent_dim)
        self.subspace_dim = int(subspace_dim)
        self.matrix = SeededRng(seed).normal((self.latent_dim, self.subspace_dim))
        self.matrix.flags.writeable = False
        half = float(np.sqrt(self.subspace_dim))
        self.theta_low = -half
        self.theta_high = half
        self.box_low = np.array(box_low, dtype=np.float64)
        self.box_high = np.array(box_high, dtype=np.float64)
        if self.box_low.shape != (self.latent_dim,) or self.box_high.shape != (
            self.latent_dim,
        ):
            raise InvalidInputError("latent box must match latent_dim")

    def contains(self, theta) -> bool:
        theta = as_vector(theta, "theta", dim=self.subspace_dim)
        return bool(
            np.all(theta >= self.theta_low) and np.all(theta <= self.theta_high)
        )

    def project(self, theta) -> tuple[np.ndarray, bool]:
        """Map theta into the latent box: z = A @ theta, then clip.

        Returns ``(z, clipped)`` where ``clipped`` says whether any
        coordinate had to move.
        """
        theta = as_vector(theta, "theta", dim=self.subspace_dim)
        if not self.contains(theta):
            raise InvalidInputError("theta lies outside the search box")
        raw = self.matrix @ theta
        z = np.clip(raw, self.box_low, self.box_high)
        return z, bool(np.any(z != raw))

    def sample_pool(self, rng: SeededRng, n: int) -> np.ndarray:
        """n uniform candidates in the search box, one per row."""
        if n < 1:
            raise InvalidInputError("pool size must be >= 1")
        u = rng.uniform((n, self.subspace_dim))
        return self.theta_low + (self.theta_high - self.theta_low) * u


class GaussianProcess:
    """Exact GP regression with a squared-exponential kernel.

    k(a, b) = signal_var * exp(-||a - b||^2 / (2 * lengthscale^2))

    Observations beyond ``max_observations`` slide: the oldest is dropped.
    The Cholesky factor of the kernel matrix is rebuilt on every update;
    factorization failures walk a jitter ladder (0, 1e-10, 1e-8, 1e-6)
    before giving up with a NumericalError.

    Candidate scoring is vectorized over whole pools, so acquisition is
    embarrassingly parallel without any shared mutable state.
    """

    def __init__(
        self,
        lengthscale: float = 1.0,
        signal_var: float = 1.0,
        noise_var: float = 1e-4,
        max_observations: int = 500,
        refit_interval: int = 0,
        refit_grid=(0.25, 0.5, 1.0, 2.0, 4.0),
    ):
        self.lengthscale = check_positive(lengthscale, "lengthscale")
        self.signal_var = check_positive(signal_var, "signal_var")
        self.noise_var = check_non_negative(noise_var, "noise_var")
        if max_observations < 1:
            raise InvalidInputError("max_observations must be >= 1")
        self.max_observations = int(max_observations)
        if refit_interval < 0:
            raise InvalidInputError("refit_interval must be >= 0 (0 disables)")
        self.refit_interval = int(refit_interval)
        self.refit_grid = tuple(float(g) for g in refit_grid)
        self._base_lengthscale = self.lengthscale
        self.thetas_ = None
        self.values_ = None
        self._chol = None
        self._alpha = None
        self._total_updates = 0

    @property
    def n_observations(self) -> int:
        return 0 if self.thetas_ is None else self.thetas_.shape[0]

    def _kernel(self, A, B) -> np.ndarray:
        sq = (
            np.sum(A * A, axis=1)[:, None]
            + np.sum(B * B, axis=1)[None, :]
            - 2.0 * A @ B.T
        )
        np.maximum(sq, 0.0, out=sq)
        return self.signal_var * np.exp(-sq / (2.0 * self.lengthscale**2))

    def _rebuild(self):
        K = self._kernel(self.thetas_, self.thetas_)
        K[np.diag_indices_from(K)] += self.noise_var
        last_error = None
        for jitter in _JITTER_LADDER:
            try:
                self._chol = cholesky_factor(
                    K + jitter * np.eye(K.shape[0]) if jitter else K
                )
                break
            except NumericalError as err:
                last_error = err
        else:
            raise NumericalError(
                "kernel matrix is not positive definite even with jitter "
                f"{_JITTER_LADDER[-1]:g}",
                pivot_index=last_error.pivot_index,
            )
        y = solve_triangular(self._chol, self.values_, lower=True)
        self._alpha = solve_triangular(self._chol.T, y, lower=False)

    def add_observation(self, theta, value: float) -> None:
        """Append (theta, value), slide out the oldest beyond the cap, rebuild."""
        theta = as_vector(theta, "theta")
        value = float(value)
        if not np.isfinite(value):
            raise InvalidInputError("observed value must be finite")
        if self.thetas_ is None:
            self.thetas_ = theta[None, :].copy()
            self.values_ = np.array([value], dtype=np.float64)
        else:
            if theta.shape[0] != self.thetas_.shape[1]:
                raise InvalidInputError("theta dimension changed between updates")
            self.thetas_ = np.vstack([self.thetas_, theta])
            self.values_ = np.append(self.values_, value)
        if self.thetas_.shape[0] > self.max_observations:
            self.thetas_ = self.thetas_[1:]
            self.values_ = self.values_[1:]
        self._total_updates += 1
        if (
            self.refit_interval > 0
            and self._total_updates % self.refit_interval == 0
            and self.n_observations >= 2
        ):
            self._refit_lengthscale()
        self._rebuild()

    def _refit_lengthscale(self):
        best, best_ll = None, -np.inf
        for factor in self.refit_grid:
            self.lengthscale = self._base_lengthscale * factor
            try:
                self._rebuild()
            except NumericalError:
                continue
            ll = self.log_marginal_likelihood()
            if ll > best_ll:
                best, best_ll = self.lengthscale, ll
        self.lengthscale = best if best is not None else self._base_lengthscale

    def log_marginal_likelihood(self) -> float:
        if self.n_observations == 0:
            return 0.0
        n = self.n_observations
        return float(
            -0.5 * self.values_ @ self._alpha
            - np.log(np.diag(self._chol)).sum()
            - 0.5 * n * np.log(2.0 * np.pi)
        )

    def posterior(self, theta) -> tuple[float, float]:
        """Posterior mean and variance of the latent function at one point.

        With no observations this is the prior: (0, signal_var).
        """
        theta = as_vector(theta, "theta")
        mean, var = self.posterior_batch(theta[None, :])
        return float(mean[0]), float(var[0])

    def posterior_batch(self, thetas) -> tuple[np.ndarray, np.ndarray]:
        thetas = np.asarray(thetas, dtype=np.float64)
        if self.n_observations == 0:
            m = thetas.shape[0]
            return np.zeros(m), np.full(m, self.signal_var)
        if thetas.shape[1] != self.thetas_.shape[1]:
            raise InvalidInputError("query dimension does not match observations")
        k_star = self._kernel(self.thetas_, thetas)
        mean = k_star.T @ self._alpha
        v = solve_triangular(self._chol, k_star, lower=True)
        var = self.signal_var - np.einsum("ij,ij->j", v, v)
        return mean, np.maximum(var, 0.0)


@dataclass(frozen=True)
class AcquisitionConfig:
    """Upper-confidence-bound acquisition over a seeded uniform pool."""

    beta: float = 2.0
    pool_size: int = 512
    strategy: str = "ucb"

    def __post_init__(self):
        if self.strategy != "ucb":
            raise InvalidInputError(f"unknown acquisition strategy {self.strategy!r}")
        if not np.isfinite(self.beta) or self.beta < 0:
            raise InvalidInputError("beta must be non-negative and finite")
        if self.pool_size < 1:
            raise InvalidInputError("pool_size must be >= 1")


def propose_candidate(
    gp: GaussianProcess,
    embedding: RandomEmbedding,
    acquisition: AcquisitionConfig,
    rng: SeededRng,
) -> np.ndarray:
    """Best pool candidate under UCB: mean + beta * sqrt(var).

    Draws ``pool_size`` uniform points in the search box from ``rng``,
    scores them against the GP posterior, and returns the argmax. Exact
    score ties resolve to the lowest pool index, so the proposal is fully
    deterministic given (gp state, rng state).
    """
    pool = embedding.sample_pool(rng, acquisition.pool_size)
    mean, var = gp.posterior_batch(pool)
    scores = mean + acquisition.beta * np.sqrt(var)
    return pool[int(np.argmax(scores))].copy()
