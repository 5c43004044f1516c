"""Deterministic, counter-based random number generation.

Nothing in this package draws from a platform RNG. Every random quantity
comes from the SplitMix64 counter sequence defined below, so a run is
bit-reproducible from ``(seed, call order)`` alone and the stream can be
re-implemented in any language from this docstring.

Stream definition (all arithmetic mod 2**64):

    state_n  = seed + n * 0x9E3779B97F4A7C15        for n = 1, 2, 3, ...
    out_n    = mix(state_n)

where ``mix`` is the SplitMix64 finalizer:

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

Derived quantities:

* uniform in [0, 1):   ``(out >> 11) * 2**-53``
* standard normal:     Box-Muller on two consecutive outputs,
                       ``u = ((out_a >> 11) + 1) * 2**-53`` (in (0, 1]),
                       ``v = (out_b >> 11) * 2**-53``,
                       ``z = sqrt(-2 ln u) * cos(2 pi v)``.
  Each normal always consumes exactly two raw outputs; batch draws use
  consecutive non-overlapping pairs in order.
* permutation of n:    stable argsort of n fresh uniforms.
* integer in [0, n):   ``floor(uniform * n)``.

Because the state is a pure counter, batches of any size are generated
vectorized without changing the stream.
"""

from __future__ import annotations

import numpy as np

from .exceptions import InvalidInputError

_GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_INV_2_53 = 2.0 ** -53


def _mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int (mod 2**64)."""
    z &= _MASK
    z ^= z >> 30
    z = (z * _MIX_A) & _MASK
    z ^= z >> 27
    z = (z * _MIX_B) & _MASK
    z ^= z >> 31
    return z


def derive_seed(seed: int, *branch) -> int:
    """Fold branch labels (ints or strings) into an independent child seed.

    The derivation is order-sensitive and fully specified: start from
    ``mix(seed XOR golden)``, then for every label fold in either the
    label's UTF-8 bytes (strings) or its 64-bit value (ints), one ``mix``
    per step.
    """
    state = _mix64((int(seed) & _MASK) ^ _GOLDEN)
    for item in branch:
        if isinstance(item, str):
            for byte in item.encode("utf-8"):
                state = _mix64(state ^ byte)
        elif isinstance(item, (int, np.integer)):
            state = _mix64(state ^ (int(item) & _MASK))
        else:
            raise InvalidInputError(
                f"seed branch labels must be int or str, got {type(item).__name__}"
            )
    return state


class SeededRng:
    """Counter-based SplitMix64 stream with vectorized draws.

    Parameters
    ----------
    seed : int
        Any Python int; only its low 64 bits are used.
    """

    def __init__(self, seed: int):
        self._seed = int(seed) & _MASK
        self._count = 0

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def draws(self) -> int:
        """Number of raw 64-bit outputs consumed so far."""
        return self._count

    def __repr__(self):
        return f"SeededRng(seed={self._seed:#018x}, draws={self._count})"

    def _raw(self, n: int) -> np.ndarray:
        if n < 0:
            raise InvalidInputError("draw count must be non-negative")
        idx = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        z = np.uint64(self._seed) + idx * np.uint64(_GOLDEN)
        z ^= z >> np.uint64(30)
        z *= np.uint64(_MIX_A)
        z ^= z >> np.uint64(27)
        z *= np.uint64(_MIX_B)
        z ^= z >> np.uint64(31)
        return z

    @staticmethod
    def _shape(size) -> tuple[int, tuple]:
        if size is None:
            return 1, ()
        if isinstance(size, (int, np.integer)):
            return int(size), (int(size),)
        shape = tuple(int(s) for s in size)
        n = 1
        for s in shape:
            n *= s
        return n, shape

    def uniform(self, size=None):
        """Uniform draws in [0, 1). Scalar for ``size=None``."""
        n, shape = self._shape(size)
        u = (self._raw(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        return float(u[0]) if shape == () else u.reshape(shape)

    def uniform_in(self, low, high, size=None):
        """Uniform draws in [low, high)."""
        u = self.uniform(size)
        return low + (high - low) * u

    def normal(self, size=None):
        """Standard normal draws via Box-Muller. Scalar for ``size=None``."""
        n, shape = self._shape(size)
        raw = self._raw(2 * n)
        a = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
        b = (raw[1::2] >> np.uint64(11)).astype(np.float64) * _INV_2_53
        z = np.sqrt(-2.0 * np.log(a)) * np.cos(2.0 * np.pi * b)
        return float(z[0]) if shape == () else z.reshape(shape)

    def integers(self, upper: int, size=None):
        """Integer draws in [0, upper) as ``floor(uniform * upper)``."""
        if upper <= 0:
            raise InvalidInputError("upper bound must be positive")
        u = self.uniform(size)
        out = np.minimum(np.floor(np.asarray(u) * upper), upper - 1).astype(np.int64)
        return int(out) if size is None else out

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n): stable argsort of n uniforms."""
        if n < 0:
            raise InvalidInputError("permutation length must be non-negative")
        if n == 0:
            return np.empty(0, dtype=np.int64)
        return np.argsort(self.uniform(n), kind="stable").astype(np.int64)

    def subsample(self, n: int, k: int) -> np.ndarray:
        """k distinct indices from range(n), in ascending order."""
        if not 0 <= k <= n:
            raise InvalidInputError(f"cannot take {k} of {n} items without replacement")
        return np.sort(self.permutation(n)[:k])

    def spawn(self, *branch) -> "SeededRng":
        """Independent child stream keyed by branch labels (see derive_seed)."""
        return SeededRng(derive_seed(self._seed, *branch))
