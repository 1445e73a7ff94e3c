"""Small deterministic numerics shared by every other module.

Vectors and matrices are plain float64 numpy arrays; the ``as_vec`` /
``as_mat`` helpers validate shape and finiteness at module boundaries.
"""

from __future__ import annotations

import hashlib
from typing import Callable, Hashable

import numpy as np


class DimensionError(ValueError):
    """Raised when array shapes or lengths are incompatible."""


class DomainError(ValueError):
    """Raised when a value lies outside the admissible range."""


def as_vec(values, name: str = "vector") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


def as_mat(values, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


def softmax_row(v) -> np.ndarray:
    """Numerically stable softmax of a single row of logits."""
    x = as_vec(v, "logits")
    if x.size == 0:
        raise DimensionError("softmax of an empty vector")
    z = np.exp(x - x.max())
    return z / z.sum()


def softmax_rows(S: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax of a 2-D logit array (no validation)."""
    z = np.exp(S - S.max(axis=1, keepdims=True))
    return z / z.sum(axis=1, keepdims=True)


def fd_gradient(f: Callable[[np.ndarray], float], x, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of a scalar function.

    Args:
        f: Scalar function of a 1-D array.
        x: Point at which to differentiate.
        h: Step size, must be positive.

    Returns:
        Array of ``(f(x + h e_k) - f(x - h e_k)) / 2h`` for every coordinate k.
    """
    if not h > 0:
        raise DomainError("step size h must be positive")
    x = as_vec(x, "x").copy()
    grad = np.empty_like(x)
    for k in range(x.size):
        orig = x[k]
        x[k] = orig + h
        fp = float(f(x))
        x[k] = orig - h
        fm = float(f(x))
        x[k] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise FloatingPointError(f"non-finite function value at coordinate {k}")
        grad[k] = (fp - fm) / (2.0 * h)
    return grad


def rms(a, b) -> float:
    a = as_vec(a, "a")
    b = as_vec(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        return 0.0
    return float(np.sqrt(np.mean((a - b) ** 2)))


class Rng:
    """Seeded counter-based generator (Philox) with keyed child streams.

    Draw sequences depend only on the seed and the key path, never on the
    platform or on how many other streams were used, so episodes can be
    regenerated piecewise and in any order.
    """

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        if not 0 <= int(seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def child(self, *key: Hashable) -> "Rng":
        return Rng(self.seed, self.key + tuple(_key_int(k) for k in key))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def random(self, size=None):
        return self._gen.random(size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


def _key_int(k: Hashable) -> int:
    if isinstance(k, (int, np.integer)):
        if k < 0:
            raise DomainError("stream keys must be non-negative")
        return int(k)
    # stable across interpreter runs, unlike hash()
    digest = hashlib.blake2b(str(k).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")
