"""Scaled dot-product attention, its precision-gated variant, and belief updates.

The gated variant adds ``ln(pi)`` to the logits before the softmax, so
precision is assigned first and attention competition happens afterwards.
Because the floor keeps ``pi >= pi_min > 0`` the bias is always finite, and a
row of constant precision is a pure logit shift that leaves the output equal
to plain attention.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import _core
from .numerics import DimensionError, DomainError, as_mat, as_vec
from .precision import PrecisionMatrix


class AttentionInputs(NamedTuple):
    Q: np.ndarray
    K: np.ndarray
    V: np.ndarray


def _inputs(inp) -> AttentionInputs:
    Q = np.ascontiguousarray(as_mat(inp[0], "Q"))
    K = np.ascontiguousarray(as_mat(inp[1], "K"))
    V = np.ascontiguousarray(as_mat(inp[2], "V"))
    if Q.shape[1] != K.shape[1]:
        raise DimensionError(f"Q and K disagree on feature dim: {Q.shape[1]} vs {K.shape[1]}")
    if K.shape[0] != V.shape[0]:
        raise DimensionError(f"K and V disagree on key count: {K.shape[0]} vs {V.shape[0]}")
    return AttentionInputs(Q, K, V)


def _pi_values(pi, n: int, m: int) -> np.ndarray:
    vals = pi.values if isinstance(pi, PrecisionMatrix) else as_mat(pi, "pi")
    if vals.shape != (n, m):
        raise DimensionError(f"precision shape {vals.shape} does not match attention shape {(n, m)}")
    if np.any(vals <= 0):
        raise DomainError("precision entries must be positive for the log-domain gate")
    return np.ascontiguousarray(vals)


def baseline_attention(inp) -> np.ndarray:
    """``softmax(Q K^T / sqrt(d)) V`` row by row."""
    Q, K, V = _inputs(inp)
    return _core.kernels.attention(Q, K, V)[0]


def attention_weights(inp, pi=None) -> np.ndarray:
    """The attention matrix itself, with an optional precision gate."""
    Q, K, V = _inputs(inp)
    if pi is None:
        return _core.kernels.attention(Q, K, V)[1]
    return _core.kernels.attention(Q, K, V, _pi_values(pi, Q.shape[0], K.shape[0]))[1]


def gated_attention(inp, pi) -> np.ndarray:
    """``softmax(Q K^T / sqrt(d) + ln pi) V``; ``pi`` is ``n x m`` (queries x keys)."""
    Q, K, V = _inputs(inp)
    return _core.kernels.attention(Q, K, V, _pi_values(pi, Q.shape[0], K.shape[0]))[0]


def gated_attention_grad(inp, pi, upstream):
    """Gradients of ``sum(upstream * gated_attention(inp, pi))``.

    Returns:
        Tuple ``(dQ, dK, dV)`` shaped like ``Q``, ``K`` and ``V``.
    """
    Q, K, V = _inputs(inp)
    P = _pi_values(pi, Q.shape[0], K.shape[0])
    U = as_mat(upstream, "upstream")
    if U.shape != (Q.shape[0], V.shape[1]):
        raise DimensionError(f"upstream shape {U.shape} != output shape {(Q.shape[0], V.shape[1])}")
    scale = 1.0 / np.sqrt(Q.shape[1])
    _, A = _core.kernels.attention(Q, K, V, P)
    dV = A.T @ U
    dA = U @ V.T
    # softmax Jacobian, row by row
    dS = A * (dA - np.sum(dA * A, axis=1, keepdims=True))
    dQ = scale * (dS @ K)
    dK = scale * (dS.T @ Q)
    return dQ, dK, dV


@dataclass(frozen=True)
class BeliefState:
    mu: np.ndarray
    learning_rate: float = 1.0

    def __post_init__(self):
        mu = as_vec(self.mu, "mu").copy()
        lr = float(self.learning_rate)
        if not (np.isfinite(lr) and lr > 0):
            raise DomainError("learning_rate must be positive and finite")
        mu.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "learning_rate", lr)


def update_belief_active(b: BeliefState, errors, pi) -> BeliefState:
    """Per-channel update ``dmu_i = lr * sum_j pi_ij * e_ij``."""
    E = np.ascontiguousarray(as_mat(errors, "errors"))
    P = _pi_values(pi, *E.shape)
    if b.mu.size != E.shape[0]:
        raise DimensionError(f"mu has {b.mu.size} entries but errors have {E.shape[0]} rows")
    delta = b.learning_rate * _core.kernels.row_weighted_sum(P, E)
    return replace(b, mu=b.mu + delta)


def update_belief_baseline(b: BeliefState, errors, pi) -> BeliefState:
    """Scalar-state update ``dmu = lr * sum_i pi_i * e_i`` applied to every entry of mu."""
    e = as_vec(errors, "errors")
    p = as_vec(pi, "pi")
    if e.shape != p.shape:
        raise DimensionError(f"errors and precisions differ in length: {e.size} vs {p.size}")
    if np.any(p <= 0):
        raise DomainError("precisions must be positive")
    delta = b.learning_rate * float(p @ e)
    return replace(b, mu=b.mu + delta)
