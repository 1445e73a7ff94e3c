"""Active precision: context assembly, clamped pairwise precision, signal rates.

Precision for an (evidence i, context j) pair is the modulatory transfer
clamped to the closed interval ``[pi_min, 1]``. The floor ``pi_min`` keeps
low-coherence evidence from being silenced outright. It is named ``pi_min``
rather than epsilon so it cannot be confused with prediction errors, which
this package writes ``e_ij``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _core
from .numerics import DimensionError, DomainError, as_mat, as_vec
from .tpn import RegimeParams, TransferConfig

DEFAULT_PI_MIN = 0.05


@dataclass(frozen=True)
class ContextAssembly:
    c_internal: np.ndarray
    feedback: np.ndarray
    lam: float = 0.0

    def __post_init__(self):
        c = as_vec(self.c_internal, "c_internal")
        f = as_vec(self.feedback, "feedback")
        if c.shape != f.shape:
            raise DimensionError(f"c_internal and feedback differ in length: {c.size} vs {f.size}")
        lam = float(self.lam)
        if not (np.isfinite(lam) and lam >= 0):
            raise DomainError("lambda must be finite and non-negative")
        object.__setattr__(self, "c_internal", c)
        object.__setattr__(self, "feedback", f)
        object.__setattr__(self, "lam", lam)


def assemble_context(a: ContextAssembly) -> np.ndarray:
    """Internal context plus lambda-scaled feedback."""
    return a.c_internal + a.lam * a.feedback


@dataclass(frozen=True)
class PrecisionMatrix:
    """Pairwise precisions, rows = evidence, columns = context sources."""

    values: np.ndarray
    pi_min: float = DEFAULT_PI_MIN

    def __post_init__(self):
        pi_min = _check_pi_min(self.pi_min)
        vals = as_mat(self.values, "precision values").copy()
        if vals.min() < pi_min or vals.max() > 1.0:
            raise DomainError(
                f"precision entries must lie in [{pi_min}, 1], got range [{vals.min()}, {vals.max()}]"
            )
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "pi_min", pi_min)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def row_max(self) -> np.ndarray:
        return self.values.max(axis=1)

    def transpose(self) -> "PrecisionMatrix":
        return PrecisionMatrix(self.values.T, self.pi_min)

    def take_rows(self, idx) -> "PrecisionMatrix":
        return PrecisionMatrix(self.values[np.asarray(idx, dtype=np.intp)], self.pi_min)


def _check_pi_min(pi_min) -> float:
    p = float(pi_min)
    if not 0.0 < p < 1.0:
        raise DomainError(f"pi_min must lie in (0, 1), got {pi_min}")
    return p


def _stack(vectors, name: str) -> np.ndarray:
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    return np.ascontiguousarray(as_mat(arr, name))


def mod_matrix(evidence, contexts, cfg: TransferConfig, regime: RegimeParams) -> np.ndarray:
    """Raw (unclamped) transfer values for every evidence/context pair."""
    R = _stack(evidence, "evidence")
    C = _stack(contexts, "contexts")
    if R.shape[1] != cfg.dim or C.shape[1] != cfg.dim:
        raise DimensionError(
            f"evidence dim {R.shape[1]} / context dim {C.shape[1]} != transfer dim {cfg.dim}"
        )
    return _core.kernels.mod_matrix(R, C, cfg.w_r, cfg.w_c, regime.r_gain, regime.c_gain, cfg.interaction_scale)


def active_precision(
    evidence,
    contexts,
    cfg: TransferConfig,
    regime: RegimeParams,
    pi_min: float = DEFAULT_PI_MIN,
) -> PrecisionMatrix:
    """Clamp ``MOD(R_i, C_j)`` into ``[pi_min, 1]`` for every pair.

    Args:
        evidence: ``n x d`` array (or sequence of vectors) of evidence ``R_i``.
        contexts: ``m x d`` array of assembled contexts ``C_j``.
        cfg: Transfer weights, dimension ``d``.
        regime: Gains applied inside the readouts.
        pi_min: Precision floor in (0, 1).

    Returns:
        ``n x m`` PrecisionMatrix.
    """
    pi_min = _check_pi_min(pi_min)
    R = _stack(evidence, "evidence")
    C = _stack(contexts, "contexts")
    if R.shape[1] != cfg.dim or C.shape[1] != cfg.dim:
        raise DimensionError(
            f"evidence dim {R.shape[1]} / context dim {C.shape[1]} != transfer dim {cfg.dim}"
        )
    vals = _core.kernels.precision_matrix(
        R, C, cfg.w_r, cfg.w_c, regime.r_gain, regime.c_gain, cfg.interaction_scale, pi_min
    )
    return PrecisionMatrix(vals, pi_min)


def baseline_precision(variances) -> np.ndarray:
    """Inverse-variance precision, elementwise."""
    v = as_vec(variances, "variances")
    if np.any(v <= 0):
        raise DomainError("variances must be strictly positive")
    return 1.0 / v


def retained_rows(pi: PrecisionMatrix, retain_threshold: float) -> np.ndarray:
    """Indices of evidence rows whose best precision reaches the threshold."""
    t = float(retain_threshold)
    if not pi.pi_min <= t <= 1.0:
        raise DomainError(f"retain_threshold must lie in [{pi.pi_min}, 1], got {t}")
    return np.flatnonzero(pi.row_max() >= t)


def effective_rate(pi: PrecisionMatrix, retain_threshold: float, s_r_raw: float) -> float:
    """Post-gate signal rate: raw rate times the fraction of retained rows."""
    kept = retained_rows(pi, retain_threshold).size
    return float(s_r_raw) * kept / pi.shape[0]
