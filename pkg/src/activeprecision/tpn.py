"""Two-point neuron modulation transfer and mental-state regimes.

A two-point neuron integrates feedforward evidence ``R`` at its basal site and
context ``C`` at its apical site. Their cooperation is summarised by

    MOD(R, C) = f_r(R) + f_c(C) + g(R, C)

where ``f_r`` and ``f_c`` are gain-scaled linear readouts and ``g`` is a
gain-scaled inner product, all normalised by the vector dimension ``d``. The
regime gains ``r_gain`` / ``c_gain`` set how strongly each stream drives the
unit; with ``c_gain == 0`` context has no effect at all.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .numerics import DimensionError, DomainError, as_vec

# regime cut points on [0, 1] stream strength
LOW = 0.3
HIGH = 0.7


class MentalState(enum.Enum):
    SW_SLEEP = "SWSleep"
    WAKEFULNESS = "Wakefulness"
    REM_SLEEP = "REMSleep"
    AWAKE_THOUGHT = "AwakeThought"


@dataclass(frozen=True)
class RegimeParams:
    """An R/C gain configuration tied to one mental state."""

    state: MentalState
    r_gain: float
    c_gain: float

    def __post_init__(self):
        object.__setattr__(self, "state", MentalState(self.state))
        r, c = float(self.r_gain), float(self.c_gain)
        object.__setattr__(self, "r_gain", r)
        object.__setattr__(self, "c_gain", c)
        if not (0.0 <= r <= 1.0 and 0.0 <= c <= 1.0):
            raise DomainError(f"gains must lie in [0, 1], got r_gain={r}, c_gain={c}")
        ok = {
            MentalState.SW_SLEEP: c == 0.0,
            MentalState.AWAKE_THOUGHT: r >= HIGH and c >= HIGH,
            MentalState.REM_SLEEP: c >= HIGH and r <= LOW,
            MentalState.WAKEFULNESS: r >= HIGH and LOW <= c < HIGH,
        }[self.state]
        if not ok:
            raise DomainError(f"gains r={r}, c={c} are inconsistent with {self.state.value}")

    @classmethod
    def preset(cls, name: str) -> "RegimeParams":
        """Look up a named preset (case-insensitive), e.g. ``"awake_thought"``."""
        key = name.lower().replace("-", "_")
        if key not in PRESETS:
            raise DomainError(f"unknown regime preset {name!r}; choose from {sorted(PRESETS)}")
        return PRESETS[key]


PRESETS = {
    "sw_sleep": RegimeParams(MentalState.SW_SLEEP, r_gain=0.8, c_gain=0.0),
    "rem_sleep": RegimeParams(MentalState.REM_SLEEP, r_gain=0.2, c_gain=0.9),
    # moderate-to-high R/C strength: everyday perceptual wakefulness
    "wakefulness": RegimeParams(MentalState.WAKEFULNESS, r_gain=0.8, c_gain=0.5),
    "mod_high": RegimeParams(MentalState.WAKEFULNESS, r_gain=0.8, c_gain=0.5),
    # high-to-maximal R/C strength: awake imaginative thought
    "awake_thought": RegimeParams(MentalState.AWAKE_THOUGHT, r_gain=1.0, c_gain=1.0),
    "high_max": RegimeParams(MentalState.AWAKE_THOUGHT, r_gain=1.0, c_gain=1.0),
}


@dataclass(frozen=True)
class TransferConfig:
    """Readout weights for ``f_r``/``f_c`` and the scale of ``g``."""

    w_r: np.ndarray
    w_c: np.ndarray
    interaction_scale: float = 1.0
    dim: int = field(init=False)

    def __post_init__(self):
        w_r = as_vec(self.w_r, "w_r").copy()
        w_c = as_vec(self.w_c, "w_c").copy()
        if w_r.shape != w_c.shape or w_r.size == 0:
            raise DimensionError(f"w_r and w_c must share a positive dimension, got {w_r.size} and {w_c.size}")
        if not self.interaction_scale > 0:
            raise DomainError("interaction_scale must be positive")
        w_r.flags.writeable = False
        w_c.flags.writeable = False
        object.__setattr__(self, "w_r", w_r)
        object.__setattr__(self, "w_c", w_c)
        object.__setattr__(self, "interaction_scale", float(self.interaction_scale))
        object.__setattr__(self, "dim", int(w_r.size))

    @classmethod
    def uniform(cls, d: int, w_r: float = 1.0, w_c: float = 1.0, interaction_scale: float = 1.0):
        return cls(np.full(d, float(w_r)), np.full(d, float(w_c)), interaction_scale)


def _checked(x, cfg: TransferConfig, name: str) -> np.ndarray:
    v = as_vec(x, name)
    if v.size != cfg.dim:
        raise DimensionError(f"{name} has dimension {v.size}, transfer config expects {cfg.dim}")
    return v


def f_r(R_i, cfg: TransferConfig, regime: RegimeParams) -> float:
    """Integrated evidence drive."""
    R = _checked(R_i, cfg, "R_i")
    return regime.r_gain * float(cfg.w_r @ R) / cfg.dim


def f_c(C_j, cfg: TransferConfig, regime: RegimeParams) -> float:
    """Integrated contextual drive."""
    C = _checked(C_j, cfg, "C_j")
    return regime.c_gain * float(cfg.w_c @ C) / cfg.dim


def g_interact(R_i, C_j, cfg: TransferConfig, regime: RegimeParams) -> float:
    """Multiplicative evidence-context interaction."""
    R = _checked(R_i, cfg, "R_i")
    C = _checked(C_j, cfg, "C_j")
    return cfg.interaction_scale * regime.r_gain * regime.c_gain * float(R @ C) / cfg.dim


def mod_transfer(R_i, C_j, cfg: TransferConfig, regime: RegimeParams) -> float:
    """Unclamped modulatory transfer ``f_r + f_c + g``."""
    return f_r(R_i, cfg, regime) + f_c(C_j, cfg, regime) + g_interact(R_i, C_j, cfg, regime)


def classify_regime(r_strength: float, c_strength: float) -> MentalState:
    """Map evidence/context stream strengths in [0, 1] to a mental state.

    Weak context means SW sleep whatever the evidence; strong context with weak
    evidence is REM sleep; strong evidence with strong context is awake thought.
    Everything else, including the unlabelled middle band, is wakefulness.
    """
    r, c = float(r_strength), float(c_strength)
    if not (0.0 <= r <= 1.0 and 0.0 <= c <= 1.0):
        raise DomainError(f"stream strengths must lie in [0, 1], got ({r}, {c})")
    if c < LOW:
        return MentalState.SW_SLEEP
    if c >= HIGH and r <= LOW:
        return MentalState.REM_SLEEP
    if r >= HIGH and c >= HIGH:
        return MentalState.AWAKE_THOUGHT
    return MentalState.WAKEFULNESS
