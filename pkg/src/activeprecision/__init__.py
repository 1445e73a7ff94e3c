"""Context-gated active precision for attention under input overload."""

__version__ = "0.1.0"

from .attention import (
    AttentionInputs,
    BeliefState,
    baseline_attention,
    gated_attention,
    gated_attention_grad,
    update_belief_active,
    update_belief_baseline,
)
from .numerics import DimensionError, DomainError, Rng
from .overload_sim import (
    AgentConfig,
    Regime,
    StreamConfig,
    TrackConfig,
    TrackEnv,
    Variant,
    generate_signals,
    make_track,
    overload_ratio,
    run_episode,
)
from .precision import (
    DEFAULT_PI_MIN,
    ContextAssembly,
    PrecisionMatrix,
    active_precision,
    assemble_context,
    baseline_precision,
    effective_rate,
    retained_rows,
)
from .tpn import MentalState, RegimeParams, TransferConfig, classify_regime, mod_transfer

__all__ = [
    "AttentionInputs",
    "BeliefState",
    "baseline_attention",
    "gated_attention",
    "gated_attention_grad",
    "update_belief_active",
    "update_belief_baseline",
    "DimensionError",
    "DomainError",
    "Rng",
    "AgentConfig",
    "Regime",
    "StreamConfig",
    "TrackConfig",
    "TrackEnv",
    "Variant",
    "generate_signals",
    "make_track",
    "overload_ratio",
    "run_episode",
    "DEFAULT_PI_MIN",
    "ContextAssembly",
    "PrecisionMatrix",
    "active_precision",
    "assemble_context",
    "baseline_precision",
    "effective_rate",
    "retained_rows",
    "MentalState",
    "RegimeParams",
    "TransferConfig",
    "classify_regime",
    "mod_transfer",
]
