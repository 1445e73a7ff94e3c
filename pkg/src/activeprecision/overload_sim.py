"""Resource-constrained lane-following under a mixed signal stream.

Each step the world emits ``s_r`` signals about the lateral lane offset. A
fraction ``rho`` are relevant (true offset plus Gaussian noise); the rest are
distractors, spurious lane-like cues whose offset from the lane follows a
per-channel sinusoid, so large readings are structured rather than white
noise. An agent may attend to at most ``s_c`` signals per step.

* ``Baseline`` ranks signals by salience ``|payload|``, keeps the top ``s_c``
  and runs plain softmax attention over them. There is no coherence check.
* ``Co4`` first scores every signal against two contexts built from its
  belief, the current lane offset and the trend-extrapolated one (active
  precision). It drops rows whose best precision is below
  ``retain_threshold``, keeps the top ``s_c`` by precision, then runs
  precision-gated attention and a precision-weighted belief update.

``s_c`` is an attention budget in signals per step, the same for both
variants.

Both agents see bit-identical streams for a given seed. Relevance labels are
used for metrics only; agents never read them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Optional

import numpy as np

from . import _core
from .attention import BeliefState, baseline_attention, gated_attention, update_belief_active
from .numerics import DimensionError, DomainError, Rng, rms
from .precision import (
    DEFAULT_PI_MIN,
    ContextAssembly,
    PrecisionMatrix,
    active_precision,
    assemble_context,
    effective_rate,
    retained_rows,
)
from .tpn import RegimeParams, TransferConfig


class Regime(enum.Enum):
    SYNCHRONY = "Synchrony"
    OVERLOAD = "Overload"


def overload_ratio(s_c: float, s_r: float) -> tuple[float, Regime]:
    """``gamma = s_c / s_r``; ``gamma >= 1`` is synchrony, below 1 is overload."""
    s_c, s_r = float(s_c), float(s_r)
    if not (s_c > 0 and s_r > 0):
        raise DomainError(f"rates must be positive, got s_c={s_c}, s_r={s_r}")
    gamma = s_c / s_r
    return gamma, (Regime.SYNCHRONY if gamma >= 1.0 else Regime.OVERLOAD)


# ---------------------------------------------------------------- environment


@dataclass(frozen=True)
class TrackEnv:
    centerline: np.ndarray
    half_width: float = 2.0
    horizon: Optional[int] = None

    def __post_init__(self):
        c = np.asarray(self.centerline, dtype=np.float64).copy()
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise DomainError("centerline must be a finite 1-D sequence")
        if not self.half_width > 0:
            raise DomainError("half_width must be positive")
        horizon = c.size if self.horizon is None else int(self.horizon)
        if not 0 <= horizon <= c.size:
            raise DomainError(f"horizon {horizon} exceeds centerline length {c.size}")
        c.flags.writeable = False
        object.__setattr__(self, "centerline", c)
        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "horizon", horizon)


@dataclass(frozen=True)
class TrackConfig:
    horizon: int = 2000
    half_width: float = 2.0
    amplitudes: tuple = (1.5, 0.8)
    periods: tuple = (400.0, 150.0)
    track_seed: int = 7

    def __post_init__(self):
        if self.horizon < 0:
            raise DomainError("horizon must be non-negative")
        if len(self.amplitudes) != len(self.periods):
            raise DimensionError("amplitudes and periods must have the same length")
        if any(p <= 0 for p in self.periods):
            raise DomainError("periods must be positive")


def make_track(cfg: TrackConfig) -> TrackEnv:
    """A smooth curving centerline: a sum of sinusoids with seeded phases."""
    t = np.arange(cfg.horizon, dtype=np.float64)
    phases = Rng(cfg.track_seed).child("track").uniform(0.0, 2 * np.pi, len(cfg.periods))
    c = np.zeros_like(t)
    for a, p, ph in zip(cfg.amplitudes, cfg.periods, phases):
        c += a * np.sin(2 * np.pi * t / p + ph)
    # start on the lane centre at offset zero
    c -= c[0] if c.size else 0.0
    return TrackEnv(c, cfg.half_width, cfg.horizon)


# ---------------------------------------------------------------- signals


@dataclass(frozen=True)
class FeatureCode:
    """Population code over lateral offset plus a small channel-identity code.

    The offset part is a bank of Gaussian bumps rescaled so that its squared
    norm equals the number of bumps; two extra dimensions carry a unit-norm
    channel tag that context vectors leave at zero.
    """

    span: float = 12.0
    n_centers: int = 49
    width: float = 0.35

    @cached_property
    def centers(self) -> np.ndarray:
        return np.linspace(-self.span, self.span, self.n_centers)

    @property
    def dim(self) -> int:
        return self.n_centers + 2

    def _bumps(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        return _core.kernels.gaussian_code(x, self.centers, self.width, float(self.n_centers))

    def encode(self, payload: np.ndarray, channel: np.ndarray) -> np.ndarray:
        ang = channel.astype(np.float64) * 2.399963229728653  # golden angle
        return np.ascontiguousarray(np.hstack([self._bumps(payload), np.cos(ang)[:, None], np.sin(ang)[:, None]]))

    def context(self, offsets) -> np.ndarray:
        x = np.atleast_1d(np.asarray(offsets, dtype=np.float64))
        return np.ascontiguousarray(np.hstack([self._bumps(x), np.zeros((x.size, 2))]))


@dataclass(frozen=True)
class StreamConfig:
    """Signal stream: ``s_r`` signals per step, a fraction ``rho`` relevant.

    Distractor channel ``k`` reports ``truth + a_k sin(2 pi t / T_k + phi_k)``
    with ``a_k`` drawn from ``distractor_scale * [1 - spread, 1]`` and ``T_k``
    from ``distractor_periods``, once per episode seed.
    """

    s_r: int
    rho: float = 0.2
    obs_noise: float = 0.3
    distractor_scale: float = 2.5
    distractor_periods: tuple = (8.0, 40.0)
    distractor_spread: float = 0.5
    code: FeatureCode = field(default_factory=FeatureCode)

    def __post_init__(self):
        if int(self.s_r) != self.s_r or self.s_r < 1:
            raise DomainError("s_r must be a positive integer")
        if not 0.0 < self.rho <= 1.0:
            raise DomainError("rho must lie in (0, 1]")
        if self.n_relevant < 1:
            raise DomainError("rho * s_r must round to at least one relevant signal")
        if self.obs_noise < 0 or self.distractor_scale < 0:
            raise DomainError("noise scales must be non-negative")
        if not 0.0 <= self.distractor_spread <= 1.0:
            raise DomainError("distractor_spread must lie in [0, 1]")
        lo, hi = self.distractor_periods
        if not 0 < lo <= hi:
            raise DomainError("distractor_periods must be 0 < lo <= hi")

    @property
    def n_relevant(self) -> int:
        return int(math.floor(self.rho * self.s_r + 0.5))


@dataclass(frozen=True)
class Signal:
    features: np.ndarray
    is_relevant: bool
    payload: float
    channel: int


@dataclass(frozen=True)
class SignalBatch:
    """One step's signals stored column-wise; indexes like a list of Signal."""

    payload: np.ndarray
    is_relevant: np.ndarray
    channel: np.ndarray
    features: np.ndarray
    code: FeatureCode

    def __len__(self) -> int:
        return self.payload.size

    def __getitem__(self, k: int) -> Signal:
        return Signal(self.features[k], bool(self.is_relevant[k]), float(self.payload[k]), int(self.channel[k]))

    def __iter__(self):
        return (self[k] for k in range(len(self)))


def distractor_channels(cfg: StreamConfig, rng: Rng) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-channel (amplitude, period, phase); a pure function of the episode seed."""
    n = cfg.s_r - cfg.n_relevant
    ch = rng.child("distractor-channels")
    lo, hi = cfg.distractor_periods
    amps = cfg.distractor_scale * ch.uniform(1.0 - cfg.distractor_spread, 1.0, n)
    periods = ch.uniform(lo, hi, n)
    phases = ch.uniform(0.0, 2 * np.pi, n)
    return amps, periods, phases


def generate_signals(step: int, env: TrackEnv, cfg: StreamConfig, rng: Rng, channels=None) -> SignalBatch:
    """All ``s_r`` signals for one step, shuffled.

    Draws come from a child stream keyed on ``step`` so the batch depends only
    on (seed, step) and not on what else has been drawn.
    """
    if not 0 <= step < env.horizon:
        raise DomainError(f"step {step} outside horizon {env.horizon}")
    if channels is None:
        channels = distractor_channels(cfg, rng)
    amps, periods, phases = channels
    truth = env.centerline[step]
    r = rng.child("stream", step)
    n_rel = cfg.n_relevant
    rel = truth + cfg.obs_noise * r.normal(size=n_rel)
    dis = truth + amps * np.sin(2 * np.pi * step / periods + phases)
    payload = np.concatenate([rel, dis])
    is_rel = np.arange(cfg.s_r) < n_rel
    # channel ids: relevant sensors 0..n_rel-1, distractor sources after
    channel = np.arange(cfg.s_r)
    order = r.permutation(cfg.s_r)
    payload, is_rel, channel = payload[order], is_rel[order], channel[order]
    return SignalBatch(payload, is_rel, channel, cfg.code.encode(payload, channel), cfg.code)


# ---------------------------------------------------------------- agents


class Variant(enum.Enum):
    BASELINE = "Baseline"
    CO4 = "Co4"


@dataclass(frozen=True)
class AgentConfig:
    variant: Variant
    s_c: int
    controller_gain: float = 0.5
    salience_gain: float = 0.7
    pi_min: float = DEFAULT_PI_MIN
    retain_threshold: float = 0.45
    regime: RegimeParams = field(default_factory=lambda: RegimeParams.preset("awake_thought"))
    interaction_scale: float = 1.0
    readout_weight: float = 0.0
    feedback_lambda: float = 0.0
    belief_rate: float = 0.3
    trend_rate: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if int(self.s_c) != self.s_c or self.s_c < 1:
            raise DomainError("s_c must be a positive integer")
        if not self.controller_gain > 0:
            raise DomainError("controller_gain must be positive")
        if not 0.0 < self.pi_min < 1.0:
            raise DomainError("pi_min must lie in (0, 1)")
        if not self.pi_min <= self.retain_threshold <= 1.0:
            raise DomainError("retain_threshold must lie in [pi_min, 1]")
        if not 0.0 < self.belief_rate <= 1.0 or not 0.0 <= self.trend_rate <= 1.0:
            raise DomainError("belief_rate must lie in (0, 1] and trend_rate in [0, 1]")

    def transfer(self, d: int) -> TransferConfig:
        return _uniform_transfer(d, self.readout_weight, self.interaction_scale)


@lru_cache(maxsize=64)
def _uniform_transfer(d: int, weight: float, scale: float) -> TransferConfig:
    return TransferConfig.uniform(d, weight, weight, scale)


@dataclass(frozen=True)
class AgentState:
    position: float
    belief: BeliefState
    trend: float = 0.0

    @classmethod
    def start(cls, offset: float) -> "AgentState":
        return cls(float(offset), BeliefState(np.array([float(offset)])), 0.0)


@dataclass
class StepDiagnostics:
    estimate: float
    retained: np.ndarray
    effective_s_r: float
    fallback: bool = False
    precision: Optional[PrecisionMatrix] = None


def _top_k(score: np.ndarray, candidates: np.ndarray, k: int) -> np.ndarray:
    # stable: ties broken by lower index
    order = np.argsort(-score[candidates], kind="stable")
    return candidates[order[:k]]


def agent_step(state: AgentState, signals: SignalBatch, cfg: AgentConfig, env: TrackEnv = None, rng: Rng = None):
    """Advance one agent by one step.

    Returns:
        ``(action, attended, diagnostics, new_state)`` where ``attended`` holds
        indices into ``signals`` and ``action`` is the lateral steering delta.
    """
    n = len(signals)
    if n == 0:
        raise DomainError("agent_step needs at least one signal")
    if cfg.variant is Variant.BASELINE:
        estimate, attended, diag = _baseline_estimate(signals, cfg)
        belief = BeliefState(np.array([estimate]), state.belief.learning_rate)
        new_trend = state.trend
    else:
        estimate, attended, diag, belief, new_trend = _co4_estimate(state, signals, cfg)
    action = cfg.controller_gain * (estimate - state.position)
    new_state = AgentState(state.position + action, belief, new_trend)
    return action, attended, diag, new_state


def _baseline_estimate(signals: SignalBatch, cfg: AgentConfig):
    salience = np.abs(signals.payload)
    attended = _top_k(salience, np.arange(len(signals)), cfg.s_c)
    Q = np.ones((1, 1))
    K = cfg.salience_gain * salience[attended, None]
    V = signals.payload[attended, None]
    estimate = float(baseline_attention((Q, K, V))[0, 0])
    diag = StepDiagnostics(estimate, np.arange(len(signals)), float(len(signals)))
    return estimate, attended, diag


def _co4_estimate(state: AgentState, signals: SignalBatch, cfg: AgentConfig):
    mu = float(state.belief.mu[0])
    prediction = mu + state.trend
    code = signals.code
    local, ahead = code.context([mu, prediction])
    zero = np.zeros(code.dim)
    contexts = np.vstack(
        [
            assemble_context(ContextAssembly(local, zero, cfg.feedback_lambda)),
            assemble_context(ContextAssembly(ahead, zero, cfg.feedback_lambda)),
        ]
    )
    pi = active_precision(signals.features, contexts, cfg.transfer(code.dim), cfg.regime, cfg.pi_min)
    retained = retained_rows(pi, cfg.retain_threshold)
    eff = effective_rate(pi, cfg.retain_threshold, len(signals))
    if retained.size == 0:
        # nothing coherent this step: coast on the prediction
        belief = BeliefState(np.array([prediction]), state.belief.learning_rate)
        diag = StepDiagnostics(prediction, retained, eff, fallback=True, precision=pi)
        return prediction, retained, diag, belief, state.trend
    row_pi = pi.row_max()
    attended = _top_k(row_pi, retained, cfg.s_c)
    sub = pi.take_rows(attended)
    Q = contexts / math.sqrt(code.dim)
    K = signals.features[attended]
    V = signals.payload[attended, None]
    estimate = float(gated_attention((Q, K, V), sub.transpose()).mean())

    w = row_pi[attended][None, :]
    errors = signals.payload[attended][None, :] - prediction
    prior = BeliefState(np.array([prediction]), cfg.belief_rate / float(w.sum()))
    belief = update_belief_active(prior, errors, w)
    new_trend = state.trend + cfg.trend_rate * (float(belief.mu[0]) - mu - state.trend)
    belief = BeliefState(belief.mu, state.belief.learning_rate)
    diag = StepDiagnostics(estimate, retained, eff, precision=pi)
    return estimate, attended, diag, belief, new_trend


# ---------------------------------------------------------------- episodes


@dataclass(frozen=True)
class EpisodeMetrics:
    variant: str
    s_r: int
    s_c: int
    seed: int
    gamma: float
    rms_drift: float
    off_track_steps: int
    effective_s_r: float
    relevant_recall: Optional[float] = None
    distractor_retention: Optional[float] = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Trajectory:
    position: np.ndarray
    centerline: np.ndarray
    attended_count: np.ndarray
    effective_s_r: np.ndarray

    def __len__(self):
        return self.position.size

    def to_csv(self) -> str:
        # repr of a Python float is the shortest round-tripping form
        lines = ["step,position,centerline,attended_count,effective_s_r"]
        rows = zip(self.position.tolist(), self.centerline.tolist(), self.attended_count.tolist(), self.effective_s_r.tolist())
        for t, (p, c, n, e) in enumerate(rows):
            lines.append(f"{t},{p!r},{c!r},{int(n)},{e!r}")
        return "\n".join(lines) + "\n"


def drift_metric(trajectory, centerline) -> float:
    """RMS lateral deviation from the centerline."""
    return rms(trajectory, centerline)


def run_episode(env: TrackEnv, agent_cfg: AgentConfig, stream_cfg: StreamConfig, seed: int, burn_in: int = 100):
    """Run one agent for ``env.horizon`` steps on the stream drawn from ``seed``.

    Returns:
        ``(EpisodeMetrics, Trajectory)``. Recall and distractor retention are
        reported for Co4 only, averaged over steps after ``burn_in``.
    """
    rng = Rng(seed)
    T = env.horizon
    gamma, _ = overload_ratio(agent_cfg.s_c, stream_cfg.s_r)
    pos = np.zeros(T)
    attended_count = np.zeros(T, dtype=np.int64)
    eff = np.zeros(T)
    rel_hits = rel_total = dis_hits = dis_total = 0
    channels = distractor_channels(stream_cfg, rng)
    state = AgentState.start(env.centerline[0] if T else 0.0)
    for t in range(T):
        signals = generate_signals(t, env, stream_cfg, rng, channels)
        _, attended, diag, state = agent_step(state, signals, agent_cfg, env, rng)
        pos[t] = state.position
        attended_count[t] = attended.size
        eff[t] = diag.effective_s_r
        if agent_cfg.variant is Variant.CO4 and t >= burn_in:
            kept = np.zeros(len(signals), dtype=bool)
            kept[diag.retained] = True
            rel = signals.is_relevant
            rel_hits += int(np.count_nonzero(kept & rel))
            rel_total += int(np.count_nonzero(rel))
            dis_hits += int(np.count_nonzero(kept & ~rel))
            dis_total += int(np.count_nonzero(~rel))
    center = env.centerline[:T]
    traj = Trajectory(pos, center.copy(), attended_count, eff)
    recall = retention = None
    if agent_cfg.variant is Variant.CO4 and rel_total:
        recall = rel_hits / rel_total
        retention = dis_hits / dis_total if dis_total else 0.0
    metrics = EpisodeMetrics(
        variant=agent_cfg.variant.value,
        s_r=stream_cfg.s_r,
        s_c=agent_cfg.s_c,
        seed=int(seed),
        gamma=gamma,
        rms_drift=drift_metric(pos, center),
        off_track_steps=int(np.count_nonzero(np.abs(pos - center) > env.half_width)),
        effective_s_r=float(eff.mean()) if T else 0.0,
        relevant_recall=recall,
        distractor_retention=retention,
    )
    return metrics, traj
