"""Calibration of the Co4 retention threshold against ground-truth labels.

Each candidate threshold runs closed-loop Co4 episodes on calibration seeds
kept apart from the evaluation seeds. Relevance labels are read only here,
to score the threshold; the agent never sees them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..overload_sim import Variant, make_track, run_episode
from .config import ExperimentConfig

DEFAULT_CANDIDATES = tuple(np.round(np.arange(0.30, 0.91, 0.05), 2))
DEFAULT_SEEDS = (1000, 1001, 1002)


@dataclass(frozen=True)
class ThresholdScore:
    threshold: float
    min_recall: float
    max_retention: float
    mean_drift: float

    @property
    def margin(self) -> float:
        return self.min_recall - self.max_retention


def score_thresholds(
    cfg: ExperimentConfig,
    candidates=DEFAULT_CANDIDATES,
    seeds=DEFAULT_SEEDS,
    horizon: int = 600,
) -> list[ThresholdScore]:
    """Worst-case recall and distractor retention across grid cells, per threshold."""
    env = make_track(replace(cfg.track, horizon=min(horizon, cfg.track.horizon)))
    burn_in = min(cfg.burn_in, env.horizon // 2)
    scores = []
    for thr in candidates:
        recalls, retentions, drifts = [], [], []
        for s_r, s_c in cfg.grid:
            stream = cfg.stream_config(s_r)
            agent = replace(cfg.agent_config(Variant.CO4, s_c), retain_threshold=float(thr))
            for seed in seeds:
                m, _ = run_episode(env, agent, stream, seed, burn_in)
                recalls.append(m.relevant_recall)
                retentions.append(m.distractor_retention)
                drifts.append(m.rms_drift)
        scores.append(ThresholdScore(float(thr), min(recalls), max(retentions), float(np.mean(drifts))))
    return scores


def pick_threshold(scores, min_recall: float = 0.8, max_retention: float = 0.3) -> ThresholdScore:
    """Widest recall/retention margin among thresholds meeting both targets.

    Raises:
        ValueError: no candidate meets the targets.
    """
    ok = [s for s in scores if s.min_recall >= min_recall and s.max_retention <= max_retention]
    if not ok:
        raise ValueError("no candidate threshold meets the recall and retention targets")
    # ties go to the lower threshold, which drops less evidence
    return max(ok, key=lambda s: (round(s.margin, 6), -s.threshold))
