"""Paired Baseline/Co4 sweeps over (s_r, s_c) cells and seeds."""

from __future__ import annotations

import json
import math
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path

import numpy as np

from .. import __version__, _core
from ..overload_sim import TrackConfig, Variant, make_track, overload_ratio, run_episode
from .config import ExperimentConfig

VARIANTS = (Variant.BASELINE, Variant.CO4)


class OutputDirError(OSError):
    pass


def metrics_key(variant: str, s_r: int, s_c: int, seed: int) -> str:
    return f"{variant}/sr{s_r}/sc{s_c}/seed{seed}"


def trajectory_name(variant: str, s_r: int, s_c: int, seed: int) -> str:
    return f"{variant}_sr{s_r}_sc{s_c}_seed{seed}.csv"


@lru_cache(maxsize=8)
def _env(track: TrackConfig):
    return make_track(track)


def _run_task(cfg: ExperimentConfig, s_r: int, s_c: int, seed: int):
    env = _env(cfg.track)
    stream = cfg.stream_config(s_r)
    out = []
    for variant in VARIANTS:
        metrics, traj = run_episode(env, cfg.agent_config(variant, s_c), stream, seed, cfg.burn_in)
        out.append((metrics.to_dict(), traj.to_csv()))
    return out


def sign_test_p(wins: int, n: int) -> float:
    """One-sided P(X >= wins) for X ~ Binomial(n, 1/2)."""
    return sum(math.comb(n, k) for k in range(wins, n + 1)) / 2.0**n


def _summary(values) -> dict:
    a = np.asarray(values, dtype=np.float64)
    return {
        "mean": float(a.mean()),
        "std": float(a.std(ddof=1)) if a.size > 1 else 0.0,
        "min": float(a.min()),
        "max": float(a.max()),
    }


@dataclass
class RunReport:
    """Aggregated results of one sweep.

    ``cells`` holds one dict per (s_r, s_c) in config order; every number in
    it can be recomputed from the trajectory CSVs plus the lane half-width.
    Per-episode recall and retention need the hidden labels, so they live in
    ``metrics`` only. ``timestamp`` is kept apart from ``provenance`` so
    reruns compare equal on everything else.
    """

    cells: list
    provenance: dict
    metrics: dict = field(repr=False)
    timestamp: str = ""

    def cell(self, s_r: int, s_c: int) -> dict:
        for c in self.cells:
            if c["s_r"] == s_r and c["s_c"] == s_c:
                return c
        raise KeyError((s_r, s_c))

    def to_dict(self) -> dict:
        return {"cells": self.cells, "provenance": self.provenance, "timestamp": self.timestamp}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def check_writable(out_dir: Path) -> None:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=out_dir, prefix=".probe-"):
            pass
    except OSError as exc:
        raise OutputDirError(f"output directory {out_dir} is not writable: {exc}") from exc


def _aggregate(cfg: ExperimentConfig, metrics: dict) -> list:
    cells = []
    for s_r, s_c in cfg.grid:
        gamma, regime = overload_ratio(s_c, s_r)
        cell = {"s_r": s_r, "s_c": s_c, "gamma": gamma, "regime": regime.value, "n_seeds": len(cfg.seeds)}
        drift = {}
        for variant in VARIANTS:
            rows = [metrics[metrics_key(variant.value, s_r, s_c, seed)] for seed in cfg.seeds]
            drift[variant] = np.array([r["rms_drift"] for r in rows])
            entry = {
                "rms_drift": _summary(drift[variant]),
                "off_track_steps_total": int(sum(r["off_track_steps"] for r in rows)),
                "off_track_seeds": int(sum(r["off_track_steps"] > 0 for r in rows)),
                "effective_s_r_mean": float(np.mean([r["effective_s_r"] for r in rows])),
            }
            cell[variant.value] = entry
        wins = int(np.count_nonzero(drift[Variant.CO4] < drift[Variant.BASELINE]))
        cell["co4_wins"] = wins
        cell["sign_test_p"] = sign_test_p(wins, len(cfg.seeds))
        cells.append(cell)
    return cells


def run_grid(
    cfg: ExperimentConfig,
    out_dir=None,
    parallel: int = 1,
    write: bool = True,
) -> RunReport:
    """Run every (cell, seed) pair for both variants.

    Args:
        cfg: Validated experiment config.
        out_dir: Output directory; ``None`` defers to the config and then the
            environment.
        parallel: Worker processes. Results are collected in task order, so
            outputs do not depend on this.
        write: Write trajectories, ``metrics.json`` and ``report.json``.

    Raises:
        OutputDirError: ``out_dir`` cannot be written. Checked before any
            episode runs.
    """
    if int(parallel) < 1:
        raise ValueError("parallel must be >= 1")
    out = cfg.resolve_output_dir(out_dir)
    if write:
        check_writable(out)
    tasks = [(s_r, s_c, seed) for s_r, s_c in cfg.grid for seed in cfg.seeds]
    if parallel == 1:
        results = [_run_task(cfg, *t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=int(parallel)) as pool:
            results = list(pool.map(_run_task, *zip(*[(cfg, *t) for t in tasks])))

    metrics = {}
    csvs = {}
    for pair in results:
        for m, csv in pair:
            metrics[metrics_key(m["variant"], m["s_r"], m["s_c"], m["seed"])] = m
            csvs[trajectory_name(m["variant"], m["s_r"], m["s_c"], m["seed"])] = csv

    report = RunReport(
        cells=_aggregate(cfg, metrics),
        provenance={
            "config_hash": cfg.config_hash,
            "seeds": list(cfg.seeds),
            "version": __version__,
            "backend": _core.get_backend(),
            "horizon": cfg.track.horizon,
        },
        metrics=metrics,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    if write:
        traj_dir = out / "trajectories"
        traj_dir.mkdir(exist_ok=True)
        for name, text in csvs.items():
            (traj_dir / name).write_text(text, encoding="utf-8", newline="")
        (out / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    return report
