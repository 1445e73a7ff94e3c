"""Self-check suites: oracle agreement, gradient check, invariants.

Each suite draws its instances from ``Rng(seed).child(suite, i)`` so any
failure can be reproduced from the reported seed and draw index.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import _core
from ..attention import attention_weights, baseline_attention, gated_attention, gated_attention_grad
from ..attention import BeliefState, update_belief_active
from ..numerics import Rng, fd_gradient
from ..overload_sim import overload_ratio
from ..precision import ContextAssembly, active_precision, assemble_context, mod_matrix
from ..tpn import MentalState, RegimeParams, TransferConfig
from . import oracles

SUITES = ("oracle", "gradcheck", "invariants")
FAULTS = ("pi-above-one",)
ORACLE_TOL = 1e-12
GRAD_TOL = 1e-4


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    detail: str = ""


@dataclass
class VerifyReport:
    suite: str
    seed: int
    backend: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            msg = f"[{tag}] {self.suite}/{c.name}: worst={c.worst:.3e}"
            if c.detail:
                msg += f" ({c.detail})"
            out.append(msg)
        out.append(f"{self.suite}: {'ok' if self.passed else 'FAILED'} in {self.seconds:.2f}s, seed={self.seed}, backend={self.backend}")
        return out


def random_regime(r: Rng) -> RegimeParams:
    state = list(MentalState)[int(r.uniform(0, 4))]
    lo, hi = {
        MentalState.SW_SLEEP: ((0.0, 1.0), (0.0, 0.0)),
        MentalState.REM_SLEEP: ((0.0, 0.3), (0.7, 1.0)),
        MentalState.WAKEFULNESS: ((0.7, 1.0), (0.3, 0.7)),
        MentalState.AWAKE_THOUGHT: ((0.7, 1.0), (0.7, 1.0)),
    }[state]
    return RegimeParams(state, float(r.uniform(*lo)), float(r.uniform(*hi)))


def _instance(r: Rng, max_dim: int = 8, regime: Optional[RegimeParams] = None):
    n, m, d, dv = (int(x) for x in r.generator.integers(1, max_dim + 1, size=4))
    R = r.normal(size=(n, d))
    C = r.normal(size=(m, d))
    cfg = TransferConfig(r.normal(size=d), r.normal(size=d), float(r.uniform(0.1, 2.0)))
    return R, C, cfg, regime or random_regime(r), r.normal(size=(m, dv))


def _err(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)))) if np.size(a) else 0.0


def _check(name, errors: list, tol: float, seed: int) -> CheckResult:
    worst_i = int(np.argmax(errors))
    worst = errors[worst_i]
    ok = worst <= tol
    detail = f"{len(errors)} instances, tol {tol:g}"
    if not ok:
        bad = sum(e > tol for e in errors)
        detail += f"; {bad} over tolerance, first bad draw seed={seed} index={next(i for i, e in enumerate(errors) if e > tol)}"
    return CheckResult(name, ok, worst, detail)


def suite_oracle(seed: int = 0, n_instances: int = 100, pi_min: float = 0.05) -> list[CheckResult]:
    """Vectorised kernels against the scalar-loop oracles on random instances up to 8x8."""
    errs = {k: [] for k in ("overload_ratio", "mod", "precision", "context", "gated_attention", "active_update")}
    root = Rng(seed).child("oracle")
    for i in range(n_instances):
        r = root.child(i)
        R, C, cfg, reg, V = _instance(r)
        s_c, s_r = (float(x) for x in r.uniform(0.01, 100.0, size=2))
        g, regime = overload_ratio(s_c, s_r)
        g_ref, regime_ref = oracles.gamma(s_c, s_r)
        errs["overload_ratio"].append(abs(g - g_ref) if regime.value == regime_ref else np.inf)
        Rl, Cl, wr, wc = R.tolist(), C.tolist(), cfg.w_r.tolist(), cfg.w_c.tolist()
        args = (wr, wc, reg.r_gain, reg.c_gain, cfg.interaction_scale)
        raw = [[oracles.mod_pair(a, b, *args) for b in Cl] for a in Rl]
        errs["mod"].append(_err(mod_matrix(R, C, cfg, reg), raw))
        pi = active_precision(R, C, cfg, reg, pi_min)
        errs["precision"].append(_err(pi.values, oracles.precision_loop(Rl, Cl, *args, pi_min)))
        fb = r.normal(size=R.shape[1])
        lam = float(r.uniform(0, 2))
        errs["context"].append(
            _err(assemble_context(ContextAssembly(R[0], fb, lam)), oracles.context_loop(Rl[0], fb.tolist(), lam))
        )
        out = gated_attention((R, C, V), pi)
        errs["gated_attention"].append(_err(out, oracles.attention_loop(Rl, Cl, V.tolist(), pi.values.tolist())))
        E = r.normal(size=pi.shape)
        mu = r.normal(size=pi.shape[0])
        lr = float(r.uniform(0.1, 1.0))
        upd = update_belief_active(BeliefState(mu, lr), E, pi)
        errs["active_update"].append(
            _err(upd.mu, oracles.active_update_loop(mu.tolist(), E.tolist(), pi.values.tolist(), lr))
        )
    return [_check(k, v, ORACLE_TOL, seed) for k, v in errs.items()]


def gradient_error(Q, K, V, pi, U, h: float = 1e-5) -> float:
    """Relative error between analytic and central-difference gradients."""
    grads = gated_attention_grad((Q, K, V), pi, U)
    mats = [Q, K, V]
    worst = 0.0
    for idx, X in enumerate(mats):

        def loss(flat, idx=idx, shape=X.shape):
            args = list(mats)
            args[idx] = flat.reshape(shape)
            return float(np.sum(U * gated_attention(tuple(args), pi)))

        num = fd_gradient(loss, X.ravel(), h).reshape(X.shape)
        denom = max(np.linalg.norm(num), np.linalg.norm(grads[idx]), 1e-12)
        worst = max(worst, float(np.linalg.norm(num - grads[idx]) / denom))
    return worst


def suite_gradcheck(seed: int = 0, n_seeds: int = 10, max_dim: int = 8) -> list[CheckResult]:
    """Analytic attention gradients against finite differences."""
    errors = []
    for i in range(n_seeds):
        r = Rng(seed).child("gradcheck", i)
        n, m, d, dv = (int(x) for x in r.generator.integers(1, max_dim + 1, size=4))
        Q, K, V = r.normal(size=(n, d)), r.normal(size=(m, d)), r.normal(size=(m, dv))
        pi = r.uniform(0.05, 1.0, size=(n, m))
        errors.append(gradient_error(Q, K, V, pi, r.normal(size=(n, dv))))
    return [_check("gated_attention_grad", errors, GRAD_TOL, seed)]


def suite_invariants(
    seed: int = 0,
    n_draws: int = 10_000,
    n_reductions: int = 100,
    pi_min: float = 0.05,
    inject_fault: Optional[str] = None,
) -> list[CheckResult]:
    """Precision bounds, attention normalisation, and the two reductions to plain attention.

    ``inject_fault="pi-above-one"`` corrupts one precision draw so the bounds
    check must fail; used to exercise the failure path.
    """
    if inject_fault is not None and inject_fault not in FAULTS:
        raise ValueError(f"unknown fault {inject_fault!r}; choose from {FAULTS}")
    root = Rng(seed).child("invariants")
    fault_at = int(root.child("fault").uniform(0, n_draws)) if inject_fault else -1
    bound_err, row_err, bad_draws = [], [], []
    for i in range(n_draws):
        r = root.child("draw", i)
        R, C, cfg, reg, V = _instance(r)
        floor = float(r.uniform(1e-3, 0.5))
        vals = active_precision(R, C, cfg, reg, floor).values
        if i == fault_at:
            vals = vals.copy()
            vals.flat[0] = 1.0 + 1e-3
        over = max(0.0, float(vals.max()) - 1.0, floor - float(vals.min()))
        bound_err.append(over)
        if over > 0:
            bad_draws.append(i)
            continue
        A = attention_weights((R, C, V), vals)
        row_err.append(float(np.max(np.abs(A.sum(axis=1) - 1.0))))
    bounds = CheckResult("precision_bounds", not bad_draws, max(bound_err), f"{n_draws} draws, pi_min drawn per draw")
    if bad_draws:
        bounds.detail += f"; violated at seed={seed} draw index(es) {bad_draws[:5]}"
    checks = [bounds, _check("attention_rows_sum_to_one", row_err, ORACLE_TOL, seed)]

    sw, const = [], []
    for i in range(n_reductions):
        r = root.child("reduction", i)
        sleep = RegimeParams(MentalState.SW_SLEEP, float(r.uniform(0, 1)), 0.0)
        R, C, cfg, _, V = _instance(r, regime=sleep)
        base = baseline_attention((R, C, V))
        sw.append(_err(gated_attention((R, C, V), active_precision(R, C, cfg, sleep, pi_min)), base))
        c = float(r.uniform(pi_min, 1.0))
        const.append(_err(gated_attention((R, C, V), np.full((R.shape[0], C.shape[0]), c)), base))
    checks.append(_check("sw_sleep_equals_baseline", sw, ORACLE_TOL, seed))
    checks.append(_check("constant_precision_equals_baseline", const, ORACLE_TOL, seed))
    return checks


def run_suite(name: str, seed: int = 0, inject_fault: Optional[str] = None) -> VerifyReport:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or 'all'")
    t0 = time.perf_counter()
    if name == "oracle":
        checks = suite_oracle(seed)
    elif name == "gradcheck":
        checks = suite_gradcheck(seed)
    else:
        checks = suite_invariants(seed, inject_fault=inject_fault)
    return VerifyReport(name, seed, _core.get_backend(), checks, time.perf_counter() - t0)
