import math

import numpy as np
import pytest

from activeprecision.attention import (
    BeliefState,
    attention_weights,
    baseline_attention,
    gated_attention,
    gated_attention_grad,
    update_belief_active,
    update_belief_baseline,
)
from activeprecision.numerics import DimensionError, DomainError, fd_gradient
from activeprecision.precision import PrecisionMatrix, active_precision
from activeprecision.tpn import RegimeParams, TransferConfig

from activeprecision.harness.oracles import active_update_loop, attention_loop


def _qkv(rng, n, m, d, dv):
    return rng.normal(size=(n, d)), rng.normal(size=(m, d)), rng.normal(size=(m, dv))


def test_baseline_examples(backend, rng):
    Q, K, V = _qkv(rng, 3, 1, 4, 2)
    np.testing.assert_allclose(baseline_attention((Q, K, V)), np.repeat(V, 3, axis=0), atol=1e-15)
    V = rng.normal(size=(5, 3))
    out = baseline_attention((np.zeros((2, 4)), rng.normal(size=(5, 4)), V))
    np.testing.assert_allclose(out, np.tile(V.mean(axis=0), (2, 1)), atol=1e-14)
    K = [[0.0], [math.log(3)]]
    V = [[0.0], [1.0]]
    np.testing.assert_allclose(baseline_attention(([[1.0]], K, V)), [[0.75]], atol=1e-15)
    # a zero query cannot tell the keys apart
    np.testing.assert_allclose(baseline_attention(([[0.0]], K, V)), [[0.5]], atol=1e-15)


def test_shape_errors():
    with pytest.raises(DimensionError):
        baseline_attention((np.ones((2, 3)), np.ones((4, 2)), np.ones((4, 1))))
    with pytest.raises(DimensionError):
        baseline_attention((np.ones((2, 3)), np.ones((4, 3)), np.ones((3, 1))))
    with pytest.raises(DimensionError):
        gated_attention((np.ones((2, 3)), np.ones((4, 3)), np.ones((4, 1))), np.ones((4, 2)))
    with pytest.raises(DomainError):
        gated_attention((np.ones((1, 3)), np.ones((2, 3)), np.ones((2, 1))), [[1.0, 0.0]])


def test_gated_examples(backend, rng):
    Q, K, V = _qkv(rng, 4, 6, 3, 2)
    for c in (0.05, 0.3, 1.0):
        np.testing.assert_allclose(gated_attention((Q, K, V), np.full((4, 6), c)), baseline_attention((Q, K, V)), atol=1e-12)
    w = attention_weights((np.zeros((1, 2)), np.ones((2, 2)), np.ones((2, 1))), PrecisionMatrix([[1.0, 0.05]], 0.05))
    np.testing.assert_allclose(w, [[1 / 1.05, 0.05 / 1.05]], atol=1e-15)


def test_gated_sw_sleep_equals_baseline(backend, rng):
    sw = RegimeParams.preset("sw_sleep")
    for _ in range(20):
        n, m, d = rng.integers(1, 9, size=3)
        Q, K, V = _qkv(rng, n, m, d, 3)
        cfg = TransferConfig(rng.normal(size=d), rng.normal(size=d), 1.0)
        # rows index evidence (queries), columns index context (keys)
        pi = active_precision(Q, K, cfg, sw)
        np.testing.assert_allclose(gated_attention((Q, K, V), pi), baseline_attention((Q, K, V)), atol=1e-12)


def test_gated_matches_loop_oracle(backend, rng):
    for _ in range(30):
        n, m, d, dv = rng.integers(1, 9, size=4)
        Q, K, V = _qkv(rng, n, m, d, dv)
        pi = rng.uniform(0.05, 1.0, size=(n, m))
        want = attention_loop(Q.tolist(), K.tolist(), V.tolist(), pi.tolist())
        np.testing.assert_allclose(gated_attention((Q, K, V), pi), want, atol=1e-12)


def test_argmax_steering(rng):
    for _ in range(50):
        a, b = sorted(rng.uniform(0.05, 1.0, size=2))
        if a == b:
            continue
        pi = np.array([[b, a, 0.5]])
        w = attention_weights((np.zeros((1, 2)), rng.normal(size=(3, 2)), np.ones((3, 1))), pi)
        assert w[0, 0] > w[0, 1]


def test_floor_suppression_factor(rng):
    Q, K, V = _qkv(rng, 1, 5, 3, 1)
    base = attention_weights((Q, K, V))
    pi = np.ones((1, 5))
    pi[0, 2] = 0.05
    gated = attention_weights((Q, K, V), pi)
    # compare unnormalised masses via ratios against an untouched key
    ratio = (gated[0, 2] / gated[0, 0]) / (base[0, 2] / base[0, 0])
    assert ratio == pytest.approx(0.05, rel=1e-12)


def test_rows_sum_to_one(backend, rng):
    for _ in range(100):
        n, m, d = rng.integers(1, 9, size=3)
        Q, K, V = _qkv(rng, n, m, d, 1)
        w = attention_weights((Q * 10, K, V), rng.uniform(0.05, 1, size=(n, m)))
        np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-12)


def test_belief_active_examples(backend):
    b = BeliefState([0.5, -1.0], 0.7)
    same = update_belief_active(b, np.zeros((2, 3)), np.full((2, 3), 0.4))
    np.testing.assert_array_equal(same.mu, b.mu)
    floor = update_belief_active(BeliefState(np.zeros(3), 1.0), np.ones((3, 4)), PrecisionMatrix(np.full((3, 4), 0.05), 0.05))
    np.testing.assert_allclose(floor.mu, [0.2, 0.2, 0.2], atol=1e-15)
    one = update_belief_active(BeliefState([0.0], 0.5), [[2.0]], [[1.0]])
    assert one.mu[0] == 1.0
    assert b.mu[0] == 0.5  # value semantics
    with pytest.raises(DimensionError):
        update_belief_active(b, np.zeros((3, 3)), np.ones((3, 3)))
    with pytest.raises(DimensionError):
        update_belief_active(b, np.zeros((2, 3)), np.ones((2, 2)))


def test_belief_active_loop_oracle(backend, rng):
    for _ in range(100):
        mu = rng.normal(size=8)
        E = rng.normal(size=(8, 8))
        P = rng.uniform(0.05, 1, size=(8, 8))
        lr = rng.uniform(0.01, 2)
        got = update_belief_active(BeliefState(mu, lr), E, P).mu
        np.testing.assert_allclose(got, active_update_loop(mu.tolist(), E.tolist(), P.tolist(), lr), atol=1e-12)


def test_no_silencing(rng):
    # every pair contributes with weight at least pi_min
    for _ in range(20):
        E = rng.normal(size=(4, 5))
        pm = PrecisionMatrix(np.clip(rng.normal(0.3, 0.5, size=(4, 5)), 0.05, 1.0), 0.05)
        for i in range(4):
            for j in range(5):
                bumped = E.copy()
                bumped[i, j] += 1.0
                d = update_belief_active(BeliefState(np.zeros(4)), bumped, pm).mu - update_belief_active(BeliefState(np.zeros(4)), E, pm).mu
                assert d[i] >= 0.05 - 1e-12


def test_belief_baseline_examples():
    b = BeliefState([1.0], 1.0)
    assert update_belief_baseline(b, [0.0, 0.0], [2.0, 3.0]).mu[0] == 1.0
    assert update_belief_baseline(b, [1.0, -1.0], [1.0, 1.0]).mu[0] == 1.0
    assert update_belief_baseline(BeliefState([0.0], 1.0), [0.5, 4.0], [4.0, 0.25]).mu[0] == pytest.approx(3.0)
    with pytest.raises(DimensionError):
        update_belief_baseline(b, [1.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        update_belief_baseline(b, [1.0], [0.0])
    with pytest.raises(DomainError):
        BeliefState([0.0], 0.0)


def test_grad_examples(backend, rng):
    Q, K, V = _qkv(rng, 3, 4, 5, 2)
    pi = rng.uniform(0.05, 1, size=(3, 4))
    for g in gated_attention_grad((Q, K, V), pi, np.zeros((3, 2))):
        assert not np.any(g)
    Q, K, V = _qkv(rng, 3, 1, 5, 2)
    dQ, dK, dV = gated_attention_grad((Q, K, V), np.full((3, 1), 0.3), rng.normal(size=(3, 2)))
    np.testing.assert_allclose(dQ, 0.0, atol=1e-15)
    np.testing.assert_allclose(dK, 0.0, atol=1e-15)
    with pytest.raises(DimensionError):
        gated_attention_grad((Q, K, V), np.full((3, 1), 0.3), np.zeros((2, 2)))


def _check_grad(rng, n, m, d, dv):
    Q, K, V = _qkv(rng, n, m, d, dv)
    pi = rng.uniform(0.05, 1, size=(n, m))
    U = rng.normal(size=(n, dv))
    grads = gated_attention_grad((Q, K, V), pi, U)
    mats = [Q, K, V]
    worst = 0.0
    for idx, X in enumerate(mats):
        def f(flat, idx=idx, shape=X.shape):
            args = [M for M in mats]
            args[idx] = flat.reshape(shape)
            return float(np.sum(U * gated_attention(tuple(args), pi)))
        num = fd_gradient(f, X.ravel(), 1e-5).reshape(X.shape)
        denom = max(np.linalg.norm(num), np.linalg.norm(grads[idx]), 1e-12)
        worst = max(worst, np.linalg.norm(num - grads[idx]) / denom)
    return worst


def test_grad_matches_finite_differences(backend, rng):
    assert _check_grad(rng, 3, 4, 3, 4) < 1e-4
    for _ in range(5):
        assert _check_grad(rng, *rng.integers(1, 9, size=4)) < 1e-4
