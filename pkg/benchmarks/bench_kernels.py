"""Compiled vs numpy kernels at the sizes the simulator uses, plus one episode.

Run: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from activeprecision import _core
from activeprecision.overload_sim import AgentConfig, StreamConfig, TrackConfig, Variant, make_track, run_episode


def kernel_cases(rng):
    c = np.ascontiguousarray
    d = 51
    R, C = c(rng.normal(size=(200, d))), c(rng.normal(size=(2, d)))
    w = c(np.zeros(d))
    Q, K, V = c(rng.normal(size=(2, d))), c(rng.normal(size=(50, d))), c(rng.normal(size=(50, 1)))
    pi = c(rng.uniform(0.05, 1, size=(2, 50)))
    x, centers = c(rng.uniform(-5, 5, size=200)), np.linspace(-12, 12, 49)
    big = [c(rng.normal(size=(64, 64))) for _ in range(3)]
    big_pi = c(rng.uniform(0.05, 1, size=(64, 64)))
    return {
        "precision_matrix 200x2 d=51": lambda k: k.precision_matrix(R, C, w, w, 1.0, 1.0, 1.0, 0.05),
        "attention 2x50 d=51 gated": lambda k: k.attention(Q, K, V, pi),
        "attention 64x64 d=64 gated": lambda k: k.attention(*big, big_pi),
        "gaussian_code 200x49": lambda k: k.gaussian_code(x, centers, 0.35, 49.0),
    }


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = _core.available_backends()
    modules = {"python": _core.python_backend, "cython": _core.compiled_backend}
    rng = np.random.default_rng(0)
    print(f"{'case':34s}" + "".join(f"{b:>14s}" for b in backends) + ("   speedup" if len(backends) > 1 else ""))
    for name, case in kernel_cases(rng).items():
        times = [best_of(lambda: case(modules[b]), args.repeat, 200) for b in backends]
        row = f"{name:34s}" + "".join(f"{t * 1e6:12.1f}us" for t in times)
        if len(times) > 1:
            row += f"   {times[0] / times[1]:6.2f}x"
        print(row)

    env = make_track(TrackConfig(horizon=300))
    stream = StreamConfig(s_r=200)
    agent = AgentConfig(Variant.CO4, s_c=50)
    times = []
    for b in backends:
        previous = _core.set_backend(b)
        times.append(best_of(lambda: run_episode(env, agent, stream, seed=0), max(1, args.repeat // 2), 1))
        _core.set_backend(previous)
    row = f"{'Co4 episode, 300 steps, s_r=200':34s}" + "".join(f"{t * 1e3:12.1f}ms" for t in times)
    if len(times) > 1:
        row += f"   {times[0] / times[1]:6.2f}x"
    print(row)


if __name__ == "__main__":
    main()
