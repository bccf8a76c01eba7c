"""Timing comparison of the compiled and pure-python episode kernels.

Runs identical episodes through both backends and reports wall time,
per-round cost, and the speedup. Action sequences are compared as a
sanity check; the kernels accumulate the solver residual in different
orders, so a rare boundary draw can flip an action, and a mismatch is
reported rather than treated as fatal.

Usage: python benchmarks/compare_backends.py [--arms 8] [--horizon 100000]
       [--episodes 3] [--seed 0]
"""

import argparse
import time

import numpy as np

from tsallisinf.backend import available_backends, run_episode


def episode_inputs(n_arms, horizon, seed):
    rng = np.random.default_rng(seed)
    means = np.linspace(0.0625, 0.9375, n_arms)
    losses = (rng.random((horizon, n_arms)) < means).astype(np.float64)
    uniforms = rng.random(horizon)
    return losses, uniforms


def time_backend(name, episodes, estimator):
    total = 0.0
    outputs = []
    for losses, uniforms in episodes:
        started = time.perf_counter()
        actions, _, _ = run_episode(losses, uniforms, estimator, backend=name)
        total += time.perf_counter() - started
        outputs.append(actions)
    return total, outputs


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--arms", type=int, default=8)
    parser.add_argument("--horizon", type=int, default=100_000)
    parser.add_argument("--episodes", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--estimator", default="reduced-variance",
        choices=["reduced-variance", "importance-weighted"],
    )
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    episodes = [
        episode_inputs(args.arms, args.horizon, args.seed + i)
        for i in range(args.episodes)
    ]
    rounds = args.episodes * args.horizon

    results = {}
    for name in backends:
        elapsed, outputs = time_backend(name, episodes, args.estimator)
        results[name] = (elapsed, outputs)
        print(
            f"{name:>7}: {elapsed:.3f}s for {args.episodes} x {args.horizon} "
            f"rounds ({elapsed / rounds * 1e6:.2f} us/round)"
        )

    if "cython" in results and "python" in results:
        py_time, py_actions = results["python"]
        cy_time, cy_actions = results["cython"]
        print(f"speedup: {py_time / cy_time:.1f}x")
        agree = sum(
            np.array_equal(a, b) for a, b in zip(py_actions, cy_actions)
        )
        print(f"action agreement: {agree}/{args.episodes} episodes identical")


if __name__ == "__main__":
    main()
