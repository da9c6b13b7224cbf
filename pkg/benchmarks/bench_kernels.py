#!/usr/bin/env python3
"""Benchmark the JIT propagation kernel against the pure-numpy fallback.

Generates a synthetic hierarchical topology, runs a batch of single-victim
propagations plus path-membership sweeps through both backends, checks the
outputs are identical, and prints per-backend timings with the speedup.

Usage: python benchmarks/bench_kernels.py --nodes 20000 --victims 50 --repeat 3
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from stealthsim.fastpath import CsrTopology, FastOrigination, build_seeds
from stealthsim.fastpath import kernels_numba, kernels_numpy
from stealthsim.synth import synth_topology


def _run_batch(kernels, csr: CsrTopology, victims: np.ndarray, infected: np.ndarray):
    prefs = []
    accept = np.ones(len(csr), np.uint8)
    for victim in victims:
        seeds = build_seeds(csr, [FastOrigination(int(victim))])
        pref, dist, nh = kernels.propagate_kernel(
            csr.prov_indptr, csr.prov_idx,
            csr.peer_indptr, csr.peer_idx,
            csr.cust_indptr, csr.cust_idx,
            *seeds, accept,
        )
        on = kernels.on_path_kernel(pref, dist, nh, infected)
        prefs.append((pref, dist, nh, on))
    return prefs


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--nodes", type=int, default=20000)
    parser.add_argument("--victims", type=int, default=50)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    graph = synth_topology(args.nodes, args.seed)
    csr = CsrTopology.from_graph(graph)
    rng = np.random.default_rng(args.seed)
    victims = rng.choice(csr.asns, size=min(args.victims, len(csr)), replace=False)
    infected = np.zeros(len(csr), np.uint8)
    infected[rng.choice(len(csr), size=max(1, len(csr) // 100), replace=False)] = 1

    print(f"topology: {len(graph)} ASes, {graph.edge_count()} edges; "
          f"{len(victims)} victims x {args.repeat} repeats")

    # trigger JIT compilation outside the timed region
    _run_batch(kernels_numba, csr, victims[:1], infected)

    timings: dict[str, float] = {}
    outputs: dict[str, list] = {}
    for name, mod in (("numba", kernels_numba), ("numpy", kernels_numpy)):
        best = float("inf")
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            outputs[name] = _run_batch(mod, csr, victims, infected)
            best = min(best, time.perf_counter() - t0)
        timings[name] = best

    for a, b in zip(outputs["numba"], outputs["numpy"]):
        for left, right in zip(a, b):
            np.testing.assert_array_equal(left, right)
    print("outputs: identical across backends")

    per_run = {k: v / len(victims) for k, v in timings.items()}
    print(f"{'backend':<8} {'total (s)':>10} {'per victim (ms)':>16}")
    for name in ("numba", "numpy"):
        print(f"{name:<8} {timings[name]:>10.3f} {per_run[name] * 1e3:>16.2f}")
    print(f"speedup: {timings['numpy'] / timings['numba']:.1f}x (numba over numpy)")


if __name__ == "__main__":
    main()
