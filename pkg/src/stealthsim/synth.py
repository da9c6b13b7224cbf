"""Synthetic Internet-like AS topologies for benchmarks and large-scale tests.

Four-layer construction: a peered clique of tier-1 transit ASes, multihomed
tier-2 regionals, mid-tier providers, and stub leaves. Provider choices are
skewed toward early (big) ASes so customer-cone sizes follow the heavy-tailed
shape real AS graphs have. Deterministic for a given (n, seed).
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .topology import AsGraph


def _pick(rng: np.random.Generator, pool: np.ndarray, k: int) -> np.ndarray:
    """Sample k distinct members of pool, biased toward its head."""
    k = min(k, len(pool))
    ranks = np.arange(1, len(pool) + 1, dtype=np.float64)
    weights = 1.0 / ranks
    weights /= weights.sum()
    return rng.choice(pool, size=k, replace=False, p=weights)


def synth_topology(n: int, seed: int = 0) -> AsGraph:
    """Generate an n-node topology with hierarchical provider structure."""
    if n < 8:
        raise ConfigError("synthetic topologies need at least 8 ASes")
    rng = np.random.default_rng(seed)
    # labels are a permutation so ASN order carries no structural meaning
    labels = [int(a) for a in rng.permutation(np.arange(1, n + 1))]

    n_t1 = min(15, max(4, n // 250 + 4))
    n_t2 = min(max(8, n // 20), (n - n_t1) // 2)
    n_mid = max(0, min(n // 4, n - n_t1 - n_t2))
    tier1 = np.arange(0, n_t1)
    tier2 = np.arange(n_t1, n_t1 + n_t2)
    mid = np.arange(n_t1 + n_t2, n_t1 + n_t2 + n_mid)
    stubs = np.arange(n_t1 + n_t2 + n_mid, n)

    p2p: list[tuple[int, int]] = []
    p2c: list[tuple[int, int]] = []
    for i in tier1:
        for j in tier1[tier1 > i]:
            p2p.append((labels[i], labels[j]))

    for node in tier2:
        for prov in _pick(rng, tier1, int(rng.integers(2, 4))):
            p2c.append((labels[prov], labels[node]))
    # sparse lateral peering among tier-2s
    for node in tier2:
        if rng.random() < 0.4:
            other = int(rng.choice(tier2))
            if other != node:
                a, b = labels[min(node, other)], labels[max(node, other)]
                p2p.append((a, b))

    for node in mid:
        for prov in _pick(rng, tier2, int(rng.integers(1, 4))):
            p2c.append((labels[prov], labels[node]))

    upstream_pool = np.concatenate([tier2, mid]) if len(mid) else tier2
    for node in stubs:
        for prov in _pick(rng, upstream_pool, int(rng.integers(1, 3))):
            p2c.append((labels[prov], labels[node]))

    return AsGraph.build(p2c, p2p)
