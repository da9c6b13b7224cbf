"""Shared fixtures: the 5-edge desk topology and random-graph corpus helpers.

The desk topology (six ASes, five edges) is small enough to reason about by
hand and is reused across modules:

    1|3|-1   1|2|0   2|4|-1   3|5|-1   1|6|-1

Random graphs are built rank-ordered (providers always come earlier in a
random order), which rules out customer-provider cycles, so Gao-Rexford
propagation has a unique stable outcome the naive oracle converges to.
"""
from __future__ import annotations

import numpy as np
import pytest

from stealthsim.routing import NO_ADVERTISE, NO_EXPORT, NO_EXPORT_SUBCONFED, Prefix
from stealthsim.scenario import AttackKind, build_attack
from stealthsim.topology import AsGraph, parse_as_rel

T5_TEXT = b"1|3|-1\n2|4|-1\n1|2|0\n3|5|-1\n1|6|-1\n"
VICTIM_PREFIX = Prefix.parse("10.0.0.0/23")

STEALTH_COMMUNITY_CHOICES = (
    frozenset({NO_EXPORT}),
    frozenset({NO_EXPORT_SUBCONFED}),
    frozenset({NO_ADVERTISE}),
    frozenset({NO_EXPORT, NO_ADVERTISE}),
)


@pytest.fixture
def t5_graph() -> AsGraph:
    return parse_as_rel(T5_TEXT)


def random_graph(rng: np.random.Generator, max_nodes: int = 10) -> AsGraph:
    """Random connected hierarchical AS graph with 4..max_nodes nodes."""
    n = int(rng.integers(4, max_nodes + 1))
    labels = [int(a) for a in rng.choice(np.arange(1, 3 * max_nodes + 1), size=n, replace=False)]
    p2c: list[tuple[int, int]] = []
    p2p: list[tuple[int, int]] = []
    two_roots = n >= 5 and rng.random() < 0.3
    first_child = 2 if two_roots else 1
    if two_roots:
        p2p.append((labels[0], labels[1]))
    for j in range(first_child, n):
        k = 1 + int(j >= 2 and rng.random() < 0.35)
        for p in rng.choice(j, size=min(k, j), replace=False):
            p2c.append((labels[int(p)], labels[j]))
    related = {frozenset(e) for e in p2c} | {frozenset(e) for e in p2p}
    for i in range(n):
        for j in range(i + 1, n):
            pair = frozenset((labels[i], labels[j]))
            if pair not in related and rng.random() < 0.12:
                p2p.append((labels[i], labels[j]))
                related.add(pair)
    return AsGraph.build(p2c, p2p)


def random_attack(
    rng: np.random.Generator,
    graph: AsGraph,
    kind: AttackKind,
    *,
    spoof_victim_origin: bool = False,
):
    """Random scenario on graph: victim, adversary (fresh or existing), targets."""
    nodes = list(graph.nodes_sorted())
    victim = int(nodes[int(rng.integers(len(nodes)))])
    if rng.random() < 0.5:
        adversary = max(nodes) + 1 + int(rng.integers(3))
    else:
        others = [a for a in nodes if a != victim]
        adversary = int(others[int(rng.integers(len(others)))])
    pool = [a for a in nodes if a != adversary]
    if spoof_victim_origin:
        # a spoofed path at the victim itself is loop-rejected; keep targets useful
        pool = [a for a in pool if a != victim] or pool
    n_targets = 1 + int(rng.integers(min(3, len(pool))))
    targets = sorted(int(a) for a in rng.choice(pool, size=n_targets, replace=False))
    communities = None
    if kind is AttackKind.SUB_PREFIX_STEALTHY:
        communities = STEALTH_COMMUNITY_CHOICES[int(rng.integers(len(STEALTH_COMMUNITY_CHOICES)))]
    return build_attack(
        graph,
        victim,
        VICTIM_PREFIX,
        adversary,
        targets,
        kind,
        communities=communities,
        spoof_victim_origin=spoof_victim_origin,
    )
