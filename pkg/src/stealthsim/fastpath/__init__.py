"""Array-based propagation for experiment-scale workloads.

Two interchangeable kernel backends ship: a numba-JIT one (default) and a
pure-numpy one. Set STEALTHSIM_NO_NUMBA=1 to force the numpy path; the numpy
path is also the automatic fallback when numba is unavailable. Both produce
bit-identical outputs (benchmarks/bench_kernels.py cross-checks them).
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass

import numpy as np

from .csr import (
    PREF_CUSTOMER,
    PREF_NONE,
    PREF_ORIGIN,
    PREF_PEER,
    PREF_PROVIDER,
    CsrTopology,
    FastOrigination,
    build_seeds,
)

log = logging.getLogger(__name__)

_FORCE_NUMPY = os.environ.get("STEALTHSIM_NO_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
}

if _FORCE_NUMPY:
    from . import kernels_numpy as _kernels

    _BACKEND = "numpy"
else:
    try:
        from . import kernels_numba as _kernels  # type: ignore[no-redef]

        _BACKEND = "numba"
    except ImportError:  # numba not installed; degrade silently
        from . import kernels_numpy as _kernels  # type: ignore[no-redef]

        _BACKEND = "numpy"
        log.info("numba unavailable, using numpy kernels")


def backend_name() -> str:
    return _BACKEND


@dataclass(frozen=True)
class PathState:
    """Per-node best-route arrays for one prefix.

    pref: 0 unrouted, 1 provider-learned, 2 peer, 3 customer, 4 origin.
    dist: control-plane path length (spoofed origins add one hop).
    next_hop: node index forwarded to (self for origins, -1 unrouted).
    """

    pref: np.ndarray
    dist: np.ndarray
    next_hop: np.ndarray

    def routed_mask(self) -> np.ndarray:
        return self.pref != PREF_NONE

    def path_indices(self, i: int) -> list[int]:
        """Node chain from i to its origin; empty when unrouted."""
        if self.pref[i] == PREF_NONE:
            return []
        chain = [i]
        while self.pref[chain[-1]] != PREF_ORIGIN:
            nxt = int(self.next_hop[chain[-1]])
            if nxt in chain:
                raise RuntimeError(f"next-hop cycle at node {nxt}")
            chain.append(nxt)
        return chain


def propagate_fast(
    csr: CsrTopology,
    originations: list[FastOrigination] | tuple[FastOrigination, ...],
    accept: np.ndarray | None = None,
) -> PathState:
    """Propagate one prefix's originations over the CSR graph.

    accept masks which nodes admit announcements (ROV rejection); origin
    nodes are always forced on: an origin installs its own route.
    """
    seed_node, seed_pref, seed_dist, seed_nh = build_seeds(csr, originations)
    n = len(csr)
    if accept is None:
        acc = np.ones(n, np.uint8)
    else:
        acc = accept.astype(np.uint8).copy()
        for spec in originations:
            acc[csr.idx_of(spec.origin)] = 1
    pref, dist, nh = _kernels.propagate_kernel(
        csr.prov_indptr,
        csr.prov_idx,
        csr.peer_indptr,
        csr.peer_idx,
        csr.cust_indptr,
        csr.cust_idx,
        seed_node,
        seed_pref,
        seed_dist,
        seed_nh,
        acc,
    )
    return PathState(pref, dist, nh)


def infected_on_path(state: PathState, infected_mask: np.ndarray) -> np.ndarray:
    """Boolean mask: routed nodes whose chain to the origin (themselves
    included) crosses the infected mask."""
    out = _kernels.on_path_kernel(
        state.pref, state.dist, state.next_hop, infected_mask.astype(np.uint8)
    )
    return out != 0


def warmup() -> None:
    """Trigger JIT compilation on a toy graph so thread pools never race
    the compiler. Cheap no-op on the numpy backend."""
    from ..topology import AsGraph

    g = AsGraph.build([(1, 2)], [(1, 3)])
    csr = CsrTopology.from_graph(g)
    state = propagate_fast(csr, [FastOrigination(2)])
    infected_on_path(state, np.zeros(len(csr), np.uint8))
