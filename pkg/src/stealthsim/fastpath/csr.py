"""Array form of the AS graph and of originations, shared by both kernels.

Nodes are renumbered 0..n-1 in ascending ASN order, so comparing node
indices is the same as comparing ASNs; the kernels' next-hop tie-break
relies on this. Preference codes (kernel-local, not the routing enum):
0 = unrouted, 1 = provider-learned, 2 = peer, 3 = customer, 4 = origin.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..topology import AsGraph

PREF_NONE = 0
PREF_PROVIDER = 1
PREF_PEER = 2
PREF_CUSTOMER = 3
PREF_ORIGIN = 4


def _csr(order: tuple[int, ...], index: dict[int, int], rows) -> tuple[np.ndarray, np.ndarray]:
    indptr = np.zeros(len(order) + 1, np.int64)
    for i, asn in enumerate(order):
        indptr[i + 1] = indptr[i] + len(rows[asn])
    idx = np.fromiter(
        (index[b] for asn in order for b in rows[asn]), np.int32, count=int(indptr[-1])
    )
    return indptr, idx


@dataclass(frozen=True)
class CsrTopology:
    asns: np.ndarray  # int64, ascending
    index: dict[int, int]
    prov_indptr: np.ndarray
    prov_idx: np.ndarray  # providers of node i
    peer_indptr: np.ndarray
    peer_idx: np.ndarray
    cust_indptr: np.ndarray
    cust_idx: np.ndarray

    @classmethod
    def from_graph(cls, g: AsGraph) -> "CsrTopology":
        order = g.nodes_sorted()
        index = {a: i for i, a in enumerate(order)}
        prov_indptr, prov_idx = _csr(order, index, g.providers)
        peer_indptr, peer_idx = _csr(order, index, g.peers)
        cust_indptr, cust_idx = _csr(order, index, g.customers)
        return cls(
            asns=np.array(order, np.int64),
            index=index,
            prov_indptr=prov_indptr,
            prov_idx=prov_idx,
            peer_indptr=peer_indptr,
            peer_idx=peer_idx,
            cust_indptr=cust_indptr,
            cust_idx=cust_idx,
        )

    def __len__(self) -> int:
        return len(self.asns)

    def idx_of(self, asn: int) -> int:
        try:
            return self.index[asn]
        except KeyError:
            raise ConfigError(f"unknown AS {asn}") from None

    def _row(self, indptr: np.ndarray, idx: np.ndarray, i: int) -> np.ndarray:
        return idx[indptr[i] : indptr[i + 1]]

    def providers_of(self, i: int) -> np.ndarray:
        return self._row(self.prov_indptr, self.prov_idx, i)

    def peers_of(self, i: int) -> np.ndarray:
        return self._row(self.peer_indptr, self.peer_idx, i)

    def customers_of(self, i: int) -> np.ndarray:
        return self._row(self.cust_indptr, self.cust_idx, i)


@dataclass(frozen=True)
class FastOrigination:
    """An origination lowered for the kernels: communities and defenses are
    expressed by the caller through the accept mask instead."""

    origin: int  # ASN
    announce_to: tuple[int, ...] | None = None  # ASNs; None = all neighbors
    spoof_origin: int | None = None


def build_seeds(
    csr: CsrTopology, originations: list[FastOrigination] | tuple[FastOrigination, ...]
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Lower originations to kernel seed rows (node, pref, dist, next hop).

    The origin row has pref 4 and dist 1. Each announce target gets a
    tentative row at dist 2 (3 when the exported path carries a spoofed
    origin) with the preference its relationship to the origin dictates.
    A target equal to the spoofed origin is skipped: it would reject the
    route by loop detection.
    """
    nodes: list[int] = []
    prefs: list[int] = []
    dists: list[int] = []
    nhs: list[int] = []
    for spec in originations:
        oi = csr.idx_of(spec.origin)
        nodes.append(oi)
        prefs.append(PREF_ORIGIN)
        dists.append(1)
        nhs.append(oi)

        base_dist = 3 if spec.spoof_origin is not None else 2
        # role of the origin at each target decides the target's preference
        upward = csr.providers_of(oi)  # targets that treat origin as customer
        lateral = csr.peers_of(oi)
        downward = csr.customers_of(oi)
        if spec.announce_to is None:
            chosen = [
                (int(t), PREF_CUSTOMER) for t in upward
            ] + [(int(t), PREF_PEER) for t in lateral] + [
                (int(t), PREF_PROVIDER) for t in downward
            ]
        else:
            up, lat, down = set(upward.tolist()), set(lateral.tolist()), set(downward.tolist())
            chosen = []
            for asn in spec.announce_to:
                ti = csr.idx_of(asn)
                if ti in up:
                    chosen.append((ti, PREF_CUSTOMER))
                elif ti in lat:
                    chosen.append((ti, PREF_PEER))
                elif ti in down:
                    chosen.append((ti, PREF_PROVIDER))
                else:
                    raise ConfigError(f"AS {asn} is not adjacent to AS {spec.origin}")
        for ti, pref in chosen:
            if spec.spoof_origin is not None and int(csr.asns[ti]) == spec.spoof_origin:
                continue
            nodes.append(ti)
            prefs.append(pref)
            dists.append(base_dist)
            nhs.append(oi)
    return (
        np.array(nodes, np.int32),
        np.array(prefs, np.int8),
        np.array(dists, np.int32),
        np.array(nhs, np.int32),
    )
