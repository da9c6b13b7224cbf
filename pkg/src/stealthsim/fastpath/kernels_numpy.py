"""Pure-numpy propagation kernels (reference semantics for the JIT twins).

propagate_kernel computes, for one prefix, each node's best route under
Gao-Rexford preferences from seed rows (origins finalized at distance 1,
announce targets tentative at 2-3). The schedule is level-synchronous:
customer routes climb provider edges in ascending path-length order, one
peer exchange runs from customer-routed nodes, then all routed nodes
descend customer edges. Ties at equal preference and length go to the
lowest next-hop node index (= lowest ASN; nodes are ASN-ordered).

accept is a per-node mask (0 drops every announcement at that node, origins
exempt by the caller forcing their bit on). Outputs are (pref, dist, nh)
arrays; pref 0 means unrouted, nh is a node index (self for origins).

on_path_kernel marks every routed node whose forwarding chain to its origin
crosses the infected mask (the node itself included).
"""
from __future__ import annotations

import numpy as np

PREF_NONE = 0
PREF_PROVIDER = 1
PREF_PEER = 2
PREF_CUSTOMER = 3
PREF_ORIGIN = 4


def _fanout(indptr, idx, frontier):
    """All edges out of the frontier as (targets, exporters) pairs."""
    starts = indptr[frontier]
    counts = indptr[frontier + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, np.int32), np.empty(0, np.int64)
    reps = np.repeat(np.arange(frontier.shape[0]), counts)
    base = np.repeat(np.cumsum(counts) - counts, counts)
    pos = (np.arange(total) - base) + starts[reps]
    return idx[pos], frontier[reps]


def _improve(tpref, tdist, tnh, touched, pref, cand_dist, cand_nh):
    """Overwrite tentative state where the candidate wins the three-way
    comparison. cand_dist/cand_nh are aligned with touched."""
    cur_p = tpref[touched]
    cur_d = tdist[touched]
    cur_h = tnh[touched]
    better = (
        (cur_p < pref)
        | ((cur_p == pref) & (cur_d > cand_dist))
        | ((cur_p == pref) & (cur_d == cand_dist) & (cur_h > cand_nh))
    )
    upd = touched[better]
    tpref[upd] = pref
    tdist[upd] = cand_dist[better] if isinstance(cand_dist, np.ndarray) else cand_dist
    tnh[upd] = cand_nh[better]
    return upd


def propagate_kernel(
    prov_indptr,
    prov_idx,
    peer_indptr,
    peer_idx,
    cust_indptr,
    cust_idx,
    seed_node,
    seed_pref,
    seed_dist,
    seed_nh,
    accept,
):
    n = prov_indptr.shape[0] - 1
    pref = np.zeros(n, np.int8)
    dist = np.zeros(n, np.int32)
    nh = np.full(n, -1, np.int32)
    final = np.zeros(n, bool)
    acc = accept != 0

    tpref = np.zeros(n, np.int8)
    tdist = np.zeros(n, np.int32)
    tnh = np.full(n, -1, np.int32)

    for i in range(seed_node.shape[0]):
        x = int(seed_node[i])
        if not acc[x]:
            continue
        if seed_pref[i] == PREF_ORIGIN:
            final[x] = True
            pref[x] = PREF_ORIGIN
            dist[x] = seed_dist[i]
            nh[x] = seed_nh[i]
    for i in range(seed_node.shape[0]):
        x = int(seed_node[i])
        p, d, h = int(seed_pref[i]), int(seed_dist[i]), int(seed_nh[i])
        if p == PREF_ORIGIN or not acc[x] or final[x]:
            continue
        cur = (-int(tpref[x]), int(tdist[x]) if tpref[x] else 0, int(tnh[x]))
        cand = (-p, d, h)
        if tpref[x] == 0 or cand < cur:
            tpref[x] = p
            tdist[x] = d
            tnh[x] = h

    big = np.iinfo(np.int64).max

    # stage 1: climb provider edges with customer-learned routes
    pending = (~final) & (tpref == PREF_CUSTOMER)
    max_lev = int(tdist[pending].max()) if pending.any() else 0
    lv = 1
    while lv <= max_lev:
        frontier = np.flatnonzero((~final) & (tpref == PREF_CUSTOMER) & (tdist == lv))
        if frontier.size:
            final[frontier] = True
            pref[frontier] = PREF_CUSTOMER
            dist[frontier] = lv
            nh[frontier] = tnh[frontier]
            targets, exporters = _fanout(prov_indptr, prov_idx, frontier)
            ok = acc[targets] & ~final[targets]
            targets, exporters = targets[ok], exporters[ok]
            if targets.size:
                cand = np.full(n, big, np.int64)
                np.minimum.at(cand, targets, exporters)
                touched = np.unique(targets)
                upd = _improve(
                    tpref, tdist, tnh, touched,
                    PREF_CUSTOMER, lv + 1, cand[touched].astype(np.int32),
                )
                if upd.size:
                    max_lev = max(max_lev, lv + 1)
        lv += 1

    # stage 2: one peer exchange from customer-routed nodes
    frontier = np.flatnonzero(final & (pref == PREF_CUSTOMER))
    targets, exporters = _fanout(peer_indptr, peer_idx, frontier)
    ok = acc[targets] & ~final[targets]
    targets, exporters = targets[ok], exporters[ok]
    if targets.size:
        # lexicographic (dist, nh) min packed into one int64 key
        key = np.full(n, big, np.int64)
        packed = (dist[exporters].astype(np.int64) + 1) * (n + 2) + exporters
        np.minimum.at(key, targets, packed)
        touched = np.unique(targets)
        kd = (key[touched] // (n + 2)).astype(np.int32)
        kh = (key[touched] % (n + 2)).astype(np.int32)
        _improve(tpref, tdist, tnh, touched, PREF_PEER, kd, kh)
    newly = (~final) & (tpref == PREF_PEER)
    final[newly] = True
    pref[newly] = PREF_PEER
    dist[newly] = tdist[newly]
    nh[newly] = tnh[newly]

    # stage 3: descend customer edges from every routed node
    exported = np.zeros(n, bool)
    sources = final & (pref != PREF_ORIGIN)
    pending = (~final) & (tpref == PREF_PROVIDER)
    max_lev = 0
    if sources.any():
        max_lev = int(dist[sources].max())
    if pending.any():
        max_lev = max(max_lev, int(tdist[pending].max()))
    lv = 1
    while lv <= max_lev:
        newf = np.flatnonzero((~final) & (tpref == PREF_PROVIDER) & (tdist == lv))
        if newf.size:
            final[newf] = True
            pref[newf] = PREF_PROVIDER
            dist[newf] = lv
            nh[newf] = tnh[newf]
        frontier = np.flatnonzero(final & ~exported & (pref != PREF_ORIGIN) & (dist == lv))
        if frontier.size:
            exported[frontier] = True
            targets, exporters = _fanout(cust_indptr, cust_idx, frontier)
            ok = acc[targets] & ~final[targets]
            targets, exporters = targets[ok], exporters[ok]
            if targets.size:
                cand = np.full(n, big, np.int64)
                np.minimum.at(cand, targets, exporters)
                touched = np.unique(targets)
                upd = _improve(
                    tpref, tdist, tnh, touched,
                    PREF_PROVIDER, lv + 1, cand[touched].astype(np.int32),
                )
                if upd.size:
                    max_lev = max(max_lev, lv + 1)
        lv += 1

    return pref, dist, nh


def on_path_kernel(pref, dist, nh, infected):
    n = pref.shape[0]
    on = np.zeros(n, bool)
    routed = pref != PREF_NONE
    inf = infected != 0
    maxd = int(dist[routed].max()) if routed.any() else 0
    for lv in range(1, maxd + 1):
        at = np.flatnonzero(routed & (dist == lv))
        if at.size:
            on[at] = inf[at] | on[nh[at]]
    return on.astype(np.uint8)
