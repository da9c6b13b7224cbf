"""JIT-compiled propagation kernels.

Same contract as kernels_numpy; see that module for the reference semantics.
Both kernels release the GIL so victim evaluations can run on a thread pool.
"""
from __future__ import annotations

import numpy as np
from numba import njit

PREF_NONE = 0
PREF_PROVIDER = 1
PREF_PEER = 2
PREF_CUSTOMER = 3
PREF_ORIGIN = 4


@njit(cache=True, nogil=True)
def _improves(cur_p, cur_d, cur_h, p, d, h):
    if p != cur_p:
        return p > cur_p
    if d != cur_d:
        return d < cur_d
    return h < cur_h


@njit(cache=True, nogil=True)
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
    final = np.zeros(n, np.uint8)

    tpref = np.zeros(n, np.int8)
    tdist = np.zeros(n, np.int32)
    tnh = np.full(n, -1, np.int32)

    for i in range(seed_node.shape[0]):
        x = seed_node[i]
        if seed_pref[i] == PREF_ORIGIN and accept[x] != 0:
            final[x] = 1
            pref[x] = PREF_ORIGIN
            dist[x] = seed_dist[i]
            nh[x] = seed_nh[i]
    for i in range(seed_node.shape[0]):
        x = seed_node[i]
        if seed_pref[i] == PREF_ORIGIN or accept[x] == 0 or final[x] == 1:
            continue
        if _improves(tpref[x], tdist[x], tnh[x], seed_pref[i], seed_dist[i], seed_nh[i]):
            tpref[x] = seed_pref[i]
            tdist[x] = seed_dist[i]
            tnh[x] = seed_nh[i]

    maxlev = n + 4
    cap = prov_idx.shape[0] + cust_idx.shape[0] + seed_node.shape[0] + n + 8
    item_node = np.empty(cap, np.int32)
    item_next = np.empty(cap, np.int32)
    level_head = np.full(maxlev, -1, np.int32)
    n_items = 0

    # stage 1: customer routes climb provider edges, shortest level first
    for x in range(n):
        if final[x] == 0 and tpref[x] == PREF_CUSTOMER:
            lv = tdist[x]
            item_node[n_items] = x
            item_next[n_items] = level_head[lv]
            level_head[lv] = n_items
            n_items += 1
    for lv in range(maxlev - 1):
        it = level_head[lv]
        while it != -1:
            x = item_node[it]
            it = item_next[it]
            if final[x] == 1 or tpref[x] != PREF_CUSTOMER or tdist[x] != lv:
                continue
            final[x] = 1
            pref[x] = PREF_CUSTOMER
            dist[x] = lv
            nh[x] = tnh[x]
            for j in range(prov_indptr[x], prov_indptr[x + 1]):
                p = prov_idx[j]
                if final[p] == 1 or accept[p] == 0:
                    continue
                if _improves(tpref[p], tdist[p], tnh[p], PREF_CUSTOMER, lv + 1, x):
                    tpref[p] = PREF_CUSTOMER
                    tdist[p] = lv + 1
                    tnh[p] = x
                    item_node[n_items] = p
                    item_next[n_items] = level_head[lv + 1]
                    level_head[lv + 1] = n_items
                    n_items += 1

    # stage 2: one peer exchange from customer-routed nodes
    for x in range(n):
        if final[x] == 1 and pref[x] == PREF_CUSTOMER:
            d = dist[x]
            for j in range(peer_indptr[x], peer_indptr[x + 1]):
                q = peer_idx[j]
                if final[q] == 1 or accept[q] == 0:
                    continue
                if _improves(tpref[q], tdist[q], tnh[q], PREF_PEER, d + 1, x):
                    tpref[q] = PREF_PEER
                    tdist[q] = d + 1
                    tnh[q] = x
    for x in range(n):
        if final[x] == 0 and tpref[x] == PREF_PEER:
            final[x] = 1
            pref[x] = PREF_PEER
            dist[x] = tdist[x]
            nh[x] = tnh[x]

    # stage 3: everything routed descends customer edges
    n_items = 0
    for lv in range(maxlev):
        level_head[lv] = -1
    for x in range(n):
        lv = -1
        if final[x] == 1 and pref[x] != PREF_ORIGIN:
            lv = dist[x]
        elif final[x] == 0 and tpref[x] == PREF_PROVIDER:
            lv = tdist[x]
        if lv >= 0:
            item_node[n_items] = x
            item_next[n_items] = level_head[lv]
            level_head[lv] = n_items
            n_items += 1
    exported = np.zeros(n, np.uint8)
    for lv in range(maxlev - 1):
        it = level_head[lv]
        while it != -1:
            x = item_node[it]
            it = item_next[it]
            if exported[x] == 1:
                continue
            if final[x] == 1:
                if dist[x] != lv:
                    continue
            else:
                if tpref[x] != PREF_PROVIDER or tdist[x] != lv:
                    continue
                final[x] = 1
                pref[x] = PREF_PROVIDER
                dist[x] = lv
                nh[x] = tnh[x]
            exported[x] = 1
            for j in range(cust_indptr[x], cust_indptr[x + 1]):
                c = cust_idx[j]
                if final[c] == 1 or accept[c] == 0:
                    continue
                if _improves(tpref[c], tdist[c], tnh[c], PREF_PROVIDER, lv + 1, x):
                    tpref[c] = PREF_PROVIDER
                    tdist[c] = lv + 1
                    tnh[c] = x
                    item_node[n_items] = c
                    item_next[n_items] = level_head[lv + 1]
                    level_head[lv + 1] = n_items
                    n_items += 1

    return pref, dist, nh


@njit(cache=True, nogil=True)
def on_path_kernel(pref, dist, nh, infected):
    n = pref.shape[0]
    on = np.zeros(n, np.uint8)
    order = np.argsort(dist)
    for k in range(n):
        x = order[k]
        if pref[x] == PREF_NONE:
            continue
        if infected[x] != 0 or on[nh[x]] != 0:
            on[x] = 1
    return on
