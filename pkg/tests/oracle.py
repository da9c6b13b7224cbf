"""Naive full-exchange fixed-point reference for route propagation.

Deliberately written in the most literal style possible, independent of the
library's staged engine: every round, every AS re-derives its best route from
scratch out of whatever its neighbors currently hold, and the process repeats
until nothing changes. Slow and obviously correct; used to cross-check the
production engine and the array kernels on small random graphs.
"""
from __future__ import annotations

from dataclasses import dataclass

from stealthsim.routing import (
    NO_EXPORT,
    NO_EXPORT_SUBCONFED,
    CommunityAction,
    CommunityRegistry,
    LearnedFrom,
    OriginationSpec,
    Prefix,
    RouteAnnouncement,
    rewrite_community,
)
from stealthsim.topology import CUSTOMER, PEER, PROVIDER, AsGraph

_PREFERENCE = {
    LearnedFrom.ORIGIN: 3,
    LearnedFrom.CUSTOMER: 2,
    LearnedFrom.PEER: 1,
    LearnedFrom.PROVIDER: 0,
}
_ROLE_LEARNED = {CUSTOMER: LearnedFrom.CUSTOMER, PEER: LearnedFrom.PEER, PROVIDER: LearnedFrom.PROVIDER}
_STRIPPED_BY_REWRITE = frozenset({NO_EXPORT, NO_EXPORT_SUBCONFED})


@dataclass(frozen=True)
class OracleEntry:
    as_path: tuple[int, ...]
    learned_from: LearnedFrom
    communities: frozenset[int]
    export_locked: bool
    advertise_locked: bool


def _locks_at(reg: CommunityRegistry, asn: int, communities: frozenset[int]) -> tuple[bool, bool]:
    actions = reg.matching_actions(asn, communities)
    no_export = CommunityAction.NO_EXPORT in actions or CommunityAction.NO_EXPORT_SUBCONFED in actions
    no_advertise = CommunityAction.NO_ADVERTISE in actions
    return no_export, no_advertise


def _ingress(
    receiver: int,
    heard_path: tuple[int, ...],
    communities: frozenset[int],
    learned: LearnedFrom,
    prefix: Prefix,
    reg: CommunityRegistry,
    rov,
    rewrite_at: frozenset[int],
) -> OracleEntry | None:
    """One candidate through the receive pipeline, or None if rejected."""
    if receiver in heard_path:
        return None
    if rov is not None and rov.rejects(receiver, RouteAnnouncement(prefix, heard_path, communities)):
        return None
    if receiver in rewrite_at and communities & _STRIPPED_BY_REWRITE:
        communities = (communities - _STRIPPED_BY_REWRITE) | {rewrite_community(receiver)}
    export_locked, advertise_locked = _locks_at(reg, receiver, communities)
    return OracleEntry(
        (receiver,) + heard_path, learned, communities, export_locked, advertise_locked
    )


def _rank(entry: OracleEntry) -> tuple[int, int, int]:
    # candidate's next hop is the AS it was heard from: second path element
    return (-_PREFERENCE[entry.learned_from], len(entry.as_path), entry.as_path[1])


def _wants_to_export(holder: int, entry: OracleEntry, to_role: str, rewrite_at) -> bool:
    if entry.export_locked or entry.advertise_locked:
        return False
    if holder in rewrite_at and rewrite_community(holder) in entry.communities:
        return False
    if entry.learned_from in (LearnedFrom.ORIGIN, LearnedFrom.CUSTOMER):
        return True
    return to_role == CUSTOMER


def oracle_propagate(
    graph: AsGraph,
    originations: list[OriginationSpec],
    reg: CommunityRegistry | None = None,
    rov=None,
    rewrite_at: frozenset[int] = frozenset(),
) -> dict[Prefix, dict[int, OracleEntry]]:
    reg = reg if reg is not None else CommunityRegistry()
    result: dict[Prefix, dict[int, OracleEntry]] = {}
    for prefix in sorted({o.prefix for o in originations}):
        specs = [o for o in originations if o.prefix == prefix]
        result[prefix] = _fixed_point(graph, prefix, specs, reg, rov, rewrite_at)
    return result


def _fixed_point(graph, prefix, specs, reg, rov, rewrite_at) -> dict[int, OracleEntry]:
    best: dict[int, OracleEntry] = {}
    for spec in specs:
        export_locked, advertise_locked = _locks_at(reg, spec.origin, spec.communities)
        best[spec.origin] = OracleEntry(
            (spec.origin,), LearnedFrom.ORIGIN, spec.communities, export_locked, advertise_locked
        )

    # announcements the origins push regardless of their own entry's locks
    injected: dict[int, list[tuple[tuple[int, ...], frozenset[int], int]]] = {}
    for spec in specs:
        targets = graph.neighbors(spec.origin) if spec.announce_to is None else spec.announce_to
        for target in targets:
            injected.setdefault(target, []).append(
                (spec.exported_path(), spec.communities, spec.origin)
            )

    origins = {spec.origin for spec in specs}
    for _ in range(4 * len(graph) + 16):
        nxt: dict[int, OracleEntry] = {a: e for a, e in best.items() if a in origins}
        for asn in graph.nodes_sorted():
            if asn in origins:
                continue
            candidates: list[OracleEntry] = []
            for heard_path, communities, sender in injected.get(asn, ()):
                learned = _ROLE_LEARNED[graph.role_of(asn, sender)]
                cand = _ingress(asn, heard_path, communities, learned, prefix, reg, rov, rewrite_at)
                if cand is not None:
                    candidates.append(cand)
            for nb in graph.neighbors(asn):
                if nb in origins:
                    continue  # an origin's exports are exactly its announce list
                held = best.get(nb)
                if held is None:
                    continue
                role_back = graph.role_of(nb, asn)
                if not _wants_to_export(nb, held, role_back, rewrite_at):
                    continue
                learned = _ROLE_LEARNED[graph.role_of(asn, nb)]
                cand = _ingress(
                    asn, held.as_path, held.communities, learned, prefix, reg, rov, rewrite_at
                )
                if cand is not None:
                    candidates.append(cand)
            if candidates:
                nxt[asn] = min(candidates, key=_rank)
        if nxt == best:
            return best
        best = nxt
    raise RuntimeError("oracle failed to converge")
