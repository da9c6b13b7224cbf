"""Data-plane resolution: longest-prefix-match forwarding over control-plane RIBs.

The control plane decides which routes each AS installs; where a packet
actually lands is decided hop by hop, re-resolving the destination against
each AS's RIB. A more-specific hijacked prefix installed mid-path silently
detours traffic that upstream ASes believed was bound for the victim.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

from .routing import LearnedFrom, Prefix, Rib, RibEntry

log = logging.getLogger(__name__)


class Verdict(enum.Enum):
    VICTIM = "victim"
    ADVERSARY = "adversary"
    UNREACHABLE = "unreachable"


@dataclass(frozen=True)
class DeliveryOutcome:
    verdict: Verdict
    path_taken: tuple[int, ...]


def lpm_route(rib: Rib, at: int, dest: int) -> RibEntry | None:
    """The most-specific installed route at ``at`` covering ``dest``."""
    best: RibEntry | None = None
    for prefix, entry in rib.entries_at(at).items():
        if prefix.contains_address(dest):
            if best is None or prefix.length > best.route.prefix.length:
                best = entry
    return best


def forward(rib: Rib, source: int, dest: int) -> DeliveryOutcome:
    """Walk a packet from ``source`` toward ``dest``, one AS at a time.

    Terminates at an origin (Victim or Adversary depending on who originated
    the matched prefix), or Unreachable when no covering route exists or a
    forwarding loop is detected.
    """
    path = [source]
    visited = {source}
    current = source
    while True:
        entry = lpm_route(rib, current, dest)
        if entry is None:
            return DeliveryOutcome(Verdict.UNREACHABLE, tuple(path))
        if entry.learned_from is LearnedFrom.ORIGIN:
            if rib.is_malicious_origin(current, entry.route.prefix):
                return DeliveryOutcome(Verdict.ADVERSARY, tuple(path))
            return DeliveryOutcome(Verdict.VICTIM, tuple(path))
        nxt = entry.next_hop
        if nxt in visited:
            return DeliveryOutcome(Verdict.UNREACHABLE, tuple(path) + (nxt,))
        path.append(nxt)
        visited.add(nxt)
        current = nxt


def compromise_status(
    rib: Rib, source: int, victim_prefix: Prefix, infected: frozenset[int] | set[int]
) -> bool | None:
    """Path-membership compromise test with a three-way answer.

    True: the source's control-plane path for the victim prefix (or the
    source itself) crosses an infected AS. False: it does not. None: the
    source holds no route for the victim prefix and is not itself infected.
    """
    if source in infected:
        return True
    entry = rib.best(source, victim_prefix)
    if entry is None:
        log.debug("AS %s holds no route for %s; not compromised", source, victim_prefix)
        return None
    return any(asn in infected for asn in entry.route.as_path)


def is_compromised(
    rib: Rib, source: int, victim_prefix: Prefix, infected: frozenset[int] | set[int]
) -> bool:
    """True iff the source's as_path for victim_prefix (or the source itself)
    intersects ``infected``. A source with no route reports False."""
    return compromise_status(rib, source, victim_prefix, infected) is True
