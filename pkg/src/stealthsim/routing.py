"""BGP route propagation under Gao-Rexford policies with community semantics.

Announcements for different prefixes propagate independently. Preference is
Customer > Peer > Provider, then shortest AS path, then lowest next-hop ASN.
Export is valley-free: routes learned from customers (or self-originated)
export to every neighbor; routes learned from peers or providers export only
to customers. A route whose communities carry an effective no-export or
no-advertise action at an AS is installed there but exported to no neighbor.
"""
from __future__ import annotations

import enum
import heapq
import ipaddress
from dataclasses import dataclass
from typing import Iterable, Mapping, Protocol, Sequence

from . import topology as topo
from .errors import ConfigError, SimulationError
from .topology import AsGraph

# Well-known community values, bit-exact per RFC 1997.
NO_EXPORT = 0xFFFFFF01
NO_ADVERTISE = 0xFFFFFF02
NO_EXPORT_SUBCONFED = 0xFFFFFF03
_NO_EXPORT_WELLKNOWN = frozenset({NO_EXPORT, NO_EXPORT_SUBCONFED})

# low half of the AS-scoped community a rewrite defense substitutes at ingress
REWRITE_COMMUNITY_LOW = 123


def make_community(high: int, low: int) -> int:
    """Pack two 16-bit halves into a 32-bit community value."""
    if not (0 <= high <= 0xFFFF and 0 <= low <= 0xFFFF):
        raise ConfigError(f"community halves out of range: {high}:{low}")
    return (high << 16) | low


def parse_community(text: str) -> int:
    """Parse ``high:low`` text form into a community value."""
    try:
        high_s, low_s = text.split(":")
        return make_community(int(high_s), int(low_s))
    except (ValueError, ConfigError):
        raise ConfigError(f"bad community {text!r}, expected 'high:low'") from None


def format_community(value: int) -> str:
    return f"{value >> 16}:{value & 0xFFFF}"


@dataclass(frozen=True, order=True)
class Prefix:
    """An IPv4 prefix: a base address and a length, host bits zero."""

    base: int
    length: int

    def __post_init__(self):
        if not 0 <= self.length <= 32:
            raise ConfigError(f"prefix length {self.length} out of range")
        if not 0 <= self.base < 2**32:
            raise ConfigError("prefix base out of range")
        if self.length < 32 and self.base & ((1 << (32 - self.length)) - 1):
            raise ConfigError(f"host bits set below /{self.length}")

    @staticmethod
    def parse(text: str) -> "Prefix":
        if "/" not in text:
            raise ConfigError(f"bad prefix {text!r}: missing /length")
        try:
            net = ipaddress.IPv4Network(text, strict=True)
        except ValueError as exc:
            raise ConfigError(f"bad prefix {text!r}: {exc}") from None
        return Prefix(int(net.network_address), net.prefixlen)

    def __str__(self) -> str:
        return f"{ipaddress.IPv4Address(self.base)}/{self.length}"

    def contains(self, other: "Prefix") -> bool:
        """True iff ``other`` is this prefix or a more-specific inside it."""
        if other.length < self.length:
            return False
        if self.length == 0:
            return True
        shift = 32 - self.length
        return (other.base >> shift) == (self.base >> shift)

    def contains_address(self, addr: int) -> bool:
        if self.length == 0:
            return True
        shift = 32 - self.length
        return (addr >> shift) == (self.base >> shift)

    def first_subprefix(self) -> "Prefix":
        """The lower half at length+1."""
        if self.length >= 32:
            raise ConfigError(f"no sub-prefix exists below {self}")
        return Prefix(self.base, self.length + 1)


def parse_address(text: str) -> int:
    try:
        return int(ipaddress.IPv4Address(text))
    except ValueError as exc:
        raise ConfigError(f"bad address {text!r}: {exc}") from None


class CommunityAction(enum.IntEnum):
    """Actions a registry may bind to a community, ascending strictness."""

    NO_EXPORT_SUBCONFED = 1
    NO_EXPORT = 2
    NO_ADVERTISE = 3


@dataclass(frozen=True)
class CommunityRule:
    """Binds a community value to an action, optionally scoped to one AS.

    A scoped rule acts only when the named AS interprets the route; every
    other AS transits the community transparently. ``scope=None`` is
    well-known (acts everywhere).
    """

    community: int
    action: CommunityAction
    scope: int | None = None


_WELLKNOWN_RULES = (
    CommunityRule(NO_EXPORT, CommunityAction.NO_EXPORT),
    CommunityRule(NO_ADVERTISE, CommunityAction.NO_ADVERTISE),
    CommunityRule(NO_EXPORT_SUBCONFED, CommunityAction.NO_EXPORT_SUBCONFED),
)


class CommunityRegistry:
    """Maps (scope, community) pairs to actions.

    The three RFC 1997 well-known entries are always present and cannot be
    overridden.
    """

    def __init__(self, rules: Iterable[CommunityRule] = ()):
        self._by_community: dict[int, tuple[CommunityRule, ...]] = {}
        for rule in (*_WELLKNOWN_RULES, *rules):
            have = self._by_community.get(rule.community, ())
            if any(r.scope == rule.scope for r in have):
                raise ConfigError(
                    f"duplicate registry entry for {format_community(rule.community)}"
                    f" at scope {rule.scope}"
                )
            self._by_community[rule.community] = have + (rule,)

    @classmethod
    def wellknown(cls) -> "CommunityRegistry":
        return cls()

    def matching_actions(self, at: int, communities: frozenset[int]) -> set[CommunityAction]:
        """All actions triggered at AS ``at`` by the given community set."""
        acts = set()
        for value in communities:
            for rule in self._by_community.get(value, ()):
                if rule.scope is None or rule.scope == at:
                    acts.add(rule.action)
        return acts

    def effective_action(self, at: int, communities: frozenset[int]) -> CommunityAction | None:
        """The strictest action effective at ``at``, or None.

        Strictness: NoAdvertise > NoExport > NoExportSubconfed. AS-scoped
        values held by other ASes yield nothing (transparent transit).
        """
        acts = self.matching_actions(at, communities)
        return max(acts) if acts else None


def effective_action(
    reg: CommunityRegistry, at: int, communities: frozenset[int]
) -> CommunityAction | None:
    return reg.effective_action(at, communities)


class LearnedFrom(enum.IntEnum):
    """Route provenance; numeric order is the preference order."""

    PROVIDER = 0
    PEER = 1
    CUSTOMER = 2
    ORIGIN = 3


_ROLE_TO_LEARNED = {
    topo.CUSTOMER: LearnedFrom.CUSTOMER,
    topo.PEER: LearnedFrom.PEER,
    topo.PROVIDER: LearnedFrom.PROVIDER,
}


@dataclass(frozen=True)
class RouteAnnouncement:
    """A BGP announcement: prefix, AS path (origin last), and communities."""

    prefix: Prefix
    as_path: tuple[int, ...]
    communities: frozenset[int] = frozenset()

    def __post_init__(self):
        if not self.as_path:
            raise ConfigError("as_path must be non-empty")
        if len(set(self.as_path)) != len(self.as_path):
            raise ConfigError(f"as_path has a loop: {list(self.as_path)}")

    @property
    def origin(self) -> int:
        return self.as_path[-1]


@dataclass(frozen=True)
class RibEntry:
    """A selected route plus how it was learned and what it may not do.

    export_locked: the route carries a no-export action effective at this AS.
    advertise_locked: NoAdvertise is effective here.
    """

    route: RouteAnnouncement
    learned_from: LearnedFrom
    export_locked: bool = False
    advertise_locked: bool = False

    def __post_init__(self):
        if self.learned_from is LearnedFrom.ORIGIN and len(self.route.as_path) != 1:
            raise ConfigError("origin entries carry the single-element path [self]")

    @property
    def next_hop(self) -> int:
        """The neighbor this AS forwards to (self for origin entries)."""
        path = self.route.as_path
        return path[1] if len(path) > 1 else path[0]


@dataclass(frozen=True)
class OriginationSpec:
    """One AS originating one prefix.

    announce_to=None means all neighbors. spoof_origin, when set, appends
    that ASN to the exported path so receivers see it as the route's origin;
    the spoofed AS itself then rejects the route by loop detection.
    malicious marks adversarial originations so data-plane delivery at this
    origin is labeled Adversary.
    """

    origin: int
    prefix: Prefix
    communities: frozenset[int] = frozenset()
    announce_to: tuple[int, ...] | None = None
    spoof_origin: int | None = None
    malicious: bool = False

    def __post_init__(self):
        if self.spoof_origin == self.origin:
            raise ConfigError("spoof_origin must differ from the true origin")

    def exported_path(self) -> tuple[int, ...]:
        if self.spoof_origin is None:
            return (self.origin,)
        return (self.origin, self.spoof_origin)


class Rib:
    """Per-AS selected routes: at most one entry per (AS, prefix)."""

    def __init__(self):
        self._tables: dict[int, dict[Prefix, RibEntry]] = {}
        self._malicious_origins: set[tuple[int, Prefix]] = set()

    def install(self, asn: int, entry: RibEntry) -> None:
        table = self._tables.setdefault(asn, {})
        prefix = entry.route.prefix
        if prefix in table:
            raise SimulationError(f"second entry for ({asn}, {prefix})")
        if (entry.learned_from is LearnedFrom.ORIGIN) != (entry.route.as_path == (asn,)):
            raise SimulationError(f"origin invariant violated at AS {asn}: {entry}")
        table[prefix] = entry

    def mark_malicious_origin(self, asn: int, prefix: Prefix) -> None:
        self._malicious_origins.add((asn, prefix))

    def is_malicious_origin(self, asn: int, prefix: Prefix) -> bool:
        return (asn, prefix) in self._malicious_origins

    def best(self, asn: int, prefix: Prefix) -> RibEntry | None:
        return self._tables.get(asn, {}).get(prefix)

    def entries_at(self, asn: int) -> Mapping[Prefix, RibEntry]:
        return self._tables.get(asn, {})

    def holders(self, prefix: Prefix) -> list[int]:
        """ASes holding an entry for exactly this prefix, ascending."""
        return sorted(a for a, t in self._tables.items() if prefix in t)

    def prefixes(self) -> list[Prefix]:
        seen = set()
        for table in self._tables.values():
            seen.update(table)
        return sorted(seen)

    def items(self):
        for asn in sorted(self._tables):
            for prefix in sorted(self._tables[asn]):
                yield (asn, prefix), self._tables[asn][prefix]


class RovPolicyLike(Protocol):
    def rejects(self, at: int, ann: RouteAnnouncement) -> bool: ...


def export_allowed(entry: RibEntry, to_role: str) -> bool:
    """May this entry be exported to a neighbor in ``to_role``?

    Always false when export_locked or advertise_locked; otherwise routes
    learned from customers (or self-originated) export everywhere and
    anything exports to a customer.
    """
    if entry.export_locked or entry.advertise_locked:
        return False
    if entry.learned_from in (LearnedFrom.ORIGIN, LearnedFrom.CUSTOMER):
        return True
    return to_role == topo.CUSTOMER


def _candidate_key(learned_from: int, path_len: int, next_hop: int) -> tuple[int, int, int]:
    # lexicographic min = preferred: preference desc, path length asc, next hop asc
    return (-int(learned_from), path_len, next_hop)


def select_best(candidates: Sequence[tuple[RouteAnnouncement, LearnedFrom]]) -> RibEntry:
    """Pick the winner among as-heard candidates for one prefix.

    The next hop of an as-heard candidate is the head of its path.
    """
    if not candidates:
        raise ConfigError("select_best needs at least one candidate")
    prefixes = {ann.prefix for ann, _ in candidates}
    if len(prefixes) != 1:
        raise ConfigError(f"candidates span multiple prefixes: {sorted(map(str, prefixes))}")
    best_ann, best_lf = min(
        candidates, key=lambda c: _candidate_key(c[1], len(c[0].as_path), c[0].as_path[0])
    )
    return RibEntry(best_ann, best_lf)


def _locks(reg: CommunityRegistry, at: int, communities: frozenset[int]) -> tuple[bool, bool]:
    acts = reg.matching_actions(at, communities)
    export_locked = (
        CommunityAction.NO_EXPORT in acts or CommunityAction.NO_EXPORT_SUBCONFED in acts
    )
    advertise_locked = CommunityAction.NO_ADVERTISE in acts
    return export_locked, advertise_locked


def rewrite_community(asn: int) -> int:
    """The AS-scoped community a rewrite defense substitutes for NO_EXPORT."""
    if asn > 0xFFFF:
        # 32-bit ASNs cannot appear in a classic 16:16 community
        raise ConfigError(f"rewrite defense needs a 16-bit ASN, got {asn}")
    return make_community(asn, REWRITE_COMMUNITY_LOW)


class _PrefixPropagation:
    """Single-prefix Gao-Rexford fixed point via best-first finalization.

    The conceptual schedule is the standard three stages: routes climb
    customer->provider edges, cross at most one peer edge, then descend
    provider->customer edges. Within the climbing and descending stages,
    entries finalize in ascending path-length order with the next-hop
    tie-break applied among equals, so every node finalizes on its true best
    route and no withdrawal pass is needed. Locked entries finalize but never
    export.
    """

    def __init__(
        self,
        graph: AsGraph,
        prefix: Prefix,
        specs: Sequence[OriginationSpec],
        reg: CommunityRegistry,
        rov: RovPolicyLike | None,
        rewrite_at: frozenset[int],
    ):
        self.graph = graph
        self.prefix = prefix
        self.reg = reg
        self.rov = rov
        self.rewrite_at = rewrite_at
        self.final: dict[int, RibEntry] = {}
        self.tent: dict[int, RibEntry] = {}
        self.tent_key: dict[int, tuple[int, int, int]] = {}
        self._install_origins(specs)
        self._inject(specs)

    def _install_origins(self, specs: Sequence[OriginationSpec]) -> None:
        for spec in specs:
            route = RouteAnnouncement(self.prefix, (spec.origin,), spec.communities)
            exp, adv = _locks(self.reg, spec.origin, spec.communities)
            self.final[spec.origin] = RibEntry(route, LearnedFrom.ORIGIN, exp, adv)

    def _inject(self, specs: Sequence[OriginationSpec]) -> None:
        # the origin's own announce_to exports bypass its locks deliberately
        for spec in specs:
            ann = RouteAnnouncement(self.prefix, spec.exported_path(), spec.communities)
            targets = (
                self.graph.neighbors(spec.origin)
                if spec.announce_to is None
                else spec.announce_to
            )
            for target in targets:
                self._offer(ann, spec.origin, target)

    def _offer(self, ann: RouteAnnouncement, sender: int, receiver: int) -> bool:
        """Run the ingress pipeline at receiver; keep the candidate if it
        beats the current tentative one. Returns True when tentative improved."""
        if receiver in self.final:
            return False
        if receiver in ann.as_path:
            return False
        if self.rov is not None and self.rov.rejects(receiver, ann):
            return False
        communities = ann.communities
        if receiver in self.rewrite_at and communities & _NO_EXPORT_WELLKNOWN:
            communities = (communities - _NO_EXPORT_WELLKNOWN) | {rewrite_community(receiver)}
        role = self.graph.role_of(receiver, sender)
        if role is None:
            raise ConfigError(f"AS {sender} is not adjacent to AS {receiver}")
        learned = _ROLE_TO_LEARNED[role]
        path = (receiver,) + ann.as_path
        key = _candidate_key(learned, len(path), sender)
        held = self.tent_key.get(receiver)
        if held is not None and held <= key:
            return False
        exp, adv = _locks(self.reg, receiver, communities)
        route = RouteAnnouncement(self.prefix, path, communities)
        self.tent[receiver] = RibEntry(route, learned, exp, adv)
        self.tent_key[receiver] = key
        return True

    def _finalize(self, asn: int) -> RibEntry:
        entry = self.tent.pop(asn)
        del self.tent_key[asn]
        self.final[asn] = entry
        return entry

    def _may_export(self, asn: int, entry: RibEntry) -> bool:
        if entry.export_locked or entry.advertise_locked:
            return False
        if asn in self.rewrite_at and rewrite_community(asn) in entry.route.communities:
            # egress half of the rewrite defense: containment is preserved
            return False
        return True

    def run(self) -> dict[int, RibEntry]:
        self._climb_customer_routes()
        self._peer_exchange()
        self._descend_provider_routes()
        if self.tent:
            raise SimulationError(f"unfinalized candidates remain: {sorted(self.tent)}")
        return self.final

    def _path_len(self, asn: int) -> int:
        return len(self.tent[asn].route.as_path)

    def _climb_customer_routes(self) -> None:
        heap = [
            (self._path_len(a), a)
            for a, e in self.tent.items()
            if e.learned_from is LearnedFrom.CUSTOMER
        ]
        heapq.heapify(heap)
        while heap:
            dist, asn = heapq.heappop(heap)
            entry = self.tent.get(asn)
            if (
                asn in self.final
                or entry is None
                or entry.learned_from is not LearnedFrom.CUSTOMER
                or len(entry.route.as_path) != dist
            ):
                continue
            entry = self._finalize(asn)
            if not self._may_export(asn, entry):
                continue
            for provider in self.graph.providers[asn]:
                if self._offer(entry.route, asn, provider):
                    heapq.heappush(heap, (dist + 1, provider))

    def _peer_exchange(self) -> None:
        for asn in sorted(self.final):
            entry = self.final[asn]
            if entry.learned_from is not LearnedFrom.CUSTOMER:
                continue
            if not self._may_export(asn, entry):
                continue
            for peer in self.graph.peers[asn]:
                self._offer(entry.route, asn, peer)
        for asn in sorted(self.tent):
            if self.tent[asn].learned_from is LearnedFrom.PEER:
                self._finalize(asn)

    def _descend_provider_routes(self) -> None:
        heap = []
        for asn, entry in self.final.items():
            if entry.learned_from is not LearnedFrom.ORIGIN:
                heap.append((len(entry.route.as_path), asn))
        for asn, entry in self.tent.items():
            heap.append((len(entry.route.as_path), asn))
        heapq.heapify(heap)
        exported: set[int] = set()
        while heap:
            dist, asn = heapq.heappop(heap)
            if asn in exported:
                continue
            entry = self.final.get(asn)
            if entry is None:
                tent = self.tent.get(asn)
                if (
                    tent is None
                    or tent.learned_from is not LearnedFrom.PROVIDER
                    or len(tent.route.as_path) != dist
                ):
                    continue
                entry = self._finalize(asn)
            elif len(entry.route.as_path) != dist:
                continue
            exported.add(asn)
            if not self._may_export(asn, entry):
                continue
            for customer in self.graph.customers[asn]:
                if self._offer(entry.route, asn, customer):
                    heapq.heappush(heap, (dist + 1, customer))


def propagate(
    g: AsGraph,
    originations: Sequence[OriginationSpec],
    reg: CommunityRegistry | None = None,
    rov: RovPolicyLike | None = None,
    *,
    rewrite_at: frozenset[int] = frozenset(),
) -> Rib:
    """Propagate all originations to the Gao-Rexford fixed point.

    rewrite_at lists ASes running the community-rewrite defense: at ingress
    they replace any well-known no-export community with their AS-scoped
    rewrite community, and at egress they refuse to export routes so tagged,
    restoring monitor visibility without changing what propagates where.
    """
    reg = reg if reg is not None else CommunityRegistry.wellknown()
    for asn in rewrite_at:
        if asn not in g:
            raise ConfigError(f"rewrite defense at unknown AS {asn}")
    by_prefix: dict[Prefix, list[OriginationSpec]] = {}
    for spec in originations:
        if spec.origin not in g:
            raise ConfigError(f"origination from AS {spec.origin} absent from graph")
        if spec.announce_to is not None:
            neighbors = set(g.neighbors(spec.origin))
            bad = [n for n in spec.announce_to if n not in neighbors]
            if bad:
                raise ConfigError(f"announce_to {bad} not adjacent to AS {spec.origin}")
        peers_here = by_prefix.setdefault(spec.prefix, [])
        if any(s.origin == spec.origin for s in peers_here):
            raise ConfigError(f"AS {spec.origin} originates {spec.prefix} twice")
        peers_here.append(spec)

    rib = Rib()
    for prefix in sorted(by_prefix):
        run = _PrefixPropagation(g, prefix, by_prefix[prefix], reg, rov, rewrite_at)
        for asn, entry in run.run().items():
            rib.install(asn, entry)
    for spec in originations:
        if spec.malicious:
            rib.mark_malicious_origin(spec.origin, spec.prefix)
    return rib
