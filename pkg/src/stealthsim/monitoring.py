"""Route-monitor visibility: which installed routes reach a monitoring service.

Monitoring services (RIS, RouteViews, commercial feeds) differ only in which
ASes peer with them and over what kind of session. A route a peer installs
but never exports on the monitor session is invisible: monitors cannot
detect a route they cannot see.
"""
from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from typing import TYPE_CHECKING, BinaryIO, Mapping

from .errors import ConfigError, ParseError
from .routing import Prefix, Rib, RibEntry
from .topology import AsGraph

if TYPE_CHECKING:
    from .scenario import AttackScenario


class SessionType(enum.Enum):
    """How a peer AS exports to the monitoring service.

    EBGP_MULTIHOP: ordinary external session; honors NO_EXPORT and
    NO_ADVERTISE. IBGP: internal session; NO_EXPORT no longer applies, only
    NO_ADVERTISE suppresses. FULL_RIB: BMP-style table mirror; everything
    installed is reported.
    """

    EBGP_MULTIHOP = "ebgp"
    IBGP = "ibgp"
    FULL_RIB = "fullrib"


@dataclass(frozen=True)
class MonitorConfig:
    peers: Mapping[int, SessionType]

    def validate_against(self, graph: AsGraph) -> None:
        missing = sorted(a for a in self.peers if a not in graph)
        if missing:
            raise ConfigError(f"monitor peers absent from topology: {missing}")

    @staticmethod
    def empty() -> "MonitorConfig":
        return MonitorConfig(peers={})


def parse_monitor_peers(source: str | os.PathLike | bytes | BinaryIO) -> MonitorConfig:
    """Parse a monitor peers file: one `<asn>[,<session>]` per line,
    session in {ebgp, ibgp, fullrib} defaulting to ebgp, `#` comments."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif hasattr(source, "read"):
        text = source.read().decode("utf-8")  # type: ignore[union-attr]
    else:
        with open(source, "rb") as fh:
            text = fh.read().decode("utf-8")
    peers: dict[int, SessionType] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) > 2:
            raise ParseError(f"expected '<asn>[,<session>]', got {line!r}", lineno)
        try:
            asn = int(parts[0])
        except ValueError:
            raise ParseError(f"bad ASN {parts[0]!r}", lineno) from None
        session = SessionType.EBGP_MULTIHOP
        if len(parts) == 2:
            try:
                session = SessionType(parts[1])
            except ValueError:
                raise ParseError(
                    f"unknown session {parts[1]!r} (want ebgp, ibgp, or fullrib)", lineno
                ) from None
        if asn in peers:
            raise ParseError(f"duplicate monitor peer {asn}", lineno)
        peers[asn] = session
    return MonitorConfig(peers=peers)


@dataclass(frozen=True)
class VisibilityReport:
    prefix: Prefix
    exporting_peers: frozenset[int]
    stealthy: bool


def entry_visible(entry: RibEntry, session: SessionType) -> bool:
    """Would this installed entry be exported on the given session type?"""
    if session is SessionType.FULL_RIB:
        return True
    if session is SessionType.IBGP:
        return not entry.advertise_locked
    return not entry.export_locked and not entry.advertise_locked


def visible_peers(rib: Rib, mon: MonitorConfig, prefix: Prefix) -> VisibilityReport:
    """Which monitor peers export their installed route for ``prefix``."""
    exporting = frozenset(
        asn
        for asn, session in mon.peers.items()
        if (entry := rib.best(asn, prefix)) is not None and entry_visible(entry, session)
    )
    return VisibilityReport(prefix, exporting, stealthy=not exporting)


def stealthy_and_effective(
    rib: Rib,
    mon: MonitorConfig,
    scenario: "AttackScenario | None",
    sources: frozenset[int] | set[int],
) -> tuple[bool, float]:
    """Is the attack invisible to the monitors, and what fraction of the
    given sources does it hijack anyway?

    The infected set is whoever installed a route for the malicious prefix
    that leads to the adversary (for sub-prefix attacks that is every holder;
    in an equally-specific contest, holders routing to the victim are not
    infected). Sources are evaluated as given; pass the set you consider
    meaningful traffic sources (the experiment module excludes the victim
    and adversary).
    """
    from .dataplane import is_compromised

    if scenario is None:
        return True, 0.0
    malicious_prefix = scenario.malicious.prefix
    report = visible_peers(rib, mon, malicious_prefix)
    adversary = scenario.malicious.origin
    infected = frozenset(
        asn
        for asn in rib.holders(malicious_prefix)
        if adversary in rib.best(asn, malicious_prefix).route.as_path
    )
    if not sources:
        return report.stealthy, 0.0
    hit = sum(
        1
        for source in sorted(sources)
        if is_compromised(rib, source, scenario.victim.prefix, infected)
    )
    return report.stealthy, hit / len(sources)
