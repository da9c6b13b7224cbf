"""AS-level topology: relationship parsing, validation, and customer-cone analysis.

Topologies use the serial-1 AS-relationship exchange format: one edge per line,
``<asn>|<asn>|<rel>`` where rel -1 means the first AS is a provider of the
second and rel 0 means the two are peers. ``#`` lines are comments. Files may
be gzip-compressed.
"""
from __future__ import annotations

import gzip
import os
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Mapping

import networkx as nx
import numpy as np

from .errors import ConfigError, ParseError

MAX_ASN = 2**32 - 1

# role of the *neighbor* relative to the holding AS
CUSTOMER = "customer"
PROVIDER = "provider"
PEER = "peer"


def _freeze(adj: dict[int, set[int]]) -> dict[int, tuple[int, ...]]:
    return {a: tuple(sorted(s)) for a, s in adj.items()}


@dataclass(frozen=True)
class AsGraph:
    """Immutable AS graph with customer-provider and peer-peer adjacency.

    Adjacency maps are keyed by ASN and cover every node (possibly with empty
    tuples). ``providers[a]`` lists the ASes ``a`` buys transit from,
    ``customers[a]`` the ASes that buy transit from ``a``, and ``peers[a]``
    settlement-free peers.
    """

    providers: Mapping[int, tuple[int, ...]]
    customers: Mapping[int, tuple[int, ...]]
    peers: Mapping[int, tuple[int, ...]]

    @staticmethod
    def build(
        p2c_edges: Iterable[tuple[int, int]],
        p2p_edges: Iterable[tuple[int, int]] = (),
    ) -> "AsGraph":
        """Build a graph from (provider, customer) and (peer, peer) pairs.

        Unlike :func:`parse_as_rel` this trusts its input and deduplicates
        silently; use it for programmatic construction.
        """
        prov: dict[int, set[int]] = {}
        cust: dict[int, set[int]] = {}
        peer: dict[int, set[int]] = {}

        def touch(a: int) -> None:
            prov.setdefault(a, set())
            cust.setdefault(a, set())
            peer.setdefault(a, set())

        for p, c in p2c_edges:
            p, c = int(p), int(c)  # tolerate numpy integers
            touch(p)
            touch(c)
            cust[p].add(c)
            prov[c].add(p)
        for a, b in p2p_edges:
            a, b = int(a), int(b)
            touch(a)
            touch(b)
            peer[a].add(b)
            peer[b].add(a)
        return AsGraph(_freeze(prov), _freeze(cust), _freeze(peer))

    @property
    def nodes(self) -> frozenset[int]:
        return frozenset(self.providers)

    def nodes_sorted(self) -> tuple[int, ...]:
        return tuple(sorted(self.providers))

    def __contains__(self, asn: int) -> bool:
        return asn in self.providers

    def __len__(self) -> int:
        return len(self.providers)

    def edge_count(self) -> int:
        n_p2c = sum(len(v) for v in self.customers.values())
        n_p2p = sum(len(v) for v in self.peers.values()) // 2
        return n_p2c + n_p2p

    def neighbors(self, asn: int) -> tuple[int, ...]:
        """All BGP neighbors of ``asn``, ascending."""
        self._require(asn)
        merged = set(self.providers[asn]) | set(self.customers[asn]) | set(self.peers[asn])
        return tuple(sorted(merged))

    def role_of(self, asn: int, neighbor: int) -> str | None:
        """Role of ``neighbor`` from ``asn``'s point of view, or None if not adjacent."""
        self._require(asn)
        if neighbor in self.customers[asn]:
            return CUSTOMER
        if neighbor in self.providers[asn]:
            return PROVIDER
        if neighbor in self.peers[asn]:
            return PEER
        return None

    def _require(self, asn: int) -> None:
        if asn not in self.providers:
            raise ConfigError(f"unknown AS {asn}")

    def with_transit_edges(self, edges: Iterable[tuple[int, int]]) -> "AsGraph":
        """Return a copy with extra (provider, customer) edges.

        New ASNs are created as needed; an edge whose endpoints are already
        adjacent (in any role) is left untouched so existing relationships win.
        """
        prov = {a: set(v) for a, v in self.providers.items()}
        cust = {a: set(v) for a, v in self.customers.items()}
        peer = {a: set(v) for a, v in self.peers.items()}
        for p, c in edges:
            for a in (p, c):
                if a not in prov:
                    prov[a] = set()
                    cust[a] = set()
                    peer[a] = set()
            already = c in cust[p] or c in prov[p] or c in peer[p]
            if not already:
                cust[p].add(c)
                prov[c].add(p)
        return AsGraph(_freeze(prov), _freeze(cust), _freeze(peer))


def _read_bytes(source: str | os.PathLike | bytes | BinaryIO) -> bytes:
    if isinstance(source, bytes):
        data = source
    elif hasattr(source, "read"):
        data = source.read()  # type: ignore[union-attr]
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data


def parse_as_rel(source: str | os.PathLike | bytes | BinaryIO) -> AsGraph:
    """Parse a serial-1 relationship file into an :class:`AsGraph`.

    Raises :class:`ParseError` (with the offending line number) on malformed
    lines, bad ASNs, self-loops, and duplicate or conflicting edges.
    """
    text = _read_bytes(source).decode("utf-8", errors="strict")
    prov: dict[int, set[int]] = {}
    cust: dict[int, set[int]] = {}
    peer: dict[int, set[int]] = {}
    seen: dict[tuple[int, int], str] = {}

    def touch(a: int) -> None:
        if a not in prov:
            prov[a] = set()
            cust[a] = set()
            peer[a] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("|")
        if len(fields) != 3:
            raise ParseError(f"expected '<asn>|<asn>|<rel>', got {line!r}", lineno)
        try:
            a, b, rel = int(fields[0]), int(fields[1]), int(fields[2])
        except ValueError:
            raise ParseError(f"non-integer field in {line!r}", lineno) from None
        for asn in (a, b):
            if not 0 < asn <= MAX_ASN:
                raise ParseError(f"ASN {asn} out of range", lineno)
        if a == b:
            raise ParseError(f"self-loop on AS {a}", lineno)
        if rel not in (-1, 0):
            raise ParseError(f"relationship must be -1 or 0, got {rel}", lineno)

        key = (min(a, b), max(a, b))
        desc = f"p2c:{a}" if rel == -1 else "p2p"
        if key in seen:
            kind = "duplicate" if seen[key] == desc else "conflicting"
            raise ParseError(f"{kind} edge for AS pair {key[0]}|{key[1]}", lineno)
        seen[key] = desc

        touch(a)
        touch(b)
        if rel == -1:
            cust[a].add(b)
            prov[b].add(a)
        else:
            peer[a].add(b)
            peer[b].add(a)

    return AsGraph(_freeze(prov), _freeze(cust), _freeze(peer))


def serialize_as_rel(graph: AsGraph) -> str:
    """Serialize a graph back to serial-1 text, deterministically ordered."""
    lines = []
    for p in sorted(graph.customers):
        for c in graph.customers[p]:
            lines.append(f"{p}|{c}|-1")
    for a in sorted(graph.peers):
        for b in graph.peers[a]:
            if a < b:
                lines.append(f"{a}|{b}|0")
    return "\n".join(lines) + ("\n" if lines else "")


def customer_cone(graph: AsGraph, asn: int) -> frozenset[int]:
    """The set of ASes reachable from ``asn`` by walking only customer edges,
    including ``asn`` itself."""
    graph._require(asn)
    seen = {asn}
    stack = [asn]
    while stack:
        cur = stack.pop()
        for c in graph.customers[cur]:
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return frozenset(seen)


def cone_sizes(graph: AsGraph) -> dict[int, int]:
    """Customer-cone size for every AS.

    Cones overlap heavily, so this runs a packed-bitset union over the
    condensation of the provider->customer digraph instead of one BFS per AS.
    Cycles (which a valid serial-1 file should not contain, but a constructed
    graph may) collapse into a single component whose members share a cone.
    """
    order = sorted(graph.providers)
    idx = {a: i for i, a in enumerate(order)}
    n = len(order)
    if n == 0:
        return {}

    dig = nx.DiGraph()
    dig.add_nodes_from(range(n))
    for p in order:
        pi = idx[p]
        for c in graph.customers[p]:
            dig.add_edge(pi, idx[c])

    cond = nx.condensation(dig)
    words = (n + 63) // 64
    bits: dict[int, np.ndarray | None] = {}
    size: dict[int, int] = {}
    # a component's bitset can be freed once every provider-side parent used it
    pending = {comp: cond.in_degree(comp) for comp in cond.nodes}

    for comp in reversed(list(nx.topological_sort(cond))):
        vec = np.zeros(words, dtype=np.uint64)
        members = np.array(sorted(cond.nodes[comp]["members"]), dtype=np.int64)
        np.bitwise_or.at(vec, members >> 6, np.uint64(1) << (members & 63).astype(np.uint64))
        for child in cond.successors(comp):
            vec |= bits[child]  # type: ignore[operator]
            pending[child] -= 1
            if pending[child] == 0:
                bits[child] = None
        size[comp] = int(np.bitwise_count(vec).sum())
        bits[comp] = vec if pending[comp] > 0 else None

    mapping = cond.graph["mapping"]
    return {a: size[mapping[idx[a]]] for a in order}


def top_by_cone(graph: AsGraph, k: int) -> list[int]:
    """The ``k`` ASes with the largest customer cones, ties broken by
    ascending ASN."""
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    if k > len(graph):
        raise ConfigError(f"k={k} exceeds graph size {len(graph)}")
    sizes = cone_sizes(graph)
    ranked = sorted(sizes, key=lambda a: (-sizes[a], a))
    return ranked[:k]
