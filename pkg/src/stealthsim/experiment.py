"""Hijack-reach experiments: sample ASes, run attacks, measure per-victim
hijacked-source fractions.

For each victim in a seeded random sample, the victim's prefix is propagated
and every other sampled AS is tested for compromise by path membership: is
any infected AS on its control-plane path to the victim? Two modes:

* infected injection (default): the infected set is given directly (the
  strategy list); nothing malicious is propagated. This mirrors the marking
  style of measurement studies and keeps a stealthy sub-prefix's semantics
  exact, since a NO_EXPORT sub-prefix reaches precisely the announce targets.
* propagation: a synthetic adversary is attached below the target ASes and
  the malicious prefix actually propagates (subject to ROV), defining the
  infected set.
"""
from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fastpath
from .errors import ConfigError
from .fastpath import CsrTopology, FastOrigination
from .monitoring import MonitorConfig, SessionType
from .routing import (
    NO_EXPORT,
    CommunityRegistry,
    CommunityRule,
    Prefix,
    RouteAnnouncement,
    _locks,
)
from .scenario import (
    AttackKind,
    DefenseConfig,
    FixedSetStrategy,
    ScenarioDoc,
    Strategy,
    TopConeStrategy,
    Validity,
    rov_validate,
)
from .topology import AsGraph, top_by_cone

log = logging.getLogger(__name__)

RNG_ALGORITHM = "PCG64"
DEFAULT_VICTIM_PREFIX = Prefix.parse("198.18.0.0/23")


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run: adversary strategy, sampling, mode, and defenses.

    victims overrides sampling with an explicit victim list (single-victim
    studies, tests). communities default by kind (stealthy -> NO_EXPORT).
    adversary_asn only matters in propagation mode; None synthesizes a fresh
    AS one above the topology's highest ASN.
    """

    strategy: Strategy
    sample_size: int = 150
    rng_seed: int = 0
    infected_injection: bool = True
    defense: DefenseConfig = field(default_factory=DefenseConfig)
    kind: AttackKind = AttackKind.SUB_PREFIX_STEALTHY
    victim_prefix: Prefix = DEFAULT_VICTIM_PREFIX
    communities: frozenset[int] | None = None
    adversary_asn: int | None = None
    spoof_victim_origin: bool = False
    community_rules: tuple[CommunityRule, ...] = ()
    victims: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.sample_size < 2:
            raise ConfigError("sample_size must be at least 2")

    @classmethod
    def from_doc(
        cls,
        doc: ScenarioDoc,
        *,
        sample_size: int | None = None,
        rng_seed: int = 0,
    ) -> "ExperimentSpec":
        strategy = doc.strategy
        if strategy is None:
            assert doc.targets is not None
            strategy = FixedSetStrategy(doc.targets)
        return cls(
            strategy=strategy,
            sample_size=150 if sample_size is None else sample_size,
            rng_seed=rng_seed,
            infected_injection=doc.infected_injection,
            defense=doc.defense,
            kind=doc.kind,
            victim_prefix=doc.victim_prefix,
            communities=doc.communities,
            adversary_asn=doc.adversary_asn,
            spoof_victim_origin=doc.spoof_victim_origin,
            community_rules=doc.community_rules,
            victims=None if doc.victim_asn is None else (doc.victim_asn,),
        )

    def effective_communities(self) -> frozenset[int]:
        if self.communities is not None:
            return self.communities
        if self.kind is AttackKind.SUB_PREFIX_STEALTHY:
            return frozenset({NO_EXPORT})
        return frozenset()


@dataclass(frozen=True)
class HijackResult:
    victim: int
    fraction: float
    compromised: int
    denominator: int


@dataclass(frozen=True)
class ExperimentResult:
    results: tuple[HijackResult, ...]
    infected: tuple[int, ...]
    stealthy_all: bool
    mean: float
    stddev: float
    n: int
    seed: int
    sample: tuple[int, ...]
    unrouted_pairs: int
    backend: str
    rng_algorithm: str = RNG_ALGORITHM

    def fractions(self) -> list[float]:
        return [r.fraction for r in self.results]


def _resolve_strategy(graph: AsGraph, strategy: Strategy) -> tuple[int, ...]:
    if isinstance(strategy, TopConeStrategy):
        return tuple(top_by_cone(graph, strategy.k))
    missing = sorted(a for a in strategy.infected if a not in graph)
    if missing:
        raise ConfigError(f"strategy ASes absent from topology: {missing}")
    return tuple(sorted(strategy.infected))


def _sample_ases(graph: AsGraph, spec: ExperimentSpec) -> tuple[int, ...]:
    """The source population; victims also come from it unless pinned."""
    pool = graph.nodes_sorted()
    if spec.sample_size > len(pool):
        raise ConfigError(f"sample_size {spec.sample_size} exceeds {len(pool)} nodes")
    rng = np.random.default_rng(spec.rng_seed)
    picked = rng.choice(len(pool), size=spec.sample_size, replace=False)
    return tuple(sorted(int(pool[i]) for i in picked))


def _pinned_victims(graph: AsGraph, spec: ExperimentSpec) -> tuple[int, ...] | None:
    if spec.victims is None:
        return None
    missing = sorted(a for a in spec.victims if a not in graph)
    if missing:
        raise ConfigError(f"victims absent from topology: {missing}")
    return tuple(sorted({int(a) for a in spec.victims}))


def _stealth_verdict(
    mon: MonitorConfig,
    holders: frozenset[int],
    communities: frozenset[int],
    reg: CommunityRegistry,
) -> bool:
    """Would any monitor peer that installed the malicious route export it?

    Locks are evaluated per peer because AS-scoped communities act only at
    their named AS.
    """
    for peer, session in mon.peers.items():
        if peer not in holders:
            continue
        export_locked, advertise_locked = _locks(reg, peer, communities)
        if session is SessionType.FULL_RIB:
            return False
        if session is SessionType.IBGP and not advertise_locked:
            return False
        if session is SessionType.EBGP_MULTIHOP and not (export_locked or advertise_locked):
            return False
    return True


class _Runner:
    """Shared state for one experiment; per-victim work is read-only on it."""

    def __init__(self, graph: AsGraph, spec: ExperimentSpec, mon: MonitorConfig):
        self.spec = spec
        self.mon = mon
        self.reg = CommunityRegistry(spec.community_rules)
        self.targets = _resolve_strategy(graph, spec.strategy)
        self.sample = _sample_ases(graph, spec)
        self.defense = spec.defense
        self.defense.validate_against(graph)
        mon.validate_against(graph)

        if spec.infected_injection:
            self.adversary: int | None = None
            self.graph = graph
        else:
            adversary = spec.adversary_asn
            if adversary is None:
                adversary = max(graph.nodes_sorted()) + 1
            self.adversary = adversary
            missing = [
                t
                for t in self.targets
                if adversary not in graph or graph.role_of(t, adversary) is None
            ]
            self.graph = graph.with_transit_edges((t, adversary) for t in missing)
            if spec.kind is AttackKind.EQUALLY_SPECIFIC and self.defense.rov_policy():
                raise ConfigError(
                    "equally-specific propagation with ROV needs origin-dependent "
                    "filtering; use the reference engine for that study"
                )

        self.csr = CsrTopology.from_graph(self.graph)
        n = len(self.csr)
        self.sample_mask = np.zeros(n, bool)
        for asn in self.sample:
            if asn != self.adversary:
                self.sample_mask[self.csr.idx_of(asn)] = True
        self.enforcer_mask = self._build_enforcer_mask(n)
        pinned = _pinned_victims(graph, spec)
        pool = self.sample if pinned is None else pinned
        self.victims = tuple(a for a in pool if a != self.adversary)

    def _build_enforcer_mask(self, n: int) -> np.ndarray | None:
        policy = self.defense.rov_policy()
        if policy is None:
            return None
        if policy.enforcers == "all":
            return np.ones(n, bool)
        mask = np.zeros(n, bool)
        for asn in policy.enforcers:
            mask[self.csr.idx_of(asn)] = True
        return mask

    def _benign_accept(self, victim: int) -> np.ndarray | None:
        """ROV also filters the victim's own announcement if a ROA says so."""
        if self.enforcer_mask is None:
            return None
        ann = RouteAnnouncement(self.spec.victim_prefix, (victim,))
        if rov_validate(self.defense.roas, ann) is not Validity.INVALID:
            return None
        return ~self.enforcer_mask

    def _malicious_accept(self, victim: int) -> np.ndarray | None:
        """Per-node acceptance of the malicious announcement under ROV."""
        if self.enforcer_mask is None:
            return None
        mal_prefix = (
            self.spec.victim_prefix
            if self.spec.kind is AttackKind.EQUALLY_SPECIFIC
            else self.spec.victim_prefix.first_subprefix()
        )
        assert self.adversary is not None
        path = (
            (self.adversary, victim)
            if self.spec.spoof_victim_origin
            else (self.adversary,)
        )
        verdict = rov_validate(self.defense.roas, RouteAnnouncement(mal_prefix, path))
        if verdict is not Validity.INVALID:
            return None
        return ~self.enforcer_mask

    def _infected_for_victim(self, victim: int) -> tuple[np.ndarray, frozenset[int]]:
        """Infected node mask plus the infected ASN set (for reporting)."""
        n = len(self.csr)
        mask = np.zeros(n, bool)
        if self.spec.infected_injection:
            for asn in self.targets:
                mask[self.csr.idx_of(asn)] = True
            return mask, frozenset(self.targets)

        assert self.adversary is not None
        accept = self._malicious_accept(victim)
        if self.spec.kind is AttackKind.SUB_PREFIX_STEALTHY:
            # NO_EXPORT: reach is exactly the accepting announce targets
            infected = {self.adversary}
            for t in self.targets:
                if self.spec.spoof_victim_origin and t == victim:
                    continue  # loop detection rejects the spoofed path
                if accept is not None and not accept[self.csr.idx_of(t)]:
                    continue
                infected.add(t)
            for asn in infected:
                mask[self.csr.idx_of(asn)] = True
            return mask, frozenset(infected)
        if self.spec.kind is AttackKind.SUB_PREFIX_LOUD:
            spoof = victim if self.spec.spoof_victim_origin else None
            state = fastpath.propagate_fast(
                self.csr,
                [FastOrigination(self.adversary, self.targets, spoof)],
                accept=None if accept is None else accept.astype(np.uint8),
            )
            mask = state.routed_mask()
            infected = frozenset(int(a) for a in self.csr.asns[mask])
            return mask, infected
        # equally-specific: infected means "routes to the adversary", which
        # the contest propagation itself decides; mark only the adversary
        mask[self.csr.idx_of(self.adversary)] = True
        return mask, frozenset({self.adversary})

    def evaluate_victim(self, victim: int) -> tuple[HijackResult, int]:
        vi = self.csr.idx_of(victim)
        infected_mask, _ = self._infected_for_victim(victim)
        if self.spec.kind is AttackKind.EQUALLY_SPECIFIC and not self.spec.infected_injection:
            assert self.adversary is not None
            state = fastpath.propagate_fast(
                self.csr,
                [
                    FastOrigination(victim),
                    FastOrigination(
                        self.adversary,
                        self.targets,
                        victim if self.spec.spoof_victim_origin else None,
                    ),
                ],
            )
        else:
            benign = self._benign_accept(victim)
            state = fastpath.propagate_fast(
                self.csr,
                [FastOrigination(victim)],
                accept=None if benign is None else benign.astype(np.uint8),
            )
        on_path = fastpath.infected_on_path(state, infected_mask)

        sources = self.sample_mask.copy()
        sources[vi] = False
        routed = state.routed_mask()
        routed_src = sources & routed
        unrouted_src = sources & ~routed
        # an unrouted but infected source still sends into the hijack
        stranded_infected = unrouted_src & infected_mask
        compromised = int((routed_src & on_path).sum()) + int(stranded_infected.sum())
        denominator = int(routed_src.sum()) + int(stranded_infected.sum())
        dropped = int((unrouted_src & ~infected_mask).sum())
        fraction = compromised / denominator if denominator else 0.0
        return HijackResult(victim, fraction, compromised, denominator), dropped

    def stealthy_all(self) -> bool:
        communities = self.spec.effective_communities()
        if self.spec.infected_injection:
            holders = frozenset(self.targets)
        else:
            assert self.adversary is not None
            holders = frozenset(self.targets) | {self.adversary}
        return _stealth_verdict(self.mon, holders, communities, self.reg)


def run_experiment(
    g: AsGraph,
    spec: ExperimentSpec,
    mon: MonitorConfig | None = None,
    threads: int | None = None,
) -> ExperimentResult:
    """Run the per-victim hijack measurement over a seeded sample.

    Victims are independent work units; results merge in victim-ASN order,
    so the output is identical for any thread count.
    """
    mon = mon if mon is not None else MonitorConfig.empty()
    runner = _Runner(g, spec, mon)
    threads = max(1, threads or (os.cpu_count() or 1))
    fastpath.warmup()

    outcomes: dict[int, tuple[HijackResult, int]] = {}
    if threads == 1 or len(runner.victims) <= 1:
        for victim in runner.victims:
            outcomes[victim] = runner.evaluate_victim(victim)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for victim, outcome in zip(
                runner.victims, pool.map(runner.evaluate_victim, runner.victims)
            ):
                outcomes[victim] = outcome

    results = tuple(outcomes[v][0] for v in sorted(outcomes))
    unrouted_pairs = sum(outcomes[v][1] for v in sorted(outcomes))
    if unrouted_pairs:
        log.info("dropped %d unroutable source,victim pairs", unrouted_pairs)
    fractions = np.array([r.fraction for r in results], np.float64)
    return ExperimentResult(
        results=results,
        infected=runner.targets,
        stealthy_all=runner.stealthy_all(),
        mean=float(fractions.mean()) if len(fractions) else 0.0,
        stddev=float(fractions.std()) if len(fractions) else 0.0,
        n=len(results),
        seed=spec.rng_seed,
        sample=runner.sample,
        unrouted_pairs=unrouted_pairs,
        backend=fastpath.backend_name(),
    )


def cdf_points(results: list[HijackResult] | tuple[HijackResult, ...]) -> list[tuple[float, float]]:
    """Empirical CDF of per-victim fractions: for each distinct fraction x,
    the share of victims with fraction <= x. Final share is 1."""
    if not results:
        raise ConfigError("cdf_points needs at least one result")
    values = sorted(r.fraction for r in results)
    n = len(values)
    points: list[tuple[float, float]] = []
    for i, value in enumerate(values):
        if i + 1 < n and values[i + 1] == value:
            continue
        points.append((value, (i + 1) / n))
    return points


def write_results_csv(result: ExperimentResult, dest) -> None:
    """CSV: victim_asn,fraction,compromised,denominator,stealthy."""

    def _write(fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["victim_asn", "fraction", "compromised", "denominator", "stealthy"])
        flag = "true" if result.stealthy_all else "false"
        for row in result.results:
            writer.writerow([row.victim, repr(row.fraction), row.compromised, row.denominator, flag])

    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="") as fh:
            _write(fh)
    else:
        _write(dest)


def write_cdf_csv(result: ExperimentResult, dest) -> None:
    """CSV: fraction,cumulative_share."""

    def _write(fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fraction", "cumulative_share"])
        for fraction, share in cdf_points(result.results):
            writer.writerow([repr(fraction), repr(share)])

    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="") as fh:
            _write(fh)
    else:
        _write(dest)


def aggregate_dict(result: ExperimentResult, topology_digest: str | None = None) -> dict:
    return {
        "mean": result.mean,
        "stddev": result.stddev,
        "n": result.n,
        "stealthy_all": result.stealthy_all,
        "seed": result.seed,
        "topology_digest": topology_digest,
        "infected": list(result.infected),
        "unrouted_pairs": result.unrouted_pairs,
        "rng": result.rng_algorithm,
        "backend": result.backend,
    }


def write_aggregate_json(
    result: ExperimentResult, dest, topology_digest: str | None = None
) -> None:
    payload = json.dumps(aggregate_dict(result, topology_digest), indent=2, sort_keys=True)
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w") as fh:
            fh.write(payload + "\n")
    else:
        dest.write(payload + "\n")
