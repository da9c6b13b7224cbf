"""Attack scenario construction and defenses.

A scenario pairs a victim's benign origination with an adversary's malicious
one. The flagship attack announces a sub-prefix of the victim's prefix tagged
NO_EXPORT to a handful of high-transit targets: longest-prefix match pulls
traffic at the targets while the tag keeps the route off every monitor
session. Defenses here: community rewrite at ingress (restores visibility)
and route-origin validation with max-length (drops the sub-prefix outright).
"""
from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field, replace
from typing import Sequence

from .errors import ConfigError
from .routing import (
    NO_EXPORT,
    CommunityAction,
    CommunityRegistry,
    CommunityRule,
    OriginationSpec,
    Prefix,
    Rib,
    RouteAnnouncement,
    parse_community,
    propagate,
)
from .topology import AsGraph

# sentinel for "every AS enforces" in DefenseConfig.rov_enforcers
ALL_ASES = "all"


class AttackKind(enum.Enum):
    SUB_PREFIX_STEALTHY = "sub_prefix_stealthy"
    SUB_PREFIX_LOUD = "sub_prefix_loud"
    EQUALLY_SPECIFIC = "equally_specific"


@dataclass(frozen=True)
class Roa:
    """Route Origin Authorization: who may announce a prefix, and how far
    down it may be sliced (max_length)."""

    prefix: Prefix
    origin: int
    max_length: int

    def __post_init__(self):
        if not self.prefix.length <= self.max_length <= 32:
            raise ConfigError(
                f"max_length {self.max_length} outside [{self.prefix.length}, 32]"
            )


class Validity(enum.Enum):
    VALID = "valid"
    INVALID = "invalid"
    NOT_FOUND = "not_found"


def rov_validate(roas: Sequence[Roa], ann: RouteAnnouncement) -> Validity:
    """RPKI origin validation with max-length.

    NotFound when no ROA covers the announced prefix; Valid when a covering
    ROA authorizes the announcement's origin at this length; Invalid
    otherwise. Enforcing ASes drop Invalid before route selection.
    """
    covering = [r for r in roas if r.prefix.contains(ann.prefix)]
    if not covering:
        return Validity.NOT_FOUND
    for roa in covering:
        if roa.origin == ann.origin and ann.prefix.length <= roa.max_length:
            return Validity.VALID
    return Validity.INVALID


@dataclass(frozen=True)
class DefenseConfig:
    """Active defenses: ingress community rewrite and/or route-origin
    validation. rov_enforcers may be the string "all"."""

    rewrite_no_export_at: frozenset[int] = frozenset()
    rov_enforcers: frozenset[int] | str = frozenset()
    roas: tuple[Roa, ...] = ()

    def __post_init__(self):
        if isinstance(self.rov_enforcers, str) and self.rov_enforcers != ALL_ASES:
            raise ConfigError(f"rov_enforcers must be a set of ASNs or {ALL_ASES!r}")

    def validate_against(self, graph: AsGraph) -> None:
        missing = sorted(a for a in self.rewrite_no_export_at if a not in graph)
        if missing:
            raise ConfigError(f"rewrite ASes absent from topology: {missing}")
        if not isinstance(self.rov_enforcers, str):
            missing = sorted(a for a in self.rov_enforcers if a not in graph)
            if missing:
                raise ConfigError(f"ROV enforcers absent from topology: {missing}")

    def rov_policy(self) -> "RovPolicy | None":
        enforcing = self.rov_enforcers == ALL_ASES or bool(self.rov_enforcers)
        if not self.roas or not enforcing:
            return None
        return RovPolicy(self.roas, self.rov_enforcers)


def apply_rewrite_defense(defense: DefenseConfig, at: int) -> DefenseConfig:
    """Arm the ingress rewrite at one more AS.

    During propagation, any well-known no-export community on a route
    arriving at such an AS is replaced by the AS-scoped community `ASN:123`;
    the route stays export-restricted to all BGP neighbors (egress match)
    but is no longer export_locked, so monitor sessions see it.
    """
    return replace(defense, rewrite_no_export_at=defense.rewrite_no_export_at | {at})


@dataclass(frozen=True)
class RovPolicy:
    """ROA set plus the ASes that enforce validation."""

    roas: tuple[Roa, ...]
    enforcers: frozenset[int] | str = ALL_ASES

    def enforces(self, asn: int) -> bool:
        if self.enforcers == ALL_ASES:
            return True
        return asn in self.enforcers

    def rejects(self, at: int, ann: RouteAnnouncement) -> bool:
        return self.enforces(at) and rov_validate(self.roas, ann) is Validity.INVALID


@dataclass(frozen=True)
class AttackScenario:
    victim: OriginationSpec
    adversary_as: int
    malicious: OriginationSpec
    kind: AttackKind
    spoof_victim_origin: bool = False

    def __post_init__(self):
        if self.kind is AttackKind.EQUALLY_SPECIFIC:
            if self.malicious.prefix != self.victim.prefix:
                raise ConfigError("equally-specific attack must reuse the victim prefix")
        else:
            deeper = (
                self.victim.prefix.contains(self.malicious.prefix)
                and self.malicious.prefix.length > self.victim.prefix.length
            )
            if not deeper:
                raise ConfigError(
                    f"{self.malicious.prefix} is not a strict sub-prefix of {self.victim.prefix}"
                )
        if self.malicious.origin != self.adversary_as:
            raise ConfigError("malicious origination must come from the adversary AS")
        if self.spoof_victim_origin and self.malicious.spoof_origin != self.victim.origin:
            raise ConfigError("spoof_victim_origin set but malicious path does not spoof it")

    def validate_communities(self, reg: CommunityRegistry | None = None) -> None:
        """Stealthy scenarios must carry a no-export action effective at
        every announce target."""
        if self.kind is not AttackKind.SUB_PREFIX_STEALTHY:
            return
        reg = reg if reg is not None else CommunityRegistry.wellknown()
        # any of the three is at least as strict as NO_EXPORT on an eBGP session
        lock_actions = {
            CommunityAction.NO_EXPORT,
            CommunityAction.NO_EXPORT_SUBCONFED,
            CommunityAction.NO_ADVERTISE,
        }
        for target in self.malicious.announce_to or ():
            acts = reg.matching_actions(target, self.malicious.communities)
            if not (acts & lock_actions):
                raise ConfigError(
                    f"stealthy scenario lacks a no-export action effective at AS {target}"
                )


def build_attack(
    g: AsGraph,
    victim_as: int,
    victim_prefix: Prefix,
    adversary_as: int,
    targets: Sequence[int],
    kind: AttackKind,
    *,
    communities: frozenset[int] | None = None,
    spoof_victim_origin: bool = False,
    reg: CommunityRegistry | None = None,
) -> AttackScenario:
    """Assemble a scenario: the victim announces its prefix everywhere, the
    adversary announces the malicious prefix to the chosen targets only.

    Stealthy and loud kinds use the first sub-prefix one bit longer than the
    victim's; stealthy defaults to the well-known NO_EXPORT community. The
    adversary need not be in the graph yet: attach_adversary() synthesizes
    target->adversary transit edges before propagation.
    """
    if victim_as not in g:
        raise ConfigError(f"victim AS {victim_as} absent from graph")
    if not targets:
        raise ConfigError("attack needs at least one target")
    missing = sorted(t for t in targets if t not in g)
    if missing:
        raise ConfigError(f"targets absent from graph: {missing}")
    if victim_as == adversary_as:
        raise ConfigError("victim and adversary must differ")

    if kind is AttackKind.EQUALLY_SPECIFIC:
        malicious_prefix = victim_prefix
    else:
        if victim_prefix.length >= 32:
            raise ConfigError(f"no sub-prefix exists below {victim_prefix}")
        malicious_prefix = victim_prefix.first_subprefix()

    if communities is None:
        communities = (
            frozenset({NO_EXPORT}) if kind is AttackKind.SUB_PREFIX_STEALTHY else frozenset()
        )

    scenario = AttackScenario(
        victim=OriginationSpec(victim_as, victim_prefix),
        adversary_as=adversary_as,
        malicious=OriginationSpec(
            adversary_as,
            malicious_prefix,
            communities,
            announce_to=tuple(sorted(set(targets))),
            spoof_origin=victim_as if spoof_victim_origin else None,
            malicious=True,
        ),
        kind=kind,
        spoof_victim_origin=spoof_victim_origin,
    )
    scenario.validate_communities(reg)
    return scenario


def attach_adversary(g: AsGraph, scenario: AttackScenario) -> AsGraph:
    """Ensure the adversary has a BGP session with every target, adding
    target->adversary transit edges where missing (the rented-VM-at-an-IXP
    attachment). Existing adjacency is preserved in its original role."""
    adversary = scenario.adversary_as
    wanted = scenario.malicious.announce_to or ()
    missing = [
        t
        for t in wanted
        if adversary not in g or g.role_of(t, adversary) is None
    ]
    if not missing:
        return g
    return g.with_transit_edges((t, adversary) for t in missing)


def propagate_scenario(
    g: AsGraph,
    scenario: AttackScenario,
    defense: DefenseConfig | None = None,
    reg: CommunityRegistry | None = None,
) -> Rib:
    """Propagate victim and adversary originations under the given defenses.

    The graph must already contain the adversary's sessions; run
    attach_adversary() first when the adversary is synthetic.
    """
    rov = None
    rewrite: frozenset[int] = frozenset()
    if defense is not None:
        defense.validate_against(g)
        rov = defense.rov_policy()
        rewrite = defense.rewrite_no_export_at
    return propagate(
        g, [scenario.victim, scenario.malicious], reg, rov, rewrite_at=rewrite
    )


@dataclass(frozen=True)
class TopConeStrategy:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"top_cone_k must be at least 1, got {self.k}")


@dataclass(frozen=True)
class FixedSetStrategy:
    infected: tuple[int, ...]

    def __post_init__(self):
        if not self.infected:
            raise ConfigError("fixed_list strategy needs at least one AS")
        if len(set(self.infected)) != len(self.infected):
            raise ConfigError("fixed_list strategy has duplicate ASNs")


Strategy = TopConeStrategy | FixedSetStrategy


@dataclass(frozen=True)
class ScenarioDoc:
    """A parsed scenario descriptor (see README for the JSON schema).

    targets and strategy are alternatives: explicit target ASNs, or a rule
    resolved against the topology (top_cone_k / fixed_list). victim_asn is
    optional; when absent the experiment treats every sampled AS as the
    victim in turn.
    """

    kind: AttackKind
    victim_prefix: Prefix
    victim_asn: int | None = None
    adversary_asn: int | None = None
    targets: tuple[int, ...] | None = None
    strategy: Strategy | None = None
    communities: frozenset[int] | None = None
    spoof_victim_origin: bool = False
    infected_injection: bool = True
    defense: DefenseConfig = field(default_factory=DefenseConfig)
    community_rules: tuple[CommunityRule, ...] = ()

    def __post_init__(self):
        if (self.targets is None) == (self.strategy is None):
            raise ConfigError("exactly one of 'targets' and 'strategy' is required")

    def registry(self) -> CommunityRegistry:
        return CommunityRegistry(self.community_rules)

    def resolve_targets(self, graph: AsGraph) -> tuple[int, ...]:
        from .topology import top_by_cone

        if self.targets is not None:
            missing = sorted(t for t in self.targets if t not in graph)
            if missing:
                raise ConfigError(f"targets absent from topology: {missing}")
            return self.targets
        if isinstance(self.strategy, TopConeStrategy):
            return tuple(top_by_cone(graph, self.strategy.k))
        assert isinstance(self.strategy, FixedSetStrategy)
        missing = sorted(t for t in self.strategy.infected if t not in graph)
        if missing:
            raise ConfigError(f"fixed_list ASes absent from topology: {missing}")
        return self.strategy.infected


_ACTION_NAMES = {
    "no_export": CommunityAction.NO_EXPORT,
    "no_advertise": CommunityAction.NO_ADVERTISE,
    "no_export_subconfed": CommunityAction.NO_EXPORT_SUBCONFED,
}

_SCENARIO_KEYS = {
    "kind",
    "victim_prefix",
    "victim_asn",
    "adversary_asn",
    "targets",
    "strategy",
    "communities",
    "spoof_victim_origin",
    "infected_injection",
    "defense",
    "community_rules",
}


def _require_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {unknown}")


def _parse_strategy(obj) -> Strategy:
    if not isinstance(obj, dict):
        raise ConfigError("strategy must be an object")
    _require_keys(obj, {"top_cone_k", "fixed_list"}, "strategy")
    if len(obj) != 1:
        raise ConfigError("strategy must have exactly one of top_cone_k / fixed_list")
    if "top_cone_k" in obj:
        return TopConeStrategy(int(obj["top_cone_k"]))
    return FixedSetStrategy(tuple(int(a) for a in obj["fixed_list"]))


def _parse_defense(obj) -> DefenseConfig:
    if not isinstance(obj, dict):
        raise ConfigError("defense must be an object")
    _require_keys(obj, {"rewrite_at", "rov"}, "defense")
    rewrite = frozenset(int(a) for a in obj.get("rewrite_at", ()))
    enforcers: frozenset[int] | str = frozenset()
    roas: tuple[Roa, ...] = ()
    if "rov" in obj:
        rov = obj["rov"]
        _require_keys(rov, {"enforcers", "roas"}, "defense.rov")
        raw_enf = rov.get("enforcers", ALL_ASES)
        enforcers = ALL_ASES if raw_enf == ALL_ASES else frozenset(int(a) for a in raw_enf)
        parsed = []
        for item in rov.get("roas", ()):
            _require_keys(item, {"prefix", "origin", "max_length"}, "roa")
            prefix = Prefix.parse(item["prefix"])
            parsed.append(
                Roa(prefix, int(item["origin"]), int(item.get("max_length", prefix.length)))
            )
        roas = tuple(parsed)
        if not roas:
            raise ConfigError("defense.rov needs at least one ROA")
    return DefenseConfig(rewrite, enforcers, roas)


def _parse_community_rules(items) -> tuple[CommunityRule, ...]:
    rules = []
    for item in items:
        _require_keys(item, {"community", "action", "scope"}, "community_rules")
        action = _ACTION_NAMES.get(item.get("action"))
        if action is None:
            raise ConfigError(
                f"unknown community action {item.get('action')!r}"
                f" (want one of {sorted(_ACTION_NAMES)})"
            )
        scope = item.get("scope")
        rules.append(
            CommunityRule(
                parse_community(str(item["community"])),
                action,
                None if scope is None else int(scope),
            )
        )
    return tuple(rules)


def load_scenario(source: str | os.PathLike | bytes) -> ScenarioDoc:
    """Load and validate a scenario JSON document. Unknown keys are rejected."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        with open(source, "rb") as fh:
            text = fh.read().decode("utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError("scenario document must be a JSON object")
    _require_keys(obj, _SCENARIO_KEYS, "scenario")
    for key in ("kind", "victim_prefix"):
        if key not in obj:
            raise ConfigError(f"scenario is missing required key {key!r}")
    try:
        kind = AttackKind(obj["kind"])
    except ValueError:
        raise ConfigError(
            f"unknown kind {obj['kind']!r} (want one of {[k.value for k in AttackKind]})"
        ) from None

    communities = None
    if "communities" in obj:
        communities = frozenset(parse_community(str(c)) for c in obj["communities"])

    return ScenarioDoc(
        kind=kind,
        victim_prefix=Prefix.parse(obj["victim_prefix"]),
        victim_asn=None if obj.get("victim_asn") is None else int(obj["victim_asn"]),
        adversary_asn=None if obj.get("adversary_asn") is None else int(obj["adversary_asn"]),
        targets=None if "targets" not in obj else tuple(sorted({int(a) for a in obj["targets"]})),
        strategy=None if "strategy" not in obj else _parse_strategy(obj["strategy"]),
        communities=communities,
        spoof_victim_origin=bool(obj.get("spoof_victim_origin", False)),
        infected_injection=bool(obj.get("infected_injection", True)),
        defense=_parse_defense(obj["defense"]) if "defense" in obj else DefenseConfig(),
        community_rules=_parse_community_rules(obj.get("community_rules", ())),
    )
