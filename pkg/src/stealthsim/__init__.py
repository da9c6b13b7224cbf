"""stealthsim: AS-level BGP simulator for stealthy sub-prefix hijacks.

Models Gao-Rexford routing over CAIDA-style AS relationship graphs, BGP
community handling (NO_EXPORT and friends), route-monitor visibility,
longest-prefix-match forwarding, and the defenses that expose or blunt a
hijack that hides from monitors while still attracting traffic.
"""

__version__ = "0.1.0"

from .dataplane import DeliveryOutcome, Verdict, forward, is_compromised, lpm_route
from .errors import ConfigError, ParseError, SimulationError
from .experiment import (
    ExperimentResult,
    ExperimentSpec,
    HijackResult,
    cdf_points,
    run_experiment,
)
from .monitoring import (
    MonitorConfig,
    SessionType,
    VisibilityReport,
    parse_monitor_peers,
    stealthy_and_effective,
    visible_peers,
)
from .routing import (
    NO_ADVERTISE,
    NO_EXPORT,
    NO_EXPORT_SUBCONFED,
    CommunityRegistry,
    CommunityRule,
    LearnedFrom,
    OriginationSpec,
    Prefix,
    Rib,
    RibEntry,
    RouteAnnouncement,
    propagate,
    select_best,
)
from .scenario import (
    AttackKind,
    AttackScenario,
    DefenseConfig,
    FixedSetStrategy,
    Roa,
    ScenarioDoc,
    TopConeStrategy,
    Validity,
    attach_adversary,
    build_attack,
    load_scenario,
    propagate_scenario,
    rov_validate,
)
from .topology import (
    AsGraph,
    cone_sizes,
    customer_cone,
    parse_as_rel,
    serialize_as_rel,
    top_by_cone,
)

__all__ = [
    "__version__",
    "AsGraph",
    "AttackKind",
    "AttackScenario",
    "CommunityRegistry",
    "CommunityRule",
    "ConfigError",
    "DefenseConfig",
    "DeliveryOutcome",
    "ExperimentResult",
    "ExperimentSpec",
    "FixedSetStrategy",
    "HijackResult",
    "LearnedFrom",
    "MonitorConfig",
    "NO_ADVERTISE",
    "NO_EXPORT",
    "NO_EXPORT_SUBCONFED",
    "OriginationSpec",
    "ParseError",
    "Prefix",
    "Rib",
    "RibEntry",
    "Roa",
    "RouteAnnouncement",
    "ScenarioDoc",
    "SessionType",
    "SimulationError",
    "TopConeStrategy",
    "Validity",
    "Verdict",
    "VisibilityReport",
    "attach_adversary",
    "build_attack",
    "cdf_points",
    "cone_sizes",
    "customer_cone",
    "forward",
    "is_compromised",
    "load_scenario",
    "lpm_route",
    "parse_as_rel",
    "parse_monitor_peers",
    "propagate",
    "propagate_scenario",
    "rov_validate",
    "run_experiment",
    "select_best",
    "serialize_as_rel",
    "stealthy_and_effective",
    "top_by_cone",
    "visible_peers",
]
