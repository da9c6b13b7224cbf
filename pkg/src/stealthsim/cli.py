"""Batch command-line interface.

Three subcommands:

* ``simulate``   run a hijack-reach experiment from a scenario file and write
                 results CSV, CDF CSV, aggregate JSON, and a run manifest.
* ``cone-rank``  print the top-k ASes by customer-cone size as CSV.
* ``check``      validate a topology file and print counts and anomalies.

Exit codes: 0 success, 1 invariant violation, 2 bad input or bad flags.
The default topology path can be supplied via ``STEALTHSIM_TOPOLOGY``.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import networkx as nx

from . import __version__
from .errors import ConfigError, ParseError, SimulationError
from .experiment import (
    ExperimentSpec,
    run_experiment,
    write_aggregate_json,
    write_cdf_csv,
    write_results_csv,
    aggregate_dict,
)
from .monitoring import MonitorConfig, parse_monitor_peers
from .scenario import load_scenario
from .topology import cone_sizes, parse_as_rel

TOPOLOGY_ENV = "STEALTHSIM_TOPOLOGY"


def _topology_arg(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--topology",
        default=os.environ.get(TOPOLOGY_ENV),
        help=f"AS relationship file (serial-1); defaults to ${TOPOLOGY_ENV}",
    )


def _require_topology(args: argparse.Namespace) -> bytes:
    if not args.topology:
        raise ConfigError(f"--topology is required (or set ${TOPOLOGY_ENV})")
    return Path(args.topology).read_bytes()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stealthsim",
        description="AS-level BGP hijack simulator: stealthy sub-prefix attacks, "
        "route-monitor visibility, and defenses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a hijack-reach experiment")
    _topology_arg(sim)
    sim.add_argument("--scenario", required=True, help="scenario JSON file")
    sim.add_argument("--monitors", help="monitor peers file (<asn>[,<session>])")
    sim.add_argument("--seed", type=int, default=0, help="sampling seed (default 0)")
    sim.add_argument("--sample", type=int, default=150, help="ASes to sample (default 150)")
    sim.add_argument(
        "--threads",
        type=int,
        default=None,
        help="parallel victim evaluations (default: available cores)",
    )
    sim.add_argument("--out", help="output directory; omit to print aggregate JSON")
    sim.set_defaults(func=cmd_simulate)

    cone = sub.add_parser("cone-rank", help="rank ASes by customer-cone size")
    _topology_arg(cone)
    cone.add_argument("-k", "--k", type=int, default=10, help="how many rows (default 10)")
    cone.set_defaults(func=cmd_cone_rank)

    check = sub.add_parser("check", help="validate a topology file")
    _topology_arg(check)
    check.set_defaults(func=cmd_check)
    return parser


def cmd_simulate(args: argparse.Namespace) -> int:
    raw = _require_topology(args)
    graph = parse_as_rel(raw)
    doc = load_scenario(args.scenario)
    if args.monitors:
        mon = parse_monitor_peers(Path(args.monitors).read_bytes())
    else:
        mon = MonitorConfig.empty()
    started = datetime.now(timezone.utc).isoformat()

    spec = ExperimentSpec.from_doc(doc, sample_size=args.sample, rng_seed=args.seed)
    threads = args.threads if args.threads else (os.cpu_count() or 1)
    if threads < 1:
        raise ConfigError("--threads must be at least 1")
    result = run_experiment(graph, spec, mon, threads=threads)
    digest = hashlib.sha256(raw).hexdigest()

    if not args.out:
        print(json.dumps(aggregate_dict(result, digest), indent=2, sort_keys=True))
        return 0

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_results_csv(result, out / "results.csv")
    write_cdf_csv(result, out / "cdf.csv")
    write_aggregate_json(result, out / "aggregate.json", digest)
    manifest = {
        "tool": "stealthsim",
        "version": __version__,
        "command": ["simulate"]
        + [f"--{k.replace('_', '-')}={v}" for k, v in sorted(vars(args).items())
           if k not in ("func", "command") and v is not None],
        "topology": {"path": str(args.topology), "sha256": digest},
        "scenario": {"path": str(args.scenario)},
        "monitors": str(args.monitors) if args.monitors else None,
        "seed": args.seed,
        "sample_size": args.sample,
        "threads": threads,
        "backend": result.backend,
        "rng": result.rng_algorithm,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_cone_rank(args: argparse.Namespace) -> int:
    raw = _require_topology(args)
    graph = parse_as_rel(raw)
    if args.k < 1:
        raise ConfigError("--k must be at least 1")
    if args.k > len(graph):
        raise ConfigError(f"--k {args.k} exceeds the {len(graph)} ASes in the topology")
    sizes = cone_sizes(graph)
    ranked = sorted(sizes.items(), key=lambda kv: (-kv[1], kv[0]))[: args.k]
    print("rank,asn,cone_size")
    for rank, (asn, size) in enumerate(ranked, start=1):
        print(f"{rank},{asn},{size}")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    raw = _require_topology(args)
    try:
        graph = parse_as_rel(raw)
    except ParseError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 1

    n_p2c = sum(len(v) for v in graph.customers.values())
    n_p2p = graph.edge_count() - n_p2c
    undirected = nx.Graph()
    undirected.add_nodes_from(graph.nodes_sorted())
    for asn in graph.nodes_sorted():
        for nb in graph.neighbors(asn):
            undirected.add_edge(asn, nb)
    components = nx.number_connected_components(undirected)

    print(f"nodes: {len(graph)}")
    print(f"edges: {graph.edge_count()} (p2c: {n_p2c}, p2p: {n_p2p})")
    anomalies = []
    if components > 1:
        anomalies.append(f"{components} disconnected components")
    print("anomalies: " + ("; ".join(anomalies) if anomalies else "none"))
    print("ok")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        name = getattr(exc, "filename", None)
        detail = exc.strerror or str(exc)
        print(f"error: {detail}: {name}" if name else f"error: {detail}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
