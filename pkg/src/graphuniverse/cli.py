"""Batch command-line interface.

Subcommands: generate, validate, sensitivity, shift, bench, serve.
Exit codes: 0 success, 1 usage/config error, 2 generation failure,
3 validation failure.  The ``GRAPHUNIVERSE_THREADS`` environment variable
overrides ``--threads``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .core import ConfigError, FamilyConfig, UniverseConfig
from .dataset import (
    DatasetError,
    canonical_json,
    read_dataset,
    write_dataset,
)
from .sampler import (
    FamilyGenerationError,
    derive_shifted_family,
    generate_family,
)
from .sensitivity import SensitivityConfig, run_sensitivity
from .stats import pearson_correlation
from .universe import build_universe
from .validation import validate_family

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_GENERATION = 2
EXIT_VALIDATION = 3

# Config files use the conventional generation-parameter names; the two noted
# keys are accepted for forward compatibility but have no effect.
UNIVERSE_KEYS = {
    "number_of_communities": "community_count",
    "community_count": "community_count",
    "feature_dimension": "feature_dim",
    "feature_dim": "feature_dim",
    "center_variance": "center_variance",
    "cluster_variance": "cluster_variance",
    "edge_propensity_variance": "edge_propensity_variance",
    "seed": "seed",
}
FAMILY_KEYS = {
    "number_of_graphs": "graph_count",
    "graph_count": "graph_count",
    "min_node_count": ("node_range", 0),
    "max_node_count": ("node_range", 1),
    "node_range": "node_range",
    "min_communities": ("community_range", 0),
    "max_communities": ("community_range", 1),
    "community_range": "community_range",
    "homophily_range": "homophily_range",
    "average_degree_range": "degree_range",
    "degree_range": "degree_range",
    "degree_separation_range": "degree_separation_range",
    "power_law_exponent_range": "power_law_range",
    "power_law_range": "power_law_range",
    "family_seed": "seed",
}
IGNORED_KEYS = ("degree_heterogeneity", "use_dccc_sbm")


def default_configs(transductive: bool) -> tuple[UniverseConfig, FamilyConfig]:
    universe = UniverseConfig(
        community_count=10,
        edge_propensity_variance=0.5,
        feature_dim=15,
        center_variance=0.2,
        cluster_variance=0.5,
        seed=42,
    )
    if transductive:
        family = FamilyConfig(
            graph_count=1,
            node_range=(1000, 1000),
            community_range=(10, 10),
            homophily_range=(0.5, 0.5),
            degree_range=(2.5, 2.5),
            degree_separation_range=(0.5, 0.5),
            power_law_range=(2.5, 2.5),
        )
    else:
        family = FamilyConfig(
            graph_count=1000,
            node_range=(50, 200),
            community_range=(4, 6),
            homophily_range=(0.4, 0.6),
            degree_range=(1.0, 5.0),
            degree_separation_range=(0.5, 0.8),
            power_law_range=(2.0, 2.5),
        )
    return universe, family


def parse_config_file(path: str, transductive: bool) -> tuple[UniverseConfig, FamilyConfig]:
    """Flat JSON config using the conventional parameter names; unspecified
    fields fall back to the defaults for the chosen mode."""
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")

    default_universe, default_family = default_configs(transductive)
    universe_kwargs = {
        "community_count": default_universe.community_count,
        "edge_propensity_variance": default_universe.edge_propensity_variance,
        "feature_dim": default_universe.feature_dim,
        "center_variance": default_universe.center_variance,
        "cluster_variance": default_universe.cluster_variance,
        "seed": default_universe.seed,
    }
    family_kwargs = {
        "graph_count": default_family.graph_count,
        "node_range": list(default_family.node_range),
        "community_range": list(default_family.community_range),
        "homophily_range": list(default_family.homophily_range),
        "degree_range": list(default_family.degree_range),
        "degree_separation_range": list(default_family.degree_separation_range),
        "power_law_range": list(default_family.power_law_range),
        "seed": default_family.seed,
    }

    for key, value in raw.items():
        if key in IGNORED_KEYS:
            print(f"warning: config key {key!r} is accepted but ignored", file=sys.stderr)
            continue
        if key == "degree_distribution":
            if value != "power_law":
                raise ConfigError(f"unsupported degree distribution {value!r}")
            continue
        if key in UNIVERSE_KEYS:
            universe_kwargs[UNIVERSE_KEYS[key]] = value
            continue
        if key in FAMILY_KEYS:
            target = FAMILY_KEYS[key]
            if isinstance(target, tuple):
                name, index = target
                family_kwargs[name][index] = value
            else:
                family_kwargs[target] = value
            continue
        raise ConfigError(f"unknown config key {key!r}")

    universe = UniverseConfig(
        community_count=int(universe_kwargs["community_count"]),
        edge_propensity_variance=float(universe_kwargs["edge_propensity_variance"]),
        feature_dim=int(universe_kwargs["feature_dim"]),
        center_variance=float(universe_kwargs["center_variance"]),
        cluster_variance=float(universe_kwargs["cluster_variance"]),
        seed=int(universe_kwargs["seed"]),
    )
    family = FamilyConfig(
        graph_count=int(family_kwargs["graph_count"]),
        node_range=tuple(int(v) for v in family_kwargs["node_range"]),
        community_range=tuple(int(v) for v in family_kwargs["community_range"]),
        homophily_range=tuple(float(v) for v in family_kwargs["homophily_range"]),
        degree_range=tuple(float(v) for v in family_kwargs["degree_range"]),
        degree_separation_range=tuple(
            float(v) for v in family_kwargs["degree_separation_range"]
        ),
        power_law_range=tuple(float(v) for v in family_kwargs["power_law_range"]),
        seed=None if family_kwargs["seed"] is None else int(family_kwargs["seed"]),
    )
    return universe, family


def _threads(args) -> int:
    env = os.environ.get("GRAPHUNIVERSE_THREADS")
    if env:
        return max(1, int(env))
    return max(1, args.threads)


def _cmd_generate(args) -> int:
    transductive = args.transductive
    try:
        if args.config:
            universe_config, family = parse_config_file(args.config, transductive)
        else:
            universe_config, family = default_configs(transductive)
        if args.seed is not None:
            universe_config = UniverseConfig(
                community_count=universe_config.community_count,
                edge_propensity_variance=universe_config.edge_propensity_variance,
                feature_dim=universe_config.feature_dim,
                center_variance=universe_config.center_variance,
                cluster_variance=universe_config.cluster_variance,
                seed=args.seed,
            )
        if transductive and family.graph_count != 1:
            raise ConfigError("transductive mode requires graph_count == 1")
        universe = build_universe(universe_config)
        family.check_against_universe(universe.community_count)
    except (ConfigError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        instances = generate_family(universe, family, threads=_threads(args))
        mode = "transductive" if transductive else "inductive"
        write_dataset(args.out, universe, family, instances, mode=mode, force=args.force)
    except (FamilyGenerationError, DatasetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    print(f"wrote {len(instances)} graphs to {args.out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        dataset = read_dataset(args.dataset, skip_validate=args.skip_validate)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        report = validate_family(
            dataset.instances, dataset.universe, deviation_target=args.deviation_target
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.report)
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.suffix == ".csv":
        out.write_text(report.to_csv_text())
    else:
        out.write_text(canonical_json(report.to_json_dict()) + "\n")
        out.with_suffix(".csv").write_text(report.to_csv_text())
    print(f"wrote validation report to {out}")
    return EXIT_OK


def _cmd_sensitivity(args) -> int:
    config = SensitivityConfig(
        family_count=args.families,
        graphs_per_family=args.graphs,
        seed=args.seed,
        threads=_threads(args),
    )
    result = run_sensitivity(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sensitivity.json").write_text(canonical_json(result.to_json_dict()) + "\n")
    (out / "sensitivity_r.csv").write_text(result.to_csv_text("pearson_r"))
    (out / "sensitivity_p.csv").write_text(result.to_csv_text("p_value"))
    print(
        f"wrote sensitivity results for {args.families} families to {out} "
        f"({result.failed_families} failed)"
    )
    return EXIT_OK


def _cmd_shift(args) -> int:
    try:
        dataset = read_dataset(args.dataset)
        shifted = derive_shifted_family(dataset.family, dh=args.dh, dd=args.dd, dn=args.dn)
        shifted.check_against_universe(dataset.universe.community_count)
    except (DatasetError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        instances = generate_family(dataset.universe, shifted, threads=_threads(args))
        write_dataset(
            args.out,
            dataset.universe,
            shifted,
            instances,
            mode=dataset.splits["mode"],
            force=args.force,
        )
    except (FamilyGenerationError, DatasetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    print(f"wrote shifted family ({len(instances)} graphs) to {args.out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    if not sizes:
        print("error: no sizes given", file=sys.stderr)
        return EXIT_USAGE
    universe_config, family_template = default_configs(transductive=False)
    universe = build_universe(universe_config)

    rows = []
    for size in sizes:
        family = FamilyConfig(
            graph_count=args.per_size,
            node_range=(size, size),
            community_range=family_template.community_range,
            homophily_range=family_template.homophily_range,
            degree_range=family_template.degree_range,
            degree_separation_range=family_template.degree_separation_range,
            power_law_range=family_template.power_law_range,
        )
        started = time.perf_counter()
        instances = generate_family(universe, family, threads=1)
        elapsed = time.perf_counter() - started
        per_graph = elapsed / max(1, len(instances))
        rows.append(
            {
                "avg_number_of_nodes": float(np.mean([inst.n for inst in instances])),
                "avg_edge_count": float(np.mean([inst.edge_count for inst in instances])),
                "time_per_graph_sec": per_graph,
                "throughput_graphs_per_sec": 1.0 / per_graph if per_graph > 0 else float("inf"),
            }
        )
        print(
            f"n={size}: {per_graph * 1e3:.3f} ms/graph, "
            f"{rows[-1]['throughput_graphs_per_sec']:.1f} graphs/s"
        )

    x = np.array([r["avg_edge_count"] for r in rows])
    y = np.array([r["time_per_graph_sec"] for r in rows])
    r = pearson_correlation(x, y) if len(rows) > 1 else float("nan")
    r_squared = r * r if np.isfinite(r) else float("nan")
    print(f"linear fit of time vs edge count: R^2 = {r_squared:.4f}")

    header = [
        "avg_number_of_nodes",
        "avg_edge_count",
        "time_per_graph_sec",
        "throughput_graphs_per_sec",
        "r_squared",
    ]
    lines = [",".join(header)]
    for row in rows:
        lines.append(
            ",".join(
                [
                    repr(row["avg_number_of_nodes"]),
                    repr(row["avg_edge_count"]),
                    repr(row["time_per_graph_sec"]),
                    repr(row["throughput_graphs_per_sec"]),
                    "" if not np.isfinite(r_squared) else repr(float(r_squared)),
                ]
            )
        )
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"wrote benchmark table to {args.out}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(data_dir=args.data_dir, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphuniverse",
        description="Generate, validate and explore families of community-structured random graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a graph family dataset")
    gen.add_argument("--config", help="JSON config file (conventional parameter names)")
    gen.add_argument("--out", required=True, help="output dataset directory")
    gen.add_argument("--seed", type=int, default=None, help="override the universe seed")
    gen.add_argument("--threads", type=int, default=1)
    gen.add_argument("--transductive", action="store_true", help="single graph, node-level splits")
    gen.add_argument("--force", action="store_true", help="overwrite an existing dataset")
    gen.set_defaults(func=_cmd_generate)

    val = sub.add_parser("validate", help="run the validation metrics over a dataset")
    val.add_argument("--dataset", required=True)
    val.add_argument("--report", required=True, help="output report path (.json or .csv)")
    val.add_argument("--deviation-target", choices=("pstar", "psub"), default="pstar")
    val.add_argument("--skip-validate", action="store_true", help="skip invariant checks on load")
    val.set_defaults(func=_cmd_validate)

    sen = sub.add_parser("sensitivity", help="randomized parameter sensitivity analysis")
    sen.add_argument("--families", type=int, default=100)
    sen.add_argument("--graphs", type=int, default=30)
    sen.add_argument("--seed", type=int, default=42)
    sen.add_argument("--threads", type=int, default=1)
    sen.add_argument("--out", required=True, help="output directory")
    sen.set_defaults(func=_cmd_sensitivity)

    shift = sub.add_parser("shift", help="regenerate a dataset with shifted parameter ranges")
    shift.add_argument("--dataset", required=True)
    shift.add_argument("--dh", type=float, default=0.0, help="homophily range shift")
    shift.add_argument("--dd", type=float, default=0.0, help="average degree range shift")
    shift.add_argument("--dn", type=int, default=0, help="node count range shift")
    shift.add_argument("--out", required=True)
    shift.add_argument("--threads", type=int, default=1)
    shift.add_argument("--force", action="store_true")
    shift.set_defaults(func=_cmd_shift)

    bench = sub.add_parser("bench", help="generation throughput benchmark")
    bench.add_argument("--sizes", default="100,200,300,400,500,600,700,800,900,1000")
    bench.add_argument("--per-size", type=int, default=500)
    bench.add_argument("--out", required=True, help="output CSV path")
    bench.set_defaults(func=_cmd_bench)

    serve = sub.add_parser("serve", help="run the local HTTP service for the explorer UI")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--data-dir", default="./graphuniverse-data")
    serve.add_argument("--ui-dir", default=None, help="static UI directory to serve at /")
    serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
