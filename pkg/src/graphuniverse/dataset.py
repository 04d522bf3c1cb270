"""Canonical dataset persistence: byte-stable JSON files plus an archive form.

A dataset directory holds ``manifest.json`` (format version, RNG algorithm id,
per-file SHA-256), ``universe.json``, ``family.json``, ``graphs.jsonl`` (one
canonical-JSON object per line) and ``splits.json``.  Canonical JSON means
UTF-8, fixed key order, floats at 17 significant digits, no whitespace, so the
same inputs always produce byte-identical files regardless of thread count or
platform.
"""

from __future__ import annotations

import hashlib
import io
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    RNG_ALGORITHM,
    FamilyConfig,
    GraphInstance,
    GraphParams,
    Universe,
    UniverseConfig,
    rng_for_splits,
)
from .sampler import recalibrate_for_degree_factors, scale_probability_matrix
from .tasks import community_labels, make_node_splits, make_splits, triangle_count
from .universe import build_universe

FORMAT_NAME = "graphuniverse.dataset"
FORMAT_VERSION = 1
DATASET_FILES = ("universe.json", "family.json", "graphs.jsonl", "splits.json")


class DatasetError(RuntimeError):
    pass


class UnsupportedVersionError(DatasetError):
    pass


class IntegrityError(DatasetError):
    pass


class InvariantViolationError(DatasetError):
    pass


# ---------------------------------------------------------------------------
# Canonical JSON
# ---------------------------------------------------------------------------


def canonical_json(obj) -> str:
    """Serialize with fixed key order (dict insertion order) and floats at 17
    significant digits.  Rejects NaN and infinities."""
    parts: list[str] = []
    _write_canonical(obj, parts)
    return "".join(parts)


def _write_canonical(obj, parts: list[str]) -> None:
    if isinstance(obj, dict):
        parts.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if i:
                parts.append(",")
            if not isinstance(key, str):
                raise TypeError(f"canonical JSON keys must be strings, got {key!r}")
            parts.append(json.dumps(key))
            parts.append(":")
            _write_canonical(value, parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for i, value in enumerate(obj):
            if i:
                parts.append(",")
            _write_canonical(value, parts)
        parts.append("]")
    elif isinstance(obj, np.ndarray):
        _write_canonical(obj.tolist(), parts)
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        parts.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not np.isfinite(value):
            raise ValueError(f"non-finite float {value} is not serializable")
        if value == 0.0:
            value = 0.0  # normalize -0.0
        parts.append(format(value, ".17g"))
    elif obj is None:
        parts.append("null")
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    else:
        raise TypeError(f"cannot canonically serialize {type(obj).__name__}")


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# Object <-> JSON mappings
# ---------------------------------------------------------------------------


def universe_config_to_dict(config: UniverseConfig) -> dict:
    return {
        "community_count": config.community_count,
        "edge_propensity_variance": config.edge_propensity_variance,
        "feature_dim": config.feature_dim,
        "center_variance": config.center_variance,
        "cluster_variance": config.cluster_variance,
        "seed": config.seed,
    }


def universe_config_from_dict(obj: dict) -> UniverseConfig:
    return UniverseConfig(
        community_count=int(obj["community_count"]),
        edge_propensity_variance=float(obj["edge_propensity_variance"]),
        feature_dim=int(obj["feature_dim"]),
        center_variance=float(obj["center_variance"]),
        cluster_variance=float(obj["cluster_variance"]),
        seed=int(obj["seed"]),
    )


def family_config_to_dict(config: FamilyConfig) -> dict:
    return {
        "graph_count": config.graph_count,
        "node_range": list(config.node_range),
        "community_range": list(config.community_range),
        "homophily_range": list(config.homophily_range),
        "degree_range": list(config.degree_range),
        "degree_separation_range": list(config.degree_separation_range),
        "power_law_range": list(config.power_law_range),
        "seed": config.seed,
    }


def family_config_from_dict(obj: dict) -> FamilyConfig:
    return FamilyConfig(
        graph_count=int(obj["graph_count"]),
        node_range=(int(obj["node_range"][0]), int(obj["node_range"][1])),
        community_range=(int(obj["community_range"][0]), int(obj["community_range"][1])),
        homophily_range=(float(obj["homophily_range"][0]), float(obj["homophily_range"][1])),
        degree_range=(float(obj["degree_range"][0]), float(obj["degree_range"][1])),
        degree_separation_range=(
            float(obj["degree_separation_range"][0]),
            float(obj["degree_separation_range"][1]),
        ),
        power_law_range=(
            float(obj["power_law_range"][0]),
            float(obj["power_law_range"][1]),
        ),
        seed=None if obj.get("seed") is None else int(obj["seed"]),
    )


def graph_record(instance: GraphInstance) -> dict:
    return {
        "graph_index": instance.graph_index,
        "params": instance.params.to_dict(),
        "communities": instance.communities,
        "node_community": instance.node_community,
        "edges": instance.edges,
        "theta": instance.degree_factors,
        "features": instance.features,
        "triangle_count": triangle_count(instance),
        "community_labels": community_labels(instance),
        "repair_edge_count": instance.repair_edge_count,
    }


def instance_from_record(obj: dict, universe: Universe) -> GraphInstance:
    params = GraphParams.from_dict(obj["params"])
    communities = np.asarray(obj["communities"], dtype=np.int64)
    node_community = np.asarray(obj["node_community"], dtype=np.int64)
    edges = np.asarray(obj["edges"], dtype=np.int64).reshape(-1, 2)
    theta = np.asarray(obj["theta"], dtype=float)
    sizes = np.bincount(node_community, minlength=params.k)
    p_sub = universe.propensity_matrix[np.ix_(communities, communities)]
    scaled = scale_probability_matrix(p_sub, params.h, params.d, params.n, sizes)
    scaled = recalibrate_for_degree_factors(scaled, theta, node_community, params.n, params.d)
    return GraphInstance(
        graph_index=int(obj["graph_index"]),
        params=params,
        communities=communities,
        node_community=node_community,
        edges=edges,
        degree_factors=theta,
        features=np.asarray(obj["features"], dtype=float).reshape(params.n, -1),
        scaled=scaled,
        repair_edge_count=int(obj["repair_edge_count"]),
    )


# ---------------------------------------------------------------------------
# Write / read
# ---------------------------------------------------------------------------


@dataclass
class Dataset:
    universe: Universe
    family: FamilyConfig
    instances: list[GraphInstance]
    labels: list[np.ndarray]
    splits: dict
    manifest: dict


def default_splits(
    universe: Universe,
    family: FamilyConfig,
    instances: list[GraphInstance],
    mode: str = "inductive",
) -> dict:
    """70/15/15 split over graphs (inductive) or over the single graph's nodes
    (transductive, stratified by community)."""
    stream = rng_for_splits(universe.config.seed, family.resolved_seed(universe.config.seed))
    fractions = (0.7, 0.15, 0.15)
    if mode == "transductive":
        if len(instances) != 1:
            raise DatasetError("transductive mode requires exactly one graph")
        train, val, test = make_node_splits(
            stream, instances[0].universe_labels(), fractions
        )
    else:
        train, val, test = make_splits(stream, len(instances), fractions)
    return {
        "mode": mode,
        "fractions": list(fractions),
        "train": train,
        "val": val,
        "test": test,
    }


def write_dataset(
    dir_path: str | Path,
    universe: Universe,
    family: FamilyConfig,
    instances: list[GraphInstance],
    labels: list[np.ndarray] | None = None,
    splits: dict | None = None,
    mode: str = "inductive",
    force: bool = False,
) -> dict:
    """Write the canonical dataset files; refuses to overwrite unless forced.
    Returns the manifest."""
    directory = Path(dir_path)
    manifest_path = directory / "manifest.json"
    if manifest_path.exists() and not force:
        raise DatasetError(f"{manifest_path} already exists (pass force=True to overwrite)")
    directory.mkdir(parents=True, exist_ok=True)

    if splits is None:
        splits = default_splits(universe, family, instances, mode)
    if labels is not None and len(labels) != len(instances):
        raise DatasetError("labels must align with instances")

    universe_doc = {
        "config": universe_config_to_dict(universe.config),
        "propensity_matrix": universe.propensity_matrix,
        "degree_centers": universe.degree_centers,
        "feature_centroids": universe.feature_centroids,
    }
    (directory / "universe.json").write_text(canonical_json(universe_doc) + "\n")
    (directory / "family.json").write_text(canonical_json(family_config_to_dict(family)) + "\n")

    with open(directory / "graphs.jsonl", "w") as handle:
        for i, instance in enumerate(instances):
            record = graph_record(instance)
            if labels is not None:
                record["community_labels"] = np.asarray(labels[i])
            handle.write(canonical_json(record) + "\n")

    splits_doc = {
        "mode": splits["mode"],
        "fractions": splits["fractions"],
        "train": np.asarray(splits["train"]),
        "val": np.asarray(splits["val"]),
        "test": np.asarray(splits["test"]),
    }
    (directory / "splits.json").write_text(canonical_json(splits_doc) + "\n")

    manifest = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "rng_algorithm": RNG_ALGORITHM,
        "mode": splits["mode"],
        "graph_count": len(instances),
        "files": {name: _sha256_file(directory / name) for name in DATASET_FILES},
    }
    manifest_path.write_text(canonical_json(manifest) + "\n")
    return manifest


def _validate_instance(instance: GraphInstance, labels: np.ndarray) -> None:
    n = instance.n
    theta = instance.degree_factors
    if abs(theta.mean() - 1.0) > 1e-9:
        raise InvariantViolationError(
            f"graph {instance.graph_index}: degree factors mean {theta.mean()} != 1"
        )
    sizes = instance.community_sizes()
    if sizes.min() < 1:
        raise InvariantViolationError(f"graph {instance.graph_index}: empty community")
    if sizes.max() - sizes.min() > 1:
        raise InvariantViolationError(
            f"graph {instance.graph_index}: unbalanced community sizes {sizes.tolist()}"
        )
    edges = instance.edges
    if len(edges):
        if edges.min() < 0 or edges.max() >= n:
            raise InvariantViolationError(f"graph {instance.graph_index}: edge endpoint out of range")
        if not (edges[:, 0] < edges[:, 1]).all():
            raise InvariantViolationError(f"graph {instance.graph_index}: edge with u >= v")
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        if not np.array_equal(order, np.arange(len(edges))):
            raise InvariantViolationError(f"graph {instance.graph_index}: edges not sorted")
        if len(np.unique(edges[:, 0] * n + edges[:, 1])) != len(edges):
            raise InvariantViolationError(f"graph {instance.graph_index}: duplicate edges")
    if not np.array_equal(labels, instance.universe_labels()):
        raise InvariantViolationError(
            f"graph {instance.graph_index}: stored labels disagree with communities"
        )
    # connectivity via union-find
    parent = np.arange(n)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        parent[find(int(u))] = find(int(v))
    if len({find(i) for i in range(n)}) != 1:
        raise InvariantViolationError(f"graph {instance.graph_index}: graph is not connected")


def read_dataset(dir_path: str | Path, skip_validate: bool = False) -> Dataset:
    """Load and verify a dataset directory.

    Checks, in order: manifest format/version/algorithm, per-file SHA-256,
    bit-identical universe reconstruction, then (unless ``skip_validate``)
    every graph's structural invariants.
    """
    directory = Path(dir_path)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise DatasetError(f"no manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text())

    if manifest.get("format") != FORMAT_NAME:
        raise UnsupportedVersionError(f"unknown format {manifest.get('format')!r}")
    if manifest.get("format_version") != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"unsupported format version {manifest.get('format_version')!r} "
            f"(this build reads version {FORMAT_VERSION})"
        )
    if manifest.get("rng_algorithm") != RNG_ALGORITHM:
        raise UnsupportedVersionError(
            f"dataset was generated with RNG {manifest.get('rng_algorithm')!r}, "
            f"expected {RNG_ALGORITHM!r}"
        )
    for name, expected in manifest["files"].items():
        actual = _sha256_file(directory / name)
        if actual != expected:
            raise IntegrityError(f"{name}: hash mismatch (expected {expected}, got {actual})")

    universe_doc = json.loads((directory / "universe.json").read_text())
    config = universe_config_from_dict(universe_doc["config"])
    universe = build_universe(config)
    for key, stored in (
        ("propensity_matrix", universe.propensity_matrix),
        ("degree_centers", universe.degree_centers),
        ("feature_centroids", universe.feature_centroids),
    ):
        if not np.array_equal(np.asarray(universe_doc[key], dtype=float), stored):
            raise IntegrityError(f"universe {key} does not match its seeded reconstruction")

    family = family_config_from_dict(json.loads((directory / "family.json").read_text()))

    instances: list[GraphInstance] = []
    labels: list[np.ndarray] = []
    with open(directory / "graphs.jsonl") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"graphs.jsonl line {lineno}: {exc}") from exc
            instance = instance_from_record(record, universe)
            stored_labels = np.asarray(record["community_labels"], dtype=np.int64)
            if not skip_validate:
                _validate_instance(instance, stored_labels)
            instances.append(instance)
            labels.append(stored_labels)

    splits_doc = json.loads((directory / "splits.json").read_text())
    splits = {
        "mode": splits_doc["mode"],
        "fractions": splits_doc["fractions"],
        "train": np.asarray(splits_doc["train"], dtype=np.int64),
        "val": np.asarray(splits_doc["val"], dtype=np.int64),
        "test": np.asarray(splits_doc["test"], dtype=np.int64),
    }
    return Dataset(
        universe=universe,
        family=family,
        instances=instances,
        labels=labels,
        splits=splits,
        manifest=manifest,
    )


# ---------------------------------------------------------------------------
# Deterministic archive
# ---------------------------------------------------------------------------

ARCHIVE_ORDER = ("manifest.json",) + DATASET_FILES


def pack_dataset_dir(dir_path: str | Path) -> bytes:
    """Zip a dataset directory deterministically: fixed file order, zeroed
    timestamps, no compression (byte output independent of zlib build)."""
    directory = Path(dir_path)
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", compression=zipfile.ZIP_STORED) as archive:
        for name in ARCHIVE_ORDER:
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            info.create_system = 3
            info.external_attr = 0o644 << 16
            archive.writestr(info, (directory / name).read_bytes())
    return buffer.getvalue()
