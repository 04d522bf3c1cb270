"""Randomized sensitivity analysis: parameter vs metric correlations.

Generates many families with fully randomized configurations, validates each,
and reports the Pearson correlation (with Student-t significance) between
every input parameter and every family-mean metric.  Range-valued parameters
are represented by their midpoint when correlating.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import DeterministicStream, FamilyConfig, UniverseConfig, rng_for_sensitivity
from .sampler import generate_family
from .stats import pearson_with_pvalue
from .universe import build_universe
from .validation import PER_GRAPH_METRICS, validate_family

logger = logging.getLogger(__name__)

PARAMETERS = (
    "edge_propensity_variance",
    "feature_dim",
    "center_variance",
    "cluster_variance",
    "node_count",
    "community_count",
    "homophily",
    "avg_degree",
    "degree_separation",
    "power_law",
)

METRICS = (
    "homophily",
    "avg_degree",
    "degree_tail_ratio_99",
    "generation_time_sec",
    "prob_matrix_deviation",
    "feature_signal_f1",
    "degree_signal_f1",
    "structure_signal_f1",
    "structure_consistency",
    "degree_consistency",
    "feature_consistency",
)

UNIVERSE_SIZE = 15


@dataclass(frozen=True)
class SensitivityConfig:
    family_count: int = 100
    graphs_per_family: int = 30
    seed: int = 42
    significance: float = 0.05
    threads: int = 1


@dataclass
class SensitivityResult:
    parameters: tuple[str, ...]
    metrics: tuple[str, ...]
    pearson_r: np.ndarray
    p_value: np.ndarray
    significant: np.ndarray
    parameter_values: np.ndarray
    metric_values: np.ndarray
    failed_families: int = 0
    failures: list[str] = field(default_factory=list)

    def cell(self, parameter: str, metric: str) -> dict:
        i = self.parameters.index(parameter)
        j = self.metrics.index(metric)
        return {
            "pearson_r": float(self.pearson_r[i, j]),
            "p_value": float(self.p_value[i, j]),
            "significant": bool(self.significant[i, j]),
        }

    def to_json_dict(self) -> dict:
        return {
            "parameters": list(self.parameters),
            "metrics": list(self.metrics),
            "failed_families": self.failed_families,
            "cells": [
                {
                    "parameter": p,
                    "metric": m,
                    **{
                        key: (None if isinstance(v, float) and not np.isfinite(v) else v)
                        for key, v in self.cell(p, m).items()
                    },
                }
                for p in self.parameters
                for m in self.metrics
            ],
        }

    def to_csv_text(self, which: str = "pearson_r") -> str:
        matrix = getattr(self, which)
        lines = ["parameter," + ",".join(self.metrics)]
        for i, p in enumerate(self.parameters):
            cells = []
            for j in range(len(self.metrics)):
                v = matrix[i, j]
                cells.append("" if not np.isfinite(float(v)) else repr(float(v)))
            lines.append(f"{p}," + ",".join(cells))
        return "\n".join(lines) + "\n"


def sample_subrange(
    stream: DeterministicStream, lo: float, hi: float
) -> tuple[float, float]:
    """Uniformly placed sub-range whose width is 5-20% of the full span."""
    span = hi - lo
    width = stream.uniform(0.05, 0.20) * span
    start = stream.uniform(lo, hi - width)
    return float(start), float(start + width)


def sample_family_setup(
    stream: DeterministicStream,
    graphs_per_family: int,
) -> tuple[UniverseConfig, FamilyConfig, dict[str, float]]:
    """One fully randomized configuration plus its scalar parameter summary.

    Draw order: propensity variance, feature dim, center variance, cluster
    variance, node bounds, community bounds, homophily, degree, separation,
    power-law sub-ranges, then the universe seed.
    """
    eps = float(stream.uniform(0.0, 1.0))
    feature_dim = int(stream.integers(10, 101))
    center_var = float(stream.uniform(0.1, 1.0))
    cluster_var = float(stream.uniform(0.1, 1.0))

    n_min = int(stream.integers(50, 401))
    n_max = int(stream.integers(max(100, n_min), 1001))
    k_min = int(stream.integers(2, UNIVERSE_SIZE + 1))
    k_max = int(stream.integers(max(4, k_min), UNIVERSE_SIZE + 1))

    h_range = sample_subrange(stream, 0.0, 1.0)
    d_range = sample_subrange(stream, 2.0, 20.0)
    rho_range = sample_subrange(stream, 0.0, 1.0)
    alpha_range = sample_subrange(stream, 1.5, 4.5)
    seed = int(stream.integers(0, 2**63))

    universe_config = UniverseConfig(
        community_count=UNIVERSE_SIZE,
        edge_propensity_variance=eps,
        feature_dim=feature_dim,
        center_variance=center_var,
        cluster_variance=cluster_var,
        seed=seed,
    )
    family_config = FamilyConfig(
        graph_count=graphs_per_family,
        node_range=(n_min, n_max),
        community_range=(k_min, k_max),
        homophily_range=h_range,
        degree_range=d_range,
        degree_separation_range=rho_range,
        power_law_range=alpha_range,
    )
    values = {
        "edge_propensity_variance": eps,
        "feature_dim": float(feature_dim),
        "center_variance": center_var,
        "cluster_variance": cluster_var,
        "node_count": (n_min + n_max) / 2.0,
        "community_count": (k_min + k_max) / 2.0,
        "homophily": (h_range[0] + h_range[1]) / 2.0,
        "avg_degree": (d_range[0] + d_range[1]) / 2.0,
        "degree_separation": (rho_range[0] + rho_range[1]) / 2.0,
        "power_law": (alpha_range[0] + alpha_range[1]) / 2.0,
    }
    return universe_config, family_config, values


def _family_job(args: tuple[int, int, int]) -> tuple[int, dict | None, dict | None, str | None]:
    family_index, base_seed, graphs_per_family = args
    stream = rng_for_sensitivity(base_seed, family_index)
    universe_config, family_config, values = sample_family_setup(stream, graphs_per_family)
    try:
        universe = build_universe(universe_config)
        instances = generate_family(universe, family_config)
        report = validate_family(instances, universe)
    except Exception as exc:  # noqa: BLE001 - excluded with a count in the result
        return family_index, values, None, f"{type(exc).__name__}: {exc}"
    metrics = {name: report.family.get(f"{name}_mean") for name in PER_GRAPH_METRICS}
    metrics["feature_consistency"] = report.family.get("feature_consistency")
    return family_index, values, metrics, None


def run_sensitivity(config: SensitivityConfig | None = None) -> SensitivityResult:
    config = config or SensitivityConfig()
    jobs = [
        (i, config.seed, config.graphs_per_family) for i in range(config.family_count)
    ]
    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(_family_job, jobs))
    else:
        outcomes = [_family_job(job) for job in jobs]
    outcomes.sort(key=lambda o: o[0])

    kept = [(values, metrics) for _, values, metrics, err in outcomes if err is None]
    failures = [f"family {i}: {err}" for i, _, _, err in outcomes if err is not None]
    for message in failures:
        logger.warning("sensitivity %s", message)

    n_kept = len(kept)
    parameter_values = np.array(
        [[values[p] for values, _ in kept] for p in PARAMETERS], dtype=float
    )
    metric_values = np.full((len(METRICS), n_kept), np.nan)
    for j, (_, metrics) in enumerate(kept):
        for mi, name in enumerate(METRICS):
            value = metrics.get(name)
            if value is not None:
                metric_values[mi, j] = value

    shape = (len(PARAMETERS), len(METRICS))
    r = np.full(shape, np.nan)
    p = np.full(shape, np.nan)
    significant = np.zeros(shape, dtype=bool)
    for i in range(len(PARAMETERS)):
        for j in range(len(METRICS)):
            mask = np.isfinite(metric_values[j])
            if mask.sum() < 3:
                continue
            r_ij, p_ij = pearson_with_pvalue(parameter_values[i, mask], metric_values[j, mask])
            r[i, j] = r_ij
            p[i, j] = p_ij
            significant[i, j] = bool(np.isfinite(p_ij) and p_ij < config.significance)

    return SensitivityResult(
        parameters=PARAMETERS,
        metrics=METRICS,
        pearson_r=r,
        p_value=p,
        significant=significant,
        parameter_values=parameter_values,
        metric_values=metric_values,
        failed_families=len(failures),
        failures=failures,
    )
