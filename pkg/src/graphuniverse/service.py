"""Local HTTP API backing the explorer UI and scripted clients.

A thin adapter over the library: every response is reproducible from library
calls, universes are cached by a content hash of their config, and dataset
jobs run on a small worker pool producing the same archive bytes as the CLI.
"""

from __future__ import annotations

import hashlib
import shutil
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, Response
from pydantic import BaseModel, Field

from .core import ConfigError, FamilyConfig, Universe, UniverseConfig, UnsatisfiableHomophilyError, rng_for_layout
from .dataset import canonical_json, pack_dataset_dir, universe_config_to_dict, write_dataset
from .layout import force_directed_layout
from .sampler import FamilyGenerationError, generate_family, generate_graph
from .universe import build_universe
from .validation import (
    average_degree,
    degree_tail_ratio_99,
    graph_homophily,
    validate_family,
)

PREVIEW_LIMIT = 10
VALIDATE_LIMIT = 100


class UniverseBody(BaseModel):
    community_count: int
    edge_propensity_variance: float = 0.5
    feature_dim: int = 15
    center_variance: float = 0.2
    cluster_variance: float = 0.5
    seed: int = 42


class FamilyBody(BaseModel):
    graph_count: int = 30
    node_range: tuple[int, int] = (50, 200)
    community_range: tuple[int, int] = (4, 6)
    homophily_range: tuple[float, float] = (0.4, 0.6)
    degree_range: tuple[float, float] = (1.0, 5.0)
    degree_separation_range: tuple[float, float] = (0.5, 0.8)
    power_law_range: tuple[float, float] = (2.0, 2.5)
    seed: int | None = None


class PreviewBody(BaseModel):
    universe_id: str
    family: FamilyBody
    sample_count: int = Field(default=3, ge=1)


class DatasetBody(BaseModel):
    universe_id: str
    family: FamilyBody


class ValidateBody(BaseModel):
    universe_id: str
    family: FamilyBody
    graph_count: int = Field(default=30, ge=1)


@dataclass
class Job:
    job_id: str
    state: str = "pending"  # pending | running | done | failed
    progress: int = 0
    total: int = 0
    error: str | None = None
    archive_path: Path | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def status(self) -> dict:
        with self.lock:
            return {
                "job_id": self.job_id,
                "state": self.state,
                "progress": self.progress,
                "total": self.total,
                "error": self.error,
            }


def _universe_config_from_body(body: UniverseBody) -> UniverseConfig:
    try:
        return UniverseConfig(
            community_count=body.community_count,
            edge_propensity_variance=body.edge_propensity_variance,
            feature_dim=body.feature_dim,
            center_variance=body.center_variance,
            cluster_variance=body.cluster_variance,
            seed=body.seed,
        )
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def _family_config_from_body(body: FamilyBody, universe: Universe) -> FamilyConfig:
    try:
        config = FamilyConfig(
            graph_count=body.graph_count,
            node_range=body.node_range,
            community_range=body.community_range,
            homophily_range=body.homophily_range,
            degree_range=body.degree_range,
            degree_separation_range=body.degree_separation_range,
            power_law_range=body.power_law_range,
            seed=body.seed,
        )
        config.check_against_universe(universe.community_count)
        return config
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def universe_content_id(config: UniverseConfig) -> str:
    doc = canonical_json(universe_config_to_dict(config))
    return hashlib.sha256(doc.encode()).hexdigest()[:16]


def dataset_job_id(universe_id: str, family: FamilyConfig) -> str:
    from .dataset import family_config_to_dict

    doc = universe_id + canonical_json(family_config_to_dict(family))
    return hashlib.sha256(doc.encode()).hexdigest()[:16]


def create_app(
    data_dir: str | Path | None = None,
    ui_dir: str | Path | None = None,
    max_workers: int = 2,
) -> FastAPI:
    app = FastAPI(title="graphuniverse service")
    app.add_middleware(
        CORSMiddleware,
        allow_origin_regex=r"^https?://(localhost|127\.0\.0\.1)(:\d+)?$",
        allow_methods=["*"],
        allow_headers=["*"],
    )

    workdir = Path(data_dir) if data_dir else Path(tempfile.mkdtemp(prefix="graphuniverse-"))
    workdir.mkdir(parents=True, exist_ok=True)

    universes: dict[str, Universe] = {}
    jobs: dict[str, Job] = {}
    cache_lock = threading.Lock()
    executor = ThreadPoolExecutor(max_workers=max_workers)
    app.state.data_dir = workdir
    app.state.executor = executor

    def get_universe(universe_id: str) -> Universe:
        with cache_lock:
            universe = universes.get(universe_id)
        if universe is None:
            raise HTTPException(status_code=404, detail=f"unknown universe {universe_id!r}")
        return universe

    @app.post("/api/universe")
    def post_universe(body: UniverseBody):
        config = _universe_config_from_body(body)
        universe_id = universe_content_id(config)
        with cache_lock:
            if universe_id not in universes:
                universes[universe_id] = build_universe(config)
            universe = universes[universe_id]

        propensity = universe.propensity_matrix
        centroids = universe.feature_centroids
        distances = np.linalg.norm(
            centroids[:, None, :] - centroids[None, :, :], axis=-1
        )
        off_diag = distances[~np.eye(len(distances), dtype=bool)]
        return {
            "universe_id": universe_id,
            "summary": {
                "community_count": universe.community_count,
                "feature_dim": universe.config.feature_dim,
                "propensity": {
                    "min": float(propensity.min()),
                    "mean": float(propensity.mean()),
                    "max": float(propensity.max()),
                },
                "centroid_distance": {
                    "min": float(off_diag.min()),
                    "mean": float(off_diag.mean()),
                    "max": float(off_diag.max()),
                },
            },
        }

    @app.post("/api/preview")
    def post_preview(body: PreviewBody):
        if body.sample_count > PREVIEW_LIMIT:
            raise HTTPException(
                status_code=400, detail=f"sample_count must be <= {PREVIEW_LIMIT}"
            )
        universe = get_universe(body.universe_id)
        family = _family_config_from_body(body.family, universe)
        universe_seed = universe.config.seed
        family_seed = family.resolved_seed(universe_seed)

        graphs = []
        homophily_values, degree_values = [], []
        for index in range(body.sample_count):
            try:
                instance = generate_graph(universe, family, index)
            except UnsatisfiableHomophilyError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            layout_stream = rng_for_layout(universe_seed, family_seed, index)
            layout = force_directed_layout(instance.n, instance.edges, layout_stream)
            homophily = graph_homophily(instance)
            degree = average_degree(instance)
            homophily_values.append(homophily)
            degree_values.append(degree)
            graphs.append(
                {
                    "graph_index": index,
                    "node_count": instance.n,
                    "edge_count": instance.edge_count,
                    "communities": instance.universe_labels().tolist(),
                    "edges": instance.edges.tolist(),
                    "layout": [[float(x), float(y)] for x, y in layout],
                    "metrics": {
                        "homophily": homophily,
                        "avg_degree": degree,
                        "degree_tail_ratio_99": degree_tail_ratio_99(instance),
                        "repair_edge_count": instance.repair_edge_count,
                    },
                }
            )
        present = [h for h in homophily_values if h is not None]
        return {
            "graphs": graphs,
            "metrics": {
                "homophily_mean": float(np.mean(present)) if present else None,
                "avg_degree_mean": float(np.mean(degree_values)) if degree_values else None,
            },
        }

    def _run_dataset_job(job: Job, universe: Universe, family: FamilyConfig):
        with job.lock:
            job.state = "running"
            job.total = family.graph_count

        def on_progress(_index: int):
            with job.lock:
                job.progress += 1

        try:
            instances = generate_family(universe, family, threads=1, on_progress=on_progress)
            out_dir = workdir / f"dataset-{job.job_id}"
            if out_dir.exists():
                shutil.rmtree(out_dir)
            write_dataset(out_dir, universe, family, instances)
            archive = workdir / f"dataset-{job.job_id}.zip"
            archive.write_bytes(pack_dataset_dir(out_dir))
            with job.lock:
                job.archive_path = archive
                job.state = "done"
        except Exception as exc:  # noqa: BLE001 - job state carries the diagnostic
            with job.lock:
                job.state = "failed"
                job.error = f"{type(exc).__name__}: {exc}"

    @app.post("/api/dataset")
    def post_dataset(body: DatasetBody):
        universe = get_universe(body.universe_id)
        family = _family_config_from_body(body.family, universe)
        job_id = dataset_job_id(body.universe_id, family)
        with cache_lock:
            job = jobs.get(job_id)
            if job is None:
                job = Job(job_id=job_id, total=family.graph_count)
                jobs[job_id] = job
                executor.submit(_run_dataset_job, job, universe, family)
        return {"job_id": job_id}

    @app.get("/api/dataset/{job_id}")
    def get_dataset(job_id: str):
        with cache_lock:
            job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        status = job.status()
        if status["state"] == "done":
            return FileResponse(
                job.archive_path,
                media_type="application/zip",
                filename=f"dataset-{job_id}.zip",
            )
        if status["state"] == "failed":
            return Response(
                content=canonical_json(status),
                status_code=500,
                media_type="application/json",
            )
        return status

    @app.get("/api/dataset/{job_id}/status")
    def get_dataset_status(job_id: str):
        with cache_lock:
            job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        return job.status()

    @app.post("/api/validate")
    def post_validate(body: ValidateBody):
        if body.graph_count > VALIDATE_LIMIT:
            raise HTTPException(
                status_code=400, detail=f"graph_count must be <= {VALIDATE_LIMIT}"
            )
        universe = get_universe(body.universe_id)
        family_body = body.family.model_copy(update={"graph_count": body.graph_count})
        family = _family_config_from_body(family_body, universe)
        try:
            instances = generate_family(universe, family, threads=1)
        except UnsatisfiableHomophilyError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except FamilyGenerationError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        report = validate_family(instances, universe)
        return report.to_json_dict()

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
