"""Deterministic force-directed 2-D layout for preview rendering."""

from __future__ import annotations

import numpy as np

from .core import DeterministicStream


def force_directed_layout(
    n: int,
    edges: np.ndarray,
    stream: DeterministicStream,
    iterations: int | None = None,
) -> np.ndarray:
    """Fruchterman-Reingold style layout seeded from the given stream.

    Iteration count degrades with size so large previews stay responsive;
    it is a pure function of n, keeping payloads reproducible.
    """
    if iterations is None:
        iterations = 50 if n <= 500 else 20
    pos = stream.uniform(-1.0, 1.0, size=(n, 2))
    if n == 1 or len(edges) == 0:
        return pos
    k = 1.0 / np.sqrt(n)
    temperature = 0.1
    cooling = temperature / (iterations + 1)
    src, dst = edges[:, 0], edges[:, 1]
    for _ in range(iterations):
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.linalg.norm(delta, axis=-1)
        np.fill_diagonal(dist, 1.0)
        repulsion = (k * k / dist**2)[:, :, None] * delta
        force = repulsion.sum(axis=1)

        edge_delta = pos[src] - pos[dst]
        edge_dist = np.linalg.norm(edge_delta, axis=1, keepdims=True)
        edge_dist[edge_dist == 0] = 1e-9
        pull = edge_delta * (edge_dist / k)
        np.add.at(force, src, -pull)
        np.add.at(force, dst, pull)

        magnitude = np.linalg.norm(force, axis=1, keepdims=True)
        magnitude[magnitude == 0] = 1e-9
        pos += force / magnitude * np.minimum(magnitude, temperature)
        temperature -= cooling
    # normalize into [-1, 1] box for the renderer
    span = np.abs(pos).max()
    return pos / span if span > 0 else pos
