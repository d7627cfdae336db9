"""Metric multidimensional scaling by SMACOF stress majorization.

Projects an n x n distance matrix to 2-D coordinates from a seeded random
start. Each iteration applies the Guttman transform, which never
increases the raw stress

    stress = sum_{i<j} (d_ij - delta_ij)^2

where delta is the input matrix and d the pairwise Euclidean distances of
the current configuration. Raw (unnormalized) stress is reported; its
absolute value therefore scales with the magnitude of the input
distances. The output configuration is centered, but rotation and
reflection remain free, so downstream comparisons should use pairwise
distances rather than raw coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .store import Metric

_DISTANCE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class MdsResult:
    """Projected coordinates plus the stress trajectory that produced them."""

    coordinates: np.ndarray
    stress: float
    iterations: int
    converged: bool
    stress_trace: tuple[float, ...]


def _validate_distance_matrix(delta) -> np.ndarray:
    values = np.asarray(delta, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValidationError(f"distance matrix must be square, got shape {values.shape}")
    n = values.shape[0]
    if n < 2:
        raise ValidationError("need at least two points to project")
    if not np.all(np.isfinite(values)):
        raise ValidationError("distance matrix contains non-finite entries")
    if np.any(values < 0):
        raise ValidationError("distance matrix contains negative entries")
    if np.any(np.diag(values) != 0.0):
        raise ValidationError("distance matrix diagonal must be zero")
    if not np.array_equal(values, values.T):
        raise ValidationError("distance matrix must be symmetric")
    return values


def _pairwise_euclidean(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _raw_stress(delta: np.ndarray, dist: np.ndarray) -> float:
    diff = dist - delta
    return float(np.sum(np.triu(diff, k=1) ** 2))


def _smacof_once(
    delta: np.ndarray, seed: int, max_iter: int, eps: float
) -> MdsResult:
    n = delta.shape[0]
    rng = np.random.default_rng(seed)
    scale = delta[delta > 0].mean() if np.any(delta > 0) else 1.0
    coords = rng.standard_normal((n, 2)) * scale
    dist = _pairwise_euclidean(coords)
    stress = _raw_stress(delta, dist)
    trace = [stress]
    converged = False
    iterations = 0
    for _ in range(max_iter):
        # Guttman transform: X <- (1/n) B(X) X
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dist > _DISTANCE_FLOOR, delta / dist, 0.0)
        b = -ratio
        np.fill_diagonal(b, 0.0)
        np.fill_diagonal(b, -b.sum(axis=1))
        new_coords = (b @ coords) / n
        new_dist = _pairwise_euclidean(new_coords)
        new_stress = _raw_stress(delta, new_dist)
        iterations += 1
        if new_stress > stress:
            # Majorization cannot increase stress; a float-level uptick
            # means the numerical floor is reached. Keep the prior iterate.
            converged = True
            break
        coords, dist = new_coords, new_dist
        trace.append(new_stress)
        if new_stress == 0.0:
            stress = new_stress
            converged = True
            break
        if stress > 0 and (stress - new_stress) / stress < eps:
            stress = new_stress
            converged = True
            break
        stress = new_stress
    coords = coords - coords.mean(axis=0)
    return MdsResult(
        coordinates=coords,
        stress=stress,
        iterations=iterations,
        converged=converged,
        stress_trace=tuple(trace),
    )


def mds_project(
    delta,
    seed: int,
    max_iter: int = 300,
    eps: float = 1e-6,
    restarts: int = 1,
) -> MdsResult:
    """Project a distance matrix to 2-D, keeping the best of ``restarts`` runs.

    Runs SMACOF from seeded random configurations (seed, seed+1, ...) and
    returns the result with the lowest final stress. Iteration stops when
    the relative stress decrease falls below ``eps`` or after ``max_iter``
    Guttman updates.
    """
    values = _validate_distance_matrix(delta)
    if max_iter < 1:
        raise ValidationError(f"max_iter must be >= 1, got {max_iter}")
    if restarts < 1:
        raise ValidationError(f"restarts must be >= 1, got {restarts}")
    best: MdsResult | None = None
    for i in range(restarts):
        result = _smacof_once(values, seed + i, max_iter, eps)
        if best is None or result.stress < best.stress:
            best = result
    return best


def pairwise_distances(vectors, metric: Metric = Metric.L2) -> np.ndarray:
    """Symmetric distance matrix over a list of same-dimension vectors."""
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise ValidationError("need a non-empty 2-D array of vectors")
    if metric is Metric.L2:
        diff = matrix[:, None, :] - matrix[None, :, :]
        full = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    elif metric is Metric.COSINE:
        norms = np.linalg.norm(matrix, axis=1)
        if np.any(norms == 0.0):
            raise ValidationError("zero vector is undefined under the cosine metric")
        sims = (matrix @ matrix.T) / np.outer(norms, norms)
        full = np.clip(1.0 - sims, 0.0, 2.0)
    else:
        raise ValidationError(f"unknown metric {metric!r}")
    # Mirror the upper triangle so the result is exactly symmetric with an
    # exactly zero diagonal.
    upper = np.triu(full, k=1)
    return upper + upper.T
