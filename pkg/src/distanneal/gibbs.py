"""Grid quadrature of the Gibbs densities ``exp(-2U(x)/eps^2) / Z`` for d <= 2.

As ``eps -> 0`` these densities concentrate on the global minimizers of ``U``;
:func:`mass_near` measures how much of the mass sits near given points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .objective import ObjectiveSet


class GibbsError(ValueError):
    pass


@dataclass(frozen=True)
class GibbsGrid:
    dim: int
    bounds: tuple
    resolution: int
    epsilon: float
    points: np.ndarray          # cell midpoints, shape (resolution,)*dim + (dim,)
    density: np.ndarray         # normalized density at midpoints
    log_z: float
    objective: ObjectiveSet

    @property
    def cell_volume(self) -> float:
        return float(np.prod([(b - a) / self.resolution for a, b in self.bounds]))

    @property
    def z(self) -> float:
        return float(np.exp(self.log_z))

    def total_mass(self) -> float:
        return float(self.density.sum() * self.cell_volume)

    def density_at(self, x) -> np.ndarray:
        """Normalized density at arbitrary points (uses the grid's ``Z``)."""
        x = np.asarray(x, dtype=float)
        return np.exp(-2 * self.objective.value(x) / self.epsilon**2 - self.log_z)


def _normalize_bounds(bounds, dim):
    b = np.asarray(bounds, dtype=float)
    if b.shape == (2,):
        b = np.tile(b, (dim, 1))
    if b.shape != (dim, 2) or np.any(b[:, 1] <= b[:, 0]):
        raise GibbsError(f"bounds must be [a, b] or one [a, b] per axis, got {bounds}")
    return tuple(map(tuple, b))


def build_grid(objective: ObjectiveSet, bounds, resolution: int, epsilon: float,
               leak_tol: float = 1e-12, max_adjacent_ratio: float = 10.0) -> GibbsGrid:
    """Midpoint-rule quadrature of the Gibbs density on a uniform grid.

    Raises :class:`GibbsError` when mass reaches the boundary cells (density
    above ``leak_tol`` times the peak) or when the grid cannot resolve the
    peak (adjacent-cell density ratio above ``max_adjacent_ratio``).
    """
    dim = objective.dim
    if dim > 2:
        raise GibbsError("grid oracle limited to d <= 2")
    if resolution < 64:
        raise GibbsError("resolution must be at least 64")
    if epsilon <= 0:
        raise GibbsError("epsilon must be positive")
    bounds = _normalize_bounds(bounds, dim)
    axes = [a + (np.arange(resolution) + 0.5) * (b - a) / resolution for a, b in bounds]
    points = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    cell = float(np.prod([(b - a) / resolution for a, b in bounds]))

    log_w = -2.0 * objective.value(points) / epsilon**2
    log_z = float(logsumexp(log_w) + np.log(cell))
    density = np.exp(log_w - log_z)

    peak = log_w.max()
    edge = np.ones(log_w.shape, dtype=bool)
    edge[(slice(1, -1),) * dim] = False
    if np.any(log_w[edge] - peak > np.log(leak_tol)):
        raise GibbsError("mass leaks to the grid boundary; enlarge bounds or decrease epsilon")

    idx = np.unravel_index(np.argmax(log_w), log_w.shape)
    for axis in range(dim):
        for off in (-1, 1):
            j = list(idx)
            j[axis] += off
            if 0 <= j[axis] < resolution and peak - log_w[tuple(j)] > np.log(max_adjacent_ratio):
                raise GibbsError("resolution too coarse to resolve the density peak")
    return GibbsGrid(dim, bounds, resolution, float(epsilon), points, density, log_z, objective)


def mass_near(grid: GibbsGrid, centers, radius: float) -> float:
    """Grid mass within ``radius`` of any center.

    Cells cut by the ball boundary count with their covered fraction.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if centers.shape[-1] != grid.dim:
        raise GibbsError(f"centers must have dimension {grid.dim}")
    for c in centers:
        for k, (a, b) in enumerate(grid.bounds):
            if not a <= c[k] <= b:
                raise GibbsError(f"center {c.tolist()} outside grid bounds")
    dist = _nearest(grid.points, centers)
    steps = np.array([(b - a) / grid.resolution for a, b in grid.bounds])
    half_diag = 0.5 * float(np.linalg.norm(steps))
    weight = (dist <= radius).astype(float)
    # cells cut by the sphere: fraction of a sub-lattice inside the ball
    cut = np.abs(dist - radius) <= half_diag
    if np.any(cut):
        sub = (np.arange(SUBCELLS) + 0.5) / SUBCELLS - 0.5
        offsets = np.stack(np.meshgrid(*([sub] * grid.dim), indexing="ij"), axis=-1).reshape(-1, grid.dim)
        probes = grid.points[cut][:, None, :] + offsets * steps
        weight[cut] = np.mean(_nearest(probes, centers) <= radius, axis=-1)
    return float((grid.density * weight).sum() * grid.cell_volume)


SUBCELLS = 16


def _nearest(points, centers):
    return np.linalg.norm(points[..., None, :] - centers, axis=-1).min(axis=-1)


def concentration_profile(objective: ObjectiveSet, bounds, resolution: int, epsilons, radius: float,
                          centers=None) -> list[tuple[float, float, float]]:
    """``(epsilon, radius, mass)`` rows around ``centers`` (default: known minimizers)."""
    centers = objective.minimizers if centers is None else centers
    if centers is None:
        raise GibbsError("no centers given and objective has no known minimizers")
    rows = []
    for eps in epsilons:
        grid = build_grid(objective, bounds, resolution, eps)
        rows.append((float(eps), float(radius), mass_near(grid, centers, radius)))
    return rows
