"""Random communication graphs and their Laplacians.

Agents are indexed from 0. A :class:`GraphModel` is a base graph plus an
optional per-edge activation probability; each call to :func:`sample` draws a
fresh, independent realization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class LaplacianSample:
    laplacian: np.ndarray

    @property
    def n_agents(self) -> int:
        return self.laplacian.shape[0]


def laplacian_from_adjacency(adjacency) -> np.ndarray:
    A = np.asarray(adjacency, dtype=np.int64)
    return np.diag(A.sum(axis=1)) - A


def _check_adjacency(A: np.ndarray) -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise GraphError("adjacency must be a square matrix")
    if not np.array_equal(A, A.T):
        raise GraphError("adjacency must be symmetric")
    if np.any(np.diag(A) != 0):
        raise GraphError("self-loops are not allowed")
    if not np.all((A == 0) | (A == 1)):
        raise GraphError("adjacency entries must be 0 or 1")


@dataclass(frozen=True)
class GraphModel:
    """``variant`` is ``"fixed"`` or ``"edge_activation"``.

    With edge activation every base edge is present independently with
    probability ``p`` at each iteration, so the mean Laplacian is
    ``p * L_base``.
    """

    adjacency: np.ndarray
    variant: str = "fixed"
    p: float = 1.0
    edges: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        A = np.asarray(self.adjacency, dtype=np.int64)
        _check_adjacency(A)
        if self.variant not in ("fixed", "edge_activation"):
            raise GraphError(f"unknown graph variant {self.variant!r}")
        if self.variant == "edge_activation" and not 0 < self.p <= 1:
            raise GraphError(f"activation probability must lie in (0, 1], got {self.p}")
        object.__setattr__(self, "adjacency", A)
        i, j = np.nonzero(np.triu(A, 1))
        object.__setattr__(self, "edges", np.column_stack([i, j]))

    @property
    def n_agents(self) -> int:
        return self.adjacency.shape[0]

    @property
    def is_random(self) -> bool:
        return self.variant == "edge_activation" and self.p < 1

    def mean_laplacian(self) -> np.ndarray:
        L = laplacian_from_adjacency(self.adjacency).astype(float)
        return self.p * L if self.variant == "edge_activation" else L


def ring(n: int) -> np.ndarray:
    A = np.zeros((n, n), dtype=np.int64)
    if n < 2:
        return A
    idx = np.arange(n)
    A[idx, (idx + 1) % n] = 1
    A[(idx + 1) % n, idx] = 1
    return A


def path(n: int) -> np.ndarray:
    A = np.zeros((n, n), dtype=np.int64)
    idx = np.arange(n - 1)
    A[idx, idx + 1] = 1
    A[idx + 1, idx] = 1
    return A


def complete(n: int) -> np.ndarray:
    return np.ones((n, n), dtype=np.int64) - np.eye(n, dtype=np.int64)


def star(n: int) -> np.ndarray:
    A = np.zeros((n, n), dtype=np.int64)
    A[0, 1:] = 1
    A[1:, 0] = 1
    return A


def empty(n: int) -> np.ndarray:
    return np.zeros((n, n), dtype=np.int64)


def from_edges(n: int, edges) -> np.ndarray:
    A = np.zeros((n, n), dtype=np.int64)
    for i, j in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"edge ({i}, {j}) out of range for {n} agents")
        if i == j:
            raise GraphError(f"self-loop at agent {i}")
        A[i, j] = A[j, i] = 1
    return A


TOPOLOGIES = {"ring": ring, "path": path, "complete": complete, "star": star, "empty": empty}


def topology(name: str, n: int) -> np.ndarray:
    try:
        return TOPOLOGIES[name](n)
    except KeyError:
        raise GraphError(f"unknown topology {name!r}; choose from {sorted(TOPOLOGIES)}") from None


def sample_edge_mask(model: GraphModel, rng: np.random.Generator, size=None) -> np.ndarray:
    """Boolean activity of each base edge; ``size`` prepends sample axes.

    One uniform draw per edge per sample, including for the fixed variant, so
    the stream position does not depend on the variant.
    """
    shape = (len(model.edges),) if size is None else tuple(np.atleast_1d(size)) + (len(model.edges),)
    u = rng.random(shape)
    if model.variant == "fixed":
        return np.ones(shape, dtype=bool)
    return u < model.p


def laplacian_from_mask(model: GraphModel, mask) -> np.ndarray:
    n = model.n_agents
    A = np.zeros((n, n), dtype=np.int64)
    active = model.edges[np.asarray(mask, dtype=bool)]
    A[active[:, 0], active[:, 1]] = 1
    A[active[:, 1], active[:, 0]] = 1
    return laplacian_from_adjacency(A)


def sample(model: GraphModel, rng: np.random.Generator) -> LaplacianSample:
    """Draw one Laplacian ``L_t`` independently of all previous draws."""
    return LaplacianSample(laplacian_from_mask(model, sample_edge_mask(model, rng)))


def neighbors(sample: LaplacianSample, n: int) -> set[int]:
    if not 0 <= n < sample.n_agents:
        raise IndexError(f"agent index {n} out of range [0, {sample.n_agents})")
    return {int(j) for j in np.flatnonzero(sample.laplacian[n] == -1)}


def lambda2_of_mean(model: GraphModel) -> float:
    """Algebraic connectivity of the exact mean Laplacian ``E[L_t]``."""
    if model.n_agents < 2:
        return 0.0
    eig = np.linalg.eigvalsh(model.mean_laplacian())
    lam2 = float(eig[1])
    # eigvalsh returns roundoff-level values for the zero eigenvalues
    scale = max(1.0, float(eig[-1]))
    return 0.0 if abs(lam2) < 1e-12 * scale else lam2


def consensus_term(model: GraphModel, X: np.ndarray, mask) -> np.ndarray:
    """``(L_t X)`` row by row, i.e. ``sum_{l in Omega_n} (x_n - x_l)`` for each agent.

    ``X`` has shape ``(..., N, d)`` and ``mask`` shape ``(..., E)``. Edges are
    accumulated in a fixed order so results do not depend on batch shape.
    """
    out = np.zeros_like(X)
    mask = np.asarray(mask, dtype=X.dtype)
    for e, (i, j) in enumerate(model.edges):
        diff = mask[..., e, None] * (X[..., i, :] - X[..., j, :])
        out[..., i, :] += diff
        out[..., j, :] -= diff
    return out
