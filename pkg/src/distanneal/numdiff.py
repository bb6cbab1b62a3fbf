"""Finite-difference derivatives used as independent checks on analytic code."""

from __future__ import annotations

import math

import numpy as np


def fd_step(x, rel: float = 1e-5) -> float:
    return rel * (1.0 + float(np.linalg.norm(x)))


def central_gradient(fun, x, h=None, order: int = 4) -> np.ndarray:
    """Central-difference gradient of scalar ``fun`` at a single point ``x``.

    ``order=2`` is the three-point stencil with step ``1e-5 (1 + |x|)``;
    ``order=4`` the five-point stencil with step ``1e-4 (1 + |x|)``, which
    keeps truncation error small where third derivatives are large. All
    probes are evaluated in one vectorized call.
    """
    x = np.asarray(x, dtype=float)
    d = x.size
    if order == 2:
        h = fd_step(x) if h is None else h
        E = h * np.eye(d)
        vals = np.asarray(fun(np.concatenate([x + E, x - E])), dtype=float)
        return (vals[:d] - vals[d:]) / (2 * h)
    if order != 4:
        raise ValueError("order must be 2 or 4")
    h = fd_step(x, 1e-4) if h is None else h
    E = h * np.eye(d)
    vals = np.asarray(fun(np.concatenate([x + 2 * E, x + E, x - E, x - 2 * E])), dtype=float)
    p2, p1, m1, m2 = (vals[i * d:(i + 1) * d] for i in range(4))
    return (-p2 + 8 * p1 - 8 * m1 + m2) / (12 * h)


def hessian_from_gradient(grad, x, h=None) -> np.ndarray:
    """Symmetrized central differences of an analytic gradient."""
    x = np.asarray(x, dtype=float)
    h = fd_step(x) if h is None else h
    E = h * np.eye(x.size)
    G = np.asarray(grad(np.concatenate([x + E, x - E])), dtype=float)
    H = (G[: x.size] - G[x.size:]).T / (2 * h)
    return 0.5 * (H + H.T)


def laplacian_fd(fun, X, rel: float = 1e-4) -> np.ndarray:
    """Central second differences summed over coordinates, for points ``X`` (M, dim)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    M, d = X.shape
    h = rel * (1.0 + np.linalg.norm(X, axis=1))
    f0 = np.asarray(fun(X), dtype=float)
    total = np.zeros(M)
    for i in range(d):
        shift = np.zeros_like(X)
        shift[:, i] = h
        total += (np.asarray(fun(X + shift)) - 2 * f0 + np.asarray(fun(X - shift))) / h**2
    return total


def one_sided_derivatives(fun, x0: float, side: int, width: float, max_order: int = 3,
                          degree: int = 10, n_points: int = 24) -> np.ndarray:
    """One-sided derivatives of orders ``0..max_order`` of a 1-D function at ``x0``.

    Fits a polynomial of ``degree`` to ``fun`` on Chebyshev nodes in
    ``(x0, x0 + side * width]`` (the junction itself is never sampled) and
    differentiates the fit at ``x0``. This is a high-order one-sided
    difference stencil; it is exact for polynomials up to ``degree``.
    """
    if side not in (-1, 1):
        raise ValueError("side must be -1 or +1")
    j = np.arange(n_points)
    u = (1 - np.cos(np.pi * (j + 0.5) / n_points)) / 2  # nodes in (0, 1)
    vals = np.asarray([fun(x0 + side * width * ui) for ui in u], dtype=float)
    coef = np.polynomial.polynomial.polyfit(u, vals, degree)
    return np.array([math.factorial(k) * coef[k] / (side * width) ** k for k in range(max_order + 1)])
