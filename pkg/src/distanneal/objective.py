"""Per-agent objectives and the sensor-network localization objective.

Every objective is a set of ``N`` local functions ``U_n : R^d -> R`` with
analytic gradients. The network objective is their sum ``U = sum_n U_n``.

Evaluators broadcast over leading axes: ``local_value(n, x)`` accepts an array
of shape ``(..., dim)`` and returns shape ``(...)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ConfigurationError(ValueError):
    """Raised for invalid objective parameters."""


# ---------------------------------------------------------------------------
# C^3 smoothstep and the ring-distance prototype g
# ---------------------------------------------------------------------------


def smoothstep(s, order: int = 0):
    """Degree-7 smoothstep ``35s^4 - 84s^5 + 70s^6 - 20s^7`` and derivatives.

    Clamped to 0 below ``s = 0`` and to 1 above ``s = 1``. Derivatives of
    orders 1-3 vanish at both ends, so blending with it is C^3.
    """
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    t = np.clip(s, 0.0, 1.0)
    if order == 0:
        return 35 * t**4 - 84 * t**5 + 70 * t**6 - 20 * t**7
    if order == 1:
        out = 140 * t**3 - 420 * t**4 + 420 * t**5 - 140 * t**6
    elif order == 2:
        out = 420 * t**2 - 1680 * t**3 + 2100 * t**4 - 840 * t**5
    elif order == 3:
        out = 840 * t - 5040 * t**2 + 8400 * t**3 - 4200 * t**4
    else:
        raise ValueError(f"order must be 0..3, got {order}")
    return np.where(inside, out, 0.0)


def _check_bridge(r, eps):
    if np.any(np.asarray(eps) <= 0) or np.any(np.asarray(eps) >= np.asarray(r) / 2):
        raise ConfigurationError(f"bridge eps must satisfy 0 < eps < r/2 (eps={eps}, r={r})")


def _g_all(y, r, eps):
    """Return (g, g', g'', g''') for arrays ``y`` with broadcasting ``r``, ``eps``."""
    y = np.asarray(y, dtype=float)
    r = np.asarray(r, dtype=float)
    half = r / 2
    start = half - eps
    p_in = -(y**2) + half**2
    p_out = (y - r) ** 2

    # bridge blend: p_in + h(s) * q with q = p_out - p_in
    s = (y - start) / eps
    q = p_out - p_in
    dq = 4 * y - 2 * r
    h0, h1, h2, h3 = (smoothstep(s, k) for k in range(4))
    b0 = p_in + h0 * q
    b1 = -2 * y + h1 * q / eps + h0 * dq
    b2 = -2 + h2 * q / eps**2 + 2 * h1 * dq / eps + 4 * h0
    b3 = h3 * q / eps**3 + 3 * h2 * dq / eps**2 + 12 * h1 / eps

    inner = y <= start
    outer = y >= half
    g0 = np.where(inner, p_in, np.where(outer, p_out, b0))
    g1 = np.where(inner, -2 * y, np.where(outer, 2 * (y - r), b1))
    g2 = np.where(inner, -2.0, np.where(outer, 2.0, b2))
    g3 = np.where(inner | outer, 0.0, b3)
    return g0, g1, g2, g3


def g_value(y, r, eps):
    """Ring-distance prototype ``g(y, r)``; zero at ``y = r``, C^3 in ``y``.

    Inner branch ``-y^2 + (r/2)^2`` for ``y <= r/2 - eps``, outer branch
    ``(y - r)^2`` for ``y >= r/2``, smoothstep blend in between.
    """
    _check_bridge(r, eps)
    out = _g_all(y, r, eps)[0]
    return float(out) if np.ndim(out) == 0 else out


def g_deriv(y, r, eps, order: int):
    """Derivative of ``g`` in ``y`` of the given order (1, 2 or 3)."""
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    _check_bridge(r, eps)
    out = _g_all(y, r, eps)[order]
    return float(out) if np.ndim(out) == 0 else out


def _f_core(x, r, eps):
    """Value and gradient of ``f(x, r) = g(|x|, r)`` for ``x`` of shape (..., 2)."""
    x = np.asarray(x, dtype=float)
    y = np.linalg.norm(x, axis=-1)
    g0, g1, _, _ = _g_all(y, r, eps)
    inner = y <= np.asarray(r) / 2 - eps
    safe = np.where(y > 0, y, 1.0)
    radial = (g1 / safe)[..., None] * x
    grad = np.where(inner[..., None], -2 * x, radial)
    return g0, grad


def f_value(x, r, eps):
    """``g(|x|, r)`` for points ``x`` in the plane."""
    _check_bridge(r, eps)
    out = _f_core(x, r, eps)[0]
    return float(out) if np.ndim(out) == 0 else out


def f_grad(x, r, eps):
    """Gradient of :func:`f_value`; equals ``-2x`` on the inner disc."""
    _check_bridge(r, eps)
    return _f_core(x, r, eps)[1]


# ---------------------------------------------------------------------------
# Objective sets
# ---------------------------------------------------------------------------


class ObjectiveSet:
    """Base class: ``N`` local objectives on ``R^dim``.

    Subclasses implement ``local_value`` and ``local_grad``; the rest is
    derived. ``minimizers`` (shape ``(m, dim)``) is the known global minimizer
    set, or None. ``tail_radius`` is a norm beyond which the objective is in
    its asymptotic regime; the assumption checker starts its spheres there.
    """

    name = "objective"

    def __init__(self, n_agents: int, dim: int, minimizers=None, tail_radius: float = 1.0):
        if n_agents < 1 or dim < 1:
            raise ConfigurationError("n_agents and dim must be positive")
        self.n_agents = int(n_agents)
        self.dim = int(dim)
        self.minimizers = None if minimizers is None else np.atleast_2d(np.asarray(minimizers, float))
        self.tail_radius = float(tail_radius)

    def local_value(self, n: int, x):
        raise NotImplementedError

    def local_grad(self, n: int, x):
        raise NotImplementedError

    def _check_agent(self, n):
        if not 0 <= n < self.n_agents:
            raise IndexError(f"agent index {n} out of range [0, {self.n_agents})")

    def _check_dim(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise ValueError(f"expected trailing dimension {self.dim}, got shape {x.shape}")
        return x

    def agent_grads(self, X):
        """Row ``n`` of the result is ``grad U_n(X[..., n, :])``.

        ``X`` has shape ``(..., N, dim)``; leading axes are independent batches.
        """
        X = self._check_dim(X)
        return np.stack([self.local_grad(n, X[..., n, :]) for n in range(self.n_agents)], axis=-2)

    def value(self, x):
        """Network objective ``U(x) = sum_n U_n(x)``."""
        x = self._check_dim(x)
        return sum(self.local_value(n, x) for n in range(self.n_agents))

    def grad(self, x):
        x = self._check_dim(x)
        return sum(self.local_grad(n, x) for n in range(self.n_agents))


class QuadraticObjective(ObjectiveSet):
    """``U_n(x) = |x - center|^2 + offset_n``."""

    name = "quadratic"

    def __init__(self, n_agents: int, dim: int, center=None, offsets=None):
        center = np.zeros(dim) if center is None else np.broadcast_to(np.asarray(center, float), (dim,)).copy()
        self.center = center
        self.offsets = np.zeros(n_agents) if offsets is None else np.asarray(offsets, float)
        if self.offsets.shape != (n_agents,):
            raise ConfigurationError("offsets must have one entry per agent")
        super().__init__(n_agents, dim, center, tail_radius=float(np.linalg.norm(center)) + 1.0)

    def local_value(self, n, x):
        self._check_agent(n)
        x = self._check_dim(x)
        return np.sum((x - self.center) ** 2, axis=-1) + self.offsets[n]

    def local_grad(self, n, x):
        self._check_agent(n)
        x = self._check_dim(x)
        return 2 * (x - self.center)

    def agent_grads(self, X):
        X = self._check_dim(X)
        return 2 * (X - self.center)


class DoubleWellObjective(ObjectiveSet):
    """One-dimensional ``U_n(x) = scale * (x^2 - 1)^2`` with global minima at +-1."""

    name = "doublewell"

    def __init__(self, n_agents: int = 1, scale: float = 1.0):
        if scale <= 0:
            raise ConfigurationError("scale must be positive")
        self.scale = float(scale)
        super().__init__(n_agents, 1, minimizers=[[-1.0], [1.0]], tail_radius=2.0)

    def local_value(self, n, x):
        self._check_agent(n)
        x = self._check_dim(x)[..., 0]
        return self.scale * (x**2 - 1) ** 2

    def local_grad(self, n, x):
        self._check_agent(n)
        x = self._check_dim(x)
        return self.scale * 4 * x * (x**2 - 1)

    def agent_grads(self, X):
        X = self._check_dim(X)
        return self.scale * 4 * X * (X**2 - 1)


def make_quadratic(dim: int, center=None, n_agents: int = 1, offsets=None) -> QuadraticObjective:
    return QuadraticObjective(n_agents, dim, center, offsets)


def make_double_well(scale: float = 1.0, n_agents: int = 1) -> DoubleWellObjective:
    return DoubleWellObjective(n_agents, scale)


# ---------------------------------------------------------------------------
# Sensor-network localization
# ---------------------------------------------------------------------------


@dataclass
class SensorField:
    """Sensors with known positions and exact ranges to every target.

    ``distances[n, k]`` is the range from sensor ``n`` to target ``k``.
    ``region_radius`` bounds the diameter of the region holding every sensor
    and target. ``bridge_eps`` is the width of the C^3 bridge in ``g``.
    """

    sensors: np.ndarray
    targets: np.ndarray
    distances: np.ndarray
    region_radius: float
    bridge_eps: float
    inner_only: bool = False

    @property
    def n_sensors(self) -> int:
        return len(self.sensors)

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    @classmethod
    def from_ground_truth(cls, sensors, targets, region_radius: float = 3.0, bridge_eps=None,
                          inner_only: bool = False) -> "SensorField":
        sensors = np.atleast_2d(np.asarray(sensors, float))
        targets = np.atleast_2d(np.asarray(targets, float))
        distances = np.linalg.norm(targets[None, :, :] - sensors[:, None, :], axis=-1)
        if bridge_eps is None:
            bridge_eps = default_bridge_eps(distances)
        field = cls(sensors, targets, distances, float(region_radius), float(bridge_eps), inner_only)
        field.validate()
        return field

    def validate(self) -> None:
        s, z, d = self.sensors, self.targets, self.distances
        if s.ndim != 2 or s.shape[1] != 2 or z.ndim != 2 or z.shape[1] != 2:
            raise ConfigurationError("sensor and target positions must be points in R^2")
        if d.shape != (len(s), len(z)):
            raise ConfigurationError(f"distances must have shape {(len(s), len(z))}")
        if np.any(d <= 0):
            raise ConfigurationError("all sensor-target distances must be positive")
        if self.region_radius <= 0:
            raise ConfigurationError("region_radius must be positive")
        if not 0 < self.bridge_eps < d.min() / 2:
            raise ConfigurationError(
                f"bridge_eps={self.bridge_eps} must lie in (0, min distance / 2 = {d.min() / 2})")
        pts = np.vstack([s, z])
        diam = np.max(np.linalg.norm(pts[:, None] - pts[None], axis=-1))
        if diam > self.region_radius:
            raise ConfigurationError(f"points span diameter {diam:.4g} > region_radius {self.region_radius}")


def default_bridge_eps(distances) -> float:
    return 0.125 * float(np.min(distances))


def pentagon_field(radius: float = 1.0, target=(0.25, 0.35), region_radius: float = 3.0,
                   inner_only: bool = False) -> SensorField:
    """Five sensors on a regular pentagon (first vertex at angle pi/2), one target."""
    angles = np.pi / 2 + 2 * np.pi * np.arange(5) / 5
    sensors = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    return SensorField.from_ground_truth(sensors, [target], region_radius, inner_only=inner_only)


def colinear_field() -> SensorField:
    """Negative control: sensors and target on the x-axis."""
    sensors = [[-1.0, 0.0], [-0.2, 0.0], [0.6, 0.0], [1.2, 0.0]]
    return SensorField.from_ground_truth(sensors, [[0.25, 0.0]], region_radius=3.0)


class LocalizationObjective(ObjectiveSet):
    """Target localization: ``x`` stacks ``T`` planar target estimates.

    With ``rho = |x| / T``, agent ``n`` uses the range-fitting sum
    ``sum_k f(x^k - s_n, d_nk)`` for ``rho < R``, the quadratic tail ``|x|^2``
    for ``rho >= R + 1`` and a smoothstep blend of the two in between.
    """

    name = "localization"

    def __init__(self, field: SensorField):
        field.validate()
        self.field = field
        T = field.n_targets
        super().__init__(field.n_sensors, 2 * T, minimizers=field.targets.reshape(1, -1),
                         tail_radius=(field.region_radius + 1) * T)

    def _eval(self, x, sensors, distances):
        """Value and gradient with sensors of shape (..., 2), distances (..., T)."""
        fld = self.field
        T = fld.n_targets
        lead = np.broadcast_shapes(x.shape[:-1], sensors.shape[:-1])
        x = np.broadcast_to(x, lead + x.shape[-1:])
        pts = x.reshape(x.shape[:-1] + (T, 2))
        diff = pts - sensors[..., None, :]
        y = np.linalg.norm(diff, axis=-1)
        g0, g1, _, _ = _g_all(y, distances, fld.bridge_eps)
        inner = y <= distances / 2 - fld.bridge_eps
        safe = np.where(y > 0, y, 1.0)
        fgrad = np.where(inner[..., None], -2 * diff, (g1 / safe)[..., None] * diff)
        ring_val = g0.sum(axis=-1)
        ring_grad = fgrad.reshape(x.shape[:-1] + (2 * T,))
        if fld.inner_only:
            return ring_val, ring_grad

        norm = np.linalg.norm(x, axis=-1)
        sq = norm**2
        u = norm / T - fld.region_radius
        h0 = smoothstep(u)
        h1 = smoothstep(u, 1)
        safe_norm = np.where(norm > 0, norm, 1.0)
        drho = x / (T * safe_norm[..., None])
        val = (1 - h0) * ring_val + h0 * sq
        grad = ((1 - h0)[..., None] * ring_grad + h0[..., None] * 2 * x
                + (h1 * (sq - ring_val))[..., None] * drho)
        # exact tail branch (avoids roundoff from a zero-weight blend)
        tail = u >= 1
        val = np.where(tail, sq, val)
        grad = np.where(tail[..., None], 2 * x, grad)
        return val, grad

    def local_value(self, n, x):
        self._check_agent(n)
        x = self._check_dim(x)
        return self._eval(x, self.field.sensors[n], self.field.distances[n])[0]

    def local_grad(self, n, x):
        self._check_agent(n)
        x = self._check_dim(x)
        return self._eval(x, self.field.sensors[n], self.field.distances[n])[1]

    def agent_grads(self, X):
        X = self._check_dim(X)
        return self._eval(X, self.field.sensors, self.field.distances)[1]

    def value(self, x):
        x = self._check_dim(x)
        f = self.field
        val, _ = self._eval(x[..., None, :], f.sensors, f.distances)
        return val.sum(axis=-1)

    def grad(self, x):
        x = self._check_dim(x)
        f = self.field
        _, g = self._eval(x[..., None, :], f.sensors, f.distances)
        return g.sum(axis=-2)


def make_localization(field: SensorField) -> LocalizationObjective:
    return LocalizationObjective(field)


# un_value / un_grad use 0-based agent indices
def un_value(field: SensorField, n: int, x):
    return LocalizationObjective(field).local_value(n, x)


def un_grad(field: SensorField, n: int, x):
    return LocalizationObjective(field).local_grad(n, x)
