"""Sampled numerical checks of the convergence assumptions.

Each check returns a :class:`CheckResult` with a status (``pass``, ``fail``
or ``inconclusive``), a headline value and the numeric witnesses behind the
verdict. Sup/inf over unbounded domains are approximated on spheres of
growing radius and judged from the trend.

Assumption labels used in reports:

    A1   Lipschitz gradients of every U_n
    A2   bounded gradient dissimilarity (reported in "sum" and "average" modes)
    A3   (i) min U = 0, (ii) U and |grad U| coercive, (iii) |grad U|^2 - lap U bounded below
    A5   radial alignment of grad U, threshold C(d) = sqrt((4d - 4) / (4d - 3))
    A6   liminf |grad U| / |x| > 0
    A7   limsup |grad U| / |x| < inf
    A8   mean Laplacian connected (lambda_2 > 0)
    A12  sensor geometry non-degenerate
    L1   Laplace-limit conditions at the global minima
    C3   smoothness across the piecewise junctions
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from . import numdiff
from .objective import LocalizationObjective, ObjectiveSet, SensorField, g_value

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass
class CheckResult:
    name: str
    status: str
    value: float
    witness: dict = field(default_factory=dict)
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASS


@dataclass
class AssumptionReport:
    entries: list = field(default_factory=list)

    def add(self, result: CheckResult) -> CheckResult:
        self.entries.append(result)
        return result

    def __getitem__(self, name: str) -> CheckResult:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def status(self, name: str) -> str:
        return self[name].status

    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def format(self) -> str:
        lines = []
        for e in self.entries:
            lines.append(f"{e.name:<14} {e.status.upper():<13} {_fmt(e.value):>14}  {e.note}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        """Rows ``(check, status, key, value)``; one row per witness scalar or list item."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "status", "key", "value"])
        for e in self.entries:
            w.writerow([e.name, e.status, "value", _fmt(e.value)])
            for key, val in e.witness.items():
                if isinstance(val, (list, tuple, np.ndarray)):
                    for i, item in enumerate(np.ravel(np.asarray(val, dtype=object))):
                        w.writerow([e.name, e.status, f"{key}[{i}]", _fmt(item)])
                else:
                    w.writerow([e.name, e.status, key, _fmt(val)])
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


# ---------------------------------------------------------------------------
# Sampling helpers
# ---------------------------------------------------------------------------


def sphere_points(dim: int, radius: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Points on the sphere of given radius; evenly spaced in d = 1, 2."""
    if dim == 1:
        return np.array([[radius], [-radius]])
    if dim == 2:
        ang = 2 * np.pi * (np.arange(n) + rng.random()) / n
        return radius * np.column_stack([np.cos(ang), np.sin(ang)])
    v = rng.standard_normal((n, dim))
    return radius * v / np.linalg.norm(v, axis=1, keepdims=True)


def ball_points(dim: int, radius, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points in a ball, or in a shell when ``radius = (r_in, r_out)``."""
    r_in, r_out = (0.0, float(radius)) if np.isscalar(radius) else map(float, radius)
    v = rng.standard_normal((n, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    u = rng.random(n)
    r = (r_in**dim + u * (r_out**dim - r_in**dim)) ** (1.0 / dim)
    return v * r[:, None]


def default_radii(objective: ObjectiveSet) -> list[float]:
    return [objective.tail_radius * k for k in (1, 2, 4, 8)]


def _per_agent(objective: ObjectiveSet, X: np.ndarray) -> np.ndarray:
    """Gradients of every U_n at the same points: shape (M, N, dim)."""
    return objective.agent_grads(np.broadcast_to(X[:, None, :], (len(X), objective.n_agents, objective.dim)))


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


# ---------------------------------------------------------------------------
# Gradient consistency and junction smoothness
# ---------------------------------------------------------------------------


def gradient_errors(objective: ObjectiveSet, points) -> np.ndarray:
    """Error of analytic ``grad U_n`` against central differences, per (point, agent).

    Error is ``|fd - analytic| / max(|analytic|, 1)`` using the five-point
    central stencil of :func:`numdiff.central_gradient`.
    """
    points = np.atleast_2d(points)
    errs = np.empty((len(points), objective.n_agents))
    for i, x in enumerate(points):
        for n in range(objective.n_agents):
            g = objective.local_grad(n, x)
            fd = numdiff.central_gradient(lambda p: objective.local_value(n, p), x)
            errs[i, n] = np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1.0)
    return errs


def check_gradients(objective: ObjectiveSet, points, tol: float = 1e-6) -> CheckResult:
    errs = gradient_errors(objective, points)
    worst = float(errs.max())
    i, n = np.unravel_index(np.argmax(errs), errs.shape)
    return CheckResult("gradient", PASS if worst <= tol else FAIL, worst,
                       {"points": len(errs), "worst_point": np.atleast_2d(points)[i].tolist(),
                        "worst_agent": int(n), "tol": tol})


def junction_jumps(fun, x0: float, width: float, degree: int = 10) -> np.ndarray:
    """Relative jump of one-sided derivatives of orders 0-3 at ``x0``."""
    left = numdiff.one_sided_derivatives(fun, x0, -1, width, degree=degree)
    right = numdiff.one_sided_derivatives(fun, x0, +1, width, degree=degree)
    return np.abs(left - right) / np.maximum(1.0, np.maximum(np.abs(left), np.abs(right)))


def check_smoothness(objective: ObjectiveSet, tol: float = 1e-4, n_rays: int = 4,
                     seed: int = 0) -> CheckResult:
    """C^3 junction check; polynomial benchmark objectives pass trivially."""
    if not isinstance(objective, LocalizationObjective):
        return CheckResult("C3", PASS, 0.0, {"junctions": 0}, note="polynomial objective")
    fld = objective.field
    eps = fld.bridge_eps
    worst = 0.0
    count = 0
    for r in np.unique(fld.distances):
        for y0 in (r / 2 - eps, r / 2):
            jumps = junction_jumps(lambda y: g_value(y, r, eps), y0, 0.9 * eps)
            worst = max(worst, float(jumps.max()))
            count += 1
    if not fld.inner_only:
        T = fld.n_targets
        rng = _rng(seed, 7)
        dirs = sphere_points(objective.dim, 1.0, n_rays, rng)
        width = 0.3 * T
        for u in dirs:
            for tau0 in (fld.region_radius * T, (fld.region_radius + 1) * T):
                for n in range(objective.n_agents):
                    jumps = junction_jumps(lambda tau: objective.local_value(n, tau * u), tau0, width,
                                           degree=12)
                    worst = max(worst, float(jumps.max()))
                    count += 1
    return CheckResult("C3", PASS if worst <= tol else FAIL, worst, {"junctions": count, "tol": tol})


# ---------------------------------------------------------------------------
# Assumptions 1-3, 5-7
# ---------------------------------------------------------------------------


def _lipschitz_estimate(objective, region, samples, rng):
    dim = objective.dim
    scale = region if np.isscalar(region) else region[1]
    half = samples // 2
    x = ball_points(dim, region, samples, rng)
    # near pairs probe local curvature, far pairs global variation
    v = rng.standard_normal((half, dim))
    delta = 1e-3 * scale * v / np.linalg.norm(v, axis=1, keepdims=True)
    xp = np.concatenate([x[:half] + delta, ball_points(dim, region, samples - half, rng)])
    gx, gp = _per_agent(objective, x), _per_agent(objective, xp)
    num = np.linalg.norm(gx - gp, axis=-1)
    den = np.linalg.norm(x - xp, axis=-1)[:, None]
    return (num / den).max(axis=0)


def check_lipschitz(objective: ObjectiveSet, region_radius, samples: int = 2000,
                    seed: int = 0) -> CheckResult:
    """Sampled Lipschitz constant of each ``grad U_n`` on a ball (or shell)."""
    if samples < 1000:
        raise ValueError("at least 1000 samples required")
    per_agent = _lipschitz_estimate(objective, region_radius, samples, _rng(seed, 1))
    doubled = _lipschitz_estimate(objective, region_radius, 2 * samples, _rng(seed, 2))
    L, L2 = float(per_agent.max()), float(doubled.max())
    if not np.isfinite(L2):
        status = FAIL
    else:
        status = PASS if L2 <= 1.1 * L else INCONCLUSIVE
    return CheckResult("A1", status, L, {"per_agent": per_agent.tolist(), "doubled_samples": L2})


def dissimilarity_profile(objective: ObjectiveSet, radii, samples: int = 2000, mode: str = "sum",
                          seed: int = 0) -> np.ndarray:
    """Sampled ``sup_{|x| <= rho} max_n |grad U_n(x) - ref(x)|`` for each radius.

    ``ref`` is ``grad U`` (mode ``"sum"``) or ``grad U / N`` (mode ``"average"``).
    """
    if mode not in ("sum", "average"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = _rng(seed, 3)
    prof = []
    for rho in radii:
        X = np.concatenate([ball_points(objective.dim, rho, samples, rng),
                            sphere_points(objective.dim, rho, 64, rng)])
        G = _per_agent(objective, X)
        ref = G.sum(axis=1, keepdims=True)
        if mode == "average":
            ref = ref / objective.n_agents
        prof.append(float(np.linalg.norm(G - ref, axis=-1).max()))
    return np.array(prof)


def _growth_verdict(radii, prof, atol=1e-9):
    radii, prof = np.asarray(radii, float), np.asarray(prof, float)
    if prof.max() <= atol:
        return PASS
    ratio = prof[-1] / max(prof[-3], atol)
    radius_ratio = radii[-1] / radii[-3]
    if ratio <= 1.05:
        return PASS
    if ratio >= 0.8 * radius_ratio:
        return FAIL
    return INCONCLUSIVE


def check_dissimilarity(objective: ObjectiveSet, radii=None, samples: int = 2000, mode: str = "sum",
                        seed: int = 0) -> CheckResult:
    radii = default_radii(objective) if radii is None else list(radii)
    if len(radii) < 3:
        raise ValueError("at least 3 radii required")
    prof = dissimilarity_profile(objective, radii, samples, mode, seed)
    slope = float(np.polyfit(radii, prof, 1)[0])
    return CheckResult(f"A2[{mode}]", _growth_verdict(radii, prof), float(prof[-1]),
                       {"radii": list(radii), "profile": prof.tolist(), "slope": slope})


def check_coercivity(objective: ObjectiveSet, radii=None, directions: int = 64, seed: int = 0,
                     inner_samples: int = 2000) -> tuple[CheckResult, CheckResult]:
    """Parts (i) and (ii): ``min U = 0`` and growth of ``U``, ``|grad U|`` on spheres."""
    radii = default_radii(objective) if radii is None else list(radii)
    if directions < 16:
        raise ValueError("at least 16 directions per sphere required")
    rng = _rng(seed, 4)
    min_u, min_g = [], []
    for rho in radii:
        X = sphere_points(objective.dim, rho, directions, rng)
        min_u.append(float(objective.value(X).min()))
        min_g.append(float(np.linalg.norm(objective.grad(X), axis=-1).min()))
    increasing = bool(np.all(np.diff(min_u) > 0) and np.all(np.diff(min_g) > 0))
    part2 = CheckResult("A3(ii)", PASS if increasing else FAIL, min_u[-1],
                        {"radii": radii, "min_U": min_u, "min_grad": min_g})

    minima = objective.minimizers if objective.minimizers is not None else find_minima(objective, seed=seed)
    u_min = float(objective.value(minima).min())
    inner = ball_points(objective.dim, objective.tail_radius, inner_samples, rng)
    sampled_min = float(objective.value(inner).min())
    ok = abs(u_min) <= 1e-8 and sampled_min >= -1e-12
    part1 = CheckResult("A3(i)", PASS if ok else FAIL, u_min,
                        {"minimizer_value": u_min, "sampled_inner_min": sampled_min})
    return part1, part2


def check_laplacian_gap(objective: ObjectiveSet, radii=None, samples: int = 2000,
                        seed: int = 0) -> CheckResult:
    """Sampled infimum of ``|grad U|^2 - lap U`` (Laplacian by central second differences)."""
    radii = default_radii(objective) if radii is None else list(radii)
    rng = _rng(seed, 5)
    overall = math.inf
    shell_min = []

    def gap(X):
        return np.sum(objective.grad(X) ** 2, axis=-1) - numdiff.laplacian_fd(objective.value, X)

    for rho in radii:
        ball = ball_points(objective.dim, rho, samples, rng)
        overall = min(overall, float(gap(ball).min()))
        sphere = sphere_points(objective.dim, rho, 64, rng)
        s = float(gap(sphere).min())
        shell_min.append(s)
        overall = min(overall, s)
    tail = np.asarray(shell_min[-3:])
    bounded = bool(np.all(np.diff(tail) >= -1e-6 * np.maximum(1.0, np.abs(tail[:-1]))))
    return CheckResult("A3(iii)", PASS if bounded and np.isfinite(overall) else FAIL, overall,
                       {"radii": radii, "sphere_min": shell_min})


def alignment_threshold(dim: int) -> float:
    """``C(d) = sqrt((4d - 4) / (4d - 3))``."""
    return math.sqrt((4 * dim - 4) / (4 * dim - 3))


def check_radial_alignment(objective: ObjectiveSet, radii=None, directions: int = 64,
                           seed: int = 0, margin: float = 0.01) -> CheckResult:
    radii = default_radii(objective) if radii is None else list(radii)
    rng = _rng(seed, 6)
    prof = []
    for rho in radii:
        X = sphere_points(objective.dim, rho, directions, rng)
        G = objective.grad(X)
        cos = np.sum(G * X, axis=-1) / (np.linalg.norm(G, axis=-1) * np.linalg.norm(X, axis=-1))
        prof.append(float(cos.min()))
    c = alignment_threshold(objective.dim)
    return CheckResult("A5", PASS if prof[-1] >= c - margin else FAIL, prof[-1],
                       {"radii": radii, "min_cosine": prof, "C(d)": c})


def check_growth(objective: ObjectiveSet, radii=None, directions: int = 64,
                 seed: int = 0) -> tuple[CheckResult, CheckResult]:
    """``|grad U| / |x|`` on spheres: lower bound (A6) and upper bound (A7)."""
    radii = default_radii(objective) if radii is None else list(radii)
    rng = _rng(seed, 8)
    lo, hi = [], []
    for rho in radii:
        X = sphere_points(objective.dim, rho, directions, rng)
        ratio = np.linalg.norm(objective.grad(X), axis=-1) / rho
        lo.append(float(ratio.min()))
        hi.append(float(ratio.max()))
    a6 = PASS if lo[-1] > 1e-6 and lo[-1] >= 0.95 * lo[-2] else FAIL
    if hi[-1] <= 1.05 * hi[-2]:
        a7 = PASS
    elif hi[-1] >= 1.5 * hi[-2]:
        a7 = FAIL
    else:
        a7 = INCONCLUSIVE
    witness = {"radii": radii, "min_ratio": lo, "max_ratio": hi}
    return CheckResult("A6", a6, lo[-1], witness), CheckResult("A7", a7, hi[-1], witness)


def check_colinearity(field: SensorField) -> CheckResult:
    """Non-degenerate geometry: N >= 3 distinct sensors, and each target off some sensor line."""
    s, z = field.sensors, field.targets
    N = len(s)
    pair = np.linalg.norm(s[:, None] - s[None], axis=-1)[np.triu_indices(N, 1)]
    min_sep = float(pair.min()) if len(pair) else 0.0
    part1 = N >= 3 and min_sep > 1e-12
    best = []
    for zk in z:
        top = 0.0
        for n in range(N):
            for m in range(N):
                if m == n:
                    continue
                a, b = s[m] - s[n], zk - s[n]
                cross = abs(a[0] * b[1] - a[1] * b[0])
                top = max(top, cross / (np.linalg.norm(a) * (1 + np.linalg.norm(b))))
        best.append(top)
    part2 = all(v > 1e-9 for v in best)
    status = PASS if part1 and part2 else FAIL
    note = "" if status == PASS else ("part (i) violated" if not part1 else "part (ii) violated")
    return CheckResult("A12", status, min(best) if best else 0.0,
                       {"n_sensors": N, "min_sensor_separation": min_sep, "max_scaled_cross": best,
                        "part_i": part1, "part_ii": part2}, note)


# ---------------------------------------------------------------------------
# Minimum search and Lemma 1
# ---------------------------------------------------------------------------


def find_minima(objective: ObjectiveSet, radius: Optional[float] = None, starts: int = 64,
                seed: int = 0, tol: float = 1e-6) -> np.ndarray:
    """Multi-start BFGS; returns the distinct minimizers attaining the lowest value."""
    radius = objective.tail_radius if radius is None else radius
    X0 = ball_points(objective.dim, radius, starts, _rng(seed, 9))
    found = []
    for x0 in X0:
        res = minimize(lambda x: float(objective.value(x)), x0, jac=lambda x: objective.grad(x),
                       method="BFGS", options={"gtol": 1e-10})
        found.append((float(res.fun), res.x))
    best = min(f for f, _ in found)
    pts = []
    for f, x in found:
        if f <= best + tol and all(np.linalg.norm(x - p) > 1e-4 for p in pts):
            pts.append(x)
    return np.array(pts)


def fd_hessian(objective: ObjectiveSet, x) -> np.ndarray:
    return numdiff.hessian_from_gradient(objective.grad, x)


def check_lemma1(objective: ObjectiveSet, candidate_minima=None, level: float = 1e-3,
                 compact_level: float = 1e-2, seed: int = 0) -> list[CheckResult]:
    """Conditions for the Gibbs measures to concentrate on finitely many minima.

    Returns entries ``L1(i)`` .. ``L1(iv)`` and ``L1(hessian)``.
    """
    cands = (objective.minimizers if candidate_minima is None else np.atleast_2d(candidate_minima))
    if cands is None:
        cands = find_minima(objective, seed=seed)
    cands = np.atleast_2d(np.asarray(cands, dtype=float))
    rng = _rng(seed, 10)
    vals = np.atleast_1d(objective.value(cands))

    # (i) a neighbourhood of each minimizer lies in {U < level}
    frac = []
    for c in cands:
        pts = c + ball_points(objective.dim, 1e-3 * (1 + np.linalg.norm(c)), 256, rng)
        frac.append(float(np.mean(objective.value(pts) < level)))
    r1 = CheckResult("L1(i)", PASS if min(frac) > 0 else FAIL, min(frac),
                     {"level": level, "fraction_below": frac})

    r2 = CheckResult("L1(ii)", PASS if np.all(np.abs(vals) <= 1e-8) else FAIL, float(np.max(np.abs(vals))),
                     {"values": vals.tolist()})

    radii = [objective.tail_radius * k for k in (2, 4, 8)]
    sphere_min = [float(objective.value(sphere_points(objective.dim, r, 64, rng)).min()) for r in radii]
    inside = bool(np.all(np.linalg.norm(cands, axis=1) < radii[0]))
    r3 = CheckResult("L1(iii)", PASS if inside and min(sphere_min) > compact_level else FAIL,
                     min(sphere_min), {"level": compact_level, "radii": radii, "sphere_min_U": sphere_min})

    smooth = check_smoothness(objective)
    r4 = CheckResult("L1(iv)", smooth.status, smooth.value, smooth.witness, note="via C3 junction check")

    svals = []
    for c in cands:
        svals.append(float(np.linalg.svd(fd_hessian(objective, c), compute_uv=False).min()))
    isolated = len(cands) == 1 or min(
        np.linalg.norm(a - b) for i, a in enumerate(cands) for b in cands[i + 1:]) > 1e-6
    r5 = CheckResult("L1(hessian)", PASS if isolated and min(svals) > 1e-6 else FAIL, min(svals),
                     {"min_singular_value": svals, "n_minima": len(cands)})
    return [r1, r2, r3, r4, r5]


# ---------------------------------------------------------------------------
# Full suite
# ---------------------------------------------------------------------------


def run_objective_checks(objective: ObjectiveSet, seed: int = 0, samples: int = 2000,
                         field: Optional[SensorField] = None) -> AssumptionReport:
    """Assumptions 1-3, 5-7, Lemma 1 and (for sensor fields) Assumption 12."""
    rep = AssumptionReport()
    radii = default_radii(objective)
    rep.add(check_lipschitz(objective, objective.tail_radius * 2, samples, seed))
    for mode in ("sum", "average"):
        rep.add(check_dissimilarity(objective, [objective.tail_radius * k for k in (0.5, 1, 2, 4, 8)],
                                    samples, mode, seed))
    for r in check_coercivity(objective, radii, seed=seed):
        rep.add(r)
    rep.add(check_laplacian_gap(objective, radii, samples, seed))
    rep.add(check_radial_alignment(objective, radii, seed=seed))
    for r in check_growth(objective, radii, seed=seed):
        rep.add(r)
    if field is None and isinstance(objective, LocalizationObjective):
        field = objective.field
    if field is not None:
        rep.add(check_colinearity(field))
    for r in check_lemma1(objective, seed=seed):
        rep.add(r)
    return rep


HARD_FAIL_PREFIXES = ("A3", "A5", "A6", "A7", "A8", "A12", "L1")


def hard_failures(report: AssumptionReport) -> list[str]:
    return [e.name for e in report.entries
            if e.status == FAIL and e.name.startswith(HARD_FAIL_PREFIXES)]
