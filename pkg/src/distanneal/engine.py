"""Consensus + innovations + annealing recursion.

Each iteration draws one network-wide Laplacian ``L_t`` and, for every agent
simultaneously,

    x_n <- x_n - beta_t * sum_{l in Omega_n(t)} (x_n - x_l)
               - alpha_t * (grad U_n(x_n) + zeta_n(t)) + gamma_t * w_n(t).

State convention: ``x(1)`` is the initial condition and the update at
iteration ``t`` produces ``x(t + 1)``, so ``t_max`` updates end at
``x(t_max + 1)``.

Randomness: a trial seed expands into named substreams -- the graph stream,
one gradient-noise stream per agent and one annealing stream per agent -- so
switching one noise source on or off leaves the others' draws unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import graph as graphs
from .objective import ObjectiveSet
from .schedules import WeightSchedule

DIVERGENCE_THRESHOLD = 1e9
NOISE_CHUNK = 1024


class DivergenceError(RuntimeError):
    """Iterates left the finite region; carries the offending step."""

    def __init__(self, t: int, agent: int, magnitudes: dict, seed=None):
        self.t = t
        self.agent = agent
        self.magnitudes = magnitudes
        self.seed = seed
        terms = ", ".join(f"{k}={v:.3g}" for k, v in magnitudes.items())
        super().__init__(f"divergence at t={t}, agent {agent} (seed={seed}): {terms}")


@dataclass(frozen=True)
class NoiseModel:
    """Gradient noise ``zeta ~ N(0, sigma^2 I)`` (``sigma = 0`` disables it) and
    standard Gaussian annealing noise (``annealing=False`` removes the term).

    ``l1_bound`` declares the constant bounding ``E|zeta|^2 = d sigma^2``.
    """

    gradient_sigma: float = 0.0
    annealing: bool = True
    l1_bound: Optional[float] = None

    def validate(self, dim: int) -> list[str]:
        problems = []
        if self.gradient_sigma < 0:
            problems.append("gradient_sigma must be non-negative")
        if self.l1_bound is not None and dim * self.gradient_sigma**2 > self.l1_bound:
            problems.append(f"gradient noise second moment {dim * self.gradient_sigma**2:.6g} "
                            f"exceeds l1_bound {self.l1_bound:.6g}")
        return problems


@dataclass
class NetworkState:
    x: np.ndarray
    t: int = 1

    @property
    def average(self) -> np.ndarray:
        return self.x.mean(axis=-2)

    @property
    def disagreement(self) -> float:
        return float(disagreement(self.x))


def disagreement(X: np.ndarray) -> np.ndarray:
    """``max_n |x_n - x_avg|`` over the agent axis (-2)."""
    avg = X.mean(axis=-2, keepdims=True)
    return np.linalg.norm(X - avg, axis=-1).max(axis=-1)


def _update(X, t, objective, graph_model, schedule, noise, mask, zeta, w):
    alpha, beta, gamma = schedule.weights(t)
    cons = graphs.consensus_term(graph_model, X, mask)
    innov = objective.agent_grads(X)
    if zeta is not None:
        innov = innov + zeta
    X_new = X - beta * cons - alpha * innov
    if w is not None:
        X_new = X_new + gamma * w
    return X_new, (beta * cons, alpha * innov, None if w is None else gamma * w)


def _diverged(X):
    return ~np.isfinite(X).all(axis=(-1, -2)) | (np.abs(np.nan_to_num(X, nan=np.inf)).max(axis=(-1, -2))
                                                  > DIVERGENCE_THRESHOLD)


def _divergence_info(X_new, terms, batch_index=None):
    sel = (lambda a: a) if batch_index is None else (lambda a: a[batch_index])
    row_bad = ~np.isfinite(sel(X_new)).all(axis=-1) | (np.abs(np.nan_to_num(sel(X_new), nan=np.inf)).max(axis=-1)
                                                       > DIVERGENCE_THRESHOLD)
    agent = int(np.flatnonzero(row_bad)[0])
    names = ("consensus", "innovation", "annealing")
    mags = {name: float(np.linalg.norm(sel(term)[agent])) for name, term in zip(names, terms)
            if term is not None}
    mags["state"] = float(np.linalg.norm(np.nan_to_num(sel(X_new)[agent], nan=np.inf)))
    return agent, mags


def step(state: NetworkState, objective: ObjectiveSet, graph_model: graphs.GraphModel,
         schedule, noise: NoiseModel, rng: np.random.Generator) -> NetworkState:
    """Advance one synchronous iteration using draws from a single ``rng``."""
    X = np.asarray(state.x, dtype=float)
    N, d = X.shape
    if N != objective.n_agents or N != graph_model.n_agents or d != objective.dim:
        raise ValueError(f"state shape {X.shape} inconsistent with objective "
                         f"({objective.n_agents}, {objective.dim}) or graph ({graph_model.n_agents})")
    mask = graphs.sample_edge_mask(graph_model, rng)
    zeta = noise.gradient_sigma * rng.standard_normal((N, d)) if noise.gradient_sigma > 0 else None
    w = rng.standard_normal((N, d)) if noise.annealing else None
    X_new, terms = _update(X, state.t, objective, graph_model, schedule, noise, mask, zeta, w)
    if _diverged(X_new):
        agent, mags = _divergence_info(X_new, terms)
        raise DivergenceError(state.t, agent, mags)
    return NetworkState(X_new, state.t + 1)


# ---------------------------------------------------------------------------
# Trials
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    objective: ObjectiveSet
    graph: graphs.GraphModel
    schedule: object = field(default_factory=WeightSchedule)
    noise: NoiseModel = field(default_factory=NoiseModel)
    t_max: int = 10_000
    checkpoints: Sequence[int] = (500, 1000, 2000, 5000, 10_000)
    x0: Optional[np.ndarray] = None

    def initial_state(self) -> np.ndarray:
        N, d = self.objective.n_agents, self.objective.dim
        x0 = np.zeros(d) if self.x0 is None else np.asarray(self.x0, dtype=float)
        return np.broadcast_to(x0, (N, d)).astype(float)

    def validate(self) -> list[str]:
        problems = []
        obj = self.objective
        if self.graph.n_agents != obj.n_agents:
            problems.append(f"graph has {self.graph.n_agents} agents, objective has {obj.n_agents}")
        if self.t_max < 1:
            problems.append("t_max must be positive")
        cps = list(self.checkpoints)
        if cps != sorted(cps) or len(set(cps)) != len(cps):
            problems.append("checkpoints must be strictly increasing")
        if cps and (cps[0] < 1 or cps[-1] > self.t_max):
            problems.append(f"checkpoints must lie in [1, t_max={self.t_max}]")
        if self.x0 is not None:
            x0 = np.asarray(self.x0, dtype=float)
            if x0.shape not in ((obj.dim,), (obj.n_agents, obj.dim)):
                problems.append(f"initial condition shape {x0.shape} does not match dim {obj.dim}")
        if isinstance(self.schedule, WeightSchedule):
            from .schedules import validate as validate_schedule
            problems.extend(validate_schedule(self.schedule))
        problems.extend(self.noise.validate(obj.dim))
        return problems


@dataclass
class TrialReport:
    """Outcome of one trial.

    ``average`` and ``disagreement`` hold the whole path ``t = 1 .. t_max + 1``
    (row ``i`` is iteration ``i + 1``). Checkpoint arrays follow
    ``checkpoints``. ``distance`` is to the nearest known minimizer, or None.
    """

    seed: int
    checkpoints: np.ndarray
    average: np.ndarray
    disagreement: np.ndarray
    checkpoint_value: np.ndarray
    distance: Optional[np.ndarray] = None
    diverged: Optional[dict] = None

    @property
    def t_max(self) -> int:
        return len(self.average) - 1

    def at(self, t: int) -> np.ndarray:
        return self.average[t - 1]

    def checkpoint_average(self) -> np.ndarray:
        return self.average[np.asarray(self.checkpoints, dtype=int) - 1]

    def to_dict(self) -> dict:
        out = {
            "seed": int(self.seed),
            "checkpoints": [int(c) for c in self.checkpoints],
            "checkpoint_average": self.checkpoint_average().tolist(),
            "checkpoint_disagreement": self.disagreement[np.asarray(self.checkpoints, int) - 1].tolist(),
            "checkpoint_value": self.checkpoint_value.tolist(),
            "distance": None if self.distance is None else self.distance.tolist(),
            "diverged": self.diverged,
        }
        return out

    def to_bytes(self) -> bytes:
        """Canonical serialization: JSON summary followed by the raw path arrays."""
        head = json.dumps(self.to_dict(), sort_keys=True).encode()
        return head + self.average.tobytes() + self.disagreement.tobytes()


def trial_streams(seed: int, n_agents: int):
    """Independent generators: (graph, [zeta_n], [w_n])."""
    def gen(*key):
        return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))
    return gen(0), [gen(1, n) for n in range(n_agents)], [gen(2, n) for n in range(n_agents)]


def nearest_distance(points: np.ndarray, minimizers: np.ndarray) -> np.ndarray:
    diff = points[..., None, :] - minimizers
    return np.linalg.norm(diff, axis=-1).min(axis=-1)


def simulate(config: RunConfig, seeds: Sequence[int]) -> list[TrialReport]:
    """Run one trial per seed, batched along a leading trial axis.

    All arithmetic is elementwise or reduces over per-trial axes, so a trial's
    report does not depend on which other trials share its batch.
    Diverged trials are frozen at their last finite state and reported.
    """
    problems = config.validate()
    if problems:
        raise ValueError("invalid run config: " + "; ".join(problems))
    obj, gm, noise = config.objective, config.graph, config.noise
    B, N, d, T = len(seeds), obj.n_agents, obj.dim, int(config.t_max)
    streams = [trial_streams(int(s), N) for s in seeds]

    X = np.broadcast_to(config.initial_state(), (B, N, d)).copy()
    avg = np.empty((B, T + 1, d))
    dis = np.empty((B, T + 1))
    avg[:, 0] = X.mean(axis=-2)
    dis[:, 0] = disagreement(X)
    alive = np.ones(B, dtype=bool)
    diverged: list[Optional[dict]] = [None] * B

    use_zeta = noise.gradient_sigma > 0
    t = 1
    while t <= T:
        K = min(NOISE_CHUNK, T - t + 1)
        masks = np.stack([graphs.sample_edge_mask(gm, g, K) for g, _, _ in streams], axis=1)
        zetas = (noise.gradient_sigma * np.stack(
            [np.stack([z.standard_normal((K, d)) for z in zs], axis=1) for _, zs, _ in streams], axis=1)
            if use_zeta else None)
        ws = (np.stack([np.stack([w.standard_normal((K, d)) for w in wl], axis=1) for _, _, wl in streams],
                       axis=1) if noise.annealing else None)
        for k in range(K):
            X_new, terms = _update(X, t, obj, gm, config.schedule, noise, masks[k],
                                   None if zetas is None else zetas[k], None if ws is None else ws[k])
            bad = _diverged(X_new) & alive
            for b in np.flatnonzero(bad):
                agent, mags = _divergence_info(X_new, terms, b)
                diverged[b] = {"t": t, "agent": agent, **mags}
            alive &= ~bad
            X = np.where(alive[:, None, None], X_new, X)
            avg[:, t] = X.mean(axis=-2)
            dis[:, t] = disagreement(X)
            t += 1

    cps = np.asarray(config.checkpoints, dtype=int)
    cp_avg = avg[:, cps - 1]
    cp_val = obj.value(cp_avg) if len(cps) else np.zeros((B, 0))
    cp_dist = None if obj.minimizers is None else nearest_distance(cp_avg, obj.minimizers)
    reports = []
    for b, seed in enumerate(seeds):
        reports.append(TrialReport(
            seed=int(seed), checkpoints=cps, average=avg[b], disagreement=dis[b],
            checkpoint_value=np.asarray(cp_val[b], dtype=float),
            distance=None if cp_dist is None else cp_dist[b], diverged=diverged[b]))
    return reports


def run(config: RunConfig, seed: int) -> TrialReport:
    """One trial; raises :class:`DivergenceError` if the iterates blow up."""
    report = simulate(config, [seed])[0]
    if report.diverged is not None:
        info = dict(report.diverged)
        t, agent = info.pop("t"), info.pop("agent")
        raise DivergenceError(t, agent, info, seed=seed)
    return report
