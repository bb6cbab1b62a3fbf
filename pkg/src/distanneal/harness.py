"""Monte Carlo experiments: many seeded trials, ball-hit tables and CSV exports.

Output files (all comma separated, with a header row):

``table.csv``
    ``radius,t=<c1>,t=<c2>,...`` -- one row per radius; entry is the number of
    trials whose network average lies strictly inside that ball around the
    nearest known minimizer at exactly that iteration.
``summary.csv``
    ``t,n_trials,n_diverged`` followed by ``distance_*``, ``disagreement_*``
    and ``value_*`` columns for ``mean,q10,q25,median,q75,q90``.
``trajectory_<trial>.csv``
    ``t,x0,...,x<d-1>,disagreement,value`` sampled every ``stride`` iterations.
``field.csv``
    ``x,y,dU/dx,dU/dy`` on a regular grid (two-dimensional objectives).
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .engine import RunConfig, TrialReport, simulate
from .objective import ObjectiveSet

BATCH_SIZE = 25
QUANTILES = (0.10, 0.25, 0.50, 0.75, 0.90)
STAT_NAMES = ("mean", "q10", "q25", "median", "q75", "q90")


@dataclass
class ExperimentConfig:
    run: RunConfig
    n_trials: int = 100
    radii: Sequence[float] = (0.05, 0.1, 0.15, 0.2, 0.25)

    @property
    def checkpoints(self) -> list[int]:
        return [int(c) for c in self.run.checkpoints]

    def validate(self) -> list[str]:
        problems = self.run.validate()
        if self.n_trials < 1:
            problems.append("n_trials must be positive")
        radii = list(self.radii)
        if radii != sorted(radii) or any(r <= 0 for r in radii):
            problems.append("radii must be positive and sorted ascending")
        return problems


@dataclass
class BallHitTable:
    radii: np.ndarray
    checkpoints: np.ndarray
    counts: np.ndarray          # (len(radii), len(checkpoints))
    n_trials: int
    n_diverged: int = 0

    def count(self, radius: float, t: int) -> int:
        i = int(np.flatnonzero(np.isclose(self.radii, radius))[0])
        j = int(np.flatnonzero(self.checkpoints == t)[0])
        return int(self.counts[i, j])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["radius"] + [f"t={c}" for c in self.checkpoints])
        for r, row in zip(self.radii, self.counts):
            w.writerow([repr(float(r))] + [int(c) for c in row])
        return buf.getvalue()

    def format(self) -> str:
        head = "radius  " + "".join(f"{'t=' + str(c):>10}" for c in self.checkpoints)
        lines = [head]
        for r, row in zip(self.radii, self.counts):
            lines.append(f"{r:<8g}" + "".join(f"{c:>10d}" for c in row))
        lines.append(f"({self.n_trials} trials counted, {self.n_diverged} diverged)")
        return "\n".join(lines)


def trial_seed(master_seed: int, trial: int) -> int:
    """Independent 64-bit seed for trial ``trial`` of an experiment."""
    state = np.random.SeedSequence([int(master_seed), int(trial)]).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def _run_batch(args):
    run_config, seeds = args
    return simulate(run_config, seeds)


def run_trials(run_config: RunConfig, seeds: Sequence[int], threads: int = 1) -> list[TrialReport]:
    """Simulate in fixed-size batches; the batch split is independent of ``threads``."""
    batches = [list(seeds[i:i + BATCH_SIZE]) for i in range(0, len(seeds), BATCH_SIZE)]
    if threads <= 1 or len(batches) == 1:
        results = [_run_batch((run_config, b)) for b in batches]
    else:
        with ProcessPoolExecutor(max_workers=min(threads, len(batches))) as pool:
            results = list(pool.map(_run_batch, [(run_config, b) for b in batches]))
    return [r for batch in results for r in batch]


def ball_hit_table(reports: Sequence[TrialReport], radii, checkpoints) -> BallHitTable:
    radii = np.asarray(radii, dtype=float)
    ok = [r for r in reports if r.diverged is None and r.distance is not None]
    dist = np.array([r.distance for r in ok]).reshape(len(ok), len(checkpoints))
    counts = (dist[None, :, :] < radii[:, None, None]).sum(axis=1)
    return BallHitTable(radii, np.asarray(checkpoints, dtype=int), counts.astype(int), len(ok),
                        sum(r.diverged is not None for r in reports))


def run_experiment(config: ExperimentConfig, master_seed: int = 0,
                   threads: int = 1) -> tuple[Optional[BallHitTable], list[TrialReport]]:
    """All trials of an experiment; the table is None without a known minimizer."""
    problems = config.validate()
    if problems:
        raise ValueError("invalid experiment config: " + "; ".join(problems))
    seeds = [trial_seed(master_seed, i) for i in range(config.n_trials)]
    reports = run_trials(config.run, seeds, threads)
    table = None
    if config.run.objective.minimizers is not None:
        table = ball_hit_table(reports, config.radii, config.checkpoints)
    return table, reports


def _stats(values: np.ndarray) -> list[float]:
    if len(values) == 0:
        return [float("nan")] * len(STAT_NAMES)
    return [float(np.mean(values))] + [float(q) for q in np.quantile(values, QUANTILES)]


def summarize(reports: Sequence[TrialReport]) -> str:
    """Per-checkpoint statistics over non-diverged trials, as CSV text."""
    if not reports:
        raise ValueError("at least one report required")
    cps = reports[0].checkpoints
    ok = [r for r in reports if r.diverged is None]
    n_div = len(reports) - len(ok)
    header = ["t", "n_trials", "n_diverged"]
    for group in ("distance", "disagreement", "value"):
        header += [f"{group}_{s}" for s in STAT_NAMES]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for j, t in enumerate(cps):
        dist = np.array([r.distance[j] for r in ok if r.distance is not None])
        dis = np.array([r.disagreement[t - 1] for r in ok])
        val = np.array([r.checkpoint_value[j] for r in ok])
        row = [int(t), len(ok), n_div] + _stats(dist) + _stats(dis) + _stats(val)
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def trajectory_rows(report: TrialReport, stride: int) -> np.ndarray:
    """Iterations exported at a given stride: ``1, 1 + stride, ... <= t_max`` and ``t_max + 1``."""
    if stride < 1:
        raise ValueError("stride must be at least 1")
    T = report.t_max
    return np.append(np.arange(1, T + 1, stride), T + 1)


def export_trajectory(report: TrialReport, objective: ObjectiveSet, stride: int = 1) -> str:
    ts = trajectory_rows(report, stride)
    avg = report.average[ts - 1]
    vals = objective.value(avg)
    dim = avg.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"x{i}" for i in range(dim)] + ["disagreement", "value"])
    for t, x, dis, v in zip(ts, avg, report.disagreement[ts - 1], vals):
        w.writerow([int(t)] + [repr(float(c)) for c in x] + [repr(float(dis)), repr(float(v))])
    return buf.getvalue()


def field_grid(objective: ObjectiveSet, bounds=(-1.5, 1.5), n: int = 40):
    """Points ``(n, n, 2)`` and gradients ``grad U`` of a planar objective."""
    if objective.dim != 2:
        raise ValueError("vector-field export needs a two-dimensional objective")
    a, b = bounds
    xs = np.linspace(a, b, n)
    P = np.stack(np.meshgrid(xs, xs, indexing="ij"), axis=-1)
    return P, objective.grad(P)


def export_field(objective: ObjectiveSet, bounds=(-1.5, 1.5), n: int = 40) -> str:
    P, G = field_grid(objective, bounds, n)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "dU/dx", "dU/dy"])
    for p, g in zip(P.reshape(-1, 2), G.reshape(-1, 2)):
        w.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(g[0])), repr(float(g[1]))])
    return buf.getvalue()


def grid_local_minima(values: np.ndarray) -> list[tuple[int, int]]:
    """Interior cells of a 2-D array not exceeding any of their 8 neighbours."""
    out = []
    for i in range(1, values.shape[0] - 1):
        for j in range(1, values.shape[1] - 1):
            if values[i, j] <= values[i - 1:i + 2, j - 1:j + 2].min():
                out.append((i, j))
    return out


@dataclass
class OutputSpec:
    directory: Path
    stride: int = 10
    trajectories: int = 1
    field_bounds: tuple = (-1.5, 1.5)
    field_points: int = 40


def write_outputs(spec: OutputSpec, objective: ObjectiveSet, table: Optional[BallHitTable],
                  reports: Sequence[TrialReport], table_only: bool = False) -> list[Path]:
    out = Path(spec.directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name, text):
        path = out / name
        path.write_text(text)
        written.append(path)

    if table is not None:
        put("table.csv", table.to_csv())
    if not table_only:
        put("summary.csv", summarize(reports))
        for i, rep in enumerate(reports[: spec.trajectories]):
            put(f"trajectory_{i}.csv", export_trajectory(rep, objective, spec.stride))
        if objective.dim == 2:
            put("field.csv", export_field(objective, spec.field_bounds, spec.field_points))
    return written


def default_output_dir() -> str:
    return os.environ.get("DISTANNEAL_OUTPUT", "distanneal-out")
