from dataclasses import dataclass, replace

import numpy as np
import pytest

from distanneal import graph as graphs
from distanneal.engine import (DivergenceError, NetworkState, NoiseModel, RunConfig, disagreement, run,
                               simulate, step)
from distanneal.graph import GraphModel
from distanneal.objective import make_localization, make_quadratic, pentagon_field
from distanneal.schedules import ConstantWeights, WeightSchedule, weights

# sum_{s=1}^{99} gamma_s^2 with c_gamma = 1, mpmath at 30 digits
GAMMA_SQ_SUM_99 = 4.77999753858640

QUIET = NoiseModel(annealing=False)


@dataclass(frozen=True)
class GammaOnly:
    """Annealing noise only: alpha = beta = 0 and the default gamma schedule."""

    def weights(self, t):
        return 0.0, 0.0, weights(WeightSchedule(), t)[2]


def test_single_gradient_step():
    obj = make_quadratic(1)
    gm = GraphModel(graphs.empty(1))
    out = step(NetworkState(np.array([[1.0]])), obj, gm, ConstantWeights(0.1, 0.0, 0.0), QUIET,
               np.random.default_rng(0))
    np.testing.assert_allclose(out.x, [[0.8]], rtol=1e-15)
    assert out.t == 2


def test_pure_consensus_step():
    obj = make_quadratic(1, n_agents=2)
    gm = GraphModel(graphs.complete(2))
    out = step(NetworkState(np.array([[0.0], [2.0]])), obj, gm, ConstantWeights(0.0, 0.25, 0.0), QUIET,
               np.random.default_rng(0))
    np.testing.assert_array_equal(out.x, [[0.5], [1.5]])
    assert out.average[0] == 1.0


def test_step_rejects_shape_mismatch():
    obj = make_quadratic(2, n_agents=3)
    with pytest.raises(ValueError):
        step(NetworkState(np.zeros((2, 2))), obj, GraphModel(graphs.ring(3)), ConstantWeights(0, 0, 0), QUIET,
             np.random.default_rng(0))


def test_gamma_only_variance():
    cfg = RunConfig(make_quadratic(1), GraphModel(graphs.empty(1)), GammaOnly(), NoiseModel(),
                    t_max=99, checkpoints=(99,), x0=np.zeros(1))
    reports = simulate(cfg, list(range(10_000)))
    final = np.array([r.average[-1, 0] for r in reports])
    assert final.var() == pytest.approx(GAMMA_SQ_SUM_99, rel=0.05)
    assert abs(final.mean()) < 4 * np.sqrt(GAMMA_SQ_SUM_99 / 10_000)


def test_consensus_contraction():
    gm = GraphModel(graphs.ring(5))
    beta = 0.2  # below 1 / (2 * max degree)
    obj = make_quadratic(2, n_agents=5)
    X0 = np.random.default_rng(4).standard_normal((5, 2)) * 3
    cfg = RunConfig(obj, gm, ConstantWeights(0.0, beta, 0.0), QUIET, t_max=1000, checkpoints=(1000,), x0=X0)
    rep = run(cfg, 0)
    dis = rep.disagreement
    assert np.all(np.diff(dis) <= 0)
    assert dis[-1] < 1e-10
    drift = np.abs(np.diff(rep.average, axis=0)).max()
    assert drift <= 1e-12
    np.testing.assert_allclose(rep.average[-1], X0.mean(axis=0), atol=1e-12 * 1000)


def test_mean_preserved_under_random_graphs():
    gm = GraphModel(graphs.complete(6), "edge_activation", 0.4)
    obj = make_quadratic(3, n_agents=6)
    X0 = np.random.default_rng(5).standard_normal((6, 3)) * 10
    cfg = RunConfig(obj, gm, ConstantWeights(0.0, 0.1, 0.0), QUIET, t_max=500, checkpoints=(500,), x0=X0)
    rep = run(cfg, 11)
    per_step = np.abs(np.diff(rep.average, axis=0)).max()
    assert per_step <= 1e-12 * 10


def test_average_drift_identity():
    obj = make_localization(pentagon_field())
    gm = GraphModel(graphs.ring(5))
    x = np.array([0.7, -0.2])
    X = np.tile(x, (5, 1))
    alpha = 0.01
    out = step(NetworkState(X, 3), obj, gm, ConstantWeights(alpha, 0.3, 0.0), QUIET, np.random.default_rng(0))
    np.testing.assert_allclose(out.average - x, -(alpha / 5) * obj.grad(x), rtol=1e-12, atol=1e-16)


def _quadratic_config(annealing=True, t_max=10_000):
    obj = make_quadratic(2, [0.5, -0.25], n_agents=5)
    return RunConfig(obj, GraphModel(graphs.ring(5)), WeightSchedule(alpha_max=0.5),
                     NoiseModel(annealing=annealing), t_max=t_max,
                     checkpoints=(500, 1000, 2000, 5000, 10_000), x0=np.array([-0.5, 1.0]))


def test_annealing_off_converges():
    rep = run(_quadratic_config(annealing=False), 0)
    assert np.linalg.norm(rep.average[-1] - [0.5, -0.25]) < 1e-3
    assert rep.disagreement[-1] < 1e-3
    # U(x_avg) eventually non-increasing
    u = rep.checkpoint_value
    assert np.all(np.diff(u) <= 0)


def test_quadratic_with_annealing_reaches_center():
    reps = simulate(_quadratic_config(), [1, 2, 3, 4, 5])
    for r in reps:
        assert r.diverged is None
        assert r.distance[-1] < 0.2


def test_determinism_bytes():
    cfg = _quadratic_config(t_max=2000)
    cfg.checkpoints = (500, 2000)
    assert run(cfg, 42).to_bytes() == run(cfg, 42).to_bytes()
    assert run(cfg, 42).to_bytes() != run(cfg, 43).to_bytes()


def test_batch_equals_single():
    cfg = RunConfig(make_localization(pentagon_field()), GraphModel(graphs.ring(5), "edge_activation", 0.7),
                    WeightSchedule(alpha_max=0.5), NoiseModel(gradient_sigma=0.1), t_max=1500,
                    checkpoints=(500, 1500), x0=np.array([-0.5, 1.0]))
    seeds = [7, 8, 9]
    batch = simulate(cfg, seeds)
    for s, b in zip(seeds, batch):
        assert run(cfg, s).to_bytes() == b.to_bytes()


def test_noise_streams_are_separate():
    # switching gradient noise on leaves the annealing draws unchanged: with alpha = 0 paths coincide
    obj = make_quadratic(2, n_agents=3)
    gm = GraphModel(graphs.ring(3))
    base = dict(objective=obj, graph=gm, schedule=GammaOnly(), t_max=50, checkpoints=(50,))
    a = run(RunConfig(noise=NoiseModel(), **base), 3)
    b = run(RunConfig(noise=NoiseModel(gradient_sigma=1.0), **base), 3)
    np.testing.assert_array_equal(a.average, b.average)


def test_literal_schedule_diverges():
    cfg = RunConfig(make_localization(pentagon_field()), GraphModel(graphs.ring(5)), WeightSchedule(),
                    NoiseModel(), t_max=100, checkpoints=(100,), x0=np.array([-0.5, 1.0]))
    with pytest.raises(DivergenceError) as info:
        run(cfg, 0)
    assert info.value.t < 20 and info.value.seed == 0
    assert "innovation" in info.value.magnitudes
    rep = simulate(cfg, [0])[0]
    assert rep.diverged is not None and np.all(np.isfinite(rep.average))


def test_report_layout():
    rep = run(replace(_quadratic_config(), t_max=1000, checkpoints=(10, 1000)), 0)
    assert rep.t_max == 1000
    assert rep.average.shape == (1001, 2)
    np.testing.assert_array_equal(rep.at(1), [-0.5, 1.0])
    assert rep.disagreement[0] == 0.0
    np.testing.assert_array_equal(rep.checkpoint_average(), rep.average[[9, 999]])
    d = rep.to_dict()
    assert d["checkpoints"] == [10, 1000] and d["diverged"] is None


@pytest.mark.parametrize("changes, message", [
    ({"checkpoints": (500, 20_000)}, "checkpoints must lie"),
    ({"checkpoints": (1000, 500)}, "strictly increasing"),
    ({"x0": np.zeros(3)}, "initial condition"),
    ({"graph": GraphModel(graphs.ring(4))}, "graph has 4 agents"),
    ({"noise": NoiseModel(gradient_sigma=1.0, l1_bound=1.0)}, "l1_bound"),
])
def test_run_config_validation(changes, message):
    cfg = replace(_quadratic_config(), **changes)
    assert any(message in p for p in cfg.validate())
    with pytest.raises(ValueError, match=message):
        simulate(cfg, [0])


def test_disagreement():
    X = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]])
    assert disagreement(X) == pytest.approx(2.0)
