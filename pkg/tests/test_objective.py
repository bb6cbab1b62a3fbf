import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distanneal import checker, numdiff
from distanneal.objective import (ConfigurationError, SensorField, colinear_field, f_grad, f_value, g_deriv,
                                  g_value, make_double_well, make_localization, make_quadratic, smoothstep,
                                  un_grad, un_value)

# eigenvalues of the analytic Hessian 2 sum_n u_n u_n^T at the target (u_n unit sensor-to-target
# vectors), evaluated with mpmath at 30 digits
PENTAGON_HESSIAN_EIG = np.array([4.680446391613824, 5.319553608386176])


def test_smoothstep_endpoints():
    np.testing.assert_array_equal(smoothstep([-1.0, 0.0, 1.0, 2.0]), [0, 0, 1, 1])
    assert smoothstep(0.5) == pytest.approx(0.5, abs=1e-15)
    for k in (1, 2, 3):
        np.testing.assert_array_equal(smoothstep([0.0, 1.0], k), [0, 0])


def test_smoothstep_derivatives_match_fd():
    s = np.linspace(0.05, 0.95, 19)
    h = 1e-6
    for k in (1, 2, 3):
        fd = (smoothstep(s + h, k - 1) - smoothstep(s - h, k - 1)) / (2 * h)
        np.testing.assert_allclose(smoothstep(s, k), fd, rtol=1e-6, atol=1e-6)


def test_g_examples():
    for eps in (0.01, 0.2, 0.49):
        assert g_value(1.0, 1.0, eps) == 0.0
    assert g_value(0.0, 2.0, 0.25) == 1.0
    assert g_value(0.875, 2.0, 0.25) == pytest.approx(0.75, abs=1e-14)


def test_g_rejects_bad_bridge():
    with pytest.raises(ConfigurationError):
        g_value(0.3, 1.0, 0.5)
    with pytest.raises(ConfigurationError):
        g_value(0.3, 1.0, 0.0)


@given(st.floats(0.2, 5.0), st.floats(0.05, 0.95), st.floats(0.0, 3.0))
@settings(max_examples=200, deadline=None)
def test_g_derivatives_consistent(r, frac, yr):
    eps = frac * r / 2
    y = yr * r
    h = 1e-6 * (1 + y)
    for k in (1, 2, 3):
        lo = g_value(y - h, r, eps) if k == 1 else g_deriv(y - h, r, eps, k - 1)
        hi = g_value(y + h, r, eps) if k == 1 else g_deriv(y + h, r, eps, k - 1)
        # skip points straddling a junction where the next derivative jumps
        if any(abs(y - j) < 2 * h for j in (r / 2 - eps, r / 2)):
            continue
        assert g_deriv(y, r, eps, k) == pytest.approx((hi - lo) / (2 * h), rel=1e-4, abs=1e-4 * (1 + r**2 / eps**3))


def test_g_is_c3_at_junctions():
    r, eps = 2.0, 0.25
    for y0 in (r / 2 - eps, r / 2):
        jumps = checker.junction_jumps(lambda y: g_value(y, r, eps), y0, 0.9 * eps)
        assert jumps.max() <= 1e-4


def test_junction_check_detects_cubic_kink():
    # |y|^3 is C^2 but not C^3: third derivative jumps from -6 to 6
    jumps = checker.junction_jumps(lambda y: np.abs(y) ** 3, 0.0, 0.5)
    np.testing.assert_allclose(jumps[:3], 0, atol=1e-6)
    assert jumps[3] == pytest.approx(12 / 6, rel=1e-6)


def test_f_examples():
    r, eps = 2.0, 0.25
    assert f_value([r, 0.0], r, eps) == 0.0
    np.testing.assert_array_equal(f_grad([r, 0.0], r, eps), [0.0, 0.0])
    np.testing.assert_array_equal(f_grad([0.0, 0.0], r, eps), [0.0, 0.0])
    np.testing.assert_allclose(f_grad([1.5, 0.0], r, eps), [-1.0, 0.0], atol=1e-15)


def test_f_gradient_random_points(rng):
    r, eps = 1.3, 0.2
    X = rng.uniform(-3, 3, (300, 2))
    G = f_grad(X, r, eps)
    for x, g in zip(X, G):
        fd = numdiff.central_gradient(lambda p: f_value(p, r, eps), x)
        np.testing.assert_allclose(fd, g, atol=1e-6 * max(1, np.linalg.norm(g)))


def test_ground_truth_is_zero(pentagon, localization):
    z = pentagon.targets.ravel()
    for n in range(pentagon.n_sensors):
        assert un_value(pentagon, n, z) == 0.0
        np.testing.assert_array_equal(un_grad(pentagon, n, z), [0.0, 0.0])
    assert localization.value(z) == 0.0
    np.testing.assert_allclose(localization.grad(z), 0, atol=1e-10)


def test_outer_regime(pentagon):
    R = pentagon.region_radius
    x = np.array([3.0, 4.0]) / 5 * (R + 2)
    for n in range(5):
        assert un_value(pentagon, n, x) == pytest.approx(np.dot(x, x), rel=1e-15)
        np.testing.assert_allclose(un_grad(pentagon, n, x), 2 * x, rtol=1e-15)


def test_transition_boundary_matches_inner_formula(pentagon):
    R = pentagon.region_radius
    inner = SensorField(pentagon.sensors, pentagon.targets, pentagon.distances, R, pentagon.bridge_eps,
                        inner_only=True)
    u = np.array([0.6, -0.8])
    for n in range(5):
        assert un_value(pentagon, n, R * u) == pytest.approx(un_value(inner, n, R * u), rel=1e-15)


def test_hessian_at_target(localization, pentagon):
    z = pentagon.targets[0]
    H = checker.fd_hessian(localization, z)
    np.testing.assert_allclose(np.linalg.eigvalsh(H), PENTAGON_HESSIAN_EIG, rtol=1e-6)
    # analytic oracle
    u = (z - pentagon.sensors) / np.linalg.norm(z - pentagon.sensors, axis=1, keepdims=True)
    np.testing.assert_allclose(np.linalg.eigvalsh(2 * u.T @ u), PENTAGON_HESSIAN_EIG, rtol=1e-12)


def _regime_points(obj, rng, n):
    fld = obj.field
    R, T = fld.region_radius, fld.n_targets
    parts = [checker.ball_points(2, R * T, n // 4, rng),
             checker.ball_points(2, (R * T, (R + 1) * T), n // 4, rng),
             checker.ball_points(2, ((R + 1) * T, 2 * (R + 1) * T), n // 8, rng)]
    # points inside the bridge annuli of every sensor-target pair
    k = n - sum(len(p) for p in parts)
    sensor = rng.integers(0, fld.n_sensors, k)
    d = fld.distances[sensor, 0]
    lo = d / 2 - fld.bridge_eps
    y = lo + rng.random(k) * fld.bridge_eps
    ang = rng.uniform(0, 2 * np.pi, k)
    parts.append(fld.sensors[sensor] + y[:, None] * np.column_stack([np.cos(ang), np.sin(ang)]))
    return np.concatenate(parts)


def test_gradient_consistency_localization(localization):
    X = _regime_points(localization, np.random.default_rng(7), 1000)
    errs = checker.gradient_errors(localization, X)
    assert errs.max() <= 1e-6


@pytest.mark.parametrize("obj", [make_quadratic(3, [0.5, -1, 2], 4), make_double_well(2.0, 3)],
                         ids=["quadratic", "doublewell"])
def test_gradient_consistency_benchmarks(obj):
    X = checker.ball_points(obj.dim, 5.0, 1000, np.random.default_rng(8))
    assert checker.gradient_errors(obj, X).max() <= 1e-6


def test_global_minimum_certificate(localization, pentagon):
    rng = np.random.default_rng(9)
    X = checker.ball_points(2, pentagon.region_radius, 1000, rng)
    X = X[np.linalg.norm(X - pentagon.targets[0], axis=1) > 1e-9]
    assert np.all(localization.value(X) > 0)


def test_localization_shapes(localization):
    X = np.zeros((3, 4, 2))
    assert localization.value(X).shape == (3, 4)
    assert localization.grad(X).shape == (3, 4, 2)
    assert localization.agent_grads(np.zeros((3, 5, 2))).shape == (3, 5, 2)
    with pytest.raises(ValueError):
        localization.value(np.zeros(3))
    with pytest.raises(IndexError):
        localization.local_value(5, np.zeros(2))


def test_agent_grads_match_local_grads(localization, rng):
    X = rng.uniform(-5, 5, (10, 5, 2))
    G = localization.agent_grads(X)
    for n in range(5):
        np.testing.assert_allclose(G[:, n], localization.local_grad(n, X[:, n]), rtol=1e-14, atol=1e-14)


def test_two_target_field():
    f = SensorField.from_ground_truth([[0, 0], [1, 0], [0, 1], [1, 1]], [[0.3, 0.4], [0.7, 0.2]], 3.0)
    obj = make_localization(f)
    assert obj.dim == 4
    z = f.targets.ravel()
    assert obj.value(z) == 0.0
    X = checker.ball_points(4, 3 * (f.region_radius + 1), 200, np.random.default_rng(10))
    assert checker.gradient_errors(obj, X).max() <= 1e-6


def test_field_validation():
    with pytest.raises(ConfigurationError, match="diameter"):
        SensorField.from_ground_truth([[0, 0], [5, 0], [0, 1]], [[0.2, 0.2]], 3.0)
    with pytest.raises(ConfigurationError, match="bridge_eps"):
        SensorField.from_ground_truth([[0, 0], [1, 0], [0, 1]], [[0.2, 0.2]], 3.0, bridge_eps=1.0)
    with pytest.raises(ConfigurationError, match="positive"):
        SensorField.from_ground_truth([[0, 0], [1, 0], [0, 1]], [[0.0, 0.0]], 3.0)


def test_quadratic_examples():
    q = make_quadratic(1, 0.0)
    assert q.local_value(0, np.array([3.0])) == 9.0
    np.testing.assert_array_equal(q.local_grad(0, np.array([3.0])), [6.0])
    q5 = make_quadratic(2, [1.0, -1.0], n_agents=5)
    x = np.array([0.3, 2.0])
    assert q5.value(x) == pytest.approx(5 * q5.local_value(0, x))
    fd = numdiff.central_gradient(q5.value, x)
    np.testing.assert_allclose(fd, q5.grad(x), rtol=1e-8)


def test_double_well_examples():
    d = make_double_well()
    np.testing.assert_array_equal(d.local_value(0, np.array([[0.0], [1.0], [-1.0]])), [1, 0, 0])
    np.testing.assert_array_equal(d.local_grad(0, np.array([[-1.0], [0.0], [1.0]])).ravel(), [0, 0, 0])
    assert d.local_grad(0, np.array([2.0]))[0] == 24.0
    # local maximum at 0 separating the wells
    assert d.local_value(0, np.array([0.0])) > d.local_value(0, np.array([0.1]))


def test_colinear_field_builds():
    f = colinear_field()
    assert make_localization(f).value(f.targets.ravel()) == 0.0
