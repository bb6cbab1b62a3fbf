import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from distanneal.schedules import ConstantWeights, WeightSchedule, validate, warn_if_c0_unset, weights

DEFAULT = WeightSchedule(c_alpha=40, c_beta=0.3, c_gamma=1, tau_beta=0.25)


def test_first_iteration_uses_clamp():
    assert weights(DEFAULT, 1) == (40.0, 0.3, 1.0)


def test_alpha_at_100():
    assert weights(DEFAULT, 100)[0] == pytest.approx(0.4)


def test_gamma_at_ten_thousand():
    # mpmath, 30 digits: 1 / sqrt(1e4 * ln(ln(1e4)))
    assert weights(DEFAULT, 10_000)[2] == pytest.approx(0.006711066602007242, rel=1e-12)


def test_zero_iteration_is_an_error():
    with pytest.raises(ValueError):
        weights(DEFAULT, 0)


def test_alpha_cap_only_touches_prefix():
    capped = WeightSchedule(alpha_max=0.5)
    assert weights(capped, 1)[0] == 0.5
    assert weights(capped, 80)[0] == 0.5
    assert weights(capped, 81) == weights(DEFAULT, 81)


@pytest.mark.parametrize("schedule, expected", [
    (WeightSchedule(c_alpha=40, c_gamma=1, c0_bound=0.01), []),
    (WeightSchedule(tau_beta=0.5), ["tau_beta out of (0, 1/2)"]),
    (WeightSchedule(c_alpha=0), ["c_alpha must be positive"]),
])
def test_validate(schedule, expected):
    assert validate(schedule) == expected


def test_c0_bound_violation_is_named():
    problems = validate(WeightSchedule(c_alpha=40, c_gamma=1, c0_bound=0.05))
    assert len(problems) == 1 and "c0_bound" in problems[0]


def test_unset_c0_warns():
    with pytest.warns(UserWarning, match="c0_bound"):
        warn_if_c0_unset(DEFAULT)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        warn_if_c0_unset(WeightSchedule(c0_bound=0.01))


@given(st.integers(min_value=2, max_value=10**7))
def test_alpha_beta_strictly_decreasing(t):
    a0, b0, _ = weights(DEFAULT, t)
    a1, b1, _ = weights(DEFAULT, t + 1)
    assert a1 < a0 and b1 < b0


@given(st.integers(min_value=16, max_value=10**7))
def test_gamma_nonincreasing_in_tail(t):
    assert weights(DEFAULT, t + 1)[2] <= weights(DEFAULT, t)[2]


def test_gamma_nonincreasing_everywhere_small_t():
    g = [weights(DEFAULT, t)[2] for t in range(1, 200)]
    assert all(b <= a for a, b in zip(g, g[1:]))


def test_step_size_sums():
    t = np.arange(1, 10**6 + 1, dtype=float)
    alpha = 40.0 / t
    partial = np.cumsum(alpha)
    partial_sq = np.cumsum(alpha**2)
    # sum alpha grows like 40 ln t; sum alpha^2 converges to 40^2 pi^2 / 6
    assert partial[-1] - partial[10**5 - 1] == pytest.approx(40 * math.log(10), rel=1e-4)
    assert partial_sq[-1] == pytest.approx(1600 * math.pi**2 / 6, rel=1e-5)
    assert partial_sq[-1] - partial_sq[10**5 - 1] < 2e-2


def test_noise_to_step_ratio_decays():
    ratios = [weights(DEFAULT, t)[2] ** 2 / weights(DEFAULT, t)[0] for t in range(16, 5000)]
    assert all(b <= a for a, b in zip(ratios, ratios[1:]))
    t = 10**6
    assert weights(DEFAULT, t)[2] ** 2 / weights(DEFAULT, t)[0] == pytest.approx(
        (1 / 40) / math.log(math.log(t)), rel=1e-12)


def test_constant_weights():
    assert ConstantWeights(0.1, 0.2, 0.0).weights(7) == (0.1, 0.2, 0.0)
