"""Decaying weight sequences for the consensus, innovation and annealing terms."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class WeightSchedule:
    """``alpha_t = c_alpha / t``, ``beta_t = c_beta / t^tau_beta``,
    ``gamma_t = c_gamma / sqrt(t * max(ln ln t, 1))``.

    ``alpha_max`` optionally caps ``alpha_t`` on the finite prefix where
    ``c_alpha / t`` would exceed it. ``c0_bound`` is a user-supplied stand-in
    for the annealing constant ``C_0`` required to satisfy
    ``c_gamma^2 / c_alpha > C_0``.
    """

    c_alpha: float = 40.0
    c_beta: float = 0.3
    c_gamma: float = 1.0
    tau_beta: float = 0.25
    c0_bound: Optional[float] = None
    alpha_max: Optional[float] = None

    def weights(self, t: int) -> tuple[float, float, float]:
        return weights(self, t)


def loglog_clamped(t: int) -> float:
    """``max(ln ln t, 1)``; the clamp is active for ``t < 16``."""
    if t < 16:
        return 1.0
    return max(math.log(math.log(t)), 1.0)


def weights(schedule: WeightSchedule, t: int) -> tuple[float, float, float]:
    """Return ``(alpha_t, beta_t, gamma_t)`` for iteration ``t >= 1``."""
    if t < 1 or int(t) != t:
        raise ValueError(f"iteration index must be a positive integer, got {t}")
    alpha = schedule.c_alpha / t
    if schedule.alpha_max is not None:
        alpha = min(alpha, schedule.alpha_max)
    beta = schedule.c_beta / t**schedule.tau_beta
    gamma = schedule.c_gamma / math.sqrt(t * loglog_clamped(t))
    return alpha, beta, gamma


def validate(schedule: WeightSchedule) -> list[str]:
    """List every violated constraint; empty when the schedule is admissible."""
    problems = []
    for name in ("c_alpha", "c_beta", "c_gamma"):
        if not getattr(schedule, name) > 0:
            problems.append(f"{name} must be positive")
    if not 0 < schedule.tau_beta < 0.5:
        problems.append("tau_beta out of (0, 1/2)")
    if schedule.alpha_max is not None and not schedule.alpha_max > 0:
        problems.append("alpha_max must be positive")
    if schedule.c0_bound is not None:
        if not schedule.c0_bound > 0:
            problems.append("c0_bound must be positive")
        elif schedule.c_alpha > 0 and not schedule.c_gamma**2 / schedule.c_alpha > schedule.c0_bound:
            problems.append(
                f"c_gamma^2 / c_alpha = {schedule.c_gamma**2 / schedule.c_alpha:.6g} "
                f"must exceed c0_bound = {schedule.c0_bound:.6g}")
    return problems


def warn_if_c0_unset(schedule: WeightSchedule) -> None:
    if schedule.c0_bound is None:
        warnings.warn("c0_bound not set: the annealing condition c_gamma^2/c_alpha > C_0 is unchecked",
                      stacklevel=2)


@dataclass(frozen=True)
class ConstantWeights:
    """Constant ``(alpha, beta, gamma)``, zero allowed; used for ablations."""

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def weights(self, t: int) -> tuple[float, float, float]:
        if t < 1:
            raise ValueError(f"iteration index must be a positive integer, got {t}")
        return self.alpha, self.beta, self.gamma
