"""Distributed global optimization by annealing.

Consensus + innovations iterations with decaying Gaussian annealing noise over
random communication graphs, a C^3 sensor-localization objective, numerical
checks of the convergence assumptions and a Gibbs-measure quadrature oracle.
"""

from .engine import DivergenceError, NetworkState, NoiseModel, RunConfig, TrialReport, run, simulate, step
from .graph import GraphModel, LaplacianSample, lambda2_of_mean, neighbors, sample
from .objective import (ObjectiveSet, SensorField, make_double_well, make_localization, make_quadratic,
                        pentagon_field)
from .schedules import ConstantWeights, WeightSchedule, validate, weights

__all__ = [
    "ConstantWeights", "DivergenceError", "GraphModel", "LaplacianSample", "NetworkState", "NoiseModel",
    "ObjectiveSet", "RunConfig", "SensorField", "TrialReport", "WeightSchedule", "lambda2_of_mean",
    "make_double_well", "make_localization", "make_quadratic", "neighbors", "pentagon_field", "run",
    "sample", "simulate", "step", "validate", "weights",
]
