"""TOML run configuration: schema, defaults, presets and object construction.

A configuration is a table of sections. Unknown sections or keys are errors.
:func:`normalize` fills defaults, so ``load -> dump -> load`` is the identity
on every recognized field.
"""

from __future__ import annotations

import copy
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import tomli
import tomli_w

from . import graph as graphs
from .engine import NoiseModel, RunConfig
from .harness import ExperimentConfig, OutputSpec, default_output_dir
from .objective import (ConfigurationError, SensorField, colinear_field, make_double_well,
                        make_localization, make_quadratic, pentagon_field)
from .schedules import WeightSchedule


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


_NONE = object()

# section -> key -> default (_NONE marks optional keys without a default)
SCHEMA: dict[str, dict[str, Any]] = {
    "objective": {
        "preset": "pentagon",
        "sensors": _NONE,
        "targets": _NONE,
        "region_radius": 3.0,
        "bridge_eps": _NONE,
        "inner_only": False,
        "n_agents": _NONE,
        "dim": 2,
        "center": _NONE,
        "scale": 1.0,
    },
    "graph": {"topology": "ring", "edges": _NONE, "variant": "fixed", "p": 1.0},
    "schedule": {
        "c_alpha": 40.0,
        "c_beta": 0.3,
        "c_gamma": 1.0,
        "tau_beta": 0.25,
        "alpha_max": _NONE,
        "c0_bound": _NONE,
    },
    "noise": {"gradient_sigma": 0.0, "annealing": True, "l1_bound": _NONE},
    "engine": {"t_max": 10_000, "x0": _NONE, "checkpoints": [500, 1000, 2000, 5000, 10_000]},
    "experiment": {"n_trials": 100, "radii": [0.05, 0.1, 0.15, 0.2, 0.25], "master_seed": 0,
                   "threads": 1},
    "output": {"directory": _NONE, "stride": 10, "trajectories": 1, "field_bounds": [-1.5, 1.5],
               "field_points": 40},
    "gibbs": {"bounds": [-1.5, 1.5], "resolution": 600, "epsilons": [0.5, 0.3, 0.2, 0.1],
              "radius": 0.2},
    "check": {"seed": 0, "samples": 2000},
}

OBJECTIVE_PRESETS = ("pentagon", "colinear", "quadratic", "doublewell", "explicit")
CONFIG_PRESETS = ("paper", "quadratic", "doublewell", "colinear")


def normalize(raw: dict) -> dict:
    """Reject unknown sections/keys and fill defaults."""
    cfg: dict = {}
    for section in raw:
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(raw[section], dict):
            raise ConfigError(f"section {section!r} must be a table")
    for section, keys in SCHEMA.items():
        given = raw.get(section, {})
        for key in given:
            if key not in keys:
                raise ConfigError(f"unknown config key {section}.{key}")
        out = {}
        for key, default in keys.items():
            if key in given:
                out[key] = copy.deepcopy(given[key])
            elif default is not _NONE:
                out[key] = copy.deepcopy(default)
        cfg[section] = out
    return cfg


def loads(text: str) -> dict:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None
    return normalize(raw)


def dumps(cfg: dict) -> str:
    return tomli_w.dumps(cfg)


def preset_text(name: str) -> str:
    return resources.files("distanneal").joinpath("presets", f"{name}.toml").read_text()


def load(path_or_preset: str) -> dict:
    """Load a config file, or a shipped preset by bare name (``paper``, ...)."""
    path = Path(path_or_preset)
    if path.is_file():
        return loads(path.read_text())
    stem = path.name[:-5] if path.name.endswith(".toml") else path.name
    if stem in CONFIG_PRESETS and not path.exists():
        return loads(preset_text(stem))
    raise ConfigError(f"config file not found: {path_or_preset}")


def parse_override(item: str) -> tuple[str, str, Any]:
    """``section.key=value`` with the value parsed as a TOML literal (bare words become strings)."""
    if "=" not in item or "." not in item.split("=", 1)[0]:
        raise ConfigError(f"override must look like section.key=value, got {item!r}")
    lhs, value = item.split("=", 1)
    section, key = lhs.strip().split(".", 1)
    try:
        parsed = tomli.loads(f"v = {value.strip()}")["v"]
    except tomli.TOMLDecodeError:
        parsed = value.strip()
    return section, key, parsed


def apply_overrides(cfg: dict, overrides) -> dict:
    raw = copy.deepcopy(cfg)
    for item in overrides or ():
        section, key, value = parse_override(item)
        raw.setdefault(section, {})[key] = value
    return normalize(raw)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _field(o: dict) -> SensorField:
    preset = o["preset"]
    if preset == "pentagon":
        f = pentagon_field(region_radius=o["region_radius"], inner_only=o["inner_only"])
    elif preset == "colinear":
        f = colinear_field()
        f.inner_only = o["inner_only"]
    else:
        if "sensors" not in o or "targets" not in o:
            raise ConfigError("objective.sensors and objective.targets are required for preset 'explicit'")
        f = SensorField.from_ground_truth(o["sensors"], o["targets"], o["region_radius"],
                                          o.get("bridge_eps"), o["inner_only"])
        return f
    if "bridge_eps" in o:
        f.bridge_eps = float(o["bridge_eps"])
        f.validate()
    return f


def build_objective(cfg: dict):
    o = cfg["objective"]
    preset = o["preset"]
    if preset not in OBJECTIVE_PRESETS:
        raise ConfigError(f"objective.preset must be one of {OBJECTIVE_PRESETS}, got {preset!r}")
    try:
        if preset == "quadratic":
            return make_quadratic(int(o["dim"]), o.get("center"), int(o.get("n_agents", 5)))
        if preset == "doublewell":
            return make_double_well(float(o["scale"]), int(o.get("n_agents", 1)))
        obj = make_localization(_field(o))
    except ConfigurationError as exc:
        raise ConfigError(f"objective: {exc}") from None
    if "n_agents" in o and int(o["n_agents"]) != obj.n_agents:
        raise ConfigError(f"objective.n_agents={o['n_agents']} but the sensor field has {obj.n_agents} sensors")
    return obj


def build_graph(cfg: dict, n_agents: int) -> graphs.GraphModel:
    g = cfg["graph"]
    try:
        A = graphs.from_edges(n_agents, g["edges"]) if "edges" in g else graphs.topology(g["topology"], n_agents)
        return graphs.GraphModel(A, g["variant"], float(g["p"]))
    except graphs.GraphError as exc:
        raise ConfigError(f"graph: {exc}") from None


def build_schedule(cfg: dict) -> WeightSchedule:
    s = cfg["schedule"]
    return WeightSchedule(float(s["c_alpha"]), float(s["c_beta"]), float(s["c_gamma"]), float(s["tau_beta"]),
                          s.get("c0_bound"), s.get("alpha_max"))


def build_run(cfg: dict):
    """Objective, graph model and engine run config; validates cross-field consistency."""
    obj = build_objective(cfg)
    gm = build_graph(cfg, obj.n_agents)
    n = cfg["noise"]
    noise = NoiseModel(float(n["gradient_sigma"]), bool(n["annealing"]), n.get("l1_bound"))
    e = cfg["engine"]
    x0 = e.get("x0")
    if x0 is not None and np.asarray(x0, dtype=float).shape[-1] != obj.dim:
        raise ConfigError(f"engine.x0 has dimension {np.asarray(x0).shape[-1]}, objective dim is {obj.dim}")
    run = RunConfig(obj, gm, build_schedule(cfg), noise, int(e["t_max"]), [int(c) for c in e["checkpoints"]],
                    None if x0 is None else np.asarray(x0, dtype=float))
    problems = run.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    return run


def build_experiment(cfg: dict) -> ExperimentConfig:
    run = build_run(cfg)
    x = cfg["experiment"]
    exp = ExperimentConfig(run, int(x["n_trials"]), [float(r) for r in x["radii"]])
    problems = exp.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    return exp


def build_output(cfg: dict) -> OutputSpec:
    o = cfg["output"]
    return OutputSpec(Path(o.get("directory", default_output_dir())), int(o["stride"]), int(o["trajectories"]),
                      tuple(o["field_bounds"]), int(o["field_points"]))
