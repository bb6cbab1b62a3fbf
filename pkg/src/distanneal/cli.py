"""Command line front end.

    distanneal run   --config paper [--seed 7] [--set engine.t_max=2000] [--threads 4]
    distanneal table --config paper
    distanneal check --config paper
    distanneal gibbs --config doublewell

``--config`` takes a TOML file or a shipped preset name (paper, quadratic,
doublewell, colinear). Outputs go to ``output.directory``, ``--output`` or
``$DISTANNEAL_OUTPUT``. Exit codes: 0 success, 1 invalid input,
2 majority of trials diverged, 3 a hard assumption check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import time

from . import checker, config as cfgmod, gibbs
from . import graph as graphs
from .harness import run_experiment, write_outputs
from .schedules import validate as validate_schedule

EXIT_OK, EXIT_VALIDATION, EXIT_DIVERGENCE, EXIT_CHECK = 0, 1, 2, 3


def _load(args) -> dict:
    cfg = cfgmod.load(args.config)
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"experiment.master_seed={args.seed}")
    if getattr(args, "threads", None) is not None:
        overrides.append(f"experiment.threads={args.threads}")
    if getattr(args, "output", None) is not None:
        overrides.append(f"output.directory={_toml_string(args.output)}")
    return cfgmod.apply_overrides(cfg, overrides)


def _toml_string(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def cmd_run(args, table_only: bool = False) -> int:
    cfg = _load(args)
    exp = cfgmod.build_experiment(cfg)
    out = cfgmod.build_output(cfg)
    x = cfg["experiment"]
    start = time.perf_counter()
    table, reports = run_experiment(exp, int(x["master_seed"]), int(x["threads"]))
    elapsed = time.perf_counter() - start
    written = write_outputs(out, exp.run.objective, table, reports, table_only=table_only)
    if table is not None:
        print(table.format())
    n_div = sum(r.diverged is not None for r in reports)
    print(f"{len(reports)} trials in {elapsed:.1f}s; wrote {', '.join(p.name for p in written)} to {out.directory}")
    if n_div:
        first = next(r for r in reports if r.diverged is not None)
        print(f"warning: {n_div} trial(s) diverged, first at t={first.diverged['t']} (seed {first.seed})",
              file=sys.stderr)
    if 2 * n_div > len(reports):
        return EXIT_DIVERGENCE
    return EXIT_OK


def run_checks(cfg: dict) -> checker.AssumptionReport:
    """Objective checks plus graph connectivity and schedule admissibility."""
    obj = cfgmod.build_objective(cfg)
    gm = cfgmod.build_graph(cfg, obj.n_agents)
    sched = cfgmod.build_schedule(cfg)
    c = cfg["check"]
    rep = checker.run_objective_checks(obj, seed=int(c["seed"]), samples=int(c["samples"]))
    lam2 = graphs.lambda2_of_mean(gm)
    ok = obj.n_agents == 1 or lam2 > 0
    rep.add(checker.CheckResult("A8", checker.PASS if ok else checker.FAIL, lam2, {"lambda2_mean": lam2}))
    problems = validate_schedule(sched)
    note = "; ".join(problems) if problems else ("" if sched.c0_bound is not None else
                                                 "c0_bound unset: c_gamma^2/c_alpha > C_0 not checked")
    rep.add(checker.CheckResult("A11", checker.FAIL if problems else checker.PASS,
                                sched.c_gamma**2 / sched.c_alpha if sched.c_alpha > 0 else float("nan"),
                                {"c_alpha": sched.c_alpha, "c_beta": sched.c_beta, "c_gamma": sched.c_gamma,
                                 "tau_beta": sched.tau_beta}, note))
    return rep


def cmd_check(args) -> int:
    cfg = _load(args)
    rep = run_checks(cfg)
    print(rep.format())
    out = cfgmod.build_output(cfg).directory
    out.mkdir(parents=True, exist_ok=True)
    (out / "check.csv").write_text(rep.to_csv())
    failed = checker.hard_failures(rep)
    if failed:
        print(f"hard failures: {', '.join(failed)}")
        return EXIT_CHECK
    return EXIT_OK


def cmd_gibbs(args) -> int:
    cfg = _load(args)
    obj = cfgmod.build_objective(cfg)
    if obj.dim > 2:
        print("error: grid oracle limited to d <= 2", file=sys.stderr)
        return EXIT_VALIDATION
    g = cfg["gibbs"]
    rows = gibbs.concentration_profile(obj, g["bounds"], int(g["resolution"]), g["epsilons"], float(g["radius"]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "radius", "mass"])
    for eps, r, m in rows:
        w.writerow([repr(eps), repr(r), repr(m)])
    text = buf.getvalue()
    sys.stdout.write(text)
    out = cfgmod.build_output(cfg).directory
    out.mkdir(parents=True, exist_ok=True)
    (out / "gibbs.csv").write_text(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distanneal", description="Distributed annealing simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "run the Monte Carlo experiment"),
                            ("table", "run the experiment, write only table.csv"),
                            ("check", "numerically check the convergence assumptions"),
                            ("gibbs", "Gibbs-measure concentration by grid quadrature")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML file or preset name")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config value")
        p.add_argument("--output", help="output directory")
        if name in ("run", "table"):
            p.add_argument("--seed", type=int, help="master seed (overrides experiment.master_seed)")
            p.add_argument("--threads", type=int, help="worker processes")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": cmd_run, "table": lambda a: cmd_run(a, table_only=True), "check": cmd_check,
                "gibbs": cmd_gibbs}
    try:
        return handlers[args.command](args)
    except (cfgmod.ConfigError, ValueError, gibbs.GibbsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
