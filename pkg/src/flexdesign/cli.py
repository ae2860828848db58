"""Command-line front door.

Subcommands mirror the library's workflow: generate an instance, build a
design on it, evaluate a scenario, audit the subset conditions, run a
Monte Carlo sweep, or snapshot a design's degree profile.  Seeds are
explicit and required wherever randomness enters, so every artifact a
command writes can be regenerated bit-for-bit.

Exit codes: 0 on success, 1 when an audit fails under --strict, 2 for
usage errors and malformed inputs.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import audit as audit_mod
from . import experiment as exp_mod
from . import report
from .construct import (
    METHODS,
    ConstructionConfig,
    DesignGraph,
    build_design,
    gamma_from_theory,
    method_profile,
)
from .errors import BoundViolationError, FlexdesignError
from .flow import full_flex_value, max_fulfilled_demand
from .system import (
    ProductionSystem,
    Scenario,
    check_assumptions,
    make_pareto_instance,
    make_two_level_instance,
    make_uniform_instance,
    normalize,
    sample_scenario,
)

USAGE_ERROR = 2
AUDIT_FAIL = 1


def _write_json(payload, out):
    if out:
        with open(out, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    else:
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")


def _load_instance(path) -> ProductionSystem:
    return ProductionSystem.load(path)


def _scenario_from_args(args, system: ProductionSystem | None) -> Scenario:
    if getattr(args, "scenario", None):
        return Scenario.load(args.scenario)
    if getattr(args, "scenario_seed", None) is not None:
        if system is None:
            raise FlexdesignError("--scenario-seed needs --instance")
        return sample_scenario(system, args.scenario_seed)
    raise FlexdesignError("provide --scenario FILE or --instance with --scenario-seed")


def cmd_gen(args) -> int:
    if args.family == "two-level":
        system = make_two_level_instance(args.n, args.alpha)
    elif args.family == "pareto":
        if args.seed is None:
            raise FlexdesignError("gen pareto requires --seed")
        system = make_pareto_instance(args.m or args.n, args.n, args.beta,
                                      args.cap, seed=args.seed)
    elif args.family == "uniform":
        if args.seed is None:
            raise FlexdesignError("gen uniform requires --seed")
        system = make_uniform_instance(args.m or args.n, args.n, seed=args.seed)
    else:  # custom
        system = normalize(_load_instance(args.source))
    if args.check:
        rep = check_assumptions(system, args.check_epsilon, args.check_c)
        json.dump(rep.to_dict(), sys.stdout, indent=2)
        sys.stdout.write("\n")
    if args.out:
        system.save(args.out)
    else:
        json.dump(system.to_dict(), sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0


def cmd_build(args) -> int:
    system = _load_instance(args.instance)
    if args.epsilon is not None:
        cfg = ConstructionConfig(
            seed=args.seed,
            gamma_mode="theory",
            epsilon=args.epsilon,
            kappa=args.kappa,
            c0=args.c0,
            threshold_c=args.threshold_c,
        )
    else:
        if args.gamma is None and args.method != "full":
            raise FlexdesignError("provide --gamma or --epsilon (theory mode)")
        cfg = ConstructionConfig(
            seed=args.seed,
            gamma=args.gamma,
            threshold_c=args.threshold_c,
        )
    graph = build_design(system, cfg, args.method)
    if args.out:
        graph.save(args.out)
    else:
        json.dump(graph.to_dict(), sys.stdout, indent=2)
        sys.stdout.write("\n")
    print(f"method={graph.method} gamma={graph.gamma:g} edges={graph.edge_count}",
          file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    graph = DesignGraph.load(args.design)
    system = _load_instance(args.instance) if args.instance else None
    scenario = _scenario_from_args(args, system)
    result = max_fulfilled_demand(graph, scenario, with_flows=args.flows)
    payload = {
        "value": result.value,
        "full_flex_value": full_flex_value(scenario),
        "ratio_to_full": result.ratio_to_full,
    }
    if args.flows:
        payload["edge_flows"] = list(result.edge_flows)
    _write_json(payload, args.out)
    return 0


def _audit_config(args, system: ProductionSystem | None) -> audit_mod.AuditConfig:
    kappa = args.kappa
    if kappa is None:
        kappa = system.kappa if system is not None else 2.0
    return audit_mod.AuditConfig(
        epsilon=args.epsilon,
        kappa=kappa,
        delta=args.delta,
        tau=args.tau,
        c_l=args.c_l,
        gamma=args.gamma,
        max_enumeration_m=args.max_m,
        tol=args.tol,
    )


def cmd_audit(args) -> int:
    graph = None
    if args.design:
        graph = DesignGraph.load(args.design)
    system = _load_instance(args.instance) if args.instance else None
    profile = None
    if system is not None:
        profile = method_profile(system, "tpc", args.threshold_c)

    if args.condition == "cut":
        scenario = _scenario_from_args(args, system)
        rep = audit_mod.cut_condition_audit(graph, scenario, args.epsilon,
                                            args.max_m, args.tol)
    elif args.condition == "either-or":
        scenario = _scenario_from_args(args, system)
        rep = audit_mod.either_or_audit(graph, profile, scenario,
                                        _audit_config(args, system))
    elif args.condition == "expand-demand":
        if profile is None:
            raise FlexdesignError("expand-demand needs --instance for the profile")
        scenario = _scenario_from_args(args, system)
        rep = audit_mod.expansion_audit_demand(graph, profile, scenario,
                                               _audit_config(args, system))
    elif args.condition == "expand-importance":
        if profile is None:
            raise FlexdesignError("expand-importance needs --instance for the profile")
        rep = audit_mod.expansion_audit_importance(graph, profile,
                                                   _audit_config(args, system))
    else:  # neighbor
        if profile is None:
            raise FlexdesignError("neighbor needs --instance for the profile")
        if args.gamma is None:
            raise FlexdesignError("neighbor needs --gamma")
        if args.seed is None:
            raise FlexdesignError("neighbor needs --seed")
        subset = [int(x) for x in args.subset.split(",")] if args.subset else []
        try:
            empirical, bound = audit_mod.neighbor_probability_check(
                system, profile, args.gamma, subset, args.demand_node,
                args.trials, args.seed)
            payload = {"condition": "neighbor_probability", "pass": True,
                       "empirical": empirical, "lower_bound": bound}
        except BoundViolationError as exc:
            payload = {"condition": "neighbor_probability", "pass": False,
                       "empirical": exc.empirical, "lower_bound": exc.lower_bound}
        _write_json(payload, args.out)
        return AUDIT_FAIL if (args.strict and not payload["pass"]) else 0

    _write_json(rep.to_dict(), args.out)
    if args.strict and not rep.passed:
        return AUDIT_FAIL
    return 0


def cmd_experiment(args) -> int:
    plan = exp_mod.ExperimentPlan.load(args.plan)
    if args.paper_scale:
        d = plan.to_dict()
        d["n_graphs"] = 100
        d["n_scenarios"] = 1000
        plan = exp_mod.ExperimentPlan.from_dict(d)
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    os.makedirs(args.out, exist_ok=True)
    if args.optimality:
        table, opt = exp_mod.run_experiment_suite(plan, jobs=jobs)
    else:
        table = exp_mod.run_ratio_experiment(plan, jobs=jobs)
        opt = None
    ext = "csv" if args.format == "csv" else "json"
    results_path = os.path.join(args.out, f"results.{ext}")
    exp_mod.emit_results(table, results_path, args.format)
    written = [results_path]
    if opt is not None:
        opt_path = os.path.join(args.out, "optimality.json")
        payload = [
            {"method": r.method, "gamma": round(r.gamma, 6),
             "freq": round(r.freq, 6),
             "per_graph": [round(x, 6) for x in r.per_graph]}
            for r in opt.rows
        ]
        with open(opt_path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        written.append(opt_path)
    if not args.no_figures:
        fig_path = os.path.join(args.out, "ratio_vs_gamma.png")
        report.save_ratio_figure(table, fig_path)
        written.append(fig_path)
        if opt is not None:
            ofig = os.path.join(args.out, "optimality_vs_gamma.png")
            report.save_optimality_figure(opt, ofig)
            written.append(ofig)
    for p in written:
        print(p)
    return 0


def cmd_snapshot(args) -> int:
    graph = DesignGraph.load(args.design)
    exp_mod.emit_design_snapshot(graph, args.out, split=args.split)
    written = [args.out]
    if args.figure:
        fig_path = os.path.splitext(args.out)[0] + ".png"
        report.save_snapshot_figure(graph, fig_path, split=args.split)
        written.append(fig_path)
    for p in written:
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flexdesign",
        description="Probabilistic flexibility-design toolkit: generate instances, "
                    "wire designs, evaluate fulfilled demand, audit guarantees, "
                    "and run Monte Carlo sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate an instance file")
    p_gen.add_argument("family", choices=["two-level", "pareto", "uniform", "custom"])
    p_gen.add_argument("--n", type=int, help="demand-side size (and supply side unless --m)")
    p_gen.add_argument("--m", type=int, help="supply-side size (defaults to --n)")
    p_gen.add_argument("--alpha", type=float, help="low-block mean level for two-level")
    p_gen.add_argument("--beta", type=float, help="power-law shape for pareto")
    p_gen.add_argument("--cap", type=float, default=50.0, help="truncation cap for pareto")
    p_gen.add_argument("--seed", type=int, help="seed for random mean draws")
    p_gen.add_argument("--source", help="existing instance JSON (family custom)")
    p_gen.add_argument("--check", action="store_true",
                       help="print the regularity report for the instance")
    p_gen.add_argument("--check-epsilon", type=float, default=0.3)
    p_gen.add_argument("--check-c", type=float, default=0.9)
    p_gen.add_argument("--out", help="output path (stdout if omitted)")
    p_gen.set_defaults(func=cmd_gen)

    p_build = sub.add_parser("build", help="build a design on an instance")
    p_build.add_argument("--instance", required=True)
    p_build.add_argument("--method", required=True, choices=list(METHODS))
    p_build.add_argument("--gamma", type=float, help="average-degree parameter")
    p_build.add_argument("--epsilon", type=float,
                         help="tolerance for theory-mode gamma")
    p_build.add_argument("--kappa", type=float,
                         help="variation bound for theory-mode gamma "
                              "(defaults to the instance's)")
    p_build.add_argument("--c0", type=float, default=1.0,
                         help="free constant for theory-mode gamma")
    p_build.add_argument("--threshold-c", type=float, default=0.2, dest="threshold_c")
    p_build.add_argument("--seed", type=int, required=True)
    p_build.add_argument("--out", help="design path (stdout if omitted)")
    p_build.set_defaults(func=cmd_build)

    p_eval = sub.add_parser("eval", help="fulfilled demand of a design under a scenario")
    p_eval.add_argument("--design", required=True)
    p_eval.add_argument("--scenario", help="scenario JSON file")
    p_eval.add_argument("--instance", help="instance to sample a scenario from")
    p_eval.add_argument("--scenario-seed", type=int, dest="scenario_seed")
    p_eval.add_argument("--flows", action="store_true", help="include per-edge flows")
    p_eval.add_argument("--out")
    p_eval.set_defaults(func=cmd_eval)

    p_audit = sub.add_parser("audit", help="check a subset condition on a design")
    p_audit.add_argument("condition", choices=["cut", "either-or", "expand-demand",
                                               "expand-importance", "neighbor"])
    p_audit.add_argument("--design")
    p_audit.add_argument("--instance")
    p_audit.add_argument("--scenario")
    p_audit.add_argument("--scenario-seed", type=int, dest="scenario_seed")
    p_audit.add_argument("--epsilon", type=float, default=0.2)
    p_audit.add_argument("--kappa", type=float)
    p_audit.add_argument("--delta", type=float, default=1.0 / 3.0)
    p_audit.add_argument("--tau", type=float)
    p_audit.add_argument("--c-l", type=float, default=5.0 / 6.0, dest="c_l")
    p_audit.add_argument("--gamma", type=float, help="degree parameter (neighbor check)")
    p_audit.add_argument("--threshold-c", type=float, default=0.2, dest="threshold_c")
    p_audit.add_argument("--max-m", type=int, default=20, dest="max_m")
    p_audit.add_argument("--tol", type=float, default=1e-9,
                         help="rounding guard for boundary comparisons")
    p_audit.add_argument("--subset", help="comma-separated supply ids (neighbor check)")
    p_audit.add_argument("--demand-node", type=int, dest="demand_node",
                         help="demand id (neighbor check)")
    p_audit.add_argument("--trials", type=int, default=10000)
    p_audit.add_argument("--seed", type=int)
    p_audit.add_argument("--strict", action="store_true",
                         help="exit 1 when the audit fails")
    p_audit.add_argument("--out")
    p_audit.set_defaults(func=cmd_audit)

    p_exp = sub.add_parser("experiment", help="run a Monte Carlo sweep from a plan")
    p_exp.add_argument("--plan", required=True)
    p_exp.add_argument("--out", required=True, help="output directory")
    p_exp.add_argument("--format", choices=["csv", "json"], default="csv")
    p_exp.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    p_exp.add_argument("--optimality", action="store_true",
                       help="also emit absolute near-optimality frequencies")
    p_exp.add_argument("--paper-scale", action="store_true", dest="paper_scale",
                       help="override to 100 graphs x 1000 scenarios")
    p_exp.add_argument("--no-figures", action="store_true", dest="no_figures",
                       help="skip figure rendering")
    p_exp.set_defaults(func=cmd_experiment)

    p_snap = sub.add_parser("snapshot", help="degree profile and block shares of a design")
    p_snap.add_argument("--design", required=True)
    p_snap.add_argument("--out", required=True)
    p_snap.add_argument("--split", type=int, help="supply block boundary (default m/2)")
    p_snap.add_argument("--figure", action="store_true", help="also render a figure")
    p_snap.set_defaults(func=cmd_snapshot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FlexdesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
