"""Command-line entry point: ``robustsub {gen,run,eval,check,experiment}``.

Exit codes: 0 success, 2 validation error, 3 resource cap hit,
4 property check failed under ``--strict``.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import applications as apps
from .constraints import Cardinality, constraint_from_dict
from .experiment import ExperimentConfig, rows_to_csv, run_experiment
from .formats import dumps, instance_to_dict, load_instance, load_json_arg
from .model import ResourceCapError, TOL, ValidationError
from .oracle import DivisionByZeroOptimum, TreePolicy, eval_exact, eval_expected_wc, opt_average_case, opt_worst_case
from .policies import Environment, policy_from_dict
from .properties import CHECKERS, MODES, run_checks

EXIT_OK, EXIT_VALIDATION, EXIT_CAP, EXIT_STRICT = 0, 2, 3, 4
GEN_KINDS = ("counterexample", "active-learning", "viral", "coverage", "sensors", "descriptor")


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(args):
    return load_instance(args.instance, args.support_cap)


def _constraint(args):
    if args.constraint is None:
        raise ValidationError("--constraint is required")
    return constraint_from_dict(load_json_arg(args.constraint))


# -- subcommands -----------------------------------------------------------


def cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    kind = args.kind
    if kind == "counterexample":
        inst = apps.counterexample(args.eps)
    elif kind == "active-learning":
        hs = apps.random_hypothesis_space(rng, args.points, args.hypotheses, args.labels, args.mixed)
        inst = apps.build_active_learning(hs)
    elif kind == "viral":
        g = apps.random_diffusion_graph(rng, args.points, args.edges, args.uncertain)
        inst = apps.build_viral_marketing(g, args.support_cap)
    elif kind == "coverage":
        inst = apps.random_coverage(rng, args.points, args.universe, args.options)
    elif kind == "sensors":
        inst = apps.random_sensors(rng, args.points, args.universe)
    else:
        if args.descriptor is None:
            raise ValidationError("--descriptor is required for kind 'descriptor'")
        inst = apps.instance_from_descriptor(load_json_arg(args.descriptor), args.support_cap)
    _emit(dumps(instance_to_dict(inst, args.materialize)) + "\n", args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    inst = _load(args)
    c = _constraint(args)
    spec = policy_from_dict(load_json_arg(args.policy), c)
    if args.env == "all":
        indices = list(range(inst.m))
    else:
        try:
            indices = [int(args.env)]
        except ValueError:
            raise ValidationError(f"--env must be a realization index or 'all', got {args.env!r}") from None
    seed = spec.seed if spec.seed is not None else args.seed
    runs = [spec(inst, Environment(inst, i), np.random.default_rng([seed, i])) for i in indices]
    utils = [r.utility for r in runs]
    report = {"runs": [r.to_dict() for r in runs], "f_wc": min(utils)}
    if args.env == "all":
        report["f_avg"] = float(np.dot(inst.probs, utils))
    _emit(json.dumps(report, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    inst = _load(args)
    c = _constraint(args)
    desc = load_json_arg(args.policy)
    caps = {"max_support": args.oracle_support, "max_nodes": args.oracle_nodes}
    opt_wc, wc_tree = opt_worst_case(inst, c, **caps)
    opt_avg, avg_tree = opt_average_case(inst, c, **caps)
    name = desc.get("policy")
    if name in ("oracle-wc", "oracle-avg"):
        policy = TreePolicy(wc_tree if name == "oracle-wc" else avg_tree)
    else:
        policy = policy_from_dict(desc, c)
        if not policy.deterministic:
            if not isinstance(c, Cardinality):
                raise ValidationError("the sampled greedy is only defined under a cardinality constraint")
            est = eval_expected_wc(inst, policy.k, policy.eps, args.runs, args.seed)
            report = {
                "expected_wc": est.estimate,
                "half_width": est.half_width,
                "opt_wc": opt_wc,
                "opt_avg": opt_avg,
                "max_evaluations": est.max_evaluations,
                "sample_size": est.sample_size,
            }
            _emit(json.dumps(report, sort_keys=True) + "\n", args.out)
            return EXIT_OK
    beta = args.beta if args.beta is not None else desc.get("beta")
    rep = eval_exact(inst, c, policy, beta=beta, optima=(opt_wc, opt_avg), strict=args.strict)
    out = rep.to_dict()
    if args.tree:
        out["tree_wc"] = wc_tree.to_dict()
        out["tree_avg"] = avg_tree.to_dict()
    _emit(json.dumps(out, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    names = list(CHECKERS) if args.properties in (None, "all") else [s.strip() for s in args.properties.split(",") if s.strip()]
    unknown = [n for n in names if n not in CHECKERS]
    if unknown:
        raise ValidationError(f"unknown properties {unknown}; expected some of {', '.join(CHECKERS)}")
    inst = _load(args)
    reports = run_checks(inst, names, tol=args.tol, cap=args.check_cap, mode=args.mode)
    _emit("".join(r.to_json() + "\n" for r in reports), args.out)
    if args.strict and not all(reports):
        return EXIT_STRICT
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_dict(load_json_arg(args.config)) if args.config else ExperimentConfig()
    for name in ("points", "hypotheses", "labels", "k_min", "k_max", "repetitions", "jobs", "q", "instance"):
        val = getattr(args, name)
        if val is not None:
            setattr(cfg, name, val)
    if args.policies is not None:
        cfg.policies = tuple(s.strip() for s in args.policies.split(",") if s.strip())
    if args.mixed:
        cfg.mixed = True
    if args.seed_given:
        cfg.seed = args.seed
    _emit(rows_to_csv(run_experiment(cfg)), args.out or cfg.out)
    return EXIT_OK


# -- parser ----------------------------------------------------------------


def _global_flags(p: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(None), help="random seed (default 0)")
    p.add_argument("--tol", type=float, default=d(TOL), help="comparison slack for property checks")
    p.add_argument("--support-cap", type=int, default=d(apps.DEFAULT_SUPPORT_CAP), help="largest prior support a generator may build")
    p.add_argument("--strict", action="store_true", default=d(False), help="exit 4 when a property check fails")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustsub", description="Robust adaptive submodular maximization toolkit")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    g = sub.add_parser("gen", parents=[common], help="generate an instance file")
    g.add_argument("kind", choices=GEN_KINDS)
    g.add_argument("--eps", type=float, default=0.1)
    g.add_argument("--points", type=int, default=8, help="items: data points, nodes, coverage items or sensors")
    g.add_argument("--hypotheses", type=int, default=16)
    g.add_argument("--labels", type=int, default=2)
    g.add_argument("--mixed", action="store_true")
    g.add_argument("--edges", type=int, default=10)
    g.add_argument("--uncertain", type=int, default=6, help="max edges with probability strictly inside (0, 1)")
    g.add_argument("--universe", type=int, default=6, help="universe size or sensor locations")
    g.add_argument("--options", type=int, default=2)
    g.add_argument("--descriptor", help="application descriptor JSON or @file")
    g.add_argument("--materialize", action="store_true", help="write the utility as a full table")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    def instance_args(p):
        p.add_argument("instance")
        p.add_argument("--constraint", help='constraint JSON or @file, e.g. {"type":"cardinality","k":2}')
        p.add_argument("--policy", required=True, help="policy descriptor JSON or @file")
        p.add_argument("--out")

    r = sub.add_parser("run", parents=[common], help="run a policy against one or all realizations")
    instance_args(r)
    r.add_argument("--env", default="all", help="realization index or 'all'")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("eval", parents=[common], help="exact robustness report against the oracle optima")
    instance_args(e)
    e.add_argument("--beta", type=float)
    e.add_argument("--tree", action="store_true", help="include the optimal decision trees")
    e.add_argument("--runs", type=int, default=1000, help="Monte-Carlo runs for the sampled greedy")
    e.add_argument("--oracle-support", type=int, default=64)
    e.add_argument("--oracle-nodes", type=int, default=10**7)
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("check", parents=[common], help="exhaustive property checks, one JSON line each")
    c.add_argument("instance")
    c.add_argument("--properties", help=f"comma list from: {', '.join(CHECKERS)} (default all)")
    c.add_argument("--mode", choices=MODES, default="adjacent")
    c.add_argument("--check-cap", type=int, default=10**6)
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)

    x = sub.add_parser("experiment", parents=[common], help="budget sweep of AP / WP / HP to CSV")
    x.add_argument("--config", help="ExperimentConfig JSON or @file")
    x.add_argument("--points", type=int)
    x.add_argument("--hypotheses", type=int)
    x.add_argument("--labels", type=int)
    x.add_argument("--mixed", action="store_true")
    x.add_argument("--k-min", type=int)
    x.add_argument("--k-max", type=int)
    x.add_argument("--policies", help="comma list from AP, WP, HP")
    x.add_argument("--repetitions", type=int)
    x.add_argument("--q", type=float)
    x.add_argument("--jobs", type=int)
    x.add_argument("--instance", help="fixed instance file instead of generated data")
    x.add_argument("--out")
    x.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except (ValidationError, DivisionByZeroOptimum, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
