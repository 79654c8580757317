"""Command-line entry point: run, compare, lower-bound, verify, sweep."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import harness, problems, verify
from .harness import ExperimentConfig, parse_config, parse_seeds
from .problems import make_holder, make_norm_power


def _load_config(args) -> ExperimentConfig:
    if args.config:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    else:
        if not args.problem or not args.opt:
            raise ValueError("either --config or both --problem and --opt are required")
        cfg = ExperimentConfig(problem=args.problem,
                               optimizers=[s.strip() for s in args.opt.split(",")],
                               seeds=[0])
    if args.problem:
        cfg.problem = args.problem
    if args.opt:
        cfg.optimizers = [s.strip() for s in args.opt.split(",")]
    if args.seeds:
        cfg.seeds = parse_seeds(args.seeds)
    for key in ("out", "oracle", "schedule"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    for key in ("noise", "eps", "c_hat", "eta", "alpha", "gamma"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    for key in ("k_override", "parallel"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if args.timing:
        cfg.timing = True
    if not cfg.eps > 0:
        raise ValueError("config violation: eps > 0")
    return cfg


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--problem", help="problem id, e.g. exp_inf{d=1} or lower:sgd_I{R=1,G0=1,G1=8,eps=0.1}")
    p.add_argument("--opt", help="comma-separated optimizer ids")
    p.add_argument("--seeds", help="e.g. 0..4 or 0,1,2")
    p.add_argument("--out", help="output directory (env GLOPT_OUT overrides)")
    p.add_argument("--oracle", choices=["deterministic", "v_bernoulli", "u_additive"])
    p.add_argument("--noise", type=float)
    p.add_argument("--schedule", choices=["exp_const", "two_stage", "universal"])
    p.add_argument("--eps", type=float)
    p.add_argument("--c-hat", dest="c_hat", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--k", dest="k_override", type=int)
    p.add_argument("--parallel", type=int)
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock in CSVs (breaks byte-identical reruns)")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="glopt")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("run", help="execute all (optimizer x seed) cells"))
    _add_common(sub.add_parser("compare", help="iterations-to-eps ranking table"))

    lb = sub.add_parser("lower-bound", help="trap-instance comparison report")
    lb.add_argument("--kind", required=True, choices=list(problems.LOWER_BOUND_KINDS))
    lb.add_argument("--radius", type=float, default=1.0)
    lb.add_argument("--g0", type=float, default=1.0)
    lb.add_argument("--g1", type=float, default=8.0)
    lb.add_argument("--eps", type=float, default=0.1)
    lb.add_argument("--k-max", type=int, default=100_000)
    lb.add_argument("--eta", type=float)
    lb.add_argument("--seeds", default="0")
    lb.add_argument("--c-hat", dest="c_hat", type=float, default=1.0)

    vf = sub.add_parser("verify", help="run the numeric checker battery")
    vf.add_argument("--out", default="verify_report.json")
    vf.add_argument("--pairs", type=int, default=10_000)
    vf.add_argument("--trials", type=int, default=1000)
    vf.add_argument("--streams", type=int, default=100)
    vf.add_argument("--seed", type=int, default=0)

    sw = sub.add_parser("sweep", help="repeat `run` over values of one config key")
    _add_common(sw)
    sw.add_argument("--param", required=True, help="config key to sweep")
    sw.add_argument("--values", required=True, help="comma-separated values")

    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            cfg = _load_config(args)
            paths = harness.cli_run(cfg)
            for p in paths:
                print(p)
            return 0

        if args.command == "compare":
            cfg = _load_config(args)
            rows = harness.cli_compare(cfg)
            print(f"{'optimizer':<30} {'iters_to_eps':>12} {'derived_K':>12} {'final_gap':>14}")
            for opt, hit, K, final in rows:
                print(f"{opt:<30} {str(hit) if hit is not None else 'not reached':>12} "
                      f"{str(K):>12} {final:>14.6g}")
            return 0

        if args.command == "lower-bound":
            report = harness.cli_lower_bound(
                args.kind, args.radius, args.g0, args.g1, args.eps,
                K_max=args.k_max, eta=args.eta, seeds=parse_seeds(args.seeds),
                c_hat=args.c_hat)
            print(json.dumps(report, indent=2, default=repr))
            return 0

        if args.command == "verify":
            return _run_verify(args)

        if args.command == "sweep":
            base = _load_config(args)
            root = os.environ.get("GLOPT_OUT", base.out)
            for value in args.values.split(","):
                cfg = _load_config(args)
                if hasattr(cfg, args.param):
                    current = getattr(cfg, args.param)
                    cast = type(current) if current is not None else str
                    setattr(cfg, args.param, cast(value) if not isinstance(current, list)
                            else parse_seeds(value))
                else:
                    cfg.extras[args.param] = value
                cfg.out = os.path.join(root, f"{args.param}={value}")
                os.environ.pop("GLOPT_OUT", None)
                for p in harness.cli_run(cfg):
                    print(p)
            return 0
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def _run_verify(args) -> int:
    reports = []
    for prob in problems.default_suite():
        if not math.isfinite(prob.constants.M0):
            continue
        reports.append(verify.check_lemma_m01(prob, n_pairs=args.pairs, seed=args.seed))
        reports.append(verify.check_grad_growth(prob, n_points=args.pairs, seed=args.seed))
    for variant in ("tech", "tech2"):
        reports.append(verify.check_tech_lemma(variant, n_trials=args.trials, seed=args.seed))
    for learner in ("solo_scalar", "ogd_adagrad"):
        reports.append(verify.check_regret_assumption(learner, streams=args.streams,
                                                      seed=args.seed))
    reports.append(verify.check_h_property(make_holder(0.5, 1.0, [0.0, 0.0]),
                                           n_pairs=args.pairs, seed=args.seed))
    reports.append(verify.certify_quasar(make_norm_power(1.0)))
    reports.append(verify.certify_quasar(make_norm_power(0.5)))

    ok = True
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        ok = ok and rep.passed
        print(f"[{status}] {rep.name}: checked={rep.n_checked} "
              f"violations={rep.n_violations} worst={rep.max_violation:.3e}")
    payload = "[\n" + ",\n".join(r.to_json() for r in reports) + "\n]\n"
    with open(args.out, "w") as fh:
        fh.write(payload)
    print(f"report written to {args.out}")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
