"""Command line entry point: ``tdrc {run,sweep,analyze,table,batch,reward-scale}``.

Environment variables: ``TDRC_OUTPUT_DIR`` overrides the output directory and
``TDRC_WORKERS`` sets the worker-pool size.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .harness import (ExperimentConfig, run_batch, run_control, run_online, run_reward_scale,
                      write_results)
from .harness.config import ConfigError
from .harness.emit import format_table
from .mdp import FeatureMap, MdpSpec, Policy, expectation_matrices
from .stability import analyze


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _config_from_args(args, protocol: str) -> ExperimentConfig:
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    data.setdefault("protocol", protocol)
    overrides = {
        "environment": args.env, "algorithm": args.alg, "optimizer": args.optimizer,
        "n_runs": args.runs, "n_steps": args.steps, "n_env_steps": args.env_steps,
        "seed_base": args.seed, "alphas": args.alphas, "etas": args.etas, "betas": args.betas,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if os.environ.get("TDRC_OUTPUT_DIR"):
        data["output"] = os.environ["TDRC_OUTPUT_DIR"]
    elif args.output:
        data["output"] = args.output
    return ExperimentConfig.from_dict(data)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--env")
    p.add_argument("--alg")
    p.add_argument("--optimizer", choices=["constant", "adagrad", "adam"])
    p.add_argument("--runs", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--env-steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--alphas", type=_floats, help="comma-separated list")
    p.add_argument("--etas", type=_floats)
    p.add_argument("--betas", type=_floats)
    p.add_argument("--output")
    p.add_argument("--workers", type=int)


def _run(config: ExperimentConfig, workers) -> list:
    if config.protocol == "online":
        return run_online(config, workers)
    if config.protocol in ("control", "actor-critic"):
        return run_control(config)
    raise ConfigError(f"protocol {config.protocol!r} has its own subcommand")


def cmd_run(args, single: bool) -> int:
    config = _config_from_args(args, args.protocol)
    if single:
        config = config.with_(alphas=config.alphas[:1], etas=config.etas[:1], betas=config.betas[:1])
    results = _run(config, args.workers)
    stem = f"{config.environment}_{config.algorithm}"
    paths = write_results(results, config.output, config, stem=stem)
    best = json.loads(paths["summary"].read_text())["best"]
    print(f"{stem}: best mean AUC {best['mean_auc']:.4f} ± {best['stderr']:.4f} at {best['hypers']}")
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return 0


def cmd_batch(args) -> int:
    config = _config_from_args(args, "batch")
    if args.budgets:
        config = config.with_(update_budgets=[int(b) for b in args.budgets.split(",")])
    res = run_batch(config, args.workers)
    out = Path(config.output)
    out.mkdir(parents=True, exist_ok=True)
    payload = {"budgets": res.budgets, "best_alpha": res.best_alpha,
               "mean_auc": res.mean_auc.tolist(), "stderr": res.stderr.tolist(),
               "first_budget_within_10pct": res.first_budget_within(0.1), **res.metadata}
    path = out / f"batch_{config.environment}_{config.algorithm}.json"
    path.write_text(json.dumps(payload, indent=2))
    for n, a, s in zip(res.budgets, res.mean_auc, res.stderr):
        print(f"{n:6d}  {a:.5f} ± {s:.5f}")
    print(f"wrote {path}")
    return 0


def cmd_reward_scale(args) -> int:
    config = _config_from_args(args, "reward-scale")
    res = run_reward_scale(config)
    out = Path(config.output)
    out.mkdir(parents=True, exist_ok=True)
    payload = {"scales": res.scales, "betas": res.betas, "scores": res.scores.tolist(),
               "td_auc": res.td_auc.tolist(), "tdrc_auc": res.tdrc_auc.tolist(), **res.metadata}
    path = out / f"reward_scale_{config.environment}.json"
    path.write_text(json.dumps(payload, indent=2))
    print("scale \\ beta " + " ".join(f"{b:>7.3g}" for b in res.betas))
    for s, row in zip(res.scales, res.scores):
        print(f"{s:>12.3g} " + " ".join(f"{v:>7.2f}" for v in row))
    print(f"wrote {path}")
    return 0


def load_mdp(path: str | Path):
    """MDP text format (JSON).

    Fields: ``n_states``, ``n_actions``, ``transitions`` as a list of
    ``[s, a, s_next, p, r, gamma]``, ``start_dist``, ``behavior`` and
    ``target`` as n_states × n_actions matrices and ``features`` as an
    n_states × n matrix.
    """
    data = json.loads(Path(path).read_text())
    S, A = int(data["n_states"]), int(data["n_actions"])
    P = np.zeros((S, A, S))
    R = np.zeros((S, A, S))
    G = np.ones((S, A, S))
    for s, a, sp, p, r, g in data["transitions"]:
        P[int(s), int(a), int(sp)] += p
        R[int(s), int(a), int(sp)] = r
        G[int(s), int(a), int(sp)] = g
    mdp = MdpSpec(P, R, G, np.asarray(data["start_dist"], dtype=float), name=data.get("name", "mdp"))
    return (mdp, FeatureMap(np.asarray(data["features"], dtype=float)),
            Policy(np.asarray(data["behavior"], dtype=float)),
            Policy(np.asarray(data["target"], dtype=float)))


def cmd_analyze(args) -> int:
    if args.mdp:
        mdp, feats, behavior, target = load_mdp(args.mdp)
    else:
        from .environments import make_prediction
        mdp, feats, behavior, target = make_prediction(args.env or "baird")
    model = expectation_matrices(mdp, behavior, target, feats)
    report = analyze(model, args.eta, args.beta)
    text = json.dumps(report.to_dict(), indent=2, default=float)
    if args.output:
        Path(args.output).write_text(text)
    print(text)
    return 0


def cmd_table(args) -> int:
    paths = []
    for p in args.paths:
        p = Path(p)
        paths += sorted(p.glob("*_summary.json")) if p.is_dir() else [p]
    print(format_table(paths))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdrc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "one hyper configuration"), ("sweep", "full hyper grid")):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        p.add_argument("--protocol", default="online",
                       choices=["online", "control", "actor-critic"])
    p = sub.add_parser("batch", help="offline minibatch protocol")
    _add_common(p)
    p.add_argument("--budgets", help="comma-separated update budgets")
    p = sub.add_parser("reward-scale", help="TDRC vs TD across reward scales")
    _add_common(p)
    p = sub.add_parser("analyze", help="stability report as JSON")
    p.add_argument("--env")
    p.add_argument("--mdp", help="MDP JSON file")
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--output")
    p = sub.add_parser("table", help="mean ± stderr summary table from result directories")
    p.add_argument("paths", nargs="+")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("run", "sweep"):
            return cmd_run(args, single=args.command == "run")
        if args.command == "batch":
            return cmd_batch(args)
        if args.command == "reward-scale":
            return cmd_reward_scale(args)
        if args.command == "analyze":
            return cmd_analyze(args)
        return cmd_table(args)
    except (ConfigError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
