"""Command-line entry point: train / evaluate / baseline / sweep.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.  Every
CSV written embeds the config hash and seed; re-running a command with
identical inputs reproduces the files byte for byte.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, dump_config, load_config
from .env import action_length, state_length
from .runio import SCHEMA_VERSION, config_hash, write_csv, write_meta
from .schemes import (BASELINE_SCHEMES, decision_score, evaluate_scheme,
                      max_interference_leakage, shannon_ideal_score)
from .sweep import SWEEP_PARAMS, SweepSpec, plot_data, run_sweep
from .td3 import Td3Agent, evaluate_greedy, make_eval_channels, train
from .rng import substream


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ris-urllc",
                                description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None, help="YAML config file")
        sp.add_argument("--seed", type=int, default=None, help="master seed override")
        sp.add_argument("--out", default="runs/latest", help="output directory")
        sp.add_argument("--profile", choices=("desk", "paper"), default="paper")
        sp.add_argument("--progress", action="store_true")

    t = sub.add_parser("train", help="train the TD3 (or DDPG) agent")
    common(t)
    t.add_argument("--equal-cbl", action="store_true",
                   help="force the even blocklength split (ablation)")

    e = sub.add_parser("evaluate", help="greedy evaluation of a checkpoint")
    common(e)
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--realizations", type=int, default=None,
                   help="evaluation channel draws (default from config)")

    b = sub.add_parser("baseline", help="score a non-learned comparator")
    common(b)
    b.add_argument("--scheme", required=True, choices=BASELINE_SCHEMES)
    b.add_argument("--realizations", type=int, default=None)

    s = sub.add_parser("sweep", help="sweep one scenario knob over comparators")
    common(s)
    s.add_argument("--sweep-param", required=True, choices=SWEEP_PARAMS)
    s.add_argument("--values", required=True,
                   help="comma-separated value list, e.g. 4,16,36")
    s.add_argument("--reps", type=int, default=3)
    s.add_argument("--comparators", default="td3,zf_random_phase",
                   help="comma-separated comparator subset")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scen, learn = load_config(args.config, profile=args.profile, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        handler = {"train": _cmd_train, "evaluate": _cmd_evaluate,
                   "baseline": _cmd_baseline, "sweep": _cmd_sweep}[args.command]
        return handler(args, scen, learn, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _header(scen, learn):
    return {"schema_version": SCHEMA_VERSION,
            "config_hash": config_hash(scen, learn),
            "seed": scen.seed}


def _cmd_train(args, scen, learn, out: Path) -> int:
    t0 = time.time()
    agent, result = train(scen, learn, seed=scen.seed, equal_cbl=args.equal_cbl,
                          progress=args.progress)
    chash = config_hash(scen, learn)
    rows = [[SCHEMA_VERSION, chash, scen.seed, r.episode, r.mean_l_tot,
             r.mean_l_tot / scen.C_total, r.mean_scaled_reward,
             r.critic_loss, r.critic_loss_twin, r.eval_l_tot]
            for r in result.records]
    write_csv(out / "metrics.csv",
              ["schema_version", "config_hash", "seed", "episode", "mean_l_tot",
               "mean_spectral", "mean_scaled_reward", "critic_loss",
               "critic_loss_twin", "eval_l_tot"],
              rows, _header(scen, learn))
    agent.save(out / "checkpoint.bin")
    (out / "config.yaml").write_text(dump_config(scen, learn))
    write_meta(out / "run_meta.json", command="train", config_hash=chash,
               seed=scen.seed, wallclock_s=time.time() - t0,
               equal_cbl=args.equal_cbl, episodes=learn.n_episodes)
    return 0


def _cmd_evaluate(args, scen, learn, out: Path) -> int:
    t0 = time.time()
    n = args.realizations or learn.eval_realizations
    agent = Td3Agent(state_length(scen), action_length(scen), learn,
                     substream(scen.seed, "net-init"))
    agent.load(args.checkpoint)
    channels = make_eval_channels(scen, scen.seed, n)
    scores, decisions = evaluate_greedy(agent, scen, learn, channels, scen.seed)
    rows = []
    for i, (score, decision) in enumerate(zip(scores, decisions)):
        shannon = shannon_ideal_score(decision, channels[i], scen)
        rows.append([SCHEMA_VERSION, config_hash(scen, learn), scen.seed, i,
                     score, score / scen.C_total, shannon])
    write_csv(out / "evaluate.csv",
              ["schema_version", "config_hash", "seed", "realization",
               "l_tot", "spectral", "shannon_ideal_ref"],
              rows, {**_header(scen, learn),
                     "mean_l_tot": repr(float(np.mean(scores))),
                     "std_l_tot": repr(float(np.std(scores)))})
    write_meta(out / "run_meta.json", command="evaluate", seed=scen.seed,
               wallclock_s=time.time() - t0, realizations=n,
               mean_l_tot=float(np.mean(scores)))
    return 0


def _cmd_baseline(args, scen, learn, out: Path) -> int:
    t0 = time.time()
    n = args.realizations or learn.eval_realizations
    channels = make_eval_channels(scen, scen.seed, n)
    scores, decisions = evaluate_scheme(args.scheme, scen, channels, scen.seed)
    leakage = max(max_interference_leakage(d, ch, scen)
                  for d, ch in zip(decisions, channels))
    write_csv(out / "baseline.csv",
              ["schema_version", "config_hash", "seed", "scheme", "realizations",
               "mean_l_tot", "std_l_tot", "mean_spectral", "max_leakage"],
              [[SCHEMA_VERSION, config_hash(scen, learn), scen.seed, args.scheme,
                n, float(np.mean(scores)), float(np.std(scores)),
                float(np.mean(scores)) / scen.C_total, leakage]],
              _header(scen, learn))
    write_csv(out / "baseline_realizations.csv",
              ["schema_version", "config_hash", "seed", "scheme", "realization",
               "l_tot"],
              [[SCHEMA_VERSION, config_hash(scen, learn), scen.seed, args.scheme,
                i, float(v)] for i, v in enumerate(scores)],
              _header(scen, learn))
    write_meta(out / "run_meta.json", command="baseline", scheme=args.scheme,
               seed=scen.seed, wallclock_s=time.time() - t0,
               mean_l_tot=float(np.mean(scores)))
    return 0


def _cmd_sweep(args, scen, learn, out: Path) -> int:
    t0 = time.time()
    values = []
    for tok in args.values.split(","):
        tok = tok.strip()
        values.append(int(tok) if args.sweep_param in ("N", "C_total") else float(tok))
    spec = SweepSpec(param=args.sweep_param, values=tuple(values), reps=args.reps,
                     comparators=tuple(c.strip() for c in args.comparators.split(",")))
    results, failure = run_sweep(scen, learn, spec, scen.seed, config_hash,
                                 progress=args.progress)
    rows = [[SCHEMA_VERSION, r.config_hash, scen.seed, r.param, r.value, r.rep,
             r.comparator, r.mean, r.std] for r in results]
    if failure:
        rows.append([SCHEMA_VERSION, "", scen.seed, spec.param, "", "",
                     "FAILED", "", ""])
    write_csv(out / "sweep.csv",
              ["schema_version", "config_hash", "seed", "param", "value", "rep",
               "comparator", "mean_l_tot", "std_l_tot"],
              rows, _header(scen, learn))
    for comp, triples in plot_data(results).items():
        write_csv(out / f"plot_{spec.param}_{comp}.csv",
                  ["x", "mean", "std"],
                  [[x, m, s] for x, m, s in triples],
                  _header(scen, learn))
    write_meta(out / "run_meta.json", command="sweep", param=spec.param,
               seed=scen.seed, wallclock_s=time.time() - t0,
               cells=len(results), failure=failure)
    if failure:
        print(f"sweep aborted: {failure}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
