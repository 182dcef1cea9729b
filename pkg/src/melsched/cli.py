"""Command line entry point: ``melsched rate|schedule|train|sweep|certify``.

Exit status is 0 on success, 2 when the requested plan or run is infeasible and
1 on any other error (including a failed convexity certificate).
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .bounds import ConvergenceParams
from .config import load_config
from .costs import cost_coefficients
from .errors import ConfigError, InfeasibleError
from .experiment import emit_report, rounds_csv, RoundRow, run_sweep
from .orchestrator import auto_tau_max, fleet_from_profiles, run_training
from .scheduler import POLICIES, convexity_certificate, objective, plan_schedule
from .wireless import snr

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


def _fleet(cfg, T):
    return fleet_from_profiles(cfg.profiles(), cfg.mode, cfg["task.total_samples"], T)


def _params(cfg):
    beta = cfg["bounds.beta_override"] or cfg["bounds.beta_init"]
    delta = cfg["bounds.delta_override"]
    delta = cfg["bounds.delta_init"] if delta is None else delta
    return ConvergenceParams(cfg["bounds.eta"], min(beta, 1.0 / cfg["bounds.eta"]), delta, cfg["bounds.b0"])


def _tau_max(cfg, fleet):
    tm = cfg["opt.tau_max"]
    return auto_tau_max(fleet, fleet.T, cfg["opt.tau_hard_cap"]) if tm == "auto" else tm


def cmd_rate(args, cfg):
    print(f"{'k':>3} {'cpu_GHz':>8} {'dist_m':>8} {'gain_dB':>9} {'snr':>9} {'rate_Mbps':>10} "
          f"{'c2':>11} {'c1':>11} {'c0':>11}")
    for p in cfg.profiles():
        c = cost_coefficients(p, cfg.mode)
        print(f"{p.id:>3} {p.cpu_hz / 1e9:>8.3f} {p.channel.distance_m:>8.1f} "
              f"{10 * np.log10(p.channel.gain):>9.3f} {snr(p.channel):>9.3f} {p.rate / 1e6:>10.4f} "
              f"{c.c2:>11.4e} {c.c1:>11.4e} {c.c0:>11.4e}")
    return EXIT_OK


def cmd_schedule(args, cfg):
    T = args.budget or cfg["experiment.budgets"][0]
    policy = args.policy or cfg["opt.policy"]
    fleet = _fleet(cfg, T)
    params = _params(cfg)
    tau_max = _tau_max(cfg, fleet)
    sched = plan_schedule(fleet, params, tau_max, policy)
    times = fleet.learner_times(sched.batches, sched.tau, sched.total_updates)
    print(f"policy={policy} T={T:g}s tau_max={tau_max} tau*={sched.tau} L={sched.total_updates:.4f} "
          f"G={sched.global_cycles:.4f} residual={sched.residual} "
          f"O={objective(fleet, params, sched.tau, policy):.6g}")
    print(f"{'k':>3} {'d_k':>8} {'real_d_k':>12} {'time_s':>10}")
    for k in range(fleet.K):
        print(f"{k:>3} {sched.batches[k]:>8d} {sched.real_batches[k]:>12.3f} {times[k]:>10.3f}")
    print()
    print("policy,T,tau,L,G,residual")
    print(f"{policy},{T!r},{sched.tau},{sched.total_updates!r},{sched.global_cycles!r},{sched.residual}")
    print("k,d_k,time_s")
    for k in range(fleet.K):
        print(f"{k},{sched.batches[k]},{float(times[k])!r}")
    return EXIT_OK


def cmd_train(args, cfg):
    seed = cfg["task.seed"] if args.seed is None else args.seed
    tc = cfg.training_config(T=args.budget, policy=args.policy, seed=seed)
    _, rep = run_training(cfg.profiles(), cfg.task(seed), tc, refresh=cfg.refresh())
    rows = [RoundRow(l.g, l.tau, l.L, l.max_time_s, l.beta, l.delta, l.global_loss, l.bound)
            for l in rep.logs]
    text = rounds_csv(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"# policy={tc.policy} T={tc.T:g} seed={seed} rounds={rep.rounds} "
          f"time={rep.total_time:.3f}s loss={rep.final_loss:.6f}"
          + (f" accuracy={rep.accuracy:.4f}" if rep.accuracy is not None else ""), file=sys.stderr)
    if rep.status == "infeasible":
        print(f"infeasible: {rep.message}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_sweep(args, cfg):
    seeds = None if args.seeds is None else list(range(args.seeds))
    report = run_sweep(cfg, seeds=seeds, workers=args.workers)
    out = args.out or cfg["experiment.out_dir"]
    emit_report(report, out)
    print(open(f"{out}/loss_vs_T.txt").read(), end="")
    return EXIT_OK


def cmd_certify(args, cfg):
    T = args.budget or cfg["experiment.budgets"][0]
    fleet = _fleet(cfg, T)
    params = _params(cfg)
    rep = convexity_certificate(fleet, params, np.arange(1.0, args.grid_max + 1.0), args.policy or "HA")
    print(f"C={params.C:.6g} threshold f(C)={rep.threshold:.6f} grid=[{rep.grid[0]:g}, {rep.grid[-1]:g}]")
    for name in ("second_difference_ok", "threshold_ok", "m1_negative", "n1_negative",
                 "m2_positive", "n2_positive"):
        print(f"{name:>22}: {'pass' if getattr(rep, name) else 'FAIL'}")
    print(f"{'certificate':>22}: {'pass' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_ERROR


def build_parser():
    parser = argparse.ArgumentParser(prog="melsched", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="flat key=value or JSON config file")
        p.set_defaults(func=func)
        return p

    add("rate", cmd_rate, "per-learner link rates and cost coefficients")
    p = add("schedule", cmd_schedule, "optimal (tau, L, d_k) for one budget")
    p.add_argument("--budget", type=float)
    p.add_argument("--policy", choices=POLICIES)
    p = add("train", cmd_train, "simulate one training run and write its round log")
    p.add_argument("--policy", choices=POLICIES)
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", type=float)
    p.add_argument("--out")
    p = add("sweep", cmd_sweep, "HA/HU sweep over budgets and seeds")
    p.add_argument("--out")
    p.add_argument("--seeds", type=int, help="use seeds 0..N-1 instead of the config list")
    p.add_argument("--workers", type=int, default=1)
    p = add("certify", cmd_certify, "numerical convexity certificate of the objective")
    p.add_argument("--budget", type=float)
    p.add_argument("--policy", choices=POLICIES)
    p.add_argument("--grid-max", type=int, default=200)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
