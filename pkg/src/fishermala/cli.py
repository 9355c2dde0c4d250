"""Command-line entry points.

    fishermala run --config cfg.yaml [--replicates N] [--seed S] [--out DIR]
    fishermala verify-theory [--dim D] [--mc-samples N] [--seed S]
    fishermala ess --chain samples.csv

Exit codes: 0 success, 1 verification failure, 2 config error,
3 target construction error, 4 numerical abort, 5 unwritable output.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .diagnostics import ess
from .errors import (
    ConfigError,
    NumericalAbortError,
    TargetConstructionError,
    UnsupportedTargetError,
)
from .harness import ExperimentConfig, run_experiment
from .preconditioner import SqrtPreconditioner, woodbury_update
from .targets import standard_normal_target
from .theory import EsjdProblem, esjd_objective, jump_covariance_mc, optimal_preconditioner


def _add_run(sub) -> None:
    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("--config", required=True, help="YAML (or run.json) experiment config")
    p.add_argument("--replicates", type=int, default=None, help="override replicate count")
    p.add_argument("--seed", type=int, default=None, help="override base seed")
    p.add_argument("--out", default=None, help="override output directory")


def _add_verify(sub) -> None:
    p = sub.add_parser("verify-theory", help="run the numerical theory checks")
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("--mc-samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)


def _add_ess(sub) -> None:
    p = sub.add_parser("ess", help="effective sample size of a stored chain")
    p.add_argument("--chain", required=True, help="CSV with one sample per row")
    p.add_argument("--per-dim", action="store_true", help="also print per-dimension values")


def _cmd_run(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    raw = config.to_dict()
    if args.replicates is not None:
        raw["replicates"] = args.replicates
    if args.seed is not None:
        raw["base_seed"] = args.seed
    if args.out is not None:
        raw["out_dir"] = args.out
    config = ExperimentConfig.from_dict(raw)
    result = run_experiment(config)
    sampler = config.sampler["name"]
    target = config.target["name"]
    for rep in result.replicates:
        print(
            f"{sampler} on {target} replicate {rep.replicate}: "
            f"ESS max {rep.ess.max:.3f} median {rep.ess.median:.3f} min {rep.ess.min:.3f} "
            f"(acceptance {rep.accept_collect_mean:.3f})"
        )
    if result.summary is not None:
        s = result.summary
        print(
            f"{sampler} on {target} over {s.n_replicates} replicates: "
            f"max {s.row('max')} | median {s.row('median')} | min {s.row('min')}"
        )
    if config.out_dir is not None:
        print(f"results written to {config.out_dir}")
    return 0


def _check(name: str, ok: bool, detail: str) -> bool:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return ok


def _cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    d = args.dim
    ok = True

    # square-root recursion vs rank-one inverse updates vs direct inverse
    lam = 10.0
    signals = rng.standard_normal((100, d))
    precond = SqrtPreconditioner(d, lam)
    woodbury = np.linalg.inv(np.outer(signals[0], signals[0]) + lam * np.eye(d))
    precond.update(signals[0])
    worst = 0.0
    for s in signals[1:]:
        precond.update(s)
        woodbury = woodbury_update(woodbury, s)
        worst = max(worst, np.linalg.norm(precond.matrix() - woodbury) / np.linalg.norm(woodbury))
    direct = np.linalg.inv(signals.T @ signals + lam * np.eye(d))
    worst = max(worst, np.linalg.norm(precond.matrix() - direct) / np.linalg.norm(direct))
    ok &= _check("sqrt-recursion-oracle", worst < 1e-8, f"max relative error {worst:.3e}")

    # simulated jump second moment vs the closed-form covariance
    target = standard_normal_target(d)
    A = np.eye(d)
    delta = 0.5
    second = jump_covariance_mc(target, A, delta, args.mc_samples, rng)
    expected = (delta**2 / 4.0 + delta) * np.eye(d)
    se = (delta**2 / 4.0 + delta) * np.sqrt(3.0 / args.mc_samples)  # ~sd of a squared normal
    dev = float(np.max(np.abs(second - expected)))
    ok &= _check("jump-covariance-mc", dev < 4.0 * se, f"max deviation {dev:.3e} (4*SE {4 * se:.3e})")

    # closed form is the unique trace-constrained extremum of the jump
    # objective: every random trace-matched candidate lies above it
    G = rng.standard_normal((d, d))
    fisher = G @ G.T + 0.1 * np.eye(d)
    problem = EsjdProblem(fisher=fisher, delta=0.7, trace_budget=float(d))
    base = esjd_objective(problem, optimal_preconditioner(problem))
    extremal = True
    for _ in range(200):
        H = rng.standard_normal((d, d))
        cand = H @ H.T + 0.05 * np.eye(d)
        cand *= problem.trace_budget / np.trace(cand)
        extremal &= esjd_objective(problem, cand) >= base
    ok &= _check(
        "optimal-preconditioner-extremum", extremal, "200 random trace-matched candidates"
    )

    return 0 if ok else 1


def _cmd_ess(args) -> int:
    rows = np.genfromtxt(args.chain, delimiter=",", skip_header=0)
    if np.isnan(rows).any():  # header row present
        rows = np.genfromtxt(args.chain, delimiter=",", skip_header=1)
    report = ess(rows)
    print(f"samples {rows.shape[0]} dims {report.per_dim.shape[0]}")
    print(f"max {report.max:.3f} median {report.median:.3f} min {report.min:.3f}")
    if report.degenerate:
        print(f"degenerate coordinates: {list(report.degenerate)}")
    if args.per_dim:
        for j, v in enumerate(report.per_dim):
            print(f"dim {j}: {v:.3f}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fishermala")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    _add_verify(sub)
    _add_ess(sub)
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify-theory":
            return _cmd_verify(args)
        return _cmd_ess(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (TargetConstructionError, UnsupportedTargetError) as exc:
        print(f"target error: {exc}", file=sys.stderr)
        return 3
    except NumericalAbortError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
