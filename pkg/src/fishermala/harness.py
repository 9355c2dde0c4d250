"""Experiment harness: seeded replicate runs, traces, and result files.

A run is fully determined by (config, base_seed): replicate r draws from
an independent counter-based stream keyed by (base_seed, r), so serial
and parallel execution produce byte-identical outputs.  Adaptation is
enabled during burn-in only; kernels are frozen before collection and the
effective sample size is computed from collection samples alone.
"""

from __future__ import annotations

import json
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

import fishermala

from .diagnostics import EssReport, ReplicateSummary, aggregate_replicates, ess, frobenius_distance
from .errors import ConfigError, TargetConstructionError
from .samplers import (
    AdaMalaKernel,
    ChainState,
    FisherMalaKernel,
    HmcKernel,
    MalaKernel,
    MmalaKernel,
)
from .targets import (
    GaussianTarget,
    gaussian_2d_correlated,
    gaussian_gp_target,
    gaussian_inhomogeneous,
    load_csv_dataset,
    standard_normal_target,
    synthetic_logreg_target,
)

__all__ = [
    "ExperimentConfig",
    "ReplicateResult",
    "ExperimentResult",
    "build_target",
    "build_kernel",
    "run_replicate",
    "run_experiment",
    "emit_results",
]

WORKERS_ENV = "FISHERMALA_WORKERS"

_TARGET_KEYS = {
    "std_normal": {"dim"},
    "gaussian_2d": set(),
    "gp": {"dim"},
    "inhomogeneous": {"dim"},
    "logreg_synthetic": {"dim", "n_obs", "scale_span", "seed"},
    "logreg_csv": {"path", "label_column", "add_bias", "scale_pixels"},
}

_SAMPLER_KEYS = {
    "mala": {"sigma2", "rho", "target_rate"},
    "fisher_mala": {"sigma2", "rho", "target_rate", "lambda", "init_iters", "signal_mode"},
    "ada_mala": {"sigma2", "rho", "target_rate", "lambda", "init_iters", "warmup_iters"},
    "mmala": {"sigma2", "rho", "target_rate"},
    "hmc": {"sigma2", "rho", "target_rate", "leapfrog_steps"},
}


def _check_keys(spec: dict, allowed: set, section: str) -> None:
    unknown = set(spec) - allowed - {"name"}
    if unknown:
        raise ConfigError(f"unknown {section} keys: {sorted(unknown)}")


@dataclass
class ExperimentConfig:
    """Resolved experiment description; defaults follow the benchmark protocol."""

    target: dict
    sampler: dict = field(default_factory=dict)
    burn_in: int = 20000
    collect: int = 20000
    replicates: int = 10
    base_seed: int = 0
    out_dir: str | None = None
    trace_every: int = 10

    def __post_init__(self):
        if not isinstance(self.target, dict) or "name" not in self.target:
            raise ConfigError("target section must be a mapping with a 'name'")
        if not isinstance(self.sampler, dict):
            raise ConfigError("sampler section must be a mapping")
        self.sampler = dict(self.sampler)
        self.sampler.setdefault("name", "fisher_mala")
        tname = self.target["name"]
        sname = self.sampler["name"]
        if tname not in _TARGET_KEYS:
            raise ConfigError(f"unknown target {tname!r}; choose from {sorted(_TARGET_KEYS)}")
        if sname not in _SAMPLER_KEYS:
            raise ConfigError(f"unknown sampler {sname!r}; choose from {sorted(_SAMPLER_KEYS)}")
        _check_keys(self.target, _TARGET_KEYS[tname], "target")
        _check_keys(self.sampler, _SAMPLER_KEYS[sname], "sampler")
        for attr in ("burn_in", "collect", "replicates", "base_seed", "trace_every"):
            setattr(self, attr, int(getattr(self, attr)))
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.collect < 100:
            raise ConfigError("collect must be >= 100 (ESS needs samples)")
        if self.trace_every < 1:
            raise ConfigError("trace_every must be >= 1")
        min_burn = self._min_burn_in()
        if self.burn_in < min_burn:
            raise ConfigError(
                f"burn_in ({self.burn_in}) must cover the sampler's "
                f"initialization phases ({min_burn})"
            )

    def _min_burn_in(self) -> int:
        name = self.sampler["name"]
        if name == "fisher_mala":
            return int(self.sampler.get("init_iters", 500))
        if name == "ada_mala":
            return int(self.sampler.get("init_iters", 500)) + int(
                self.sampler.get("warmup_iters", 500)
            )
        return 1

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a mapping")
        if "config" in raw and "target" not in raw:
            raw = raw["config"]  # accept a run.json round-trip
        known = {"target", "sampler", "burn_in", "collect", "replicates",
                 "base_seed", "out_dir", "trace_every"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "target" not in raw:
            raise ConfigError("config requires a target section")
        kwargs = {k: raw[k] for k in known if k in raw}
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return {
            "target": dict(self.target),
            "sampler": dict(self.sampler),
            "burn_in": self.burn_in,
            "collect": self.collect,
            "replicates": self.replicates,
            "base_seed": self.base_seed,
            "out_dir": self.out_dir,
            "trace_every": self.trace_every,
        }


def build_target(spec: dict):
    """Instantiate a target distribution from its config mapping."""
    name = spec["name"]
    params = {k: v for k, v in spec.items() if k != "name"}
    try:
        if name == "std_normal":
            return standard_normal_target(params.get("dim", 2))
        if name == "gaussian_2d":
            return gaussian_2d_correlated()
        if name == "gp":
            return gaussian_gp_target(params.get("dim", 100))
        if name == "inhomogeneous":
            return gaussian_inhomogeneous(params.get("dim", 100))
        if name == "logreg_synthetic":
            return synthetic_logreg_target(
                dim=params.get("dim", 20),
                n_obs=params.get("n_obs", 500),
                scale_span=params.get("scale_span", 1e3),
                seed=params.get("seed", 20240),
            )
        if name == "logreg_csv":
            if "path" not in params or "label_column" not in params:
                raise TargetConstructionError("logreg_csv requires 'path' and 'label_column'")
            return load_csv_dataset(
                params["path"],
                params["label_column"],
                add_bias=bool(params.get("add_bias", False)),
                scale_pixels=bool(params.get("scale_pixels", False)),
            )
    except TargetConstructionError:
        raise
    except Exception as exc:
        raise TargetConstructionError(f"cannot construct target {name!r}: {exc}") from exc
    raise TargetConstructionError(f"unknown target {name!r}")


def build_kernel(spec: dict, target):
    """Instantiate a transition kernel from its config mapping."""
    name = spec.get("name", "fisher_mala")
    common = dict(rho=spec.get("rho", 0.015), sigma2=spec.get("sigma2"))
    if name == "mala":
        return MalaKernel(target.dim, target_rate=spec.get("target_rate", 0.574), **common)
    if name == "fisher_mala":
        return FisherMalaKernel(
            target.dim,
            lam=spec.get("lambda", 10.0),
            target_rate=spec.get("target_rate", 0.574),
            init_iters=spec.get("init_iters", 500),
            signal_mode=spec.get("signal_mode", "rb"),
            **common,
        )
    if name == "ada_mala":
        return AdaMalaKernel(
            target.dim,
            lam=spec.get("lambda", 10.0),
            target_rate=spec.get("target_rate", 0.574),
            init_iters=spec.get("init_iters", 500),
            warmup_iters=spec.get("warmup_iters", 500),
            **common,
        )
    if name == "mmala":
        return MmalaKernel(target, target_rate=spec.get("target_rate", 0.574), **common)
    if name == "hmc":
        return HmcKernel(
            target.dim,
            leapfrog_steps=spec.get("leapfrog_steps", 10),
            target_rate=spec.get("target_rate", 0.651),
            **common,
        )
    raise ConfigError(f"unknown sampler {name!r}")


@dataclass
class ReplicateResult:
    """Everything one replicate produces (samples themselves are discarded)."""

    replicate: int
    ess: EssReport
    trace_iteration: np.ndarray
    trace_log_target: np.ndarray
    trace_running_acceptance: np.ndarray
    trace_frobenius: np.ndarray | None
    accept_burn_mean: float
    accept_collect_mean: float
    anomalies: int
    frozen_sigma2: float
    frozen_stable: bool


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    replicates: list[ReplicateResult]
    summary: ReplicateSummary | None


def _replicate_rng(base_seed: int, r: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(r,))
    return np.random.Generator(np.random.Philox(seq))


def run_replicate(config: ExperimentConfig, r: int) -> ReplicateResult:
    """One burn-in/freeze/collect cycle on an independent stream."""
    rng = _replicate_rng(config.base_seed, r)
    target = build_target(config.target)
    kernel = build_kernel(config.sampler, target)
    state = ChainState.at(target, rng.standard_normal(target.dim))

    gt_cov = target.covariance if isinstance(target, GaussianTarget) else None
    n_rows = config.burn_in // config.trace_every
    trace_it = np.empty(n_rows, dtype=np.int64)
    trace_lp = np.empty(n_rows)
    trace_acc = np.empty(n_rows)
    trace_fro = np.empty(n_rows) if gt_cov is not None else None

    alpha_sum = 0.0
    row = 0
    for i in range(1, config.burn_in + 1):
        state, info = kernel.step(state, target, rng)
        alpha_sum += info.alpha
        if i % config.trace_every == 0:
            trace_it[row] = i
            trace_lp[row] = info.logpi
            trace_acc[row] = alpha_sum / i
            if trace_fro is not None:
                trace_fro[row] = frobenius_distance(kernel.preconditioner_matrix(), gt_cov)
            row += 1
    accept_burn_mean = alpha_sum / max(config.burn_in, 1)

    kernel.freeze()
    frozen_sigma2 = kernel.controller.sigma2
    frozen_precond = kernel.preconditioner_matrix()

    samples = np.empty((config.collect, target.dim))
    alpha_sum = 0.0
    for i in range(config.collect):
        state, info = kernel.step(state, target, rng)
        samples[i] = state.x
        alpha_sum += info.alpha

    stable = kernel.controller.sigma2 == frozen_sigma2 and np.array_equal(
        kernel.preconditioner_matrix(), frozen_precond
    )
    report = ess(samples)
    return ReplicateResult(
        replicate=r,
        ess=report,
        trace_iteration=trace_it,
        trace_log_target=trace_lp,
        trace_running_acceptance=trace_acc,
        trace_frobenius=trace_fro,
        accept_burn_mean=accept_burn_mean,
        accept_collect_mean=alpha_sum / config.collect,
        anomalies=kernel.anomalies,
        frozen_sigma2=frozen_sigma2,
        frozen_stable=bool(stable),
    )


def _replicate_task(config_dict: dict, r: int) -> ReplicateResult:
    return run_replicate(ExperimentConfig.from_dict(config_dict), r)


def _worker_count(replicates: int) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env is not None:
        try:
            workers = int(env)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    else:
        workers = os.cpu_count() or 1
    return max(1, min(workers, replicates))


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run all replicates (possibly in parallel) and optionally emit files."""
    workers = _worker_count(config.replicates)
    if workers > 1:
        cfg = config.to_dict()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate_task, [cfg] * config.replicates,
                                    range(config.replicates)))
    else:
        results = [run_replicate(config, r) for r in range(config.replicates)]
    summary = aggregate_replicates([r.ess for r in results]) if len(results) >= 2 else None
    result = ExperimentResult(config=config, replicates=results, summary=summary)
    if config.out_dir is not None:
        emit_results(result, config.out_dir)
    return result


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_results(result: ExperimentResult, out_dir) -> None:
    """Write ess.csv, ess_summary.csv, trace.csv and run.json."""
    os.makedirs(out_dir, exist_ok=True)
    config = result.config
    sampler = config.sampler["name"]
    target = config.target["name"]

    with open(os.path.join(out_dir, "ess.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("sampler,target,replicate,max_ess,median_ess,min_ess\n")
        for rep in result.replicates:
            fh.write(
                f"{sampler},{target},{rep.replicate},"
                f"{_fmt(rep.ess.max)},{_fmt(rep.ess.median)},{_fmt(rep.ess.min)}\n"
            )

    with open(os.path.join(out_dir, "ess_summary.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("sampler,target,replicates,max_ess,median_ess,min_ess\n")
        if result.summary is not None:
            s = result.summary
            fh.write(
                f"{sampler},{target},{s.n_replicates},"
                f"{s.row('max')},{s.row('median')},{s.row('min')}\n"
            )
        else:
            rep = result.replicates[0]
            fh.write(
                f"{sampler},{target},1,"
                f"{rep.ess.max:.3f},{rep.ess.median:.3f},{rep.ess.min:.3f}\n"
            )

    has_fro = all(rep.trace_frobenius is not None for rep in result.replicates)
    with open(os.path.join(out_dir, "trace.csv"), "w", encoding="utf-8", newline="\n") as fh:
        cols = ["replicate", "iteration"]
        if has_fro:
            cols.append("frobenius_norm")
        cols += ["log_target", "running_acceptance"]
        fh.write(",".join(cols) + "\n")
        for rep in result.replicates:
            for i in range(rep.trace_iteration.shape[0]):
                row = [str(rep.replicate), str(int(rep.trace_iteration[i]))]
                if has_fro:
                    row.append(_fmt(rep.trace_frobenius[i]))
                row += [_fmt(rep.trace_log_target[i]), _fmt(rep.trace_running_acceptance[i])]
                fh.write(",".join(row) + "\n")

    meta = {
        "config": config.to_dict(),
        "versions": {
            "fishermala": fishermala.__version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "seeds": [[config.base_seed, r] for r in range(config.replicates)],
        "frozen_sigma2": [rep.frozen_sigma2 for rep in result.replicates],
        "anomalies": [rep.anomalies for rep in result.replicates],
        "created_unix": time.time(),
    }
    with open(os.path.join(out_dir, "run.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
