"""Seeded Monte Carlo experiment runner.

One trial = draw a realization, partition the users, run the proposed
allocation and the equal-power baseline, and record both metrics.  Trials
are pure functions of (config, seed): per-trial seeds are base_seed + index,
so sweeps that share a base seed use common random numbers across rows,
and results do not depend on the degree of parallelism.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, replace

import numpy as np

from . import metrics, optimizer
from .channel import draw_realization, partition_users
from .config import SystemConfig
from .errors import (
    AllRejected,
    DegenerateChannel,
    Infeasible,
    InfeasibleEstimation,
    NoConvergence,
)

__all__ = [
    "TrialResult",
    "MonteCarloResult",
    "SweepRow",
    "SweepTable",
    "SWEEP_PARAMETERS",
    "run_trial",
    "monte_carlo",
    "sweep",
]

SWEEP_PARAMETERS = ("rf_var", "est_err_var", "r_min", "M")

# Realizations failing a model precondition are redrawn this many times
# (from the same stream) before the trial counts as rejected.
DEFAULT_REDRAWS = 10


@dataclass(frozen=True)
class TrialResult:
    """Metrics of one seeded trial; rejected trials carry no metrics."""

    seed: int
    rejected: bool
    converged: bool
    outer_iters: int
    ee_proposed: float | None
    ee_equal: float | None
    sum_rate_proposed: float | None
    sum_rate_equal: float | None


@dataclass(frozen=True)
class MonteCarloResult:
    """Per-trial results plus aggregates over converged, non-rejected trials."""

    trials: tuple[TrialResult, ...]
    n_trials: int
    n_converged: int
    n_unconverged: int
    n_rejected: int
    mean_ee_proposed: float
    std_ee_proposed: float
    mean_ee_equal: float
    std_ee_equal: float
    mean_sum_rate_proposed: float
    std_sum_rate_proposed: float
    mean_sum_rate_equal: float
    std_sum_rate_equal: float


@dataclass(frozen=True)
class SweepRow:
    value: float
    result: MonteCarloResult


@dataclass(frozen=True)
class SweepTable:
    """One Monte Carlo batch per parameter value, common random numbers."""

    parameter: str
    base_seed: int
    rows: tuple[SweepRow, ...]


def run_trial(config: SystemConfig, seed: int, redraws: int = DEFAULT_REDRAWS,
              backend: str | None = None) -> TrialResult:
    """Run one seeded trial; model-precondition failures are folded into
    the rejected flag, solver non-convergence into the converged flag."""
    rng = np.random.default_rng(seed)
    for _attempt in range(redraws + 1):
        try:
            ch = draw_realization(config, rng)
            partition = partition_users(ch.beta, config)
            result = optimizer.solve(ch, partition, config, backend=backend)
        except (InfeasibleEstimation, DegenerateChannel, Infeasible):
            continue
        except NoConvergence:
            return TrialResult(seed=seed, rejected=False, converged=False,
                               outer_iters=0, ee_proposed=None, ee_equal=None,
                               sum_rate_proposed=None, sum_rate_equal=None)
        equal = optimizer.equal_power_baseline(config)
        gamma = metrics.sinr_all(equal.p, ch, config)
        rates_eq = metrics.rate_all(gamma, config)
        ee_eq = metrics.energy_efficiency(equal, rates_eq, config)
        return TrialResult(
            seed=seed, rejected=False, converged=result.converged,
            outer_iters=result.outer_iters,
            ee_proposed=result.ee, ee_equal=ee_eq,
            sum_rate_proposed=result.sum_rate,
            sum_rate_equal=float(np.sum(rates_eq)),
        )
    return TrialResult(seed=seed, rejected=True, converged=False,
                       outer_iters=0, ee_proposed=None, ee_equal=None,
                       sum_rate_proposed=None, sum_rate_equal=None)


def _trial_args(args) -> TrialResult:
    config, seed, redraws, backend = args
    return run_trial(config, seed, redraws=redraws, backend=backend)


def _aggregate(trials: list[TrialResult]) -> MonteCarloResult:
    ok = [t for t in trials if not t.rejected and t.converged]
    n_rejected = sum(t.rejected for t in trials)
    if not ok:
        raise AllRejected(
            f"no usable trial out of {len(trials)} "
            f"({n_rejected} rejected, rest unconverged)")

    def stats(values: list[float]) -> tuple[float, float]:
        mean = float(np.mean(values))
        std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        return mean, std

    m_ep, s_ep = stats([t.ee_proposed for t in ok])
    m_ee, s_ee = stats([t.ee_equal for t in ok])
    m_rp, s_rp = stats([t.sum_rate_proposed for t in ok])
    m_re, s_re = stats([t.sum_rate_equal for t in ok])
    return MonteCarloResult(
        trials=tuple(trials),
        n_trials=len(trials),
        n_converged=len(ok),
        n_unconverged=len(trials) - len(ok) - n_rejected,
        n_rejected=n_rejected,
        mean_ee_proposed=m_ep, std_ee_proposed=s_ep,
        mean_ee_equal=m_ee, std_ee_equal=s_ee,
        mean_sum_rate_proposed=m_rp, std_sum_rate_proposed=s_rp,
        mean_sum_rate_equal=m_re, std_sum_rate_equal=s_re,
    )


def monte_carlo(config: SystemConfig, n_trials: int, base_seed: int,
                workers: int = 1, redraws: int = DEFAULT_REDRAWS,
                backend: str | None = None) -> MonteCarloResult:
    """Aggregate statistics over n_trials seeded trials (seeds
    base_seed .. base_seed + n_trials - 1).  `workers` > 1 distributes
    trials over processes; aggregation is an ordered reduction by trial
    index, so the result is identical for any worker count."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    seeds = [base_seed + i for i in range(n_trials)]
    if workers <= 1:
        trials = [run_trial(config, s, redraws=redraws, backend=backend)
                  for s in seeds]
    else:
        args = [(config, s, redraws, backend) for s in seeds]
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, math.ceil(n_trials / (4 * workers)))
            trials = list(pool.map(_trial_args, args, chunksize=chunk))
    return _aggregate(trials)


def _override(config: SystemConfig, parameter: str, value: float) -> SystemConfig:
    if parameter == "rf_var":
        return replace(config, rf_var_rx=value, rf_var_tx=value)
    if parameter == "est_err_var":
        return replace(config, est_err_var=value)
    if parameter == "r_min":
        return replace(config, r_min=value)
    if parameter == "M":
        return replace(config, M=int(value))
    raise ValueError(f"unknown sweep parameter {parameter!r}; "
                     f"expected one of {SWEEP_PARAMETERS}")


def sweep(config: SystemConfig, parameter: str, values, n_trials: int,
          base_seed: int, workers: int = 1, redraws: int = DEFAULT_REDRAWS,
          backend: str | None = None) -> SweepTable:
    """One monte_carlo batch per parameter value with shared per-trial
    seeds (common random numbers).  rf_var sets both RF log-variances."""
    values = list(values)
    if not values:
        raise ValueError("values must be non-empty")
    if sorted(values) != values:
        raise ValueError("values must be sorted ascending")
    rows = []
    for value in values:
        cfg = _override(config, parameter, value)
        result = monte_carlo(cfg, n_trials, base_seed, workers=workers,
                             redraws=redraws, backend=backend)
        rows.append(SweepRow(value=float(value), result=result))
    return SweepTable(parameter=parameter, base_seed=base_seed,
                      rows=tuple(rows))
