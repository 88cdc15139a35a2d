"""Command-line front end.

Each command writes `<command>.csv` (plot-ready, stable column order,
17-significant-digit floats, LF endings) plus `manifest.json` into the
output directory.  Re-running a command with the same config and seed
reproduces the CSV byte for byte.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, harness, metrics, optimizer
from ._backend import backend_name, get_backend
from .channel import draw_realization, partition_users
from .config import SystemConfig, load_config
from .errors import (
    DegenerateChannel,
    Infeasible,
    InfeasibleEstimation,
    SimulationError,
)

COMMANDS = ("solve-once", "monte-carlo", "sweep-rf", "sweep-esterr",
            "sweep-rmin", "compare-baseline", "oracle-check")

_SWEEP_SPEC = {
    "sweep-rf": ("rf_var", [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]),
    "sweep-esterr": ("est_err_var", [0.01, 0.05, 0.1, 0.15, 0.2]),
    "sweep-rmin": ("r_min", [1.0, 1.5, 2.0]),
}


def _fmt(value) -> str:
    """Fixed CSV cell formatting: 17 significant digits for floats."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _model_flags(config: SystemConfig) -> dict:
    """Modeling choices in effect, surfaced for reproducibility."""
    return {
        "interference_linear_in_power": True,
        "bisection_branch": "standard",
        "bisection_objective": "rate_lower_bound",
        "predecessor_order": "descending_gain",
        "distance_normalization_m": config.ref_distance_eff,
        "pilot_symbols": config.tau_d_eff,
    }


def _manifest(out_dir: Path, command: str, config: SystemConfig, args,
              outputs: list[str], elapsed: float, summary: dict) -> None:
    manifest = {
        "artifact_version": __version__,
        "command": command,
        "backend": backend_name(get_backend(args.backend)),
        "base_seed": args.seed,
        "trials": getattr(args, "trials", None),
        "config": {k: v for k, v in dataclasses.asdict(config).items()
                   if v is not None},
        "model_flags": _model_flags(config),
        "outputs": outputs,
        "timing_seconds": {command: elapsed},
        "summary": summary,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _monte_carlo_rows(result: harness.MonteCarloResult) -> tuple[list[str], list[list]]:
    header = ["trial", "seed", "rejected", "converged", "ee_proposed",
              "ee_equal", "sum_rate_proposed", "sum_rate_equal"]
    rows = []
    for i, t in enumerate(result.trials):
        rows.append([
            i, t.seed, t.rejected, t.converged,
            t.ee_proposed if t.ee_proposed is not None else "",
            t.ee_equal if t.ee_equal is not None else "",
            t.sum_rate_proposed if t.sum_rate_proposed is not None else "",
            t.sum_rate_equal if t.sum_rate_equal is not None else "",
        ])
    return header, rows


def _mc_summary(result: harness.MonteCarloResult) -> dict:
    return {
        "n_trials": result.n_trials,
        "n_converged": result.n_converged,
        "n_rejected": result.n_rejected,
        "mean_ee_proposed": result.mean_ee_proposed,
        "mean_ee_equal": result.mean_ee_equal,
        "mean_sum_rate_proposed": result.mean_sum_rate_proposed,
        "mean_sum_rate_equal": result.mean_sum_rate_equal,
    }


def _draw_valid(config: SystemConfig, seed: int):
    """Realization + partition for a seed, redrawing rejected geometry."""
    rng = np.random.default_rng(seed)
    last_error = None
    for _ in range(harness.DEFAULT_REDRAWS + 1):
        try:
            ch = draw_realization(config, rng)
            if np.any(ch.h_norm2 <= ch.n_users):
                raise DegenerateChannel("degenerate channel draw")
            return ch, partition_users(ch.beta, config)
        except (InfeasibleEstimation, DegenerateChannel) as exc:
            last_error = exc
    raise SimulationError(f"seed {seed}: no valid realization after redraws "
                          f"({last_error})")


def _cmd_solve_once(config: SystemConfig, args, out_dir: Path):
    ch, partition = _draw_valid(config, args.seed)
    result = optimizer.solve(ch, partition, config, backend=args.backend)
    equal = optimizer.equal_power_baseline(config)
    rates_eq = metrics.rate_all(metrics.sinr_all(equal.p, ch, config), config)
    header = ["seed", "converged", "outer_iters", "q", "ee_proposed",
              "ee_equal", "sum_rate_proposed", "sum_rate_equal"]
    row = [args.seed, result.converged, result.outer_iters, result.q,
           result.ee, metrics.energy_efficiency(equal, rates_eq, config),
           result.sum_rate, float(np.sum(rates_eq))]
    for k in range(config.K):
        header.append(f"p_{k}")
        row.append(float(result.powers.p[k]))
    _write_csv(out_dir / "solve-once.csv", header, [row])
    return ["solve-once.csv"], {"q": result.q, "ee_proposed": result.ee,
                                "converged": result.converged}


def _cmd_monte_carlo(config: SystemConfig, args, out_dir: Path):
    result = harness.monte_carlo(config, args.trials, args.seed,
                                 workers=args.workers, backend=args.backend)
    header, rows = _monte_carlo_rows(result)
    _write_csv(out_dir / "monte-carlo.csv", header, rows)
    return ["monte-carlo.csv"], _mc_summary(result)


def _cmd_sweep(command: str, config: SystemConfig, args, out_dir: Path):
    parameter, default_values = _SWEEP_SPEC[command]
    values = args.values if args.values is not None else default_values
    table = harness.sweep(config, parameter, values, args.trials, args.seed,
                          workers=args.workers, backend=args.backend)
    header = [parameter, "mean_ee_proposed", "std_ee_proposed",
              "mean_ee_equal", "std_ee_equal", "mean_sum_rate_proposed",
              "std_sum_rate_proposed", "mean_sum_rate_equal",
              "std_sum_rate_equal", "n", "converged", "rejected"]
    rows = []
    for row in table.rows:
        r = row.result
        rows.append([row.value, r.mean_ee_proposed, r.std_ee_proposed,
                     r.mean_ee_equal, r.std_ee_equal,
                     r.mean_sum_rate_proposed, r.std_sum_rate_proposed,
                     r.mean_sum_rate_equal, r.std_sum_rate_equal,
                     r.n_trials, r.n_converged, r.n_rejected])
    _write_csv(out_dir / f"{command}.csv", header, rows)
    summary = {"parameter": parameter, "values": [r.value for r in table.rows],
               "mean_ee_proposed": [r.result.mean_ee_proposed for r in table.rows]}
    return [f"{command}.csv"], summary


def _cmd_compare_baseline(config: SystemConfig, args, out_dir: Path):
    result = harness.monte_carlo(config, args.trials, args.seed,
                                 workers=args.workers, backend=args.backend)
    header, rows = _monte_carlo_rows(result)
    header.append("proposed_wins")
    wins = 0
    usable = 0
    for row, t in zip(rows, result.trials):
        if t.rejected or not t.converged:
            row.append("")
            continue
        usable += 1
        win = t.ee_proposed >= t.ee_equal
        wins += win
        row.append(win)
    _write_csv(out_dir / "compare-baseline.csv", header, rows)
    summary = _mc_summary(result)
    summary["win_fraction"] = wins / usable if usable else None
    return ["compare-baseline.csv"], summary


def _cmd_oracle_check(config: SystemConfig, args, out_dir: Path):
    header = ["instance", "seed", "ee_proposed", "ee_oracle", "rel_gap"]
    rows = []
    worst = -1.0
    for i in range(args.trials):
        seed = args.seed + i
        ch, partition = _draw_valid(config, seed)
        try:
            result = optimizer.solve(ch, partition, config, backend=args.backend)
            _p, ee_oracle = optimizer.grid_oracle(ch, partition, config,
                                                  grid_points=args.grid)
        except Infeasible:
            rows.append([i, seed, "", "", ""])
            continue
        gap = (ee_oracle - result.ee) / ee_oracle
        worst = max(worst, gap)
        rows.append([i, seed, result.ee, ee_oracle, gap])
        print(f"instance {i}: proposed EE {result.ee:.6f}, "
              f"oracle EE {ee_oracle:.6f}, relative gap {gap:.3%}")
    _write_csv(out_dir / "oracle-check.csv", header, rows)
    return ["oracle-check.csv"], {"worst_rel_gap": worst}


def _parse_values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad values list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimo-ee",
        description="Massive-MIMO downlink energy-efficiency power "
                    "allocation simulator")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, default=None,
                        help="flat TOML config file (defaults: built-in profile)")
    parser.add_argument("--seed", type=int, default=1,
                        help="base seed (default 1)")
    parser.add_argument("--trials", type=int, default=100,
                        help="number of trials / oracle instances (default 100)")
    parser.add_argument("--out", type=Path, default=Path("out"),
                        help="output directory (default ./out)")
    parser.add_argument("--values", type=_parse_values, default=None,
                        help="comma-separated sweep values")
    parser.add_argument("--grid", type=int, default=200,
                        help="grid points per user for oracle-check (default 200)")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker processes for Monte Carlo (default 1)")
    parser.add_argument("--backend", default=None,
                        choices=("python", "compiled"),
                        help="solver kernel override (default: compiled if built)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else SystemConfig()
    except SimulationError as exc:
        print(f"mimo-ee: config error: {exc}", file=sys.stderr)
        return 2

    out_dir = args.out
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        if args.command == "solve-once":
            outputs, summary = _cmd_solve_once(config, args, out_dir)
        elif args.command == "monte-carlo":
            outputs, summary = _cmd_monte_carlo(config, args, out_dir)
        elif args.command in _SWEEP_SPEC:
            outputs, summary = _cmd_sweep(args.command, config, args, out_dir)
        elif args.command == "compare-baseline":
            outputs, summary = _cmd_compare_baseline(config, args, out_dir)
        else:
            outputs, summary = _cmd_oracle_check(config, args, out_dir)
    except SimulationError as exc:
        print(f"mimo-ee: {args.command}: {exc}", file=sys.stderr)
        return 1
    elapsed = time.perf_counter() - start
    _manifest(out_dir, args.command, config, args, outputs, elapsed, summary)
    print(f"{args.command}: wrote {', '.join(outputs)} and manifest.json "
          f"to {out_dir} in {elapsed:.2f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
