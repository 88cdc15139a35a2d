"""System configuration: every scalar parameter of the model in one place.

Distances are stored in meters.  Path-loss style formulas (the large-scale
gain nu*zeta/d^eps and the estimate variance d^-eps - sigma_eps^2) consume
the dimensionless ratio d / ref_distance; with the default
ref_distance == cell_radius the cell-edge estimate variance is
1 - est_err_var, which keeps estimation-error sweeps up to 0.2 feasible
for every user in the cell.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass
from typing import Any

from .errors import ParseError, ValidationError

if sys.version_info >= (3, 11):  # pragma: no cover - version dependent
    import tomllib as _toml
else:  # pragma: no cover
    import tomli as _toml


@dataclass(frozen=True)
class SystemConfig:
    """Scalar parameters of the downlink model, the solver and the harness.

    Defaults reproduce the simulation profile used by the acceptance runs:
    M=100, K=4, a short coherence interval of 8 symbols with K pilot
    symbols (chosen so the per-symbol power budget leaves the minimum-rate
    floors satisfiable for typical draws), P = 0.1 W (20 dBm), per-antenna
    circuit power 10 mW, path-loss exponent 3.8, unit carrier constant,
    10 dB log-normal shadowing and 50% PA efficiency.  Fields left at None
    are derived: tau_d defaults to K,
    ref_distance to cell_radius, group_threshold to the per-realization
    median large-scale gain, and the subgradient step sizes to a scale set
    by the group power budgets.
    """

    M: int = 100                     # BS antennas
    K: int = 4                       # single-antenna users
    T: float = 8.0                   # coherence interval, symbols
    tau_d: float | None = None       # pilot length, symbols (None -> K)
    P: float = 0.1                   # flexible total transmission power, W
    noise_variance: float = 1e-13    # sigma^2, W (N0=-170 dBm/Hz x 10 MHz)
    nu: float = 1.0                  # carrier/antenna-gain constant
    pathloss_exp: float = 3.8        # eps in [2, 6]
    shadow_std_db: float = 10.0      # std of 10*log10(shadowing)
    rf_var_rx: float = 0.3           # log-amplitude variance, user receive RF
    rf_var_tx: float = 0.3           # log-amplitude variance, transmit RF
    rf_phase_max: float = math.pi / 6.0  # maximal RF mismatch phase, rad
    est_err_var: float = 0.03        # channel-estimation error variance
    circuit_power_per_antenna: float = 0.01  # W, same for every antenna
    r_min: float = 1.0               # minimum rate per user, bit/s/Hz
    cell_radius: float = 500.0       # m
    min_distance: float = 35.0       # m, inner exclusion radius
    ref_distance: float | None = None    # m, distance normalization (None -> cell_radius)
    group_threshold: float | None = None  # gain threshold (None -> median)
    pa_efficiency: float = 0.5       # PA efficiency, used in the initial EE upper bound
    bisect_tol: float = 1e-3         # outer bisection stopping width
    step_omega_c: float | None = None    # subgradient step, center budget multiplier
    step_omega_e: float | None = None    # subgradient step, edge budget multiplier
    step_lambda: float | None = None     # subgradient step, per-user rate floors
    max_outer_iters: int = 200
    max_inner_iters: int = 400
    max_multiplier_iters: int = 200

    def __post_init__(self):
        validate_config(self)

    # ---- derived values -------------------------------------------------

    @property
    def tau_d_eff(self) -> float:
        """Pilot length actually used (defaults to one symbol per user)."""
        return float(self.K) if self.tau_d is None else self.tau_d

    @property
    def ref_distance_eff(self) -> float:
        return self.cell_radius if self.ref_distance is None else self.ref_distance

    @property
    def noise_floor(self) -> float:
        """P*tau_d*sigma_eps^2 + sigma^2, the power-independent SINR floor."""
        return self.P * self.tau_d_eff * self.est_err_var + self.noise_variance

    @property
    def total_budget(self) -> float:
        """P/(T - tau_d), split between the two groups by kappa_c/kappa_e."""
        return self.P / (self.T - self.tau_d_eff)

    def step_sizes(self) -> tuple[float, float, float]:
        """Resolved (step_omega_c, step_omega_e, step_lambda).

        The automatic default scales the step so a group multiplier can
        traverse the inverse of a typical per-user power within a few tens
        of subgradient iterations when the slack is a fraction of the
        budget.
        """
        budget = self.total_budget
        auto = self.K * (self.T - self.tau_d_eff) / (budget * math.log(2) * 10.0)
        w1 = auto if self.step_omega_c is None else self.step_omega_c
        w2 = auto if self.step_omega_e is None else self.step_omega_e
        lam = auto if self.step_lambda is None else self.step_lambda
        return w1, w2, lam

    def normalized_distance(self, d) -> Any:
        """Distance in formula units (d / ref_distance). Accepts arrays."""
        return d / self.ref_distance_eff


def validate_config(cfg: SystemConfig) -> None:
    """Raise ValidationError naming the first field violating an invariant."""

    def positive(name: str):
        if not getattr(cfg, name) > 0:
            raise ValidationError(name, "must be > 0")

    def nonneg(name: str):
        if getattr(cfg, name) < 0:
            raise ValidationError(name, "must be >= 0")

    for name in ("M", "K", "T", "P", "noise_variance", "nu", "cell_radius",
                 "min_distance", "circuit_power_per_antenna", "pa_efficiency",
                 "bisect_tol", "max_outer_iters", "max_inner_iters",
                 "max_multiplier_iters"):
        positive(name)
    for name in ("shadow_std_db", "rf_var_rx", "rf_var_tx", "rf_phase_max",
                 "est_err_var", "r_min"):
        nonneg(name)
    if cfg.tau_d is not None and not cfg.tau_d > 0:
        raise ValidationError("tau_d", "must be > 0")
    if not cfg.tau_d_eff < cfg.T:
        raise ValidationError("tau_d", "pilot length must be < coherence interval T")
    if not 2.0 <= cfg.pathloss_exp <= 6.0:
        raise ValidationError("pathloss_exp", "must lie in [2, 6]")
    if not cfg.min_distance < cfg.cell_radius:
        raise ValidationError("min_distance", "must be < cell_radius")
    if cfg.ref_distance is not None and not cfg.ref_distance > 0:
        raise ValidationError("ref_distance", "must be > 0")
    if cfg.group_threshold is not None and not cfg.group_threshold > 0:
        raise ValidationError("group_threshold", "must be > 0")
    if not cfg.pa_efficiency <= 1.0:
        raise ValidationError("pa_efficiency", "must lie in (0, 1]")
    for name in ("step_omega_c", "step_omega_e", "step_lambda"):
        v = getattr(cfg, name)
        if v is not None and not v > 0:
            raise ValidationError(name, "must be > 0")
    # Estimate variance must stay positive for the closest admissible user.
    dmin = cfg.min_distance / cfg.ref_distance_eff
    if not cfg.est_err_var < dmin ** (-cfg.pathloss_exp):
        raise ValidationError(
            "est_err_var",
            "must be < (min_distance/ref_distance)^(-pathloss_exp) so the "
            "channel-estimate variance stays positive for every user",
        )


# ---- file I/O -----------------------------------------------------------

_FIELD_TYPES = {f.name: f for f in dataclasses.fields(SystemConfig)}
_INT_FIELDS = {"M", "K", "max_outer_iters", "max_inner_iters", "max_multiplier_iters"}


def config_from_dict(data: dict) -> SystemConfig:
    """Build a SystemConfig from a flat mapping, rejecting unknown keys."""
    unknown = sorted(set(data) - set(_FIELD_TYPES))
    if unknown:
        raise ValidationError(unknown[0], "unknown configuration key")
    kwargs = {}
    for key, value in data.items():
        if key in _INT_FIELDS:
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValidationError(key, "must be an integer")
            kwargs[key] = value
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError(key, "must be a number")
            kwargs[key] = float(value)
    return SystemConfig(**kwargs)


def load_config(path) -> SystemConfig:
    """Parse a flat TOML config file; missing keys fall back to defaults."""
    try:
        with open(path, "rb") as fh:
            data = _toml.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read config file {path}: {exc}") from exc
    except _toml.TOMLDecodeError as exc:
        raise ParseError(f"malformed config file {path}: {exc}") from exc
    flat = {}
    for key, value in data.items():
        if isinstance(value, dict):
            raise ParseError(f"config must be flat, found table [{key}]")
        flat[key] = value
    return config_from_dict(flat)


def dump_config(cfg: SystemConfig) -> str:
    """Serialize to flat TOML; None fields are omitted (they are derived)."""
    lines = []
    for field in dataclasses.fields(SystemConfig):
        value = getattr(cfg, field.name)
        if value is None:
            continue
        if field.name in _INT_FIELDS:
            lines.append(f"{field.name} = {int(value)}")
        else:
            lines.append(f"{field.name} = {float(value)!r}")
    return "\n".join(lines) + "\n"


def save_config(cfg: SystemConfig, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_config(cfg))
