"""Performance expressions: SINR, achievable rate, the solver's rate lower
bound, sum rate and energy efficiency.

Interference powers enter the SINR linearly (matching the squared
magnitude of the interfering signal amplitudes in the received-signal
model); the rate lower bound is evaluated exactly as the closed form used
by the optimizer, without the "1+" inside the logarithm and without the
pilot-overhead prefactor, so it may be negative for small powers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .config import SystemConfig
from .errors import DegenerateChannel, NonpositiveArgument

__all__ = [
    "PowerAllocation",
    "RateReport",
    "sinr",
    "sinr_all",
    "rate",
    "rate_all",
    "rate_lower_bound",
    "rate_lower_bound_all",
    "energy_efficiency",
    "rate_report",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class PowerAllocation:
    """Per-user downlink transmit powers, W."""

    p: np.ndarray  # (K,) non-negative

    def __post_init__(self):
        arr = np.asarray(self.p, dtype=float)
        if arr.ndim != 1:
            raise ValueError("power vector must be one-dimensional")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
            raise ValueError("powers must be finite and >= 0")
        object.__setattr__(self, "p", arr)
        arr.setflags(write=False)

    @property
    def total(self) -> float:
        return float(np.sum(self.p))


@dataclass(frozen=True)
class RateReport:
    """Per-user SINR/rate/lower-bound plus the scalar sum rate and EE."""

    sinr: np.ndarray      # (K,)
    rate: np.ndarray      # (K,) bit/s/Hz
    rate_lb: np.ndarray   # (K,) bit/s/Hz, may be negative
    sum_rate: float       # bit/s/Hz
    ee: float             # bit/J/Hz


def sinr_all(p: np.ndarray, ch: ChannelRealization, config: SystemConfig) -> np.ndarray:
    """Vector of received SINRs for a power vector (K,)."""
    p = np.asarray(p, dtype=float)
    tau = config.tau_d_eff
    gains = ch.rf_gain2 * ch.h_norm2          # |u_r|^2 |u_t|^-2 ||h_k||^2
    weighted = p * gains
    interference = np.sum(weighted) - weighted  # sum over k' != k
    floor = config.P * tau * ch.est_err_var + config.noise_variance
    return ch.beta * weighted * tau / (tau * ch.beta * interference + floor)


def sinr(k: int, p: PowerAllocation, ch: ChannelRealization, config: SystemConfig) -> float:
    """Received SINR of user k for allocation p."""
    return float(sinr_all(p.p, ch, config)[k])


def rate(k: int, gamma_k: float, config: SystemConfig) -> float:
    """Achievable rate (T-tau_d)/T * log2(1+gamma) for user k, bit/s/Hz."""
    return (config.T - config.tau_d_eff) / config.T * math.log2(1.0 + gamma_k)


def rate_all(gamma: np.ndarray, config: SystemConfig) -> np.ndarray:
    return (config.T - config.tau_d_eff) / config.T * np.log2(1.0 + np.asarray(gamma))


def rate_lower_bound_all(p: np.ndarray, ch: ChannelRealization,
                         config: SystemConfig) -> np.ndarray:
    """Vector of rate lower bounds; raises DegenerateChannel when any
    ||h_k||^2 <= K and NonpositiveArgument when any p_k <= 0."""
    p = np.asarray(p, dtype=float)
    K = ch.n_users
    h2 = ch.h_norm2
    if np.any(h2 <= K):
        bad = int(np.argmax(h2 <= K))
        raise DegenerateChannel(f"user {bad}: ||h||^2={h2[bad]:.6g} <= K={K}")
    if np.any(p <= 0.0):
        bad = int(np.argmax(p <= 0.0))
        raise NonpositiveArgument(f"user {bad}: power must be > 0 in the lower bound")
    tau = config.tau_d_eff
    weighted = p / ch.beta
    cross = np.sum(weighted) - weighted        # sum_{k'!=k} p_k' / beta_k'
    floor = config.P * tau * ch.est_err_var + config.noise_variance
    denom = math.exp(2.0 * config.rf_var_tx) * tau * cross + floor
    return np.log2((h2 - K) * ch.beta * p * tau / denom)


def rate_lower_bound(k: int, p: PowerAllocation, ch: ChannelRealization,
                     config: SystemConfig) -> float:
    """Rate lower bound of user k (the optimizer's objective term)."""
    return float(rate_lower_bound_all(p.p, ch, config)[k])


def energy_efficiency(p: PowerAllocation, rates: np.ndarray, config: SystemConfig) -> float:
    """Sum rate over total transmit plus circuit power, bit/J/Hz."""
    circuit = config.M * config.circuit_power_per_antenna
    return float(np.sum(rates)) / (p.total + circuit)


def rate_report(p: PowerAllocation, ch: ChannelRealization,
                config: SystemConfig) -> RateReport:
    """Evaluate every metric for an allocation on one realization."""
    gamma = sinr_all(p.p, ch, config)
    r = rate_all(gamma, config)
    r_lb = rate_lower_bound_all(p.p, ch, config)
    return RateReport(
        sinr=gamma, rate=r, rate_lb=r_lb,
        sum_rate=float(np.sum(r)),
        ee=energy_efficiency(p, r, config),
    )
