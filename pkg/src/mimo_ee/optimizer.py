"""EE-maximizing power allocation.

Outer bisection on the EE parameter q, an inner multiplier/power loop per
level (projected subgradient on the group budget and minimum-rate
multipliers, Gauss-Seidel closed-form power updates), a deterministic
feasibility repair, plus the equal-power baseline and a brute-force grid
oracle for verification.

Users are processed in descending large-scale-gain order ("strong first");
every predecessor sum (minimum-power floors, the chi price term) uses that
ordering.  The hot per-level loop runs on the selected kernel backend
(compiled extension or its pure-Python twin).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _core_py
from ._backend import backend_name, get_backend
from .channel import ChannelRealization, UserPartition
from .config import SystemConfig
from .errors import (
    DegenerateChannel,
    Infeasible,
    NoConvergence,
    NonpositiveDenominator,
)
from .metrics import LN2, PowerAllocation

__all__ = [
    "MultiplierState",
    "KktTerms",
    "SolveResult",
    "STATIONARITY_TOL",
    "min_power_floor",
    "kkt_terms",
    "kkt_power_update",
    "inner_power_solve",
    "update_multipliers",
    "solve",
    "equal_power_baseline",
    "grid_oracle",
    "kkt_residual",
    "lagrangian",
]

# A converged solve must zero the stationarity expression of every
# unclamped user to this absolute tolerance.
STATIONARITY_TOL = 1e-6

# Gauss-Seidel fixed-point tolerance (max relative power change per sweep).
# Tighter than strictly needed so the stationarity residual of the fixed
# point lands well under STATIONARITY_TOL.
INNER_TOL = 1e-12

_MAX_BACKOFF = 40

_STATUS_MSG = {
    _core_py.NONPOS_DENOM: "power-update denominator became non-positive",
    _core_py.INNER_EXHAUSTED: "inner power fixed point did not converge",
    _core_py.BACKOFF_EXHAUSTED: "subgradient step backoff budget exhausted",
}


@dataclass(frozen=True)
class MultiplierState:
    """Dual variables: group budget prices and per-user rate-floor prices."""

    omega_c: float
    omega_e: float
    lam: np.ndarray  # (K,) natural user order

    def __post_init__(self):
        arr = np.asarray(self.lam, dtype=float)
        if self.omega_c < 0 or self.omega_e < 0 or np.any(arr < 0):
            raise ValueError("multipliers must be non-negative")
        object.__setattr__(self, "lam", arr)
        arr.setflags(write=False)

    @classmethod
    def zeros(cls, n_users: int) -> "MultiplierState":
        return cls(0.0, 0.0, np.zeros(n_users))


@dataclass(frozen=True)
class KktTerms:
    """Auxiliary scalars of the closed-form power update for one user."""

    Omega: float   # interference weight sum, e^{2 var_tx} tau * sum 1/beta
    Lambda: float  # lower-bound denominator at the current powers
    chi: float     # rate-floor price combination


@dataclass(frozen=True)
class SolveResult:
    """Output of the EE power allocation solve."""

    powers: PowerAllocation
    q: float                    # converged EE parameter
    multipliers: MultiplierState
    outer_iters: int
    inner_iters: int
    converged: bool
    kkt_residual_max: float     # over users not pinned by clamps/repair
    ee: float                   # realistic EE of the returned allocation
    sum_rate: float
    lb_sum: float               # lower-bound sum rate of the allocation
    certificate_gap: float      # |lb_sum - q * total power|
    bisection_width: float
    clamped: np.ndarray         # (K,) clamp codes, natural order


class _Problem:
    """Realization/config data in solver (descending-gain) order."""

    __slots__ = ("order", "beta", "binv", "h2", "rf2", "nk", "grp",
                 "gamma_rm", "edt", "floor_noise", "b_c", "b_e",
                 "tau", "frac", "mpc", "n_users")

    def __init__(self, ch: ChannelRealization, partition: UserPartition,
                 config: SystemConfig):
        beta = np.asarray(ch.beta, dtype=float)
        n = beta.shape[0]
        order = np.lexsort((np.arange(n), -beta))
        self.order = order
        self.n_users = n
        self.beta = beta[order]
        self.binv = 1.0 / self.beta
        self.h2 = np.asarray(ch.h_norm2, dtype=float)[order]
        self.rf2 = np.asarray(ch.rf_gain2, dtype=float)[order]
        self.grp = partition.group_mask(n)[order].astype(np.int8)
        tau = config.tau_d_eff
        self.tau = tau
        self.frac = (config.T - tau) / config.T
        self.floor_noise = config.P * tau * ch.est_err_var + config.noise_variance
        self.nk = self.floor_noise / self.h2
        self.gamma_rm = math.pow(2.0, config.r_min) - 1.0
        self.edt = math.exp(2.0 * config.rf_var_tx) * tau
        budget = config.total_budget
        self.b_c = partition.kappa_c * budget
        self.b_e = partition.kappa_e * budget
        self.mpc = config.M * config.circuit_power_per_antenna

    def unsort(self, arr: np.ndarray) -> np.ndarray:
        out = np.empty_like(arr)
        out[self.order] = arr
        return out


def _user_order(beta: np.ndarray) -> np.ndarray:
    """Descending-gain user ordering, stable under ties."""
    beta = np.asarray(beta, dtype=float)
    return np.lexsort((np.arange(beta.shape[0]), -beta))


def _floors_sorted(p: np.ndarray, prob: _Problem) -> np.ndarray:
    """Minimum-power floors at powers p, both in solver order."""
    floors = np.empty(prob.n_users)
    pref = 0.0
    for k in range(prob.n_users):
        floors[k] = prob.gamma_rm * (pref + prob.nk[k])
        pref += p[k]
    return floors


def _floor_baseline(prob: _Problem) -> np.ndarray:
    """Powers with every user exactly at its floor, built sequentially."""
    p = np.empty(prob.n_users)
    pref = 0.0
    for k in range(prob.n_users):
        p[k] = prob.gamma_rm * (pref + prob.nk[k])
        pref += p[k]
    return p


def _group_sums(p: np.ndarray, prob: _Problem) -> tuple[float, float]:
    s_c = float(np.sum(p[prob.grp == 0]))
    s_e = float(np.sum(p[prob.grp == 1]))
    return s_c, s_e


def _check_feasible(prob: _Problem) -> np.ndarray:
    """Raise Infeasible when the floors alone overrun a group budget."""
    base = _floor_baseline(prob)
    s_c, s_e = _group_sums(base, prob)
    if s_c > prob.b_c * (1.0 + 1e-12) or s_e > prob.b_e * (1.0 + 1e-12):
        raise Infeasible(
            f"minimum-rate floors need ({s_c:.3e}, {s_e:.3e}) W against "
            f"group budgets ({prob.b_c:.3e}, {prob.b_e:.3e}) W")
    return base


def _initial_powers(prob: _Problem, baseline: np.ndarray) -> np.ndarray:
    """Deterministic feasible starting point: floors plus an equal share of
    the remaining group budget."""
    s_c, s_e = _group_sums(baseline, prob)
    n_c = int(np.sum(prob.grp == 0))
    n_e = prob.n_users - n_c
    extra = np.where(
        prob.grp == 0,
        0.5 * max(0.0, prob.b_c - s_c) / max(n_c, 1),
        0.5 * max(0.0, prob.b_e - s_e) / max(n_e, 1),
    )
    p = np.empty(prob.n_users)
    pref = 0.0
    for k in range(prob.n_users):
        p[k] = prob.gamma_rm * (pref + prob.nk[k]) + extra[k]
        pref += p[k]
    p, _ = _repair(p, prob)
    return p


def _rebuild_block(extras: np.ndarray, s_c: np.ndarray, s_e: np.ndarray,
                   prob: _Problem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Powers from floor-relative extras scaled per group, for a block of
    candidates.  extras is (K, N); the scales are (N,).  Returns
    (powers (K, N), center sums (N,), edge sums (N,))."""
    n_cols = extras.shape[1]
    p = np.empty((prob.n_users, n_cols))
    pref = np.zeros(n_cols)
    sum_c = np.zeros(n_cols)
    sum_e = np.zeros(n_cols)
    for k in range(prob.n_users):
        row = prob.gamma_rm * (pref + prob.nk[k])
        if prob.grp[k] == 0:
            row = row + s_c * extras[k]
            sum_c += row
        else:
            row = row + s_e * extras[k]
            sum_e += row
        p[k] = row
        pref += row
    return p, sum_c, sum_e


_SCALE_MARGIN = 1.0 - 1e-9


def _budget_scales_block(extras: np.ndarray,
                         prob: _Problem) -> tuple[np.ndarray, np.ndarray]:
    """Largest per-group extra scales keeping both budgets satisfied.

    The rebuilt group sums are affine in (s_c, s_e) with no cross product,
    so four rebuilds give every coefficient and the scales solve linear
    equations.  Center users precede all edge users in solver order: s_c
    also bounds the edge floor mass, so it is lowered further when edge
    floors alone would overflow the edge budget.  Binding scales carry a
    tiny margin against roundoff.
    """
    n_cols = extras.shape[1]
    zeros = np.zeros(n_cols)
    ones = np.ones(n_cols)
    _, c00, e00 = _rebuild_block(extras, zeros, zeros, prob)
    _, c10, e10 = _rebuild_block(extras, ones, zeros, prob)
    _, _c01, e01 = _rebuild_block(extras, zeros, ones, prob)
    dc = c10 - c00    # center-sum slope in s_c
    ec = e10 - e00    # edge-sum slope in s_c (through the floors)
    de = e01 - e00    # edge-sum slope in s_e

    with np.errstate(divide="ignore", invalid="ignore"):
        s_c = np.where(
            (c00 + dc > prob.b_c) & (dc > 0.0),
            np.maximum((prob.b_c - c00) / dc, 0.0) * _SCALE_MARGIN,
            1.0,
        )
        edge_at = e00 + ec * s_c
        cross = np.where(
            (edge_at > prob.b_e) & (ec > 0.0),
            np.maximum((prob.b_e - e00) / ec, 0.0) * _SCALE_MARGIN,
            s_c,
        )
        s_c = np.minimum(s_c, cross)
        edge_at = e00 + ec * s_c
        s_e = np.where(
            (edge_at + de > prob.b_e) & (de > 0.0),
            np.maximum((prob.b_e - edge_at) / de, 0.0) * _SCALE_MARGIN,
            1.0,
        )
    return s_c, s_e


def _repair(p: np.ndarray, prob: _Problem) -> tuple[np.ndarray, np.ndarray]:
    """Project an allocation onto the constraint set.

    Floors are re-imposed sequentially; group budget overruns scale down
    the floor-relative extras by the exact affine solution of
    `_budget_scales_block`.  Returns (repaired powers, changed mask); a
    feasible input is returned unchanged, bit for bit.
    """
    floors = _floors_sorted(p, prob)
    s_c, s_e = _group_sums(p, prob)
    if (np.all(p >= floors * (1.0 - 1e-9))
            and s_c <= prob.b_c * (1.0 + 1e-12)
            and s_e <= prob.b_e * (1.0 + 1e-12)):
        return p, np.zeros(prob.n_users, dtype=bool)

    extras = np.maximum(p - floors, 0.0)[:, None]
    scale_c, scale_e = _budget_scales_block(extras, prob)
    repaired, _, _ = _rebuild_block(extras, scale_c, scale_e, prob)
    repaired = repaired[:, 0]
    changed = repaired != p
    return repaired, changed


def _extras_sorted(p: np.ndarray, prob: _Problem) -> np.ndarray:
    return np.maximum(p - _floors_sorted(p, prob), 0.0)


_REFINE_PATTERN_MAX_USERS = 5


def _refine_sorted(p: np.ndarray, codes: np.ndarray,
                   prob: _Problem) -> tuple[np.ndarray, np.ndarray]:
    """Boundary refinement of the realistic EE around the fixed point.

    The closed-form fixed point optimizes the rate lower bound, which never
    sees the drawn RF gain ratios; when a user's RF draw makes its real
    rate poor, the real EE is often maximized with that user pinned at its
    minimum-power floor while others absorb the freed budget.  This tries
    every corner pattern (floor / keep current extra / rail the extra) over
    the users, evaluating each candidate after the feasibility projection,
    and keeps the best realistic EE.  Moves end on constraint boundaries,
    so refined users carry floor/cap clamp codes and untouched users keep
    theirs.  Beyond _REFINE_PATTERN_MAX_USERS the exhaustive patterns are
    replaced by coordinate passes of the same three candidates.
    """
    _, _, best_ee = _realistic_sorted(p, prob)
    base_extras = _extras_sorted(p, prob)
    big = (prob.b_c + prob.b_e) * 1e6
    n = prob.n_users
    free, floor, cap = (_core_py.CLAMP_FREE, _core_py.CLAMP_FLOOR,
                        _core_py.CLAMP_CAP)

    if n <= _REFINE_PATTERN_MAX_USERS:
        patterns = [pat for pat in itertools.product((free, floor, cap),
                                                     repeat=n)
                    if any(c != free for c in pat)]
    else:
        patterns = []
        for k in range(n):
            for c in (floor, cap):
                single = [free] * n
                single[k] = c
                patterns.append(tuple(single))

    n_pat = len(patterns)
    extras = np.tile(base_extras[:, None], (1, n_pat))
    for j, pat in enumerate(patterns):
        for i, choice in enumerate(pat):
            if choice == floor:
                extras[i, j] = 0.0
            elif choice == cap:
                extras[i, j] = big
    scale_c, scale_e = _budget_scales_block(extras, prob)
    candidates, _sum_c, _sum_e = _rebuild_block(extras, scale_c, scale_e, prob)
    ee = _grid_ee(candidates, prob)
    ee = np.where(np.any(candidates <= 0.0, axis=0), -np.inf, ee)
    j_best = int(np.argmax(ee))
    if not ee[j_best] > best_ee * (1.0 + 1e-12):
        return p, codes

    best_p = candidates[:, j_best].copy()
    codes = codes.copy()
    moved = best_p != p
    codes[moved] = _core_py.CLAMP_BUDGET
    for i, choice in enumerate(patterns[j_best]):
        if choice != free:
            codes[i] = choice
    return best_p, codes


def _lb_sum_sorted(p: np.ndarray, prob: _Problem) -> float:
    """Sum of rate lower bounds at powers p (solver order)."""
    s1 = float(np.dot(prob.binv, p))
    lam = prob.edt * (s1 - prob.binv * p) + prob.floor_noise
    num = (prob.h2 - prob.n_users) * prob.beta * p * prob.tau
    return float(np.sum(np.log2(num / lam)))


def _realistic_sorted(p: np.ndarray, prob: _Problem) -> tuple[np.ndarray, float, float]:
    """(rates, sum_rate, ee) with the full SINR expression, solver order."""
    weighted = p * prob.rf2 * prob.h2
    interference = np.sum(weighted) - weighted
    gamma = prob.beta * weighted * prob.tau / (
        prob.tau * prob.beta * interference + prob.floor_noise)
    rates = prob.frac * np.log2(1.0 + gamma)
    total = float(np.sum(rates))
    return rates, total, total / (float(np.sum(p)) + prob.mpc)


def _chi_sorted(lam: np.ndarray, wc: float, we: float,
                prob: _Problem) -> np.ndarray:
    """chi_k = lam_k - sum_{j<k} (omega_gj - 1) lam_j in solver order."""
    chi = np.empty(prob.n_users)
    acc = 0.0
    for k in range(prob.n_users):
        chi[k] = lam[k] - acc
        wj = wc if prob.grp[k] == 0 else we
        acc += (wj - 1.0) * lam[k]
    return chi


def _residuals_sorted(p: np.ndarray, prob: _Problem, wc: float, we: float,
                      lam: np.ndarray, q: float) -> np.ndarray:
    """Stationarity expression per user at powers p (solver order)."""
    s1 = float(np.dot(prob.binv, p))
    lam_den = prob.edt * (s1 - prob.binv * p) + prob.floor_noise
    inv_sum = np.sum(1.0 / lam_den) - 1.0 / lam_den
    cross = prob.edt * prob.binv * inv_sum / LN2
    chi = _chi_sorted(lam, wc, we, prob)
    wg = np.where(prob.grp == 0, wc, we)
    return cross - 1.0 / (p * LN2) + q + wg + chi


# ---------------------------------------------------------------------------
# Spec-level operations (natural user order)
# ---------------------------------------------------------------------------


def min_power_floor(k: int, p: PowerAllocation, ch: ChannelRealization,
                    config: SystemConfig) -> float:
    """Minimum admissible power of user k given its predecessors' powers
    (predecessors = users with larger large-scale gain)."""
    order = _user_order(ch.beta)
    pos = int(np.flatnonzero(order == k)[0])
    pred = order[:pos]
    gamma_rm = math.pow(2.0, config.r_min) - 1.0
    noise = (config.P * config.tau_d_eff * ch.est_err_var
             + config.noise_variance)
    h2k = float(ch.h_norm2[k])
    return gamma_rm * (float(np.sum(p.p[pred])) + noise / h2k)


def kkt_terms(k: int, p: PowerAllocation, ch: ChannelRealization,
              partition: UserPartition, config: SystemConfig,
              multipliers: MultiplierState) -> KktTerms:
    """The (Omega, Lambda, chi) scalars of user k's stationarity condition."""
    prob = _Problem(ch, partition, config)
    pos = int(np.flatnonzero(prob.order == k)[0])
    ps = p.p[prob.order]
    lam_s = multipliers.lam[prob.order]
    others = np.arange(prob.n_users) != pos
    omega = prob.edt * float(np.sum(prob.binv[others]))
    lam_den = prob.edt * float(np.sum(prob.binv[others] * ps[others])) + prob.floor_noise
    chi = float(_chi_sorted(lam_s, multipliers.omega_c, multipliers.omega_e,
                            prob)[pos])
    return KktTerms(Omega=omega, Lambda=lam_den, chi=chi)


def kkt_power_update(k: int, p: PowerAllocation, ch: ChannelRealization,
                     partition: UserPartition, config: SystemConfig,
                     multipliers: MultiplierState, q: float,
                     clamp: bool = True) -> float:
    """Closed-form stationarity power for user k at the current iterate,
    clamped to [floor, group cap] unless clamp=False."""
    prob = _Problem(ch, partition, config)
    pos = int(np.flatnonzero(prob.order == k)[0])
    pl = [float(x) for x in p.p[prob.order]]
    laml = [float(x) for x in multipliers.lam[prob.order]]
    s1 = 0.0
    for j in range(prob.n_users):
        s1 += float(prob.binv[j]) * pl[j]
    status, p_new, p_un, _code, _s1 = _core_py.update_user(
        pos, pl, s1, q, multipliers.omega_c, multipliers.omega_e, laml,
        [float(x) for x in prob.binv], [float(x) for x in prob.nk],
        [int(x) for x in prob.grp], prob.gamma_rm, prob.edt,
        prob.floor_noise, prob.b_c, prob.b_e)
    if status == _core_py.NONPOS_DENOM:
        raise NonpositiveDenominator(
            f"user {k}: q + omega + chi + cross-term <= 0")
    return p_new if clamp else p_un


def inner_power_solve(ch: ChannelRealization, partition: UserPartition,
                      config: SystemConfig, multipliers: MultiplierState,
                      q: float, p0: PowerAllocation | None = None) -> PowerAllocation:
    """Gauss-Seidel fixed point of the closed-form updates over all users."""
    prob = _Problem(ch, partition, config)
    if p0 is None:
        ps = _initial_powers(prob, _check_feasible(prob))
    else:
        ps = p0.p[prob.order].astype(float)
    pl = [float(x) for x in ps]
    laml = [float(x) for x in multipliers.lam[prob.order]]
    clampl = [0] * prob.n_users
    status, _sweeps = _core_py.inner_solve(
        pl, laml, clampl, q, multipliers.omega_c, multipliers.omega_e,
        [float(x) for x in prob.binv], [float(x) for x in prob.nk],
        [int(x) for x in prob.grp], prob.gamma_rm, prob.edt,
        prob.floor_noise, prob.b_c, prob.b_e, INNER_TOL,
        config.max_inner_iters)
    if status == _core_py.NONPOS_DENOM:
        raise NonpositiveDenominator("q + omega + chi + cross-term <= 0")
    if status != _core_py.OK:
        raise NoConvergence(_STATUS_MSG[status])
    return PowerAllocation(prob.unsort(np.array(pl)))


def update_multipliers(state: MultiplierState, p: PowerAllocation,
                       ch: ChannelRealization, partition: UserPartition,
                       config: SystemConfig, scale: float = 1.0) -> MultiplierState:
    """One projected subgradient step on the dual variables; `scale`
    multiplies the configured step sizes (the solver passes 1/sqrt(n))."""
    prob = _Problem(ch, partition, config)
    pl = [float(x) for x in p.p[prob.order]]
    laml = [float(x) for x in state.lam[prob.order]]
    w1, w2, wl = config.step_sizes()
    wc, we = _core_py.subgradient_step(
        pl, laml, state.omega_c, state.omega_e, scale, w1, w2, wl,
        [float(x) for x in prob.binv], [float(x) for x in prob.nk],
        [int(x) for x in prob.grp], prob.gamma_rm, prob.b_c, prob.b_e)
    return MultiplierState(wc, we, prob.unsort(np.array(laml)))


def kkt_residual(p: PowerAllocation, ch: ChannelRealization,
                 partition: UserPartition, config: SystemConfig,
                 multipliers: MultiplierState, q: float) -> np.ndarray:
    """Per-user stationarity residual at p (natural order); zero exactly at
    an unclamped fixed point of the power updates."""
    if np.any(p.p <= 0.0):
        raise ValueError("residuals need strictly positive powers")
    prob = _Problem(ch, partition, config)
    res = _residuals_sorted(p.p[prob.order], prob, multipliers.omega_c,
                            multipliers.omega_e, multipliers.lam[prob.order], q)
    return prob.unsort(res)


def lagrangian(p: PowerAllocation, ch: ChannelRealization,
               partition: UserPartition, config: SystemConfig,
               multipliers: MultiplierState, q: float) -> float:
    """Dual objective whose (negated) power gradient is `kkt_residual`:
    sum of rate lower bounds minus q-weighted total power minus the linear
    multiplier prices."""
    prob = _Problem(ch, partition, config)
    ps = p.p[prob.order].astype(float)
    lam_s = multipliers.lam[prob.order]
    lb = _lb_sum_sorted(ps, prob)
    chi = _chi_sorted(lam_s, multipliers.omega_c, multipliers.omega_e, prob)
    wg = np.where(prob.grp == 0, multipliers.omega_c, multipliers.omega_e)
    return (lb - q * (float(np.sum(ps)) + prob.mpc)
            - float(np.sum((wg + chi) * ps)))


def equal_power_baseline(config: SystemConfig) -> PowerAllocation:
    """Uniform split of the flexible transmission power."""
    return PowerAllocation(np.full(config.K, config.P / config.K))


# ---------------------------------------------------------------------------
# Main solve
# ---------------------------------------------------------------------------


def solve(ch: ChannelRealization, partition: UserPartition,
          config: SystemConfig, backend: str | None = None) -> SolveResult:
    """Run the full EE power allocation for one realization.

    Bisection brackets the parametric optimum: a level's allocation comes
    from the multiplier/power loop at q = (u+v)/2, and the sign of
    (lower-bound sum rate) - q * (total power) decides which bound moves.
    The returned allocation is repaired onto the constraint set; the
    certificate gap and max stationarity residual decide `converged`.
    """
    kern = get_backend(backend)
    if np.any(ch.h_norm2 <= ch.n_users):
        bad = int(np.argmax(ch.h_norm2 <= ch.n_users))
        raise DegenerateChannel(
            f"user {bad}: ||h||^2={ch.h_norm2[bad]:.6g} <= K={ch.n_users}")
    prob = _Problem(ch, partition, config)
    baseline = _check_feasible(prob)

    u = 0.0
    v = config.pa_efficiency / (config.noise_variance * LN2) * float(
        np.min(prob.beta * prob.h2))
    w1, w2, wl = config.step_sizes()

    p = _initial_powers(prob, baseline)
    lam = np.zeros(prob.n_users)
    clamped = np.zeros(prob.n_users, dtype=np.int8)
    wc = 0.0
    we = 0.0
    outer = 0
    total_inner = 0

    def level(q_value: float) -> tuple[np.ndarray, np.ndarray, float, float]:
        nonlocal wc, we, total_inner
        status, wc, we, sweeps, _backoffs = kern.run_level(
            q_value, p, lam, clamped, prob.binv, prob.nk, prob.grp, wc, we,
            prob.gamma_rm, prob.edt, prob.floor_noise, prob.b_c, prob.b_e,
            w1, w2, wl, config.max_multiplier_iters, INNER_TOL,
            config.max_inner_iters, _MAX_BACKOFF)
        total_inner += sweeps
        if status != _core_py.OK:
            raise NoConvergence(
                f"{_STATUS_MSG[status]} at q={q_value:.6g}")
        p_rep, changed = _repair(p.copy(), prob)
        codes = np.where(changed, np.int8(_core_py.CLAMP_BUDGET), clamped)
        p_ref, codes = _refine_sorted(p_rep, codes, prob)
        lb = _lb_sum_sorted(p_ref, prob)
        total_power = float(np.sum(p_ref)) + prob.mpc
        return p_ref, codes, lb, total_power

    while v - u >= config.bisect_tol and outer < config.max_outer_iters:
        outer += 1
        q = 0.5 * (u + v)
        _p_level, _codes, lb, total_power = level(q)
        if lb - q * total_power >= 0.0:
            u = q
        else:
            v = q

    if v - u >= config.bisect_tol:
        raise NoConvergence("outer bisection budget exhausted")

    q_final = 0.5 * (u + v)
    p_final, clamp_final, lb, total_power = level(q_final)
    certificate_gap = abs(lb - q_final * total_power)
    certificate_ok = certificate_gap <= config.bisect_tol * total_power

    residuals = _residuals_sorted(p_final, prob, wc, we, lam, q_final)
    free = clamp_final == _core_py.CLAMP_FREE
    res_max = float(np.max(np.abs(residuals[free]))) if np.any(free) else 0.0

    _rates, sum_rate, ee = _realistic_sorted(p_final, prob)
    return SolveResult(
        powers=PowerAllocation(prob.unsort(p_final)),
        q=q_final,
        multipliers=MultiplierState(wc, we, prob.unsort(lam)),
        outer_iters=outer,
        inner_iters=total_inner,
        converged=bool(certificate_ok and res_max < STATIONARITY_TOL),
        kkt_residual_max=res_max,
        ee=ee,
        sum_rate=sum_rate,
        lb_sum=lb,
        certificate_gap=certificate_gap,
        bisection_width=v - u,
        clamped=prob.unsort(clamp_final),
    )


def solve_backend_name(backend: str | None = None) -> str:
    """Name of the kernel `solve` would use ("compiled" or "python")."""
    return backend_name(get_backend(backend))


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------


def _grid_ee(powers: np.ndarray, prob: _Problem) -> np.ndarray:
    """Realistic EE for a (K, N) block of power vectors in solver order."""
    weighted = powers * (prob.rf2 * prob.h2)[:, None]
    interference = np.sum(weighted, axis=0) - weighted
    gamma = prob.beta[:, None] * weighted * prob.tau / (
        prob.tau * prob.beta[:, None] * interference + prob.floor_noise)
    rates = prob.frac * np.log2(1.0 + gamma)
    return np.sum(rates, axis=0) / (np.sum(powers, axis=0) + prob.mpc)


def grid_oracle(ch: ChannelRealization, partition: UserPartition,
                config: SystemConfig, grid_points: int = 200) -> tuple[PowerAllocation, float]:
    """Exhaustive grid search of the realistic EE over the feasible box.

    Only supports K <= 3 (the grid is exponential in K).  Returns the best
    feasible grid point and its EE; raises Infeasible when no grid point
    satisfies the constraints.
    """
    if ch.n_users > 3:
        raise ValueError("grid oracle is limited to K <= 3")
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    prob = _Problem(ch, partition, config)
    _check_feasible(prob)
    budgets = (prob.b_c, prob.b_e)

    best_ee = -math.inf
    best_p: np.ndarray | None = None

    def descend(pos: int, prefix: list[float], spent_c: float, spent_e: float):
        nonlocal best_ee, best_p
        floor = prob.gamma_rm * (sum(prefix) + prob.nk[pos])
        spent = spent_c if prob.grp[pos] == 0 else spent_e
        cap = budgets[prob.grp[pos]] - spent
        if cap < floor:
            return
        grid = np.linspace(floor, cap, grid_points)
        if pos == prob.n_users - 1:
            block = np.empty((prob.n_users, grid_points))
            for i, val in enumerate(prefix):
                block[i, :] = val
            block[-1, :] = grid
            ee = _grid_ee(block, prob)
            i_best = int(np.argmax(ee))
            if ee[i_best] > best_ee:
                best_ee = float(ee[i_best])
                best_p = block[:, i_best].copy()
            return
        for val in grid:
            if prob.grp[pos] == 0:
                descend(pos + 1, prefix + [float(val)], spent_c + float(val), spent_e)
            else:
                descend(pos + 1, prefix + [float(val)], spent_c, spent_e + float(val))

    descend(0, [], 0.0, 0.0)
    if best_p is None:
        raise Infeasible("no feasible grid point under the group budgets")
    return PowerAllocation(prob.unsort(best_p)), best_ee
