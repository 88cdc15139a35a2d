"""Random generation of the physical model.

User placement, large-scale fading (path loss x log-normal shadowing),
estimated small-scale channels, per-user RF mismatch gains and the
center/edge user partition.  All draws are pure functions of
(config, generator state); `draw_realization` fixes the draw order so a
seed determines the realization bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import InfeasibleEstimation

__all__ = [
    "ChannelRealization",
    "UserPartition",
    "draw_user_positions",
    "large_scale_fading",
    "draw_estimated_channel",
    "draw_rf_gains",
    "partition_users",
    "draw_realization",
]


@dataclass(frozen=True)
class ChannelRealization:
    """One random draw of the downlink geometry and channels.

    distances are in meters; beta[k] = nu * shadow_k / (d_k/ref)^eps;
    h_hat columns are the per-user estimated channels (M x K); u_rx/u_tx
    are the complex RF chain gains.  est_err_var is copied from the config
    because the estimation error enters every rate expression only through
    its variance.  Arrays are frozen (non-writeable) after construction.
    """

    distances: np.ndarray      # (K,) meters
    shadow_db: np.ndarray      # (K,) shadowing samples, dB
    beta: np.ndarray           # (K,) large-scale gains
    h_hat: np.ndarray          # (M, K) complex estimated channels
    u_rx: np.ndarray           # (K,) complex receive RF gains
    u_tx: np.ndarray           # (K,) complex transmit RF gains
    est_err_var: float

    def __post_init__(self):
        for arr in (self.distances, self.shadow_db, self.beta,
                    self.h_hat, self.u_rx, self.u_tx):
            arr.setflags(write=False)

    @property
    def n_users(self) -> int:
        return self.beta.shape[0]

    @property
    def h_norm2(self) -> np.ndarray:
        """Squared Euclidean norms of the estimated channel columns, (K,)."""
        return np.sum(np.abs(self.h_hat) ** 2, axis=0)

    @property
    def rf_gain2(self) -> np.ndarray:
        """|u_rx|^2 / |u_tx|^2 per user, the net RF power gain, (K,)."""
        return np.abs(self.u_rx) ** 2 / np.abs(self.u_tx) ** 2


@dataclass(frozen=True)
class UserPartition:
    """Disjoint cover of {0..K-1} into cell-center and cell-edge users,
    with the fraction of the power budget each group receives."""

    center_set: np.ndarray   # sorted user indices with beta >= threshold
    edge_set: np.ndarray     # complement
    kappa_c: float
    kappa_e: float

    def __post_init__(self):
        self.center_set.setflags(write=False)
        self.edge_set.setflags(write=False)

    def group_of(self, k: int) -> int:
        """0 for cell-center, 1 for cell-edge."""
        return 0 if k in set(self.center_set.tolist()) else 1

    def group_mask(self, n_users: int) -> np.ndarray:
        """(K,) int array of group ids."""
        mask = np.ones(n_users, dtype=np.int8)
        mask[self.center_set] = 0
        return mask


def draw_user_positions(config: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Distances of K users drawn uniformly by area over the annulus
    [min_distance, cell_radius], in meters."""
    r0sq = config.min_distance ** 2
    r1sq = config.cell_radius ** 2
    u = rng.uniform(0.0, 1.0, config.K)
    return np.sqrt(r0sq + u * (r1sq - r0sq))


def large_scale_fading(d: float, config: SystemConfig, rng: np.random.Generator) -> float:
    """One large-scale gain nu * zeta / (d/ref)^eps with a fresh log-normal
    shadowing draw (10*log10(zeta) ~ N(0, shadow_std_db^2))."""
    zeta_db = rng.normal(0.0, config.shadow_std_db)
    return _beta_from_shadow(d, zeta_db, config)


def _beta_from_shadow(d, zeta_db, config: SystemConfig):
    zeta = 10.0 ** (np.asarray(zeta_db) / 10.0)
    dn = config.normalized_distance(np.asarray(d))
    return config.nu * zeta / dn ** config.pathloss_exp


def estimate_variances(config: SystemConfig, distances: np.ndarray) -> np.ndarray:
    """Per-entry variance of the channel estimate for each user:
    (d/ref)^-eps - est_err_var.  Raises InfeasibleEstimation when any user
    would get a non-positive variance."""
    dn = config.normalized_distance(np.asarray(distances, dtype=float))
    var = dn ** (-config.pathloss_exp) - config.est_err_var
    if np.any(var <= 0.0):
        bad = int(np.argmax(var <= 0.0))
        raise InfeasibleEstimation(
            f"user {bad}: est_err_var={config.est_err_var} >= "
            f"(d/ref)^-eps={var[bad] + config.est_err_var:.6g}"
        )
    return var


def draw_estimated_channel(config: SystemConfig, distances: np.ndarray,
                           rng: np.random.Generator) -> np.ndarray:
    """(M, K) matrix of estimated channels; column k has i.i.d.
    circularly-symmetric complex Gaussian entries of variance
    (d_k/ref)^-eps - est_err_var."""
    var = estimate_variances(config, distances)
    h = np.empty((config.M, config.K), dtype=complex)
    for k in range(config.K):
        scale = np.sqrt(var[k] / 2.0)
        re = rng.standard_normal(config.M)
        im = rng.standard_normal(config.M)
        h[:, k] = scale * (re + 1j * im)
    return h


def draw_rf_gains(config: SystemConfig, rng: np.random.Generator):
    """(u_rx, u_tx): log-normal amplitudes (ln|u| ~ N(0, rf_var)) and
    uniform phases on [-rf_phase_max, rf_phase_max] for both sides."""
    def one_side(var: float) -> np.ndarray:
        amp = np.exp(rng.normal(0.0, np.sqrt(var), config.K))
        phase = rng.uniform(-config.rf_phase_max, config.rf_phase_max, config.K)
        return amp * np.exp(1j * phase)

    u_rx = one_side(config.rf_var_rx)
    u_tx = one_side(config.rf_var_tx)
    return u_rx, u_tx


def partition_users(beta: np.ndarray, config: SystemConfig) -> UserPartition:
    """Split users by large-scale gain against the configured threshold
    (median gain when unset) and budget the groups by their share of the
    total gain; kappa_c + kappa_e = 1 holds exactly by construction."""
    beta = np.asarray(beta, dtype=float)
    thresh = config.group_threshold
    if thresh is None:
        thresh = float(np.median(beta))
    center = np.flatnonzero(beta >= thresh)
    edge = np.flatnonzero(beta < thresh)
    total = float(np.sum(beta))
    kappa_c = float(np.sum(beta[center])) / total
    if center.size == 0:
        kappa_c = 0.0
    if edge.size == 0:
        kappa_c = 1.0
    return UserPartition(center_set=center, edge_set=edge,
                         kappa_c=kappa_c, kappa_e=1.0 - kappa_c)


def draw_realization(config: SystemConfig, rng: np.random.Generator) -> ChannelRealization:
    """Compose one full realization with a fixed draw order:
    positions, then per-user shadowing, then channel estimates, then RF
    gains.  Raises InfeasibleEstimation for rejected geometry."""
    distances = draw_user_positions(config, rng)
    shadow_db = np.array([rng.normal(0.0, config.shadow_std_db)
                          for _ in range(config.K)])
    beta = _beta_from_shadow(distances, shadow_db, config)
    h_hat = draw_estimated_channel(config, distances, rng)
    u_rx, u_tx = draw_rf_gains(config, rng)
    return ChannelRealization(
        distances=distances, shadow_db=shadow_db, beta=beta,
        h_hat=h_hat, u_rx=u_rx, u_tx=u_tx, est_err_var=config.est_err_var,
    )
