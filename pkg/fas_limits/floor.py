"""
Optimistic Performance Floor

Collision-only PUPE, the single-user CRLB on MSEAOA and the Monte Carlo
sum-rate constraint, combined into a minimum-E/N0 floor.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bounds import POWER_BRACKET, RESOLUTION_DB, eps_coll
from .channel import draw_fas_responses, draw_los_responses, select_strongest
from .exceptions import DomainError, InfeasibleError, NumericalError
from .models import ChannelParams, FloorConfig, PowerAssignment, SystemConfig
from .numerics import RandomStream, log_binomial

logger = logging.getLogger(__name__)

CAPACITY_EXPERIMENT_ID = 3
CAPACITY_MARGIN_STDERR = 2.0


@dataclass
class CapacityDraws:
    """Per-trial received covariances G_c G_c^H and G_s G_s^H (trials x M x M)."""
    cu: np.ndarray
    su: np.ndarray

    @property
    def trials(self) -> int:
        return self.cu.shape[0]


@dataclass
class FloorDiagnostics:
    """Floor operating point and the quantities that fixed it."""
    p_bar: float
    binding_constraint: str
    required_rate: float
    capacity_mean: float
    capacity_stderr: float
    crlb: float
    pupe_floor: float


# ============================================================================
# Collision and CRLB terms
# ============================================================================

def _class_floor(users: int, bits: int) -> float:
    if users < 2:
        return 0.0
    log_term = log_binomial(users, 2) - bits * math.log(2.0) + (users - 2) * math.log1p(-(2.0 ** -bits))
    return math.exp(log_term)


def pupe_floor(cfg: SystemConfig) -> float:
    """
    Collision-only PUPE: sum over classes of C(n, 2)/2^B * ((2^B - 1)/2^B)^(n - 2).
    """
    return _class_floor(cfg.users_c, cfg.bits_c) + _class_floor(cfg.users_s, cfg.bits_s)


def crlb_mseaoa(cfg: SystemConfig, p_bar_s: float) -> float:
    """
    Single-user CRLB on MSEAOA: 0.5*sigma^2 / (pi^2 * L * p_bar_s * sum_{i<M} i^2).

    Raises:
        DomainError: If M < 2 or p_bar_s is not positive
    """
    m = cfg.antennas
    if m < 2:
        raise DomainError(f"CRLB needs at least two antennas, got {m}")
    if p_bar_s <= 0:
        raise DomainError(f"p_bar_s must be positive, got {p_bar_s}")
    squares = (m - 1) * m * (2 * m - 1) / 6.0
    return 0.5 * cfg.noise_var / (math.pi ** 2 * cfg.blocklength * p_bar_s * squares)


def crlb_power_threshold(cfg: SystemConfig, mseaoa_target: float) -> float:
    """Smallest p_bar_s with crlb_mseaoa <= mseaoa_target."""
    if cfg.users_s == 0 or math.isinf(mseaoa_target):
        return 0.0
    return crlb_mseaoa(cfg, 1.0) / mseaoa_target


def collision_floor_report(
    users_grid: Sequence[int],
    bits_grid: Sequence[int],
) -> List[Dict[str, object]]:
    """
    Compare the collision floor with the collision bound on single-class configs.

    Returns:
        One record per (users, bits) with both values and an ordering flag
    """
    records = []
    for users in users_grid:
        for bits in bits_grid:
            cfg = SystemConfig(bits_c=1, bits_s=bits, users_c=0, users_s=users, pattern=[], antennas=1)
            floor_value = pupe_floor(cfg)
            bound_value = eps_coll(cfg)
            records.append({
                "users": users,
                "bits": bits,
                "pupe_floor": floor_value,
                "eps_coll": bound_value,
                "floor_exceeds_bound": floor_value > bound_value * (1 + 1e-12),
            })
    exceeded = sum(r["floor_exceeds_bound"] for r in records)
    if exceeded:
        logger.warning(f"Collision floor exceeds the collision bound on {exceeded} of {len(records)} configs")
    return records


# ============================================================================
# Capacity constraint
# ============================================================================

def _trial_covariances(
    cfg: SystemConfig,
    channel_params: Optional[ChannelParams],
    stream: RandomStream,
) -> Tuple[np.ndarray, np.ndarray]:
    rng = stream.generator()
    users = cfg.total_users
    if channel_params is None:
        h = draw_los_responses(cfg.antennas, users, rng)
    else:
        h = select_strongest(draw_fas_responses(channel_params, users, rng), cfg.antennas)
    h_c, h_s = h[:cfg.users_c], h[cfg.users_c:]
    return h_c.T @ h_c.conj(), h_s.T @ h_s.conj()


def draw_capacity_channels(
    cfg: SystemConfig,
    trials: int,
    stream: RandomStream,
    channel_params: Optional[ChannelParams] = None,
    threads: int = 1,
) -> CapacityDraws:
    """
    Draw per-trial channel covariances for the sum-rate constraint.

    FAS channels with optimal selection of M ports when channel_params is
    given, LOS-only ULA channels otherwise. Trial t uses
    stream.derive(CAPACITY_EXPERIMENT_ID, t).
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")

    def trial(index: int) -> Tuple[np.ndarray, np.ndarray]:
        return _trial_covariances(cfg, channel_params, stream.derive(CAPACITY_EXPERIMENT_ID, index))

    with ThreadPoolExecutor(max_workers=threads) as executor:
        results = list(executor.map(trial, range(trials)))
    return CapacityDraws(
        cu=np.stack([r[0] for r in results]),
        su=np.stack([r[1] for r in results]),
    )


def capacity_from_draws(draws: CapacityDraws, p_bar_c: float, p_bar_s: float, noise_var: float) -> Tuple[float, float]:
    """
    Mean and standard error of log2 det(I + (p_bar_c R_c + p_bar_s R_s)/sigma^2).

    Raises:
        NumericalError: If a matrix fails its Cholesky factorization
    """
    m = draws.cu.shape[-1]
    mats = np.eye(m)[None, :, :] + (p_bar_c * draws.cu + p_bar_s * draws.su) / noise_var
    mats = 0.5 * (mats + np.conj(np.transpose(mats, (0, 2, 1))))
    try:
        chol = np.linalg.cholesky(mats)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"capacity matrix is not positive definite: {e}") from e

    per_trial = 2.0 * np.sum(np.log(np.real(np.diagonal(chol, axis1=1, axis2=2))), axis=1) / math.log(2.0)
    trials = len(per_trial)
    stderr = float(per_trial.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return float(per_trial.mean()), stderr


def capacity_mc(
    cfg: SystemConfig,
    powers: PowerAssignment,
    trials: int,
    stream: RandomStream,
    channel_params: Optional[ChannelParams] = None,
    threads: int = 1,
) -> Tuple[float, float]:
    """
    Averaged sum-rate E{log2 det(I_M + G Psi G^H / sigma^2)} in bits per channel use.

    Args:
        cfg: System configuration
        powers: Power constraints p_bar_c, p_bar_s (Psi diagonal)
        trials: Monte Carlo trials
        stream: Base stream
        channel_params: FAS parameters; None selects the LOS-only ULA baseline
        threads: Worker threads

    Returns:
        (mean, standard error)
    """
    draws = draw_capacity_channels(cfg, trials, stream, channel_params, threads)
    return capacity_from_draws(draws, powers.p_bar_c, powers.p_bar_s, cfg.noise_var)


# ============================================================================
# Floor search
# ============================================================================

def min_energy_floor(
    cfg: FloorConfig,
    pupe_target: float,
    mseaoa_target: float,
    stream: RandomStream,
    channel_params: Optional[ChannelParams] = None,
    threads: int = 1,
    resolution_db: float = RESOLUTION_DB,
) -> Tuple[float, FloorDiagnostics]:
    """
    Minimum E/N0 of the optimistic floor.

    The shared power p_bar must satisfy the sum-rate constraint
    B_T/L <= mean - 2*stderr (bisection on common channel draws) and the
    CRLB threshold; the larger requirement binds.

    Args:
        cfg: Floor configuration
        pupe_target: PUPE target
        mseaoa_target: MSEAOA target (math.inf drops the CRLB constraint)
        stream: Base stream for the capacity draws
        channel_params: FAS parameters; None selects the LOS-only baseline
        threads: Worker threads
        resolution_db: Bisection resolution

    Returns:
        (E/N0 in dB, FloorDiagnostics)

    Raises:
        InfeasibleError: If the collision floor exceeds the target or the
            rate cannot be met inside the power bracket
    """
    floor_pupe = pupe_floor(cfg)
    if floor_pupe > pupe_target:
        raise InfeasibleError(
            f"collision floor {floor_pupe:.4g} exceeds the PUPE target {pupe_target}",
            binding_constraint="collision",
        )

    rate = cfg.total_bits / cfg.blocklength
    draws = draw_capacity_channels(cfg, cfg.capacity_trials, stream, channel_params, threads)

    def conservative_capacity(p_bar: float) -> Tuple[float, float, float]:
        mean, stderr = capacity_from_draws(draws, p_bar, p_bar, cfg.noise_var)
        return mean - CAPACITY_MARGIN_STDERR * stderr, mean, stderr

    unit = cfg.noise_var / cfg.blocklength
    lo, hi = POWER_BRACKET[0] * unit, POWER_BRACKET[1] * unit
    if conservative_capacity(hi)[0] < rate:
        raise InfeasibleError(
            f"sum-rate {rate:.4g} bits/use not reachable inside the power bracket",
            binding_constraint="capacity",
        )
    if conservative_capacity(lo)[0] >= rate:
        hi = lo
    while hi > lo and 10.0 * math.log10(hi / lo) > resolution_db:
        mid = math.sqrt(lo * hi)
        if conservative_capacity(mid)[0] >= rate:
            hi = mid
        else:
            lo = mid
    p_rate = hi

    p_crlb = crlb_power_threshold(cfg, mseaoa_target)
    if p_crlb > p_rate:
        p_bar, binding = p_crlb, "crlb"
    else:
        p_bar, binding = p_rate, "capacity"

    _, mean, stderr = conservative_capacity(p_bar)
    crlb = crlb_mseaoa(cfg, p_bar) if cfg.antennas >= 2 else math.nan
    e_n0_db = 10.0 * math.log10(cfg.blocklength * p_bar / cfg.noise_var)

    logger.info(f"Performance floor: users={cfg.total_users}, E/N0={e_n0_db:.3f} dB, binding={binding}")
    return e_n0_db, FloorDiagnostics(
        p_bar=p_bar,
        binding_constraint=binding,
        required_rate=rate,
        capacity_mean=mean,
        capacity_stderr=stderr,
        crlb=crlb,
        pupe_floor=floor_pupe,
    )
