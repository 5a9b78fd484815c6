"""
Achievability Bounds

Evaluates the PUPE achievability terms (power-constraint violation,
collision, missed detection), the per-error-pattern detection bound, the
MSEAOA bound, and searches the minimum energy-per-user meeting both targets.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .exceptions import DomainError, InfeasibleError
from .models import BoundBreakdown, PowerAssignment, SystemConfig
from .numerics import chi2_inv, chi2_logcdf, log_binomial, log_binomial_row

logger = logging.getLogger(__name__)

# Bisection bracket for p', in units of sigma^2 / L
POWER_BRACKET = (1e-8, 1e4)
RESOLUTION_DB = 1e-3


@dataclass
class BoundTerms:
    """Full (k_s, k_c) grid of detection-bound terms, rows indexed by k_s."""
    k_s: np.ndarray
    k_c: np.ndarray
    log_p: np.ndarray
    sigma_t_sq: np.ndarray

    @property
    def p_clamped(self) -> np.ndarray:
        return np.exp(np.minimum(self.log_p, 0.0))

    @property
    def p_unclamped(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_p)


# ============================================================================
# Building blocks
# ============================================================================

def _sigma_t_sq(cfg: SystemConfig, powers: PowerAssignment, k_s, k_c):
    """Averaged interference variance of an error pattern (k_s SU and k_c CU errors)."""
    if cfg.gain_scope == "both":
        return cfg.gain * (k_c * powers.p_c + k_s * powers.p_s)
    return cfg.gain * k_c * powers.p_c + k_s * powers.p_s


def _log_codeword_choices(bits: int, k_max: int) -> np.ndarray:
    """ln C(2**bits, k) for k = 0..k_max; -inf where k exceeds the codebook."""
    if bits < 63 and k_max > 2 ** bits:
        row = np.full(k_max + 1, -np.inf)
        row[: 2 ** bits + 1] = log_binomial_row(bits, bits=True, k_max=2 ** bits)
        return row
    return log_binomial_row(bits, bits=True, k_max=k_max)


def _log_error_counts(users: int, bits: int) -> np.ndarray:
    """ln C(users, k) + ln C(2**bits, k) for k = 0..users."""
    return log_binomial_row(users) + _log_codeword_choices(bits, users)


def _detection_exponent(cfg: SystemConfig, sigma_t_sq) -> np.ndarray:
    return cfg.blocklength * cfg.antennas * np.log1p(0.25 * np.asarray(sigma_t_sq) / cfg.noise_var)


def bound_terms(cfg: SystemConfig, powers: PowerAssignment) -> BoundTerms:
    """
    Evaluate the log detection bound on the whole (k_s, k_c) grid.

    Args:
        cfg: System configuration
        powers: Power assignment

    Returns:
        BoundTerms with unclamped log-bounds and interference variances
    """
    k_s = np.arange(cfg.users_s + 1, dtype=float)
    k_c = np.arange(cfg.users_c + 1, dtype=float)
    ks_grid, kc_grid = np.meshgrid(k_s, k_c, indexing="ij")

    sigma_t_sq = _sigma_t_sq(cfg, powers, ks_grid, kc_grid)
    log_counts = _log_error_counts(cfg.users_s, cfg.bits_s)[:, None] + _log_error_counts(cfg.users_c, cfg.bits_c)[None, :]
    log_p = log_counts - _detection_exponent(cfg, sigma_t_sq)
    log_p[0, 0] = 0.0

    return BoundTerms(k_s=k_s, k_c=k_c, log_p=log_p, sigma_t_sq=sigma_t_sq)


# ============================================================================
# PUPE terms
# ============================================================================

def eps_cons(cfg: SystemConfig, powers: PowerAssignment) -> float:
    """
    Probability that some user's codeword exceeds its power constraint.

    1 - F(2L*p_bar_s/p_s', 2L)^|users_s| * F(2L*p_bar_c/p_c', 2L)^|users_c|,
    accumulated as log-CDFs.
    """
    dof = 2 * cfg.blocklength
    log_total = 0.0
    for users, p_bar, p_prime in (
        (cfg.users_s, powers.p_bar_s, powers.p_s),
        (cfg.users_c, powers.p_bar_c, powers.p_c),
    ):
        if users == 0 or p_prime == 0:
            continue
        log_total += users * chi2_logcdf(dof * p_bar / p_prime, dof)
    return float(-math.expm1(log_total))


def backoff_for_budget(cfg: SystemConfig, budget: float) -> float:
    """
    Smallest shared backoff p_bar/p' with eps_cons <= budget.

    Each of the U users must stay within its constraint with probability
    (1 - budget)^(1/U), which fixes the chi-square quantile.
    """
    if not 0.0 < budget < 1.0:
        raise DomainError(f"budget must lie in (0, 1), got {budget}")
    users = cfg.total_users
    if users == 0:
        return 1.0
    dof = 2 * cfg.blocklength
    per_user = math.exp(math.log1p(-budget) / users)
    kappa = chi2_inv(per_user, dof) / dof
    return max(kappa, 1.0)


def _class_collision_sum(users: int, bits: int) -> float:
    """sum_{i>=2} i * C(users, i) / 2^(bits*(i-1))."""
    if users < 2:
        return 0.0
    i = np.arange(2, users + 1, dtype=float)
    log_terms = np.log(i) + log_binomial_row(users)[2:] - bits * math.log(2.0) * (i - 1)
    peak = np.max(log_terms)
    return float(math.exp(peak) * np.sum(np.exp(log_terms - peak)))


def eps_coll(cfg: SystemConfig) -> float:
    """Collision-derived error bound, normalized by the total number of users."""
    users = cfg.total_users
    if users == 0:
        return 0.0
    total = _class_collision_sum(cfg.users_s, cfg.bits_s) + _class_collision_sum(cfg.users_c, cfg.bits_c)
    return total / users


def p_ks_kc(
    cfg: SystemConfig,
    powers: PowerAssignment,
    k_s: int,
    k_c: int,
    clamp: bool = True,
) -> float:
    """
    Chernoff bound on detecting with k_s SU and k_c CU errors.

    exp(L_s + L_c - L*M*ln(1 + 0.25*sigma_t^2/sigma^2)), clamped at 1.

    Raises:
        DomainError: If the error counts exceed the user counts
    """
    if not 0 <= k_c <= cfg.users_c or not 0 <= k_s <= cfg.users_s:
        raise DomainError(f"error counts (k_s={k_s}, k_c={k_c}) exceed users ({cfg.users_s}, {cfg.users_c})")
    if k_s == 0 and k_c == 0:
        return 1.0

    log_count = 0.0
    for users, bits, k in ((cfg.users_s, cfg.bits_s, k_s), (cfg.users_c, cfg.bits_c, k_c)):
        if bits < 63 and k > 2 ** bits:
            return 0.0
        log_count += log_binomial(users, k) + log_binomial(bits, k, bits=True)

    sigma_t_sq = _sigma_t_sq(cfg, powers, k_s, k_c)
    log_p = log_count - float(_detection_exponent(cfg, sigma_t_sq))
    if clamp:
        log_p = min(log_p, 0.0)
    return math.exp(log_p) if log_p < 700 else math.inf


def eps_md(cfg: SystemConfig, powers: PowerAssignment, terms: Optional[BoundTerms] = None) -> float:
    """
    Missed-detection bound: clamped detection bounds weighted by (k_c + k_s)/users.

    The grid is evaluated in full; terms can rise again for large error
    counts once the combinatorial factor outgrows the exponent.
    """
    users = cfg.total_users
    if users == 0:
        return 0.0
    terms = terms or bound_terms(cfg, powers)
    weights = (terms.k_s[:, None] + terms.k_c[None, :]) / users
    return float(np.sum(weights * terms.p_clamped))


def _sigma_z_sq(cfg: SystemConfig, powers: PowerAssignment, sigma_t_sq) -> np.ndarray:
    """(sigma^2 + sigma_t^2) / (L*p_s'), codeword energy replaced by its mean."""
    energy = cfg.blocklength * powers.p_s
    with np.errstate(divide="ignore"):
        return (cfg.noise_var + np.asarray(sigma_t_sq)) / energy if energy > 0 else np.full_like(sigma_t_sq, np.inf)


def mseaoa_term_grid(cfg: SystemConfig, powers: PowerAssignment, terms: Optional[BoundTerms] = None) -> np.ndarray:
    """Per-(k_s, k_c) contribution to the MSEAOA bound."""
    if cfg.lambda_bar_sq <= 0:
        raise DomainError("lambda_bar_sq must be positive for the MSEAOA bound")
    terms = terms or bound_terms(cfg, powers)
    sigma_z_sq = _sigma_z_sq(cfg, powers, terms.sigma_t_sq)
    upper = 16.0 * sigma_z_sq ** 2 * cfg.gamma_max / (cfg.lambda_bar_sq * cfg.antennas ** 4)
    return terms.p_clamped * upper


def mseaoa_bound(cfg: SystemConfig, powers: PowerAssignment, terms: Optional[BoundTerms] = None) -> float:
    """MSEAOA bound: sum of clamped detection bounds times the per-pattern MSEAOA upper bound."""
    return float(np.sum(mseaoa_term_grid(cfg, powers, terms)))


def energy_per_user(cfg: SystemConfig, powers: PowerAssignment) -> float:
    """
    Energy-per-user E/N0 in dB.

    Raises:
        DomainError: If there are no users
    """
    users = cfg.total_users
    if users == 0:
        raise DomainError("energy-per-user needs at least one user")
    energy = (cfg.users_c * powers.p_bar_c + cfg.users_s * powers.p_bar_s) * cfg.blocklength
    return 10.0 * math.log10(energy / (cfg.noise_var * users))


def pupe_bound(cfg: SystemConfig, powers: PowerAssignment) -> BoundBreakdown:
    """
    Assemble PUPE <= eps_cons + eps_coll + eps_md with the MSEAOA bound and E/N0.

    Returns:
        BoundBreakdown
    """
    terms = bound_terms(cfg, powers)
    cons = eps_cons(cfg, powers)
    coll = eps_coll(cfg)
    md = eps_md(cfg, powers, terms)
    mse = mseaoa_bound(cfg, powers, terms) if cfg.lambda_bar_sq > 0 else 0.0
    e_n0 = energy_per_user(cfg, powers) if cfg.total_users > 0 else -math.inf

    return BoundBreakdown(
        eps_cons=cons,
        eps_coll=coll,
        eps_md=md,
        pupe=cons + coll + md,
        mseaoa=mse,
        e_n0_db=e_n0,
    )


# ============================================================================
# Energy frontier
# ============================================================================

def _failing_constraint(breakdown: BoundBreakdown, pupe_target: float, mseaoa_target: float) -> Optional[str]:
    if breakdown.pupe > pupe_target:
        return "pupe"
    if breakdown.mseaoa > mseaoa_target:
        return "mseaoa"
    return None


def min_energy_achievable(
    cfg: SystemConfig,
    pupe_target: float,
    mseaoa_target: float,
    resolution_db: float = RESOLUTION_DB,
) -> Tuple[PowerAssignment, BoundBreakdown]:
    """
    Minimum energy-per-user meeting both targets.

    Equal transmit power p' for both classes; the shared backoff spends
    cons_budget_fraction of the PUPE target on eps_cons. p' is bisected on a
    log scale over [1e-8, 1e4] * sigma^2/L.

    Args:
        cfg: System configuration
        pupe_target: PUPE target in (0, 1)
        mseaoa_target: MSEAOA target in (0, 1)
        resolution_db: Bracket width at which bisection stops

    Returns:
        (PowerAssignment, BoundBreakdown) at the frontier point

    Raises:
        InfeasibleError: If the collision term alone exceeds the target or
            the power bracket is exhausted
    """
    for name, target in (("pupe_target", pupe_target), ("mseaoa_target", mseaoa_target)):
        if not 0.0 < target < 1.0:
            raise DomainError(f"{name} must lie in (0, 1), got {target}")

    coll = eps_coll(cfg)
    if coll >= pupe_target:
        raise InfeasibleError(
            f"collision bound {coll:.4g} is not below the PUPE target {pupe_target}",
            binding_constraint="collision",
        )

    backoff = backoff_for_budget(cfg, cfg.cons_budget_fraction * pupe_target)
    unit = cfg.noise_var / cfg.blocklength

    def evaluate(p_prime: float) -> Tuple[PowerAssignment, BoundBreakdown, Optional[str]]:
        powers = PowerAssignment.from_transmit_power(p_prime, backoff)
        breakdown = pupe_bound(cfg, powers)
        return powers, breakdown, _failing_constraint(breakdown, pupe_target, mseaoa_target)

    lo, hi = POWER_BRACKET[0] * unit, POWER_BRACKET[1] * unit
    hi_powers, hi_breakdown, hi_fail = evaluate(hi)
    if hi_fail is not None:
        raise InfeasibleError(
            f"targets not met at the top of the power bracket ({hi_breakdown.e_n0_db:.2f} dB): {hi_fail} binds",
            binding_constraint=hi_fail,
        )

    lo_powers, lo_breakdown, lo_fail = evaluate(lo)
    if lo_fail is None:
        logger.warning("Targets already met at the bottom of the power bracket")
        return lo_powers, lo_breakdown.model_copy(update={"binding_constraint": "power_bracket"})

    while 10.0 * math.log10(hi / lo) > resolution_db:
        mid = math.sqrt(lo * hi)
        mid_powers, mid_breakdown, mid_fail = evaluate(mid)
        if mid_fail is None:
            hi, hi_powers, hi_breakdown = mid, mid_powers, mid_breakdown
        else:
            lo, lo_fail = mid, mid_fail

    logger.info(
        f"Achievable frontier: users={cfg.total_users}, M={cfg.antennas}, "
        f"E/N0={hi_breakdown.e_n0_db:.3f} dB, binding={lo_fail}"
    )
    return hi_powers, hi_breakdown.model_copy(update={"binding_constraint": lo_fail})
