"""
Covariance-Domain Sensing

Virtual (difference co-array) steering vectors, the sensing codebook,
expectation and sampled virtual observations, the closed-form Lasso and
MSEAOA bounds, and the log-ratio AOA estimators.
"""

import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .exceptions import DomainError
from .mra import PortPattern, ula_pattern
from .numerics import RandomSource, as_generator, complex_gaussian, largest_eigenvalue

logger = logging.getLogger(__name__)

# Published largest Gram eigenvalue for pattern [0,1,3] on a 90-point grid
PUBLISHED_GAMMA_MAX = 1.5471e3

EstimatorMode = Literal["ULA", "FAS"]


@dataclass
class SensingCodebook:
    """Virtual steering vectors (M^2 x N) over a uniform cos(theta) grid."""
    matrix: np.ndarray
    grid: np.ndarray
    gamma_max: float
    pattern: PortPattern
    w_aperture: float
    n_f: int

    @property
    def m(self) -> int:
        return self.pattern.m

    @property
    def n_samples(self) -> int:
        return len(self.grid)

    def column(self, index: int) -> np.ndarray:
        return self.matrix[:, index]


@dataclass
class VirtualObservation:
    """Vectorized covariance observation v (length M^2) and its noise level."""
    v: np.ndarray
    sigma_z_sq: float
    true_index: Optional[int] = None


def _phase_step(w_aperture: float, n_f: int) -> float:
    if n_f < 2:
        raise DomainError(f"n_f must be >= 2, got {n_f}")
    return 2.0 * math.pi * w_aperture / (n_f - 1)


def _check_bound(pattern: PortPattern, n_f: int) -> None:
    if pattern.indices[-1] >= n_f:
        raise DomainError(f"pattern {pattern} does not fit in {n_f} ports")


def steering_fas(pattern: PortPattern, w_aperture: float, n_f: int, cos_theta: float) -> np.ndarray:
    """Physical steering vector g with entries exp(-j*2*pi*N_i*W*cos(theta)/(N_f-1))."""
    step = _phase_step(w_aperture, n_f)
    return np.exp(-1j * step * pattern.as_array() * cos_theta)


def _lag_matrix(pattern: PortPattern) -> np.ndarray:
    """Flat lags: entry i*M + l holds N_l - N_i."""
    idx = pattern.as_array()
    return (idx[None, :] - idx[:, None]).ravel()


def steering_virtual(pattern: PortPattern, w_aperture: float, n_f: int, cos_theta: float) -> np.ndarray:
    """
    Virtual array steering vector conj(g) kron g.

    Entries are evaluated from the lags directly, so self-pair positions are
    exactly 1.

    Args:
        pattern: Activated ports
        w_aperture: Aperture W in wavelengths
        n_f: Number of ports
        cos_theta: cos(theta) in [-1, 1]

    Returns:
        Complex vector of length M^2, equal to vec(g g^H)
    """
    _check_bound(pattern, n_f)
    step = _phase_step(w_aperture, n_f)
    return np.exp(-1j * step * _lag_matrix(pattern) * cos_theta)


def build_codebook(
    pattern: PortPattern,
    w_aperture: float,
    n_f: int,
    n_samples: int,
) -> SensingCodebook:
    """
    Sensing codebook over a uniform cos(theta) grid.

    The grid spans [-1 + d, 1 - d] with d = 1/n_samples. gamma_max is the
    largest eigenvalue of A^H A.

    Args:
        pattern: Activated ports
        w_aperture: Aperture W in wavelengths
        n_f: Number of ports
        n_samples: Grid size N (>= 2)

    Returns:
        SensingCodebook
    """
    if n_samples < 2:
        raise DomainError(f"n_samples must be >= 2, got {n_samples}")
    _check_bound(pattern, n_f)

    guard = 1.0 / n_samples
    grid = np.linspace(-1.0 + guard, 1.0 - guard, n_samples)
    step = _phase_step(w_aperture, n_f)
    matrix = np.exp(-1j * step * np.outer(_lag_matrix(pattern), grid))

    gram = matrix.conj().T @ matrix
    gram = 0.5 * (gram + gram.conj().T)
    gamma_max = largest_eigenvalue(gram)

    logger.info(f"Built sensing codebook: pattern={pattern}, N={n_samples}, gamma_max={gamma_max:.6g}")
    return SensingCodebook(
        matrix=matrix,
        grid=grid,
        gamma_max=gamma_max,
        pattern=pattern,
        w_aperture=w_aperture,
        n_f=n_f,
    )


def build_ula_codebook(m: int, n_samples: int) -> SensingCodebook:
    """Codebook of the half-wavelength ULA baseline (W = (M-1)/2, N_f = M)."""
    if m < 2:
        raise DomainError(f"ULA codebook needs m >= 2, got {m}")
    return build_codebook(ula_pattern(m), (m - 1) / 2.0, m, n_samples)


def _identity_vec(m: int) -> np.ndarray:
    return np.eye(m, dtype=np.complex128).ravel()


def observe_expectation(codebook: SensingCodebook, true_index: int, sigma_z_sq: float) -> VirtualObservation:
    """
    Expected virtual observation: column(true_index) + vec(sigma_z^2 * I).

    The noise term has exactly M nonzero entries.
    """
    if not 0 <= true_index < codebook.n_samples:
        raise DomainError(f"true_index {true_index} outside grid of {codebook.n_samples}")
    if sigma_z_sq < 0:
        raise DomainError(f"sigma_z_sq must be >= 0, got {sigma_z_sq}")
    v = codebook.column(true_index) + sigma_z_sq * _identity_vec(codebook.m)
    return VirtualObservation(v=v, sigma_z_sq=sigma_z_sq, true_index=true_index)


def observe_sampled(
    codebook: SensingCodebook,
    cos_theta: float,
    sigma_z_sq: float,
    stream: RandomSource,
) -> VirtualObservation:
    """
    Virtual observation from one noisy physical snapshot.

    Draws z ~ CN(0, sigma_z^2 I), forms g_hat = g + z and returns vec(g_hat g_hat^H).
    """
    if sigma_z_sq < 0:
        raise DomainError(f"sigma_z_sq must be >= 0, got {sigma_z_sq}")
    g = steering_fas(codebook.pattern, codebook.w_aperture, codebook.n_f, cos_theta)
    if sigma_z_sq == 0:
        v = steering_virtual(codebook.pattern, codebook.w_aperture, codebook.n_f, cos_theta)
        return VirtualObservation(v=v, sigma_z_sq=0.0)
    g_hat = g + complex_gaussian(as_generator(stream), sigma_z_sq, size=codebook.m)
    return VirtualObservation(v=np.kron(g_hat.conj(), g_hat), sigma_z_sq=sigma_z_sq)


# ============================================================================
# Closed-form bounds
# ============================================================================

def lasso_error_bound(m: int, sigma_z_sq: float) -> float:
    """1-sparse recovery guarantee ||beta - beta_hat||_2 <= 4*sigma_z^2/M."""
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    return 4.0 * sigma_z_sq / m


def linf_correlation(codebook: SensingCodebook, sigma_z_sq: float) -> float:
    """max_n |a_n^H n_z| / M for the covariance noise n_z = vec(sigma_z^2 I)."""
    n_z = sigma_z_sq * _identity_vec(codebook.m)
    return float(np.max(np.abs(codebook.matrix.conj().T @ n_z)) / codebook.m)


def mseaoa_upper(sigma_z_sq: float, gamma_max: float, lambda_bar_sq: float, m: int) -> float:
    """
    MSEAOA upper bound 16*sigma_z^4*gamma_max / (lambda_bar^2 * M^4).

    Raises:
        DomainError: If lambda_bar_sq is not positive or m < 1
    """
    if lambda_bar_sq <= 0:
        raise DomainError(f"lambda_bar_sq must be positive, got {lambda_bar_sq}")
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    return 16.0 * sigma_z_sq ** 2 * gamma_max / (lambda_bar_sq * m ** 4)


# ============================================================================
# AOA estimators
# ============================================================================

def _logratio_divisor(mode: EstimatorMode, m: int, w_aperture: Optional[float]) -> float:
    if mode == "ULA":
        return math.pi * (m - 1)
    if mode == "FAS":
        if w_aperture is None:
            raise DomainError("FAS log-ratio estimate needs the aperture")
        return 2.0 * math.pi * w_aperture
    raise DomainError(f"unknown estimator mode {mode!r}")


def aoa_estimate_logratio(
    g_hat: np.ndarray,
    mode: EstimatorMode,
    pattern: Optional[PortPattern] = None,
    w_aperture: Optional[float] = None,
    n_f: Optional[int] = None,
    resolve_branch: bool = True,
) -> float:
    """
    Estimate cos(theta) from the product of g_hat with its reversal.

    Forms p = g_hat^T reverse(g_hat) and returns Re(log(p/M) / (-j c)) with
    c = pi*(M-1) for a ULA or 2*pi*W for a FAS pattern. The principal log
    only identifies cos(theta) while c*|cos(theta)| < pi; with resolve_branch
    the 2*pi branch whose steering vector best matches g_hat is used instead.

    Args:
        g_hat: Observed physical response, length M
        mode: "ULA" or "FAS"
        pattern: FAS port pattern (FAS mode)
        w_aperture: FAS aperture (FAS mode)
        n_f: FAS port count (FAS mode)
        resolve_branch: Pick the best-matching branch instead of the principal one

    Returns:
        Estimate of cos(theta)

    Raises:
        DomainError: If the product is zero
    """
    g_hat = np.asarray(g_hat, dtype=np.complex128)
    m = len(g_hat)
    if m < 2:
        raise DomainError("log-ratio estimate needs at least two elements")
    product = complex(g_hat @ g_hat[::-1])
    if product == 0:
        raise DomainError("product g^T g^R is zero; AOA is not identifiable")

    divisor = _logratio_divisor(mode, m, w_aperture)
    phase = math.atan2(product.imag, product.real)
    principal = -phase / divisor
    if not resolve_branch:
        return principal

    if mode == "ULA":
        positions = np.arange(m, dtype=float)
        step = math.pi
    else:
        if pattern is None or n_f is None:
            raise DomainError("FAS branch resolution needs the pattern and port count")
        positions = pattern.as_array()
        step = _phase_step(w_aperture, n_f)

    period = 2.0 * math.pi / divisor
    k_lo = math.floor((-1.0 - principal) / period) - 1
    k_hi = math.ceil((1.0 - principal) / period) + 1
    best, best_score = principal, -1.0
    for k in range(k_lo, k_hi + 1):
        candidate = principal + k * period
        if abs(candidate) > 1.0 + 1e-9:
            continue
        score = abs(np.vdot(np.exp(-1j * step * positions * candidate), g_hat))
        if score > best_score + 1e-9 * m:
            best, best_score = candidate, score
    return float(best)


def aoa_estimate_cs(estimate, codebook: SensingCodebook) -> float:
    """Grid value of the largest-magnitude coefficient of a sparse estimate."""
    if len(estimate.support) == 0:
        raise DomainError("sparse estimate has an empty support")
    support = np.asarray(estimate.support)
    best = support[np.argmax(np.abs(estimate.beta_hat[support]))]
    return float(codebook.grid[best])
