"""
Numerics for FAS Limits

Chi-square distribution helpers, log-domain binomials, the Hermitian
largest-eigenvalue solver and the seeded randomness contract shared by
every other module.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc, gammaincc, gammaln

from .exceptions import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

# Complex matrices are numpy complex128 arrays in C (row-major) order
ComplexMatrix = np.ndarray

UINT64_MAX = 2 ** 64 - 1
EXACT_BINOMIAL_LIMIT = 20
LN2 = math.log(2.0)


# ============================================================================
# Chi-square distribution
# ============================================================================

def _check_chi2_args(x: float, k: int) -> None:
    if k < 1:
        raise DomainError(f"chi-square degrees of freedom must be >= 1, got {k}")
    if x < 0:
        raise DomainError(f"chi-square argument must be >= 0, got {x}")


def chi2_cdf(x: float, k: int) -> float:
    """
    Chi-square CDF, the regularized lower incomplete gamma P(k/2, x/2).

    Args:
        x: Nonnegative evaluation point
        k: Degrees of freedom (>= 1)

    Returns:
        Probability in [0, 1]

    Raises:
        DomainError: If x < 0 or k < 1
    """
    _check_chi2_args(x, k)
    return float(gammainc(0.5 * k, 0.5 * x))


def chi2_logcdf(x: float, k: int) -> float:
    """
    Natural log of the chi-square CDF.

    Uses log1p of the upper tail when the CDF is close to one so that
    products of many CDF factors can be accumulated without underflow.
    """
    _check_chi2_args(x, k)
    if x == 0:
        return -math.inf
    upper = float(gammaincc(0.5 * k, 0.5 * x))
    if upper < 0.5:
        return math.log1p(-upper)
    return math.log(float(gammainc(0.5 * k, 0.5 * x)))


def chi2_inv(p: float, k: int, polish_steps: int = 3) -> float:
    """
    Inverse chi-square CDF.

    Brackets the root on [0, k + 20*sqrt(2k)] (widened if needed), solves with
    Brent's method and finishes with a few Newton steps on the CDF.

    Args:
        p: Probability in the open interval (0, 1)
        k: Degrees of freedom (>= 1)
        polish_steps: Newton iterations applied after the bracketed solve

    Returns:
        x >= 0 with chi2_cdf(x, k) == p

    Raises:
        DomainError: If p is outside (0, 1) or k < 1
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"chi2_inv probability must lie in (0, 1), got {p}")
    if k < 1:
        raise DomainError(f"chi-square degrees of freedom must be >= 1, got {k}")

    upper = k + 20.0 * math.sqrt(2.0 * k)
    while chi2_cdf(upper, k) < p:
        upper *= 2.0

    x = brentq(lambda t: chi2_cdf(t, k) - p, 0.0, upper, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)

    half_k = 0.5 * k
    for _ in range(polish_steps):
        if x <= 0:
            break
        log_pdf = (half_k - 1.0) * math.log(x) - 0.5 * x - half_k * LN2 - gammaln(half_k)
        pdf = math.exp(log_pdf)
        if pdf == 0.0:
            break
        step = (chi2_cdf(x, k) - p) / pdf
        if not math.isfinite(step) or x - step <= 0:
            break
        x -= step

    return float(x)


# ============================================================================
# Linear algebra
# ============================================================================

def largest_eigenvalue(
    a: ComplexMatrix,
    max_iter: int = 100_000,
    tol: float = 1e-10,
) -> float:
    """
    Largest eigenvalue of a Hermitian positive-semidefinite matrix.

    Power iteration from a fixed start vector. Converged when the eigen-residual
    ||A v - lambda v|| falls below tol * lambda.

    Args:
        a: Square Hermitian PSD matrix
        max_iter: Iteration cap
        tol: Relative residual tolerance

    Returns:
        The largest eigenvalue gamma_max

    Raises:
        DomainError: If the matrix is not square or not Hermitian
        ConvergenceError: If the cap is reached; carries the last iterate
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"largest_eigenvalue needs a square matrix, got shape {a.shape}")

    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if a.size and np.max(np.abs(a - a.conj().T)) > 1e-10 * scale:
        raise DomainError("largest_eigenvalue needs a Hermitian matrix")

    n = a.shape[0]
    if n == 0:
        return 0.0

    start_rng = np.random.default_rng(0)
    v = start_rng.standard_normal(n) + 1j * start_rng.standard_normal(n)
    v /= np.linalg.norm(v)

    eigenvalue = 0.0
    for iteration in range(1, max_iter + 1):
        w = a @ v
        eigenvalue = float(np.real(np.vdot(v, w)))
        w_norm = np.linalg.norm(w)
        if w_norm == 0.0:
            return 0.0
        residual = np.linalg.norm(w - eigenvalue * v)
        if residual <= tol * abs(eigenvalue):
            logger.debug(f"Power iteration converged after {iteration} steps: {eigenvalue:.6g}")
            return eigenvalue
        v = w / w_norm

    raise ConvergenceError(
        f"Power iteration did not converge in {max_iter} iterations",
        last_iterate=(eigenvalue, v),
        iterations=max_iter,
    )


# ============================================================================
# Combinatorics
# ============================================================================

def log_binomial(n: int, k: int, bits: bool = False) -> float:
    """
    Natural log of the binomial coefficient C(n, k).

    Args:
        n: Population size, or a bit-width b standing for 2**b when bits=True
        k: Number chosen
        bits: Interpret n as a bit-width and stay in the log domain

    Returns:
        ln C(n, k)

    Raises:
        DomainError: If k < 0 or k exceeds the population
    """
    if k < 0 or n < 0:
        raise DomainError(f"log_binomial needs nonnegative arguments, got n={n}, k={k}")

    if bits:
        if n < 63 and k > 2 ** n:
            raise DomainError(f"cannot choose {k} from 2**{n}")
        if n <= 4:
            return log_binomial(2 ** n, k)
        inv_size = 2.0 ** (-n)
        total = sum(math.log1p(-i * inv_size) for i in range(k))
        return k * n * LN2 + total - math.lgamma(k + 1)

    if k > n:
        raise DomainError(f"cannot choose {k} from {n}")
    if n <= EXACT_BINOMIAL_LIMIT:
        return math.log(math.comb(n, k))
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def log_binomial_row(n: int, bits: bool = False, k_max: Optional[int] = None) -> np.ndarray:
    """
    Vector of ln C(n, k) for k = 0..k_max.

    Same conventions as log_binomial; used by the bound grids.
    """
    if k_max is None:
        if bits:
            raise DomainError("k_max is required when n is a bit-width")
        k_max = n
    k = np.arange(k_max + 1, dtype=float)

    if bits:
        if n < 63 and k_max > 2 ** n:
            raise DomainError(f"cannot choose {k_max} from 2**{n}")
        if n <= 4:
            return log_binomial_row(2 ** n, k_max=k_max)
        falling = np.concatenate(([0.0], np.cumsum(np.log1p(-k[:-1] * 2.0 ** (-n)))))
        return k * n * LN2 + falling - gammaln(k + 1)

    if k_max > n:
        raise DomainError(f"cannot choose {k_max} from {n}")
    if n <= EXACT_BINOMIAL_LIMIT:
        return np.array([math.log(math.comb(n, int(i))) for i in range(k_max + 1)])
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


# ============================================================================
# Randomness
# ============================================================================

@dataclass(frozen=True)
class RandomStream:
    """
    Seeded, splittable source of random numbers.

    The same (seed, stream_id) produces the same sequence everywhere. Streams
    with different stream_id values are independent.
    """
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= value <= UINT64_MAX:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {value}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(seq))

    def derive(self, experiment_id: int, trial_index: int) -> "RandomStream":
        """Per-trial stream: stream_id = experiment_id * 2**32 + trial_index."""
        stream_id = ((experiment_id << 32) + trial_index) & UINT64_MAX
        return RandomStream(seed=self.seed, stream_id=stream_id)


RandomSource = Union[RandomStream, np.random.Generator]


def as_generator(source: RandomSource) -> np.random.Generator:
    """Accept a RandomStream (start of its sequence) or a live generator."""
    if isinstance(source, RandomStream):
        return source.generator()
    return source


def complex_gaussian(
    source: RandomSource,
    variance: float,
    size: Optional[Union[int, Tuple[int, ...]]] = None,
) -> Union[complex, np.ndarray]:
    """
    Circularly-symmetric complex Gaussian CN(0, variance).

    Real and imaginary parts are independent with variance/2 each.

    Args:
        source: RandomStream or numpy Generator
        variance: Total variance (>= 0)
        size: Output shape, None for a scalar

    Returns:
        Complex scalar or complex128 array

    Raises:
        DomainError: If variance is negative
    """
    if variance < 0:
        raise DomainError(f"variance must be >= 0, got {variance}")
    rng = as_generator(source)
    scale = math.sqrt(0.5 * variance)
    if size is None:
        re, im = rng.standard_normal(2)
        return complex(scale * re, scale * im)
    draws = rng.standard_normal(size + (2,) if isinstance(size, tuple) else (size, 2))
    return scale * (draws[..., 0] + 1j * draws[..., 1])
