"""
Sparse Recovery Solvers

Greedy sparse solvers (MP, CoSaMP, ROMP) used as Lasso proxies for AOA
recovery on the sensing codebook.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence

import numpy as np

from .exceptions import DomainError
from .sensing import SensingCodebook

logger = logging.getLogger(__name__)

# Relative residual / correlation level treated as zero
ZERO_TOL = 1e-13


@dataclass
class SparseEstimate:
    """Sparse coefficient estimate on the codebook grid."""
    beta_hat: np.ndarray
    support: List[int]
    residual_norm: float
    residual_history: List[float] = field(default_factory=list)
    iterations: int = 0

    def error_to(self, true_index: int, amplitude: complex = 1.0) -> float:
        """||beta - beta_hat||_2 for a 1-sparse beta with the given amplitude."""
        beta = np.zeros_like(self.beta_hat)
        beta[true_index] = amplitude
        return float(np.linalg.norm(beta - self.beta_hat))


def _check_inputs(codebook: SensingCodebook, v: np.ndarray, k: int, iters: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    if v.shape != (codebook.matrix.shape[0],):
        raise DomainError(f"observation length {v.shape} does not match codebook rows {codebook.matrix.shape[0]}")
    if k < 0:
        raise DomainError(f"sparsity must be >= 0, got {k}")
    if iters < 0:
        raise DomainError(f"iterations must be >= 0, got {iters}")
    return v


def _empty_estimate(codebook: SensingCodebook, v: np.ndarray) -> SparseEstimate:
    norm = float(np.linalg.norm(v))
    return SparseEstimate(
        beta_hat=np.zeros(codebook.n_samples, dtype=np.complex128),
        support=[],
        residual_norm=norm,
        residual_history=[norm],
    )


def _least_squares(matrix: np.ndarray, support: Sequence[int], v: np.ndarray) -> np.ndarray:
    coeffs, *_ = np.linalg.lstsq(matrix[:, list(support)], v, rcond=None)
    return coeffs


def _top_indices(values: np.ndarray, count: int) -> List[int]:
    """Indices of the largest entries, ties to the lower index."""
    order = np.lexsort((np.arange(len(values)), -values))
    return [int(i) for i in order[:count]]


def mp_solve(codebook: SensingCodebook, v: np.ndarray, k: int, iters: int) -> SparseEstimate:
    """
    Matching pursuit with at most k atoms.

    Each step moves the residual onto the best-correlated column; once k
    atoms are active only those columns are refined. The residual norm is
    nonincreasing.

    Args:
        codebook: Sensing codebook
        v: Virtual observation, length M^2
        k: Sparsity budget
        iters: Iteration cap

    Returns:
        SparseEstimate
    """
    v = _check_inputs(codebook, v, k, iters)
    if k == 0:
        return _empty_estimate(codebook, v)

    a = codebook.matrix
    col_energy = np.sum(np.abs(a) ** 2, axis=0)
    beta = np.zeros(codebook.n_samples, dtype=np.complex128)
    support: List[int] = []
    residual = v.copy()
    history = [float(np.linalg.norm(residual))]
    scale = max(history[0], 1.0)

    iteration = 0
    for iteration in range(1, iters + 1):
        corr = a.conj().T @ residual
        score = np.abs(corr) / np.sqrt(col_energy)
        if len(support) >= k:
            allowed = np.full(codebook.n_samples, -np.inf)
            allowed[support] = score[support]
            score = allowed
        best = _top_indices(score, 1)[0]
        if score[best] <= ZERO_TOL * scale:
            break

        coeff = corr[best] / col_energy[best]
        beta[best] += coeff
        residual = residual - coeff * a[:, best]
        if best not in support:
            support.append(best)
        history.append(float(np.linalg.norm(residual)))
        if history[-1] <= ZERO_TOL * scale:
            break

    logger.debug(f"MP finished after {iteration} iterations, residual {history[-1]:.3e}")
    return SparseEstimate(
        beta_hat=beta,
        support=sorted(support),
        residual_norm=history[-1],
        residual_history=history,
        iterations=iteration,
    )


def cosamp_solve(codebook: SensingCodebook, v: np.ndarray, k: int, iters: int) -> SparseEstimate:
    """
    Compressive sampling matching pursuit.

    Merges the 2k best-correlated columns with the current support, solves
    least squares on the merged set, prunes to the k largest coefficients
    and re-fits on the pruned support. An iterate is kept only if it lowers
    the residual.

    Args:
        codebook: Sensing codebook
        v: Virtual observation, length M^2
        k: Sparsity budget
        iters: Iteration cap

    Returns:
        SparseEstimate
    """
    v = _check_inputs(codebook, v, k, iters)
    if k == 0:
        return _empty_estimate(codebook, v)

    a = codebook.matrix
    beta = np.zeros(codebook.n_samples, dtype=np.complex128)
    support: List[int] = []
    residual = v.copy()
    history = [float(np.linalg.norm(residual))]
    scale = max(history[0], 1.0)

    iteration = 0
    for iteration in range(1, iters + 1):
        proxy = np.abs(a.conj().T @ residual)
        candidates = _top_indices(proxy, min(2 * k, codebook.n_samples))
        merged = sorted(set(candidates) | set(support))

        merged_coeffs = _least_squares(a, merged, v)
        keep = [merged[i] for i in _top_indices(np.abs(merged_coeffs), min(k, len(merged)))]
        keep.sort()
        coeffs = _least_squares(a, keep, v)
        new_residual = v - a[:, keep] @ coeffs
        new_norm = float(np.linalg.norm(new_residual))

        if new_norm >= history[-1] and support:
            break
        beta = np.zeros(codebook.n_samples, dtype=np.complex128)
        beta[keep] = coeffs
        support, residual = keep, new_residual
        history.append(new_norm)
        if new_norm <= ZERO_TOL * scale:
            break

    logger.debug(f"CoSaMP finished after {iteration} iterations, residual {history[-1]:.3e}")
    return SparseEstimate(
        beta_hat=beta,
        support=support,
        residual_norm=history[-1],
        residual_history=history,
        iterations=iteration,
    )


def _regularized_group(values: np.ndarray, indices: List[int]) -> List[int]:
    """
    Maximum-energy run of comparable magnitudes (within a factor of 2).

    indices are sorted by decreasing magnitude; every contiguous run whose
    largest and smallest values differ by at most 2x is a candidate.
    """
    best_group: List[int] = []
    best_energy = -1.0
    for start in range(len(indices)):
        top = values[indices[start]]
        energy = 0.0
        group = []
        for idx in indices[start:]:
            if top > 2.0 * values[idx]:
                break
            group.append(idx)
            energy += values[idx] ** 2
        if energy > best_energy:
            best_group, best_energy = group, energy
    return best_group


def romp_solve(codebook: SensingCodebook, v: np.ndarray, k: int, iters: int) -> SparseEstimate:
    """
    Regularized orthogonal matching pursuit.

    Each iteration takes the k best-correlated columns, keeps the
    maximum-energy group of comparable magnitudes, adds it to the support and
    re-fits by least squares. Stops once the support reaches k atoms; an
    overshoot is pruned to the k largest coefficients and re-fitted.

    Args:
        codebook: Sensing codebook
        v: Virtual observation, length M^2
        k: Sparsity budget
        iters: Iteration cap

    Returns:
        SparseEstimate
    """
    v = _check_inputs(codebook, v, k, iters)
    if k == 0:
        return _empty_estimate(codebook, v)

    a = codebook.matrix
    support: List[int] = []
    coeffs = np.zeros(0, dtype=np.complex128)
    residual = v.copy()
    history = [float(np.linalg.norm(residual))]
    scale = max(history[0], 1.0)

    iteration = 0
    for iteration in range(1, iters + 1):
        proxy = np.abs(a.conj().T @ residual)
        proxy[support] = 0.0
        ranked = [i for i in _top_indices(proxy, k) if proxy[i] > ZERO_TOL * scale]
        if not ranked:
            break
        group = _regularized_group(proxy, ranked)
        support = sorted(set(support) | set(group))
        coeffs = _least_squares(a, support, v)
        residual = v - a[:, support] @ coeffs
        history.append(float(np.linalg.norm(residual)))
        if len(support) >= k or history[-1] <= ZERO_TOL * scale:
            break

    if len(support) > k:
        keep = sorted(support[i] for i in _top_indices(np.abs(coeffs), k))
        coeffs = _least_squares(a, keep, v)
        support = keep
        history.append(float(np.linalg.norm(v - a[:, support] @ coeffs)))

    beta = np.zeros(codebook.n_samples, dtype=np.complex128)
    if support:
        beta[support] = coeffs

    logger.debug(f"ROMP finished after {iteration} iterations, residual {history[-1]:.3e}")
    return SparseEstimate(
        beta_hat=beta,
        support=support,
        residual_norm=history[-1],
        residual_history=history,
        iterations=iteration,
    )


SOLVERS: Dict[str, Callable[[SensingCodebook, np.ndarray, int, int], SparseEstimate]] = {
    "mp": mp_solve,
    "cosamp": cosamp_solve,
    "romp": romp_solve,
}
