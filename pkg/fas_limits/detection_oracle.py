"""
Detection Oracle

Exhaustive projection detector on tiny configurations. Produces empirical
frequencies of (k_s, k_c) detection-error patterns for comparison with the
closed-form Chernoff bound.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .bounds import bound_terms
from .channel import draw_fas_responses, select_strongest
from .exceptions import EnumerationBudgetError
from .models import ChannelParams, PowerAssignment, SystemConfig
from .numerics import RandomStream, complex_gaussian

logger = logging.getLogger(__name__)

ORACLE_EXPERIMENT_ID = 4
MAX_CODEWORDS = 64
MAX_USERS = 3


@dataclass
class OracleTable:
    """Empirical error-pattern counts, rows indexed by k_s and columns by k_c."""
    counts: np.ndarray
    trials: int

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.trials

    @property
    def stderr(self) -> np.ndarray:
        f = self.frequencies
        return np.sqrt(f * (1.0 - f) / self.trials)


def _check_budget(cfg: SystemConfig) -> None:
    codewords = 2 ** cfg.bits_c + 2 ** cfg.bits_s
    if codewords > MAX_CODEWORDS:
        raise EnumerationBudgetError(f"{codewords} codewords exceed the enumeration budget of {MAX_CODEWORDS}")
    if cfg.total_users > MAX_USERS:
        raise EnumerationBudgetError(f"{cfg.total_users} users exceed the enumeration budget of {MAX_USERS}")


def candidate_sets(cfg: SystemConfig) -> np.ndarray:
    """
    Every candidate active set as rows of codeword indices.

    CU codewords occupy indices [0, 2^A_c); SU codewords follow.
    """
    n_c = 2 ** cfg.bits_c
    cu = list(itertools.combinations(range(n_c), cfg.users_c))
    su = list(itertools.combinations(range(n_c, n_c + 2 ** cfg.bits_s), cfg.users_s))
    return np.array([c + s for c in cu for s in su], dtype=np.int64).reshape(len(cu) * len(su), cfg.total_users)


def _projection_energy(y: np.ndarray, codebook: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """tr(Y A_d^H (A_d A_d^H)^-1 A_d Y^H) for every candidate set A_d."""
    cross = y @ codebook.conj().T                      # M x codewords
    gram = codebook @ codebook.conj().T                # codewords x codewords
    g_sets = gram[candidates[:, :, None], candidates[:, None, :]]
    x_sets = np.transpose(cross[:, candidates], (1, 0, 2))  # candidates x M x users
    solved = np.linalg.solve(g_sets, np.transpose(x_sets.conj(), (0, 2, 1)))
    return np.real(np.einsum("cmi,cim->c", x_sets, solved))


def _run_trial(
    cfg: SystemConfig,
    channel_params: ChannelParams,
    powers: PowerAssignment,
    candidates: np.ndarray,
    stream: RandomStream,
) -> Tuple[int, int]:
    rng = stream.generator()
    n_c, n_s = 2 ** cfg.bits_c, 2 ** cfg.bits_s

    codebook = np.vstack([
        complex_gaussian(rng, powers.p_c, size=(n_c, cfg.blocklength)),
        complex_gaussian(rng, powers.p_s, size=(n_s, cfg.blocklength)),
    ])
    true_c = np.sort(rng.choice(n_c, size=cfg.users_c, replace=False))
    true_s = np.sort(rng.choice(n_s, size=cfg.users_s, replace=False)) + n_c
    active = np.concatenate([true_c, true_s])

    responses = draw_fas_responses(channel_params, len(active), rng)
    channels = select_strongest(responses, cfg.antennas)        # users x M
    noise = complex_gaussian(rng, cfg.noise_var, size=(cfg.antennas, cfg.blocklength))
    y = channels.T @ codebook[active] + noise

    detected = candidates[int(np.argmax(_projection_energy(y, codebook, candidates)))]
    k_c = len(set(true_c.tolist()) - set(detected[:cfg.users_c].tolist()))
    k_s = len(set(true_s.tolist()) - set(detected[cfg.users_c:].tolist()))
    return k_s, k_c


def detection_oracle(
    tiny_cfg: SystemConfig,
    powers: PowerAssignment,
    trials: int,
    stream: RandomStream,
    channel_params: Optional[ChannelParams] = None,
    threads: int = 1,
) -> OracleTable:
    """
    Empirical (k_s, k_c) error frequencies of the exhaustive projection detector.

    Each trial draws Gaussian codebooks, distinct active messages, FAS
    channels with optimal port selection and noise, then picks the candidate
    set with the largest projected energy.

    Args:
        tiny_cfg: Configuration small enough to enumerate
        powers: Transmit variances p_c', p_s'
        trials: Number of trials
        stream: Base stream; trial t uses stream.derive(ORACLE_EXPERIMENT_ID, t)
        channel_params: FAS channel parameters (defaults to tiny_cfg ports/aperture)
        threads: Worker threads

    Returns:
        OracleTable

    Raises:
        EnumerationBudgetError: If the configuration is too large
    """
    _check_budget(tiny_cfg)
    if channel_params is None:
        channel_params = ChannelParams(num_ports=tiny_cfg.ports, aperture=tiny_cfg.aperture)
    candidates = candidate_sets(tiny_cfg)
    logger.info(f"Detection oracle: {len(candidates)} candidate sets, {trials} trials, {threads} threads")

    def trial(index: int) -> Tuple[int, int]:
        return _run_trial(tiny_cfg, channel_params, powers, candidates, stream.derive(ORACLE_EXPERIMENT_ID, index))

    counts = np.zeros((tiny_cfg.users_s + 1, tiny_cfg.users_c + 1), dtype=np.int64)
    with ThreadPoolExecutor(max_workers=threads) as executor:
        for k_s, k_c in executor.map(trial, range(trials)):
            counts[k_s, k_c] += 1

    return OracleTable(counts=counts, trials=trials)


def oracle_violations(
    table: OracleTable,
    analytic: np.ndarray,
    sigmas: float = 3.0,
) -> np.ndarray:
    """
    Mask of entries where the empirical frequency exceeds the clamped analytic
    bound by more than `sigmas` standard errors, checked only where the bound is below 1.
    """
    clamped = np.minimum(analytic, 1.0)
    return (clamped < 1.0) & (table.frequencies > clamped + sigmas * table.stderr)


def analytic_table(cfg: SystemConfig, powers: PowerAssignment) -> np.ndarray:
    """Clamped closed-form bound on the same (k_s, k_c) grid as the oracle."""
    return bound_terms(cfg, powers).p_clamped
