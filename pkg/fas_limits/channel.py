"""
Fluid Antenna Channel

Generates fluid-antenna (LOS + NLOS) and ULA channel responses, selects ports
and estimates the averaged channel gain used by the bounds.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from .exceptions import DomainError
from .models import ChannelParams
from .mra import PortPattern
from .numerics import RandomSource, as_generator, complex_gaussian

logger = logging.getLogger(__name__)

# Rounding applied to moduli before ranking so equal-modulus ports tie exactly
MODULUS_DECIMALS = 12


@dataclass
class ChannelRealization:
    """Complex response over every fluid-antenna port for one user."""
    responses: np.ndarray
    los_aoa: float
    los_phase: float

    @property
    def num_ports(self) -> int:
        return len(self.responses)


def _check_aoa(theta: float) -> None:
    if not 0.0 < theta < math.pi:
        raise DomainError(f"AOA must lie in (0, pi), got {theta}")


def _port_phase_step(params: ChannelParams) -> float:
    """2*pi*W/(N_f - 1): phase advance per port index per unit cos(theta)."""
    return 2.0 * math.pi * params.aperture / (params.num_ports - 1)


def _draw_responses(
    params: ChannelParams,
    los_aoas: np.ndarray,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray]:
    """Batch of responses (users x ports) for the given LOS AOAs."""
    n_users = len(los_aoas)
    ports = np.arange(params.num_ports, dtype=float)
    step = _port_phase_step(params)

    los_phases = rng.uniform(0.0, 2.0 * math.pi, size=n_users)
    los = math.sqrt(params.los_power) * np.exp(1j * los_phases)[:, None] \
        * np.exp(-1j * step * np.outer(np.cos(los_aoas), ports))

    n_scat = params.num_scatterers
    if n_scat == 0 or params.nlos_power == 0.0:
        return los, los_phases

    scatter_aoas = rng.uniform(0.0, math.pi, size=(n_users, n_scat))
    gains = complex_gaussian(rng, params.nlos_power / n_scat, size=(n_users, n_scat))
    # users x scatterers x ports
    steering = np.exp(-1j * step * np.cos(scatter_aoas)[:, :, None] * ports[None, None, :])
    nlos = np.einsum("us,usp->up", gains, steering)
    return los + nlos, los_phases


def gen_fas_channel(params: ChannelParams, theta_0: float, stream: RandomSource) -> ChannelRealization:
    """
    One fluid-antenna channel realization.

    Args:
        params: Channel parameters
        theta_0: LOS angle of arrival in (0, pi)
        stream: RandomStream or generator

    Returns:
        ChannelRealization with one response per port

    Raises:
        DomainError: If theta_0 is outside (0, pi)
    """
    _check_aoa(theta_0)
    rng = as_generator(stream)
    responses, phases = _draw_responses(params, np.array([theta_0]), rng)
    return ChannelRealization(responses=responses[0], los_aoa=theta_0, los_phase=float(phases[0]))


def draw_fas_responses(params: ChannelParams, n_users: int, stream: RandomSource) -> np.ndarray:
    """
    Batch of responses (n_users x N_f) with LOS AOAs uniform on (0, pi).

    Used by the Monte Carlo loops.
    """
    rng = as_generator(stream)
    los_aoas = rng.uniform(0.0, math.pi, size=n_users)
    responses, _ = _draw_responses(params, los_aoas, rng)
    return responses


def draw_los_responses(m: int, n_users: int, stream: RandomSource) -> np.ndarray:
    """LOS-only ULA responses (n_users x m): unit modulus with random phase and AOA."""
    rng = as_generator(stream)
    aoas = rng.uniform(0.0, math.pi, size=n_users)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=n_users)
    elements = np.arange(m, dtype=float)
    return np.exp(1j * phases)[:, None] * np.exp(-1j * math.pi * np.outer(np.cos(aoas), elements))


def select_ports_optimal(real: ChannelRealization, m: int) -> Tuple[PortPattern, np.ndarray]:
    """
    Select the m ports with the largest response moduli.

    Ties go to the lower port index.

    Args:
        real: Channel realization
        m: Number of ports to activate (1 <= m <= N_f)

    Returns:
        (selected ports ascending, responses at those ports)
    """
    if not 1 <= m <= real.num_ports:
        raise DomainError(f"cannot select {m} of {real.num_ports} ports")

    chosen = strongest_ports(real.responses, m)
    return PortPattern(tuple(int(i) for i in chosen)), real.responses[chosen]


def select_ports_fixed(
    real: ChannelRealization,
    pattern: Union[PortPattern, Sequence[int]],
) -> np.ndarray:
    """
    Gather the responses at a fixed port pattern.

    Raises:
        DomainError: If the pattern is empty or indexes past the last port
    """
    if not isinstance(pattern, PortPattern):
        pattern = PortPattern(tuple(pattern))
    if pattern.indices[-1] >= real.num_ports:
        raise DomainError(f"pattern {pattern} exceeds {real.num_ports} ports")
    return real.responses[list(pattern.indices)]


def gen_ula_steering(m: int, theta: float) -> np.ndarray:
    """Half-wavelength ULA steering vector, entry i = exp(-j*pi*i*cos(theta))."""
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    _check_aoa(theta)
    return np.exp(-1j * math.pi * np.arange(m) * math.cos(theta))


def optimal_selection_power(responses: np.ndarray, m: int) -> np.ndarray:
    """Per-row ||selected||^2 under optimal selection of m ports."""
    power = np.abs(responses) ** 2
    return np.sort(power, axis=-1)[..., -m:].sum(axis=-1)


def strongest_ports(responses: np.ndarray, m: int) -> np.ndarray:
    """
    Indices of the m largest moduli along the last axis, ascending.

    Moduli are rounded to MODULUS_DECIMALS before ranking; ties go to the
    lower port index.
    """
    moduli = np.round(np.abs(responses), MODULUS_DECIMALS)
    order = np.argsort(-moduli, axis=-1, kind="stable")[..., :m]
    return np.sort(order, axis=-1)


def select_strongest(responses: np.ndarray, m: int) -> np.ndarray:
    """Per-row responses at the m strongest ports (rows x m), in port order."""
    return np.take_along_axis(responses, strongest_ports(responses, m), axis=-1)


def avg_channel_gain(
    params: ChannelParams,
    m: int,
    trials: int,
    stream: RandomSource,
) -> Tuple[float, float]:
    """
    Averaged channel gain (1/M) E{||g||^2} under optimal port selection.

    Args:
        params: Channel parameters
        m: Number of selected ports
        trials: Monte Carlo realizations (>= 1)
        stream: RandomStream or generator

    Returns:
        (mean gain, standard error of the mean)
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    if not 1 <= m <= params.num_ports:
        raise DomainError(f"cannot select {m} of {params.num_ports} ports")

    responses = draw_fas_responses(params, trials, stream)
    per_trial = optimal_selection_power(responses, m) / m
    mean = float(per_trial.mean())
    stderr = float(per_trial.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0

    logger.info(f"Averaged channel gain over {trials} trials (m={m}, N_f={params.num_ports}): {mean:.4f} +/- {stderr:.4f}")
    return mean, stderr
