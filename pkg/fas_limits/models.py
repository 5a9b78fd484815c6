"""
Data Models for FAS Limits

Pydantic models for channel parameters, system configuration, power
assignments, bound breakdowns and the experiment configuration document.
"""

import math
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


# ============================================================================
# Channel Models
# ============================================================================

class ChannelParams(BaseModel):
    """Fluid-antenna channel parameters (LOS + NLOS ray model)."""
    model_config = ConfigDict(frozen=True)

    rice_factor: float = Field(default=0.5, ge=0.0)
    num_scatterers: int = Field(default=3, ge=0)
    channel_strength: float = Field(default=1.0, gt=0.0)
    num_ports: int = Field(default=37, ge=2)
    aperture: float = Field(default=4.5, gt=0.0)

    @property
    def los_power(self) -> float:
        """K*Omega/(K+1); the whole strength when K is infinite."""
        if math.isinf(self.rice_factor):
            return self.channel_strength
        return self.rice_factor * self.channel_strength / (self.rice_factor + 1.0)

    @property
    def nlos_power(self) -> float:
        """Omega/(K+1)."""
        if math.isinf(self.rice_factor):
            return 0.0
        return self.channel_strength / (self.rice_factor + 1.0)

    @classmethod
    def for_pattern(
        cls,
        pattern_indices: List[int],
        rice_factor: float = 0.5,
        num_scatterers: int = 3,
        channel_strength: float = 1.0,
    ) -> "ChannelParams":
        """Ports N_f = max(pattern)+1 and aperture W = (M-1)/2 for an M-port pattern."""
        m = len(pattern_indices)
        return cls(
            rice_factor=rice_factor,
            num_scatterers=num_scatterers,
            channel_strength=channel_strength,
            num_ports=max(max(pattern_indices) + 1, 2),
            aperture=max((m - 1) / 2.0, 0.5),
        )


# ============================================================================
# System Models
# ============================================================================

class SystemConfig(BaseModel):
    """Scalar system parameters shared by the bound and floor computations."""
    model_config = ConfigDict(frozen=True)

    bits_c: int = Field(default=100, ge=1)
    bits_s: int = Field(default=100, ge=1)
    users_c: int = Field(default=50, ge=0)
    users_s: int = Field(default=50, ge=0)
    blocklength: int = Field(default=5000, ge=1)
    antennas: int = Field(default=10, ge=1)
    noise_var: float = Field(default=1.0, gt=0.0)
    pattern: List[int] = Field(default_factory=lambda: [0, 1, 3, 6, 13, 20, 27, 31, 35, 36])
    aperture: float = Field(default=4.5, gt=0.0)
    ports: int = Field(default=37, ge=2)
    gain: float = Field(default=1.0, ge=0.0)
    gamma_max: float = Field(default=0.0, ge=0.0)
    lambda_bar_sq: float = Field(default=0.0, ge=0.0)
    gain_scope: Literal["both", "cu_only"] = "both"
    cons_budget_fraction: float = Field(default=0.01, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def _pattern_matches_antennas(self) -> "SystemConfig":
        if self.pattern and len(self.pattern) != self.antennas:
            raise ValueError(f"pattern has {len(self.pattern)} ports but antennas = {self.antennas}")
        return self

    @property
    def total_users(self) -> int:
        return self.users_c + self.users_s


class PowerAssignment(BaseModel):
    """Power constraints p_bar and transmitted codebook variances p' = p_bar / backoff."""
    model_config = ConfigDict(frozen=True)

    p_bar_c: float = Field(ge=0.0)
    p_bar_s: float = Field(ge=0.0)
    p_c: float = Field(ge=0.0)
    p_s: float = Field(ge=0.0)
    backoff: float = Field(default=1.0, ge=1.0)

    @model_validator(mode="after")
    def _transmit_within_constraint(self) -> "PowerAssignment":
        if self.p_c > self.p_bar_c * (1 + 1e-12) or self.p_s > self.p_bar_s * (1 + 1e-12):
            raise ValueError("transmitted power p' must not exceed the constraint p_bar")
        return self

    @classmethod
    def from_transmit_power(cls, p_prime: float, backoff: float = 1.0) -> "PowerAssignment":
        """Equal-power convention: p_c' = p_s' = p_prime with shared backoff."""
        return cls(
            p_bar_c=p_prime * backoff,
            p_bar_s=p_prime * backoff,
            p_c=p_prime,
            p_s=p_prime,
            backoff=backoff,
        )


class BoundBreakdown(BaseModel):
    """Evaluated achievability terms and the energy-per-user achieving them."""
    eps_cons: float = Field(ge=0.0)
    eps_coll: float = Field(ge=0.0)
    eps_md: float = Field(ge=0.0)
    pupe: float = Field(ge=0.0)
    mseaoa: float = Field(ge=0.0)
    e_n0_db: float
    binding_constraint: Optional[str] = None

    @model_validator(mode="after")
    def _pupe_is_sum(self) -> "BoundBreakdown":
        if self.pupe < (self.eps_cons + self.eps_coll) * (1 - 1e-12):
            raise ValueError("pupe must be at least eps_cons + eps_coll")
        return self


class FloorConfig(SystemConfig):
    """System parameters plus Monte Carlo settings of the optimistic floor."""
    capacity_trials: int = Field(default=500, ge=1)

    @model_validator(mode="after")
    def _positive_payload(self) -> "FloorConfig":
        if self.total_bits <= 0:
            raise ValueError("total payload B_T must be positive")
        return self

    @property
    def total_bits(self) -> int:
        """B_T = A_c*|users_c| + A_s*|users_s|."""
        return self.bits_c * self.users_c + self.bits_s * self.users_s


# ============================================================================
# Experiment Configuration
# ============================================================================

class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemSection(_Section):
    bits_c: int = Field(default=100, ge=1)
    bits_s: int = Field(default=100, ge=1)
    users: int = Field(default=100, ge=1)
    su_fraction: float = Field(default=0.5, ge=0.0, le=1.0)
    blocklength: int = Field(default=5000, ge=1)
    antennas: int = Field(default=10, ge=1, le=11)
    noise_var: float = Field(default=1.0, gt=0.0)
    gain_scope: Literal["both", "cu_only"] = "both"
    cons_budget_fraction: float = Field(default=0.01, gt=0.0, lt=1.0)


class ChannelSection(_Section):
    rice_factor: float = Field(default=0.5, ge=0.0)
    num_scatterers: int = Field(default=3, ge=0)
    channel_strength: float = Field(default=1.0, gt=0.0)
    gain_trials: int = Field(default=2000, ge=1)


class SensingSection(_Section):
    n_samples: int = Field(default=90, ge=2)
    m_values: List[int] = Field(default_factory=lambda: [3, 5, 11])
    snr_db: List[float] = Field(default_factory=lambda: [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0])
    algorithms: List[Literal["mp", "cosamp", "romp"]] = Field(default_factory=lambda: ["mp", "cosamp", "romp"])
    sparsity: int = Field(default=1, ge=1)
    solver_iters: int = Field(default=10, ge=1)
    observation: Literal["expectation", "sampled"] = "expectation"


class TargetsSection(_Section):
    pupe: float = Field(default=0.1, gt=0.0, lt=1.0)
    mseaoa: float = Field(default=5e-4, gt=0.0, lt=1.0)


class SweepSection(_Section):
    users: List[int] = Field(default_factory=lambda: [100, 200, 400, 800, 1400])
    antennas: List[int] = Field(default_factory=lambda: [3, 5, 7, 9, 11])
    antennas_users: int = Field(default=100, ge=1)
    gain_mode: Literal["fas", "los"] = "fas"


class OracleSection(_Section):
    bits_c: int = Field(default=3, ge=1)
    users_c: int = Field(default=2, ge=0)
    bits_s: int = Field(default=3, ge=1)
    users_s: int = Field(default=1, ge=0)
    blocklength: int = Field(default=50, ge=1)
    antennas: int = Field(default=2, ge=1)
    num_ports: int = Field(default=4, ge=2)
    transmit_snr_db: float = -3.0


class McSection(_Section):
    seed: int = Field(default=20240917, ge=0, lt=2 ** 64)
    trials: int = Field(default=200, ge=1)
    capacity_trials: int = Field(default=500, ge=1)
    oracle_trials: int = Field(default=2000, ge=1)
    threads: int = Field(default=1, ge=1)


class ExperimentConfig(_Section):
    """Declarative experiment document; unknown keys are rejected."""
    system: SystemSection = Field(default_factory=SystemSection)
    channel: ChannelSection = Field(default_factory=ChannelSection)
    sensing: SensingSection = Field(default_factory=SensingSection)
    targets: TargetsSection = Field(default_factory=TargetsSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    oracle: OracleSection = Field(default_factory=OracleSection)
    mc: McSection = Field(default_factory=McSection)
