"""
Shared test fixtures for fas-limits.

Provides:
- Seeded random streams
- System configurations at the reference operating point
- Small experiment configurations for fast orchestration tests
- Codebooks for the published port patterns
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the repository root to path for imports
REPO_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(REPO_ROOT))

from fas_limits.models import ChannelParams, PowerAssignment, SystemConfig  # noqa: E402
from fas_limits.mra import PortPattern  # noqa: E402
from fas_limits.numerics import RandomStream  # noqa: E402
from fas_limits.sensing import build_codebook  # noqa: E402

from tests.fixtures.configs import create_experiment_config, create_system_config  # noqa: E402


# ============================================================================
# RANDOMNESS
# ============================================================================

@pytest.fixture
def stream():
    """Seeded master stream."""
    return RandomStream(seed=20240917)


@pytest.fixture
def rng():
    """Seeded numpy generator for building test inputs."""
    return np.random.default_rng(12345)


# ============================================================================
# SYSTEM CONFIGURATIONS
# ============================================================================

@pytest.fixture
def system_config():
    """Reference operating point: 50 + 50 users, 100-bit payloads, L = 5000, M = 10."""
    return create_system_config()


@pytest.fixture
def tiny_config():
    """Enumerable configuration for the detection oracle."""
    return SystemConfig(
        bits_c=3, users_c=2, bits_s=3, users_s=1, blocklength=50,
        antennas=2, pattern=[], aperture=0.5, ports=4, gain=1.0,
    )


@pytest.fixture
def unit_powers():
    """p_bar = p' = 1 for both classes."""
    return PowerAssignment.from_transmit_power(1.0)


@pytest.fixture
def channel_params():
    """Reference channel: K = 0.5, three scatterers, 37 ports over 4.5 wavelengths."""
    return ChannelParams()


# ============================================================================
# SENSING
# ============================================================================

@pytest.fixture
def pattern_m3():
    return PortPattern((0, 1, 3))


@pytest.fixture
def codebook_m3(pattern_m3):
    """Codebook for [0,1,3] with W = 1, N_f = 4, N = 90."""
    return build_codebook(pattern_m3, 1.0, 4, 90)


# ============================================================================
# EXPERIMENT CONFIGURATIONS
# ============================================================================

@pytest.fixture
def small_experiment_config():
    """Reduced trial counts for orchestration tests."""
    return create_experiment_config()
