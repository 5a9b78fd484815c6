"""Unit tests for fas_limits/sparse_recovery.py."""

import numpy as np
import pytest

from fas_limits.exceptions import DomainError
from fas_limits.mra import PortPattern
from fas_limits.sensing import build_codebook, lasso_error_bound, observe_expectation
from fas_limits.sparse_recovery import (
    SOLVERS,
    SparseEstimate,
    cosamp_solve,
    mp_solve,
    romp_solve,
)

SOLVER_NAMES = sorted(SOLVERS)


class TestSparseEstimate:
    """Tests for SparseEstimate.error_to."""

    def test_error_to_exact(self):
        """Test zero error for an exact 1-sparse estimate."""
        beta = np.zeros(5, dtype=complex)
        beta[2] = 1.0
        estimate = SparseEstimate(beta_hat=beta, support=[2], residual_norm=0.0)
        assert estimate.error_to(2) == 0.0

    def test_error_to_wrong_index(self):
        """Test sqrt(2) error when the wrong atom carries unit weight."""
        beta = np.zeros(5, dtype=complex)
        beta[1] = 1.0
        estimate = SparseEstimate(beta_hat=beta, support=[1], residual_norm=0.0)
        assert estimate.error_to(2) == pytest.approx(np.sqrt(2))


class TestSolvers:
    """Tests shared by the MP, CoSaMP and ROMP solvers."""

    @pytest.mark.parametrize("name", SOLVER_NAMES)
    def test_noiseless_exact_recovery(self, codebook_m3, name):
        """Should recover a noiseless 1-sparse observation exactly."""
        estimate = SOLVERS[name](codebook_m3, codebook_m3.column(33), 1, 10)
        assert estimate.support == [33]
        assert estimate.error_to(33) == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("name", SOLVER_NAMES)
    @pytest.mark.parametrize("sigma_z_sq", [10.0, 1.0, 0.1, 0.01])
    def test_expectation_error_within_lasso_bound(self, codebook_m3, name, sigma_z_sq):
        """Test ||beta - beta_hat|| <= 4*sigma_z^2/M for expectation observations."""
        for index in (0, 20, 45, 89):
            obs = observe_expectation(codebook_m3, index, sigma_z_sq)
            estimate = SOLVERS[name](codebook_m3, obs.v, 1, 10)
            assert estimate.error_to(index) <= lasso_error_bound(3, sigma_z_sq) + 1e-12

    @pytest.mark.parametrize("name", SOLVER_NAMES)
    def test_expectation_error_is_noise_over_m(self, codebook_m3, name):
        """Test the 1-sparse estimate is 1 + sigma_z^2/M on the true atom."""
        obs = observe_expectation(codebook_m3, 60, 0.3)
        estimate = SOLVERS[name](codebook_m3, obs.v, 1, 10)
        assert estimate.support == [60]
        assert estimate.beta_hat[60] == pytest.approx(1.0 + 0.3 / 3)

    @pytest.mark.parametrize("name", SOLVER_NAMES)
    def test_zero_sparsity_returns_empty(self, codebook_m3, name):
        """Test k = 0 gives an empty support and the observation norm."""
        v = codebook_m3.column(3)
        estimate = SOLVERS[name](codebook_m3, v, 0, 10)
        assert estimate.support == []
        assert estimate.residual_norm == pytest.approx(np.linalg.norm(v))
        assert not estimate.beta_hat.any()

    @pytest.mark.parametrize("name", SOLVER_NAMES)
    def test_support_never_exceeds_k(self, codebook_m3, name):
        """Test the support size is capped at k."""
        v = codebook_m3.column(10) + 0.5 * codebook_m3.column(70) + 0.2 * codebook_m3.column(40)
        estimate = SOLVERS[name](codebook_m3, v, 2, 10)
        assert len(estimate.support) <= 2

    @pytest.mark.parametrize("name", SOLVER_NAMES)
    def test_wrong_observation_length_raises(self, codebook_m3, name):
        """Should reject observations that do not match the codebook."""
        with pytest.raises(DomainError):
            SOLVERS[name](codebook_m3, np.ones(4, dtype=complex), 1, 10)

    @pytest.mark.parametrize("name", SOLVER_NAMES)
    def test_negative_sparsity_raises(self, codebook_m3, name):
        """Should reject k < 0."""
        with pytest.raises(DomainError):
            SOLVERS[name](codebook_m3, codebook_m3.column(0), -1, 10)


class TestMp:
    """Tests specific to mp_solve."""

    def test_residual_nonincreasing(self, codebook_m3, rng):
        """Test the residual history never increases."""
        v = codebook_m3.column(10) + 0.1 * (rng.standard_normal(9) + 1j * rng.standard_normal(9))
        history = mp_solve(codebook_m3, v, 2, 20).residual_history
        assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))

    def test_zero_iterations(self, codebook_m3):
        """Test iters = 0 leaves the estimate empty."""
        estimate = mp_solve(codebook_m3, codebook_m3.column(5), 1, 0)
        assert estimate.support == []


class TestCosamp:
    """Tests specific to cosamp_solve."""

    def test_residual_strictly_decreases_when_accepted(self, codebook_m3, rng):
        """Test accepted iterates lower the residual."""
        v = codebook_m3.column(10) + 0.1 * (rng.standard_normal(9) + 1j * rng.standard_normal(9))
        history = cosamp_solve(codebook_m3, v, 1, 10).residual_history
        assert all(b < a for a, b in zip(history, history[1:]))


class TestRomp:
    """Tests specific to romp_solve."""

    def test_stops_at_sparsity(self, codebook_m3):
        """Test ROMP stops after the support reaches k."""
        estimate = romp_solve(codebook_m3, codebook_m3.column(7), 1, 10)
        assert estimate.iterations == 1

    def test_larger_pattern(self):
        """Test exact recovery on the 5-port pattern."""
        codebook = build_codebook(PortPattern((0, 1, 4, 7, 9)), 2.0, 10, 90)
        estimate = romp_solve(codebook, codebook.column(64), 1, 10)
        assert estimate.support == [64]
