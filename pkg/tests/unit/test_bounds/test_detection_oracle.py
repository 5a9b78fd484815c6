"""Unit tests for fas_limits/detection_oracle.py."""

import numpy as np
import pytest

from fas_limits.detection_oracle import (
    OracleTable,
    analytic_table,
    candidate_sets,
    detection_oracle,
    oracle_violations,
)
from fas_limits.exceptions import EnumerationBudgetError
from fas_limits.models import PowerAssignment
from tests.fixtures.configs import create_system_config


class TestCandidateSets:
    """Tests for candidate_sets."""

    def test_enumerates_every_active_set(self, tiny_config):
        """Test C(8,2) * C(8,1) = 224 candidate sets of three codewords."""
        assert candidate_sets(tiny_config).shape == (224, 3)

    def test_su_codewords_follow_cu_codewords(self, tiny_config):
        """Test CU columns index [0, 8) and the SU column indexes [8, 16)."""
        sets = candidate_sets(tiny_config)
        assert sets[:, :2].max() < 8
        assert sets[:, 2].min() >= 8
        assert sets[:, 2].max() < 16

    def test_sets_are_distinct(self, tiny_config):
        """Test no candidate set is listed twice."""
        sets = candidate_sets(tiny_config)
        assert len({tuple(row) for row in sets}) == len(sets)


class TestDetectionOracle:
    """Tests for detection_oracle."""

    def test_counts_sum_to_trials(self, tiny_config, stream):
        """Test every trial lands in exactly one (k_s, k_c) cell."""
        table = detection_oracle(tiny_config, PowerAssignment.from_transmit_power(0.5), 12, stream)
        assert table.counts.shape == (2, 3)
        assert table.counts.sum() == 12

    def test_deterministic_for_same_stream(self, tiny_config, stream):
        """Test the same stream reproduces the table."""
        powers = PowerAssignment.from_transmit_power(0.5)
        a = detection_oracle(tiny_config, powers, 10, stream)
        b = detection_oracle(tiny_config, powers, 10, stream)
        np.testing.assert_array_equal(a.counts, b.counts)

    def test_thread_count_does_not_change_result(self, tiny_config, stream):
        """Test one and two worker threads give identical counts."""
        powers = PowerAssignment.from_transmit_power(0.5)
        serial = detection_oracle(tiny_config, powers, 10, stream, threads=1)
        parallel = detection_oracle(tiny_config, powers, 10, stream, threads=2)
        np.testing.assert_array_equal(serial.counts, parallel.counts)

    def test_high_snr_detects_correctly(self, tiny_config, stream):
        """Test a strong signal is almost always detected without error."""
        table = detection_oracle(tiny_config, PowerAssignment.from_transmit_power(100.0), 20, stream)
        assert table.counts[0, 0] >= 18

    def test_codebook_budget_enforced(self, stream):
        """Should reject configurations with more than 64 codewords."""
        cfg = create_system_config(users_c=1, users_s=1, bits=6, antennas=2)
        with pytest.raises(EnumerationBudgetError):
            detection_oracle(cfg, PowerAssignment.from_transmit_power(1.0), 1, stream)

    def test_user_budget_enforced(self, stream):
        """Should reject configurations with more than three users."""
        cfg = create_system_config(users_c=2, users_s=2, bits=3, antennas=2)
        with pytest.raises(EnumerationBudgetError):
            detection_oracle(cfg, PowerAssignment.from_transmit_power(1.0), 1, stream)


class TestOracleTable:
    """Tests for OracleTable statistics."""

    def test_frequencies_and_stderr(self):
        """Test f = count/trials and sqrt(f(1 - f)/trials)."""
        table = OracleTable(counts=np.array([[75, 25]]), trials=100)
        np.testing.assert_allclose(table.frequencies, [[0.75, 0.25]])
        np.testing.assert_allclose(table.stderr, [[np.sqrt(0.75 * 0.25 / 100)] * 2])


class TestOracleViolations:
    """Tests for oracle_violations and analytic_table."""

    def test_flags_only_significant_excess(self):
        """Should flag frequencies beyond the bound by more than three standard errors."""
        table = OracleTable(counts=np.array([[70, 20], [10, 0]]), trials=100)
        analytic = np.array([[1.0, 0.01], [0.2, 0.5]])
        expected = np.array([[False, True], [False, False]])
        np.testing.assert_array_equal(oracle_violations(table, analytic), expected)

    def test_unit_bound_is_never_violated(self):
        """Test entries where the bound clamps to 1 are skipped."""
        table = OracleTable(counts=np.array([[100]]), trials=100)
        assert not oracle_violations(table, np.array([[3.0]])).any()

    def test_analytic_table_matches_oracle_grid(self, tiny_config):
        """Test the analytic table has the oracle's shape and a unit (0, 0) entry."""
        analytic = analytic_table(tiny_config, PowerAssignment.from_transmit_power(0.5))
        assert analytic.shape == (2, 3)
        assert analytic[0, 0] == 1.0
        assert (analytic <= 1.0).all()
