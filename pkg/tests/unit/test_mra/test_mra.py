"""Unit tests for fas_limits/mra.py."""

import itertools
import math

import pytest

from fas_limits.exceptions import DomainError
from fas_limits.mra import (
    TABLE_I,
    PortPattern,
    _patterns_with_aperture,
    audit_table_i,
    check_mra,
    dca,
    dca_dof,
    default_aperture_cap,
    expected_index_gap,
    lambda_bar_sq,
    mra_search,
    pattern_for,
    ula_pattern,
)


class TestPortPattern:
    """Tests for PortPattern."""

    def test_properties(self):
        """Test size, aperture and port count."""
        pattern = PortPattern((0, 1, 3))
        assert pattern.m == 3
        assert pattern.aperture == 3
        assert pattern.num_ports == 4
        assert str(pattern) == "[0,1,3]"

    def test_non_normalized_pattern(self):
        """Test a pattern starting above zero keeps its indices."""
        pattern = PortPattern((2, 4))
        assert not pattern.is_normalized
        assert pattern.aperture == 2
        assert pattern.normalized().indices == (0, 2)

    def test_mirrored(self):
        """Test mirror image about the aperture."""
        assert PortPattern((0, 1, 3)).mirrored().indices == (0, 2, 3)

    @pytest.mark.parametrize("indices", [(), (1, 1), (3, 2), (-1, 2)])
    def test_invalid_indices_raise(self, indices):
        """Should reject empty, repeated, decreasing or negative indices."""
        with pytest.raises(DomainError):
            PortPattern(indices)


class TestDca:
    """Tests for dca and check_mra."""

    def test_weight_function(self):
        """Test weights of [0,1,3]: w(0)=3, w(+-1)=w(+-2)=w(+-3)=1."""
        w = dca(PortPattern((0, 1, 3)))
        assert w(0) == 3
        assert all(w(x) == 1 for x in (-3, -2, -1, 1, 2, 3))
        assert w(4) == 0
        assert w.off_origin_total == 6

    def test_dof(self):
        """Test DCA degrees of freedom of [0,1,3] are 7."""
        assert dca_dof(PortPattern((0, 1, 3))) == 7

    def test_hole_free_pattern_accepted(self):
        """Test a hole-free pattern passes."""
        check = check_mra(PortPattern((0, 1, 4, 7, 9)))
        assert check.is_mra
        assert bool(check)
        assert check.holes == []

    def test_pattern_with_holes_rejected(self):
        """Test [0,1,5] fails with holes at +-2 and +-3."""
        check = check_mra(PortPattern((0, 1, 5)))
        assert not check.is_mra
        assert sorted(check.holes) == [-3, -2, 2, 3]

    def test_shifted_pattern_checked_on_its_span(self):
        """Test a non-normalized hole-free pattern is accepted."""
        assert check_mra(PortPattern((2, 3, 5))).is_mra

    def test_single_port(self):
        """Test one port is trivially hole-free."""
        assert check_mra(PortPattern((0,))).is_mra


class TestMraSearch:
    """Tests for mra_search."""

    def test_m3_recovers_published_patterns(self):
        """Should return exactly [0,1,3] and [0,2,3]."""
        found = {p.indices for p in mra_search(3, default_aperture_cap(3))}
        assert found == {(0, 1, 3), (0, 2, 3)}

    def test_m5_contains_published_patterns(self):
        """Should find both published 5-port patterns at aperture 9."""
        found = mra_search(5, default_aperture_cap(5))
        assert {(0, 1, 4, 7, 9), (0, 1, 2, 6, 9)} <= {p.indices for p in found}
        assert all(p.aperture == 9 for p in found)

    def test_results_are_closed_under_mirroring(self):
        """Test every result's mirror image is also returned."""
        found = {p.indices for p in mra_search(5, 10)}
        assert all(PortPattern(p).mirrored().indices in found for p in found)

    @pytest.mark.parametrize("m,aperture", [(3, 3), (4, 6), (5, 8), (5, 9), (6, 12)])
    def test_pruned_search_matches_brute_force(self, m, aperture):
        """Test the mirror-pruned search finds every hole-free pattern of the given span."""
        brute = {
            (0, *interior, aperture)
            for interior in itertools.combinations(range(1, aperture), m - 2)
            if check_mra(PortPattern((0, *interior, aperture))).is_mra
        }
        assert set(_patterns_with_aperture(m, aperture)) == brute

    def test_all_results_hole_free(self):
        """Test every returned pattern passes check_mra."""
        assert all(check_mra(p).is_mra for p in mra_search(6, default_aperture_cap(6)))

    def test_m7_aperture(self):
        """Test the 7-port restricted MRA reaches aperture 17."""
        found = mra_search(7, default_aperture_cap(7))
        assert found[0].aperture == 17
        assert (0, 1, 2, 6, 10, 14, 17) in {p.indices for p in found}

    def test_small_cap_limits_aperture(self):
        """Test a cap below the MRA aperture returns shorter patterns."""
        found = mra_search(5, 7)
        assert all(p.aperture == 7 for p in found)

    def test_single_port(self):
        """Test m = 1 returns [0]."""
        assert [p.indices for p in mra_search(1, 0)] == [(0,)]

    def test_two_ports(self):
        """Test m = 2 returns [0,1]."""
        assert [p.indices for p in mra_search(2, 1)] == [(0, 1)]

    @pytest.mark.parametrize("m", [0, 12])
    def test_m_out_of_range_raises(self, m):
        """Should reject m outside [1, 11]."""
        with pytest.raises(DomainError):
            mra_search(m, 100)

    def test_cap_below_minimum_raises(self):
        """Should reject caps below m - 1."""
        with pytest.raises(DomainError):
            mra_search(4, 2)


class TestIndexGap:
    """Tests for expected_index_gap and lambda_bar_sq."""

    @pytest.mark.parametrize("indices,gap", [
        ((0, 1, 3), 1.3333),
        ((0, 2, 3), 1.3333),
        ((0, 1, 4, 7, 9), 3.84),
        ((0, 1, 2, 6, 9), 3.68),
    ])
    @pytest.mark.validation
    def test_published_gaps(self, indices, gap):
        """Test computed gaps match the published values within 1e-4."""
        assert expected_index_gap(PortPattern(indices)) == pytest.approx(gap, abs=1e-4)

    def test_lambda_bar_sq(self):
        """Test (2*pi*gap*W/(N_f - 1))^2 for [0,1,3] with W = 1, N_f = 4."""
        expected = (2 * math.pi * (4.0 / 3.0) * 1.0 / 3.0) ** 2
        assert lambda_bar_sq(PortPattern((0, 1, 3)), 1.0, 4) == pytest.approx(expected)

    def test_lambda_bar_sq_invalid_ports_raises(self):
        """Should reject n_f < 2."""
        with pytest.raises(DomainError):
            lambda_bar_sq(PortPattern((0,)), 1.0, 1)

    def test_ula_pattern(self):
        """Test the contiguous baseline pattern."""
        assert ula_pattern(4).indices == (0, 1, 2, 3)


@pytest.mark.validation
class TestPublishedPatterns:
    """Tests for TABLE_I, pattern_for and audit_table_i."""

    def test_pattern_for_uses_published(self):
        """Test published patterns are used where listed."""
        assert pattern_for(10).indices == TABLE_I[10][0][0]

    def test_pattern_for_searches_unlisted(self):
        """Test unlisted sizes fall back to the search."""
        assert check_mra(pattern_for(4)).is_mra
        assert pattern_for(4).aperture == 6

    def test_audit_covers_every_pattern(self):
        """Test one audit record per published pattern."""
        records = audit_table_i()
        assert len(records) == sum(len(v) for v in TABLE_I.values())

    def test_audit_small_patterns_match(self):
        """Test published gaps for M = 3 and 5 agree."""
        for record in audit_table_i():
            if record["m"] in (3, 5):
                assert record["hole_free"]
                assert not record["mismatch"]

    def test_audit_flags_pattern_with_holes(self):
        """Test the nine-port pattern missing lags 4, 18, 20, 25 is flagged."""
        record = next(r for r in audit_table_i() if r["pattern"] == "[0,1,3,10,16,22,24,27,29]")
        assert not record["hole_free"]
        assert record["mismatch"]
        assert record["holes"] == "4 18 20 25"

    def test_audit_gaps_match_published_values(self):
        """Test every computed gap agrees with its published value."""
        for record in audit_table_i():
            assert record["gap"] == pytest.approx(record["published_gap"], abs=1e-4)
