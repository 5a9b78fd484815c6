"""Unit tests for fas_limits/numerics.py."""

import math

import numpy as np
import pytest

from fas_limits.exceptions import ConvergenceError, DomainError
from fas_limits.numerics import (
    RandomStream,
    as_generator,
    chi2_cdf,
    chi2_inv,
    chi2_logcdf,
    complex_gaussian,
    largest_eigenvalue,
    log_binomial,
    log_binomial_row,
)
from tests.fixtures.configs import jacobi_eigenvalues


class TestChi2Cdf:
    """Tests for chi2_cdf and chi2_logcdf."""

    @pytest.mark.parametrize("x", [0.0, 0.3, 1.0, 2.0, 5.0, 17.5])
    def test_two_degrees_closed_form(self, x):
        """Should match 1 - exp(-x/2) for k = 2."""
        assert chi2_cdf(x, 2) == pytest.approx(1.0 - math.exp(-x / 2), abs=1e-10)

    def test_zero_is_zero(self):
        """Test CDF at zero is zero."""
        assert chi2_cdf(0.0, 7) == 0.0

    def test_large_argument_approaches_one(self):
        """Test CDF far in the tail is one."""
        assert chi2_cdf(1e4, 10) == pytest.approx(1.0)

    def test_monotone_in_x(self):
        """Should be nondecreasing in x."""
        values = [chi2_cdf(x, 10) for x in np.linspace(0, 40, 50)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("x", [0.5, 3.0, 17.0, 80.0])
    def test_nonincreasing_in_degrees(self, x):
        """Test F(x; k + 1) <= F(x; k) for k up to 60."""
        values = [chi2_cdf(x, k) for k in range(1, 62)]
        assert all(b <= a + 1e-15 for a, b in zip(values, values[1:]))

    def test_negative_argument_raises(self):
        """Should reject x < 0."""
        with pytest.raises(DomainError):
            chi2_cdf(-0.1, 2)

    def test_zero_dof_raises(self):
        """Should reject k < 1."""
        with pytest.raises(DomainError):
            chi2_cdf(1.0, 0)

    def test_logcdf_matches_log_of_cdf(self):
        """Test logcdf equals log(cdf) in the bulk."""
        assert chi2_logcdf(8.0, 10) == pytest.approx(math.log(chi2_cdf(8.0, 10)), rel=1e-12)

    def test_logcdf_resolves_tail(self):
        """Should stay negative and finite where the CDF rounds to one."""
        value = chi2_logcdf(12000.0, 10000)
        assert value < 0.0
        assert math.isfinite(value)

    def test_logcdf_at_zero(self):
        """Test log CDF at zero is -inf."""
        assert chi2_logcdf(0.0, 4) == -math.inf


class TestChi2Inv:
    """Tests for chi2_inv."""

    @pytest.mark.parametrize("p", [0.01, 0.25, 0.5, 0.9, 0.999])
    def test_two_degrees_closed_form(self, p):
        """Should match -2 ln(1 - p) for k = 2."""
        assert chi2_inv(p, 2) == pytest.approx(-2.0 * math.log1p(-p), rel=1e-10)

    @pytest.mark.parametrize("k", [1, 3, 10, 100, 1000, 10000])
    @pytest.mark.parametrize("p", [0.05, 0.5, 0.99])
    def test_round_trip(self, k, p):
        """Test chi2_cdf(chi2_inv(p)) returns p."""
        assert chi2_cdf(chi2_inv(p, k), k) == pytest.approx(p, abs=1e-8)

    def test_extreme_quantile_widens_bracket(self):
        """Should find quantiles beyond the initial bracket."""
        p = 1.0 - 1e-12
        assert chi2_inv(p, 2) == pytest.approx(-2.0 * math.log1p(-p), rel=1e-4)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_probability_outside_open_interval_raises(self, p):
        """Should reject p outside (0, 1)."""
        with pytest.raises(DomainError):
            chi2_inv(p, 4)

    def test_zero_dof_raises(self):
        """Should reject k < 1."""
        with pytest.raises(DomainError):
            chi2_inv(0.5, 0)


class TestLargestEigenvalue:
    """Tests for largest_eigenvalue."""

    def test_matches_jacobi_on_random_hermitian(self):
        """Should agree with Jacobi rotations on random Hermitian PSD matrices."""
        rng = np.random.default_rng(2024)
        for _ in range(50):
            b = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
            a = b @ b.conj().T
            expected = jacobi_eigenvalues(a)[-1]
            assert largest_eigenvalue(a) == pytest.approx(expected, rel=1e-7)

    def test_bounds_rayleigh_quotients(self):
        """Test no probe vector has a Rayleigh quotient above the largest eigenvalue."""
        rng = np.random.default_rng(77)
        b = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
        a = b @ b.conj().T
        gamma = largest_eigenvalue(a)
        for _ in range(20):
            v = rng.standard_normal(12) + 1j * rng.standard_normal(12)
            quotient = np.real(np.vdot(v, a @ v)) / np.real(np.vdot(v, v))
            assert quotient <= gamma * (1 + 1e-9)

    def test_diagonal_matrix(self):
        """Test the largest diagonal entry is returned."""
        assert largest_eigenvalue(np.diag([1.0, 5.0, 3.0])) == pytest.approx(5.0)

    def test_rank_one(self):
        """Test a rank-one matrix gives ||u||^2."""
        u = np.array([1.0, 1j, -2.0])
        assert largest_eigenvalue(np.outer(u, u.conj())) == pytest.approx(6.0)

    def test_zero_matrix(self):
        """Test the zero matrix gives zero."""
        assert largest_eigenvalue(np.zeros((4, 4))) == 0.0

    def test_non_square_raises(self):
        """Should reject non-square input."""
        with pytest.raises(DomainError):
            largest_eigenvalue(np.ones((2, 3)))

    def test_non_hermitian_raises(self):
        """Should reject non-Hermitian input."""
        with pytest.raises(DomainError):
            largest_eigenvalue(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_iteration_cap_raises_with_last_iterate(self):
        """Should raise ConvergenceError carrying the last iterate when capped."""
        a = np.diag([1.0, 0.999999, 0.5])
        with pytest.raises(ConvergenceError) as exc_info:
            largest_eigenvalue(a, max_iter=3)
        eigenvalue, vector = exc_info.value.last_iterate
        assert exc_info.value.iterations == 3
        assert 0.5 <= eigenvalue <= 1.0
        assert vector.shape == (3,)


class TestLogBinomial:
    """Tests for log_binomial and log_binomial_row."""

    @pytest.mark.parametrize("n,k", [(5, 2), (20, 10), (0, 0), (7, 7)])
    def test_exact_small(self, n, k):
        """Test small arguments match math.comb."""
        assert log_binomial(n, k) == pytest.approx(math.log(math.comb(n, k)))

    def test_pascal_identity(self):
        """Test C(n, k) = C(n-1, k-1) + C(n-1, k) in the log domain for n <= 30."""
        for n in range(2, 31):
            for k in range(1, n):
                expected = np.logaddexp(log_binomial(n - 1, k - 1), log_binomial(n - 1, k))
                assert log_binomial(n, k) == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_large_matches_lgamma(self):
        """Test large arguments match the lgamma form."""
        expected = math.lgamma(1401) - math.lgamma(701) - math.lgamma(701)
        assert log_binomial(1400, 700) == pytest.approx(expected, rel=1e-12)

    def test_bits_small_is_exact(self):
        """Test C(2**3, 2) = 28."""
        assert log_binomial(3, 2, bits=True) == pytest.approx(math.log(28))

    def test_bits_matches_exact_for_moderate_width(self):
        """Test the log-domain form agrees with math.comb at 2**20."""
        expected = math.log(math.comb(2 ** 20, 5))
        assert log_binomial(20, 5, bits=True) == pytest.approx(expected, rel=1e-12)

    def test_bits_hundred_stays_finite(self):
        """Should evaluate C(2**100, 50) without overflow."""
        value = log_binomial(100, 50, bits=True)
        assert value == pytest.approx(50 * 100 * math.log(2) - math.lgamma(51), rel=1e-12)

    def test_k_too_large_raises(self):
        """Should reject k > n."""
        with pytest.raises(DomainError):
            log_binomial(3, 4)

    def test_bits_k_too_large_raises(self):
        """Should reject k > 2**bits."""
        with pytest.raises(DomainError):
            log_binomial(2, 5, bits=True)

    def test_row_matches_scalar(self):
        """Test the vectorized row agrees with the scalar function."""
        row = log_binomial_row(60)
        for k in (0, 1, 30, 60):
            assert row[k] == pytest.approx(log_binomial(60, k), abs=1e-9)

    def test_row_bits(self):
        """Test the bit-width row agrees with the scalar function."""
        row = log_binomial_row(100, bits=True, k_max=10)
        assert len(row) == 11
        assert row[7] == pytest.approx(log_binomial(100, 7, bits=True), rel=1e-12)

    def test_row_bits_requires_k_max(self):
        """Should require k_max for bit-width rows."""
        with pytest.raises(DomainError):
            log_binomial_row(10, bits=True)


class TestRandomStream:
    """Tests for RandomStream and complex_gaussian."""

    def test_same_seed_same_sequence(self):
        """Test identical streams produce identical draws."""
        a = RandomStream(seed=5).generator().standard_normal(4)
        b = RandomStream(seed=5).generator().standard_normal(4)
        np.testing.assert_array_equal(a, b)

    def test_derived_streams_differ(self):
        """Test derived streams for different trials are independent sequences."""
        base = RandomStream(seed=5)
        a = base.derive(1, 0).generator().standard_normal(4)
        b = base.derive(1, 1).generator().standard_normal(4)
        assert not np.allclose(a, b)

    def test_derive_layout(self):
        """Test stream_id = experiment_id * 2**32 + trial_index."""
        assert RandomStream(seed=1).derive(3, 7).stream_id == 3 * 2 ** 32 + 7

    def test_negative_seed_raises(self):
        """Should reject seeds outside uint64."""
        with pytest.raises(DomainError):
            RandomStream(seed=-1)

    def test_as_generator_passes_generator_through(self):
        """Test a live generator is returned unchanged."""
        gen = np.random.default_rng(0)
        assert as_generator(gen) is gen

    def test_complex_gaussian_variance(self):
        """Test sample variance of CN(0, 2) draws is close to 2."""
        draws = complex_gaussian(RandomStream(seed=3), 2.0, size=200_000)
        assert np.mean(np.abs(draws) ** 2) == pytest.approx(2.0, rel=0.02)
        assert abs(np.mean(draws)) < 0.02

    def test_complex_gaussian_scalar(self):
        """Test size=None returns a complex scalar."""
        assert isinstance(complex_gaussian(RandomStream(seed=3), 1.0), complex)

    def test_complex_gaussian_shape(self):
        """Test tuple sizes are honoured."""
        assert complex_gaussian(RandomStream(seed=3), 1.0, size=(3, 4)).shape == (3, 4)

    def test_negative_variance_raises(self):
        """Should reject negative variance."""
        with pytest.raises(DomainError):
            complex_gaussian(RandomStream(seed=3), -1.0)
