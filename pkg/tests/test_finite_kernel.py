import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ktacnode.errors import DomainError
from ktacnode.finite_kernel import (ExtendedKernelQuery, correlation, density_profile,
                                    finite_kernel, finite_kernel_mp, heat_sum, heat_sum_poisson,
                                    jacobian, s_transform, s_transform_bruteforce,
                                    scaled_coordinates)
from ktacnode.orthopoly import op_system
from ktacnode.precision import PrecisionContext
from ktacnode.winding import epsilon_n

CTX = PrecisionContext(mantissa_bits=128)
N, T, MU = 6, 8.0, 0.02


@pytest.fixture(scope="module")
def sys6():
    return op_system(N, T, MU, epsilon_n(N), CTX, full_residual=False)


@pytest.fixture(scope="module")
def sys8():
    return op_system(8, 9.0, 0.0, epsilon_n(8), CTX, full_residual=False)


def test_orthogonality_of_transform(sys6):
    with mpmath.workprec(128):
        h0 = sys6.norms[0]
        assert abs(s_transform(sys6, 0, T, 0.0, CTX) - h0) < 1e-30 * abs(h0)
        for j in range(1, N):
            assert abs(s_transform(sys6, j, T, 0.0, CTX)) < 1e-30


@settings(max_examples=10, deadline=None)
@given(st.integers(0, N - 1), st.floats(0.5, 7.5), st.floats(-math.pi, math.pi))
def test_transform_matches_bruteforce(sys6, j, a, phi):
    fast = s_transform(sys6, j, a, phi, CTX)
    slow = s_transform_bruteforce(sys6, j, a, phi, width=8.0)
    with mpmath.workprec(128):
        assert abs(fast - slow) <= 2.0 ** (-128 / 4) * max(1, abs(slow))


def test_transform_guards(sys6):
    with pytest.raises(DomainError):
        s_transform(sys6, N, T, 0.0, CTX)
    with pytest.raises(DomainError):
        s_transform(sys6, 0, 0.0, 0.0, CTX)
    with pytest.raises(DomainError):
        s_transform(sys6, 0, -1.0, 0.0, CTX)


def _tilde(sys, t_i, t_j, phi, theta):
    with mpmath.workprec(128):
        tot = mpmath.fsum(s_transform(sys, j, float(sys.T) - t_i, phi, CTX)
                          * s_transform(sys, j, t_j, -theta, CTX) / sys.norms[j]
                          for j in range(sys.n))
        return sys.n / (2 * mpmath.pi) * tot


def test_heat_term_only_for_increasing_times(sys6):
    with mpmath.workprec(128):
        q = ExtendedKernelQuery(5.0, 3.0, 0.3, -0.4)
        assert abs(finite_kernel_mp(q, sys6, CTX) - _tilde(sys6, 5.0, 3.0, 0.3, -0.4)) < 1e-30
        q = ExtendedKernelQuery(3.0, 3.0, 0.3, -0.4)
        assert abs(finite_kernel_mp(q, sys6, CTX) - _tilde(sys6, 3.0, 3.0, 0.3, -0.4)) < 1e-30
        q = ExtendedKernelQuery(2.0, 5.0, 0.3, -0.4)
        W = heat_sum(N, epsilon_n(N), 3.0, -0.7, CTX)
        assert abs(finite_kernel_mp(q, sys6, CTX) - (_tilde(sys6, 2.0, 5.0, 0.3, -0.4) - W)) < 1e-30


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(-6.0, 6.0), st.sampled_from([0.0, 0.5, 0.3]))
def test_heat_sum_poisson(dt, dphi, tau):
    a = heat_sum(N, tau, dt, dphi, CTX)
    b = heat_sum_poisson(N, tau, dt, dphi, CTX)
    with mpmath.workprec(128):
        assert abs(a - b) < 1e-10


def test_density_real_nonnegative(sys6):
    vals = density_profile(sys6, 3.0, np.linspace(-math.pi, math.pi, 17), CTX)
    for v in vals:
        assert abs(v.imag) < 1e-12 and v.real >= 0


def test_density_integrates_to_n(sys8):
    M = 64
    thetas = [-math.pi + 2 * math.pi * i / M for i in range(M)]
    vals = density_profile(sys8, 4.5, thetas, CTX)
    total = 2 * math.pi / M * sum(v.real for v in vals)
    assert abs(total - 8) < 0.08


def test_hermitian_at_half_time(sys8):
    t = 4.5
    for phi, theta in ((0.3, -1.1), (2.0, 0.4)):
        a = finite_kernel(ExtendedKernelQuery(t, t, phi, theta), sys8, CTX)
        b = finite_kernel(ExtendedKernelQuery(t, t, theta, phi), sys8, CTX)
        assert abs(a - b.conjugate()) < 1e-12


def test_window_doubling_stable(sys6):
    q = ExtendedKernelQuery(2.0, 5.0, 0.3, -0.4)
    with mpmath.workprec(128):
        a = finite_kernel_mp(q, sys6, CTX)
        b = finite_kernel_mp(q, sys6, CTX, window_scale=2.0)
        assert abs(a - b) < 10 * CTX.tail_epsilon


def test_time_guard(sys6):
    with pytest.raises(DomainError):
        finite_kernel(ExtendedKernelQuery(0.0, 3.0, 0.0, 0.0), sys6, CTX)
    with pytest.raises(DomainError):
        finite_kernel(ExtendedKernelQuery(3.0, T, 0.0, 0.0), sys6, CTX)


def test_query_must_match_system(sys6):
    with pytest.raises(DomainError):
        finite_kernel(ExtendedKernelQuery(2.0, 3.0, 0.0, 0.0, n=7), sys6, CTX)


def test_query_builds_its_own_system(sys6):
    q = ExtendedKernelQuery(2.0, 3.0, 0.2, 0.1, n=N, T=T, mu=MU)
    assert abs(finite_kernel(q, None, CTX) - finite_kernel(q, sys6, CTX)) < 1e-25


def test_one_point_correlation_is_density(sys6):
    th, t = 0.7, 3.0
    rho = density_profile(sys6, t, [th], CTX)[0].real
    assert correlation([(th, t)], sys6, CTX) == pytest.approx(rho, rel=1e-14)


def test_repeated_point_gives_zero(sys6):
    c = correlation([(0.7, 3.0), (0.7, 3.0)], sys6, CTX)
    assert abs(c) < 1e-25


def test_two_point_below_product(sys6):
    rng = np.random.default_rng(5)
    for _ in range(6):
        a, b = rng.uniform(-math.pi, math.pi, 2)
        t = 3.0
        two = correlation([(a, t), (b, t)], sys6, CTX)
        one_a = correlation([(a, t)], sys6, CTX)
        one_b = correlation([(b, t)], sys6, CTX)
        assert -1e-12 <= two <= one_a * one_b + 1e-12


def test_two_time_correlation_real(sys6):
    c = correlation([(0.2, 2.0), (-0.4, 5.0)], sys6, CTX)
    assert math.isfinite(c)
    with pytest.raises(DomainError):
        correlation([(0.2, 5.0), (-0.4, 2.0)], sys6, CTX)


def test_correlation_needs_probabilistic_offset():
    other = op_system(N, T, MU, 0.25, CTX, full_residual=False)
    with pytest.raises(DomainError):
        correlation([(0.1, 2.0)], other, CTX)


def test_scaled_coordinates():
    n, TT = 27, 9.0
    ti, tj, phi, theta = scaled_coordinates(n, TT, 0.0, 1.0, 0.0, 1.0)
    assert ti == TT / 2 and phi == -math.pi
    assert tj - TT / 2 == pytest.approx(2 ** (-10 / 3) * math.pi ** 2 / 3)
    assert theta + math.pi == pytest.approx(-(2 ** (-5 / 3)) * math.pi / 9)
    assert jacobian(n) == pytest.approx(math.pi / (2 ** (5 / 3) * 9))
