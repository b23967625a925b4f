import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from ktacnode.errors import DomainError
from ktacnode.lattice import (LatticeSpec, WeightParams, lattice_nodes, moments, node_range,
                              window_radius)
from ktacnode.precision import PrecisionContext

CTX = PrecisionContext(mantissa_bits=160)


def poisson_m0(n, T, mu, tau):
    # Poisson resummation of (1/n) sum_x exp(-(Tn/2)(x^2 - 2 i mu x))
    with mpmath.workprec(200):
        T, mu = mpmath.mpf(T), mpmath.mpf(mu)
        tot = 0
        for l in range(-40, 41):
            tot += (mpmath.expjpi(2 * l * mpmath.mpf(tau)) * mpmath.sqrt(2 * mpmath.pi / (T * n))
                    * mpmath.exp(-n * (T * mu - 2 * mpmath.pi * l) ** 2 / (2 * T)))
        return tot


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 12), st.floats(1.0, 12.0), st.floats(-0.2, 0.2), st.floats(0, 1))
def test_zeroth_moment_matches_poisson_form(n, T, mu, tau):
    m0 = moments(LatticeSpec(n, tau), WeightParams(T, mu), 0, CTX)[0]
    ref = poisson_m0(n, T, mu, tau)
    with mpmath.workprec(200):
        assert abs(m0 - ref) <= 1e-35 * abs(ref) + 1e-40


def test_moments_match_direct_sum():
    n, T, mu, tau = 5, 7.0, 0.03, 0.25
    mom = moments(LatticeSpec(n, tau), WeightParams(T, mu), 6, CTX)
    with mpmath.workprec(200):
        for k in range(7):
            ref = mpmath.fsum(((m + mpmath.mpf(tau)) / n) ** k
                              * mpmath.exp(-T * n * (((m + mpmath.mpf(tau)) / n) ** 2
                                                     - 2j * mu * (m + mpmath.mpf(tau)) / n) / 2)
                              for m in range(-400, 401)) / n
            assert abs(mom[k] - ref) < 1e-40


def test_window_grows_with_degree():
    assert window_radius(8, 9.0, CTX, degree=32) > window_radius(8, 9.0, CTX, degree=0)


def test_nodes_are_on_the_lattice():
    nodes = lattice_nodes(LatticeSpec(4, 0.5), WeightParams(9.0, 0.0), CTX)
    assert all(abs(x * 4 - 0.5 - round(float(x * 4 - 0.5))) < 1e-40 for x in nodes)
    lo, hi = node_range(4, 0.5, 2.0)
    assert (lo + 0.5) / 4 >= -2 and (hi + 0.5) / 4 <= 2


def test_bad_inputs():
    with pytest.raises(DomainError):
        LatticeSpec(0, 0.0)
    with pytest.raises(DomainError):
        WeightParams(-1.0, 0.0)
    with pytest.raises(DomainError):
        moments(LatticeSpec(3, 0.0), WeightParams(5.0, 0.0), -1)
