import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from ktacnode.errors import DomainError
from ktacnode.precision import (PrecisionContext, gaussian_tail_cutoff, periodic_trapezoid,
                                polynomial_tail_cutoff)


def test_default_tail_epsilon_tracks_bits():
    ctx = PrecisionContext(mantissa_bits=128)
    assert ctx.tail_epsilon == 2.0 ** -112
    assert ctx.as_dict()["mantissa_bits"] == 128


@pytest.mark.parametrize("kw", [{"mantissa_bits": 32}, {"tail_epsilon": 0.1},
                                {"max_newton_iters": 0}, {"n_tau": 1}])
def test_context_rejects_bad_values(kw):
    with pytest.raises(DomainError):
        PrecisionContext(**kw)


def test_workprec_sets_mpmath_precision():
    ctx = PrecisionContext(mantissa_bits=200)
    with ctx.workprec():
        assert mpmath.mp.prec == 200


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 50), st.integers(20, 200))
def test_gaussian_cutoff_bounds_the_tail(scale, bits):
    eps = 2.0 ** -bits
    X = gaussian_tail_cutoff(scale, eps)
    # oracle: the closed-form tail at X is below eps, and not far below it
    tail = math.sqrt(math.pi) / (2 * math.sqrt(scale)) * math.erfc(math.sqrt(scale) * X)
    assert tail <= eps * (1 + 1e-9)
    slack = math.sqrt(math.pi) / (2 * math.sqrt(scale)) * math.erfc(math.sqrt(scale) * X * 0.98)
    assert X == 0 or slack > eps


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 20), st.integers(0, 80))
def test_polynomial_cutoff_covers_growth(scale, degree):
    eps = 1e-40
    r = 1.0
    X = polynomial_tail_cutoff(scale, eps, degree, r)
    assert X >= gaussian_tail_cutoff(scale, eps)
    if degree == 0:
        return
    assert degree * math.log(2 * (X + r) / r) - scale * X * X <= math.log(eps) + 1e-6


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 7), st.integers(16, 40))
def test_trapezoid_exact_on_trig_polynomials(m, N):
    with mpmath.workprec(128):
        val = periodic_trapezoid(lambda t: mpmath.cos(2 * mpmath.pi * m * t), N)
        assert abs(val - (1 if m == 0 else 0)) < 1e-25
