import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import airy

from ktacnode.errors import AccuracyError, DomainError
from ktacnode.painleve import (backlund_step, hm_oracle_fredholm, log_derivatives,
                               propagate_uv, seed_uv0, solve_hm, uv_state)


@pytest.fixture(scope="module")
def hm32():
    return solve_hm(1.5, s_max=24.0)


@pytest.fixture(scope="module")
def hm12():
    return solve_hm(0.5)


def test_table_residual_small(hm0):
    assert hm0.max_residual < 1e-10
    assert np.all(hm0.u > 0)


@pytest.mark.parametrize("s", [-2.0, 0.0, 2.0])
def test_hm_matches_fredholm(hm0, s):
    assert abs(hm0.evaluate(s) - hm_oracle_fredholm(s)) < 1e-6


def test_fredholm_methods_agree():
    for s in (0.5, 2.5):
        a = hm_oracle_fredholm(s, method="logdet")
        b = hm_oracle_fredholm(s, method="resolvent")
        assert abs(a - b) < 1e-7


def test_fredholm_decays_on_right():
    vals = [hm_oracle_fredholm(s) for s in np.linspace(4, 8, 9)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert hm_oracle_fredholm(-2.0) > 0


def test_right_tail_airy(hm0):
    assert abs(hm0.evaluate(8.0) / airy(8.0)[0] - 1) < 1e-4


def test_right_tail_alpha_three_halves(hm32):
    assert abs(hm32.evaluate(20.0) * 20 / 1.5 - 1) < 0.05


def test_left_tail(hm0):
    s = -10.0
    assert abs(hm0.evaluate(s) / math.sqrt(-s / 2) - 1) < 2e-3


def test_solver_guards():
    with pytest.raises(DomainError):
        solve_hm(-0.7)
    with pytest.raises(DomainError):
        solve_hm(0.0, s_min=-3.0)
    with pytest.raises(DomainError):
        solve_hm(0.0, grid_size=50)
    with pytest.raises(DomainError):
        hm_oracle_fredholm(0.0, quad_order=10)


def test_table_range_guard(hm0):
    with pytest.raises(DomainError):
        hm0.evaluate(40.0)


def test_seed_properties(hm0):
    st0 = seed_uv0(hm0, 1.3)
    assert st0.wronskian == 0
    uv = st0.U * st0.V
    assert abs(uv.imag) == 0 and uv.real > 0
    st8 = seed_uv0(hm0, 8.0)
    assert abs(st8.U + 1j * airy(8.0)[0]) < 1e-4 * airy(8.0)[0]


@settings(max_examples=25, deadline=None)
@given(st.floats(-8.0, 8.0), st.integers(0, 3))
def test_backlund_product_and_wronskian(hm0, s, k):
    state = uv_state(s, k, hm0)
    nxt = backlund_step(state)
    assert nxt.V * state.U == pytest.approx(4, abs=1e-12)
    assert abs(nxt.wronskian - (k + 1)) < 1e-8


@pytest.mark.parametrize("k", [0, 1, 2, 3])
@pytest.mark.parametrize("s", [-6.0, -3.0, 0.0, 3.0, 6.0])
def test_wronskian_equals_k(hm0, k, s):
    assert abs(uv_state(s, k, hm0).wronskian - k) < 1e-8


def test_ladder_signs(hm0):
    # U = -i a, V = i b with a, b > 0
    for k in range(4):
        for s in (-5.0, 0.0, 5.0):
            st_ = uv_state(s, k, hm0)
            assert abs(st_.U.real) < 1e-12 * abs(st_.U) and st_.U.imag < 0
            assert abs(st_.V.real) < 1e-12 * abs(st_.V) and st_.V.imag > 0


def test_first_step_growth(hm0):
    ratios = []
    for s in (8.0, 10.0, 12.0):
        V1 = uv_state(s, 1, hm0).V
        ratios.append(abs(V1) / (8 * math.sqrt(math.pi) * s ** 0.25 * math.exp(2 / 3 * s ** 1.5)))
    errs = [abs(r - 1) for r in ratios]
    assert errs[0] < 1e-2 and errs[2] < errs[1] < errs[0]


def test_propagate_identity_and_round_trip(hm0):
    st0 = seed_uv0(hm0, -3.0)
    assert propagate_uv(st0, -3.0) is st0
    back = propagate_uv(propagate_uv(st0, 1.0), -3.0)
    assert np.max(np.abs(back.vector() - st0.vector())) < 1e-9


def test_propagated_left_tail(hm0):
    st6 = propagate_uv(seed_uv0(hm0, 0.0), -6.0)
    assert abs(st6.U / (-1j * math.sqrt(3.0)) - 1) < 0.02


def test_propagation_commutes_with_table(hm0):
    # the integrator and the table agree where both are well conditioned
    for k in (0, 1):
        a = propagate_uv(uv_state(-2.0, k, hm0), 2.0)
        b = uv_state(2.0, k, hm0)
        assert np.max(np.abs(a.vector() - b.vector())) < 1e-8 * np.max(np.abs(b.vector()))


def test_propagation_detects_pole():
    # a generic real-type state blows up in finite s
    from ktacnode.painleve import PainleveState
    bad = PainleveState(0.0, 1.0, 1.0, 1.0, 1.0, 0)
    with pytest.raises(AccuracyError):
        propagate_uv(bad, 10.0)


def test_log_derivatives_zero_drift(hm0):
    p, q, P, Q, x = log_derivatives(seed_uv0(hm0, 0.7))
    ratio = hm0.evaluate(0.7, 1) / hm0.evaluate(0.7)
    assert p == pytest.approx(ratio, rel=1e-14) and q == pytest.approx(ratio, rel=1e-14)


@pytest.mark.parametrize("x", [-2.0, 0.0, 2.0])
def test_log_derivatives_are_hastings_mcleod(hm0, hm32, hm12, x):
    s = -(2.0 ** (-1.0 / 3.0)) * x
    _, _, P, Q, xx = log_derivatives(uv_state(s, 1, hm0))
    assert xx == pytest.approx(x, abs=1e-14)
    assert abs(P + hm32.evaluate(x)) < 1e-8
    assert abs(Q - hm12.evaluate(x)) < 1e-8
