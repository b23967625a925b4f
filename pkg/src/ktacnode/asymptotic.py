"""Large-n winding distribution in the k-tacnode regime."""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
from mpmath import mp

from .errors import AccuracyError, DomainError, RegimeError
from .painleve import hm_table, uv_state
from .precision import DEFAULT_CONTEXT
from .winding import WindingDistribution, k_bin

REGIME_BOUND = 100.0


@dataclass(frozen=True)
class TacnodeRegime:
    n: int
    T: float
    mu: float
    k: int
    s: float


def _regime_guard(T, n):
    if n < 1:
        raise DomainError("n must be positive", module="asymptotic", n=n)
    if abs(math.pi ** 2 - T) * n ** (2.0 / 3.0) > REGIME_BOUND:
        raise RegimeError("(pi^2 - T) n^(2/3) outside the tacnode regime",
                          module="asymptotic", T=T, n=n,
                          value=abs(math.pi ** 2 - T) * n ** (2.0 / 3.0))


def s_series(T, n):
    """Two-term expansion in eps = pi^2 - T."""
    eps = math.pi ** 2 - T
    return 2 ** (2 / 3) * n ** (2 / 3) / math.pi ** 2 * (eps + 4 * eps * eps / (5 * math.pi ** 2))


def s_integral(T, n, mu=0.0, ctx=DEFAULT_CONTEXT):
    """s from the equilibrium density integrated from i mu to z_1.

    X = 3 pi n (z_1 - i mu - int rho) is real for T > pi^2 and purely
    imaginary for T < pi^2, so the principal X^(2/3) is not real in the
    second case.  The value returned is -cbrt(X^2) with the real cube root,
    which is real on both sides of pi^2 and matches the series.
    """
    with ctx.workprec():
        T = mpmath.mpf(T)
        mu = mpmath.mpf(mu)
        d = 2 / T * mpmath.sqrt(mpmath.mpc(T - mpmath.pi ** 2))  # z_1 - i mu

        def rho_along(t):
            v = t * d
            return T / (2 * mpmath.pi) * mpmath.sqrt(4 / T - v * v) * d

        integral = mpmath.quad(rho_along, [0, 1])
        X = 3 * mpmath.pi * n * (d - integral)
        X2 = X * X
        if abs(mpmath.im(X2)) > 1e-8 * max(1, abs(X2)):
            raise AccuracyError("X^2 not real; branch ambiguity", module="asymptotic",
                                imag=float(mpmath.im(X2)))
        x2 = mpmath.re(X2)
        return float(-mpmath.sign(x2) * mpmath.cbrt(abs(x2)))


def s_param(T, n, method="series", ctx=DEFAULT_CONTEXT):
    _regime_guard(T, n)
    if method == "series":
        return s_series(T, n)
    if method == "integral":
        return s_integral(T, n, 0.0, ctx)
    raise DomainError(f"unknown method {method!r}", module="asymptotic")


def regime_factors(s, mu, n, k, uv):
    """(F_U, F_V, R_U, R_V) for the state uv = (U_k, V_k) at s."""
    if uv.k != k:
        raise DomainError("state has the wrong k", module="asymptotic", k=k, state_k=uv.k)
    if abs(uv.s - s) > 1e-12 * max(1.0, abs(s)):
        raise DomainError("state evaluated at a different s", module="asymptotic")
    e = math.exp(2 * n * math.pi * mu)
    up = (2 * n) ** ((2 * k + 1) / 3)
    vp = (2 * n) ** ((2 * k - 1) / 3)
    FU = 1j * e * uv.U / (2 * up)
    FV = -1j * vp * uv.V / (2 * e)
    sign = -1 if n % 2 else 1
    RU = sign * e * uv.U / (math.pi * up)
    RV = sign * vp * uv.V / (math.pi * e)
    for name, F in (("F_U", FU), ("F_V", FV)):
        if F.real < -1e-10 or abs(F.imag) > 1e-10 * max(1.0, abs(F)):
            raise AccuracyError(f"{name} not a non-negative real", module="asymptotic",
                                value=str(F))
    return FU.real, FV.real, RU, RV


def winding_distribution_asymptotic(n, T, mu, ctx=DEFAULT_CONTEXT, omega_min=None,
                                    omega_max=None, s=None, hm0=None):
    """Three-point distribution on {k-1, k, k+1}; zero elsewhere in the window."""
    if s is None:
        s = s_param(T, n, "series", ctx)
    else:
        _regime_guard(T, n)
    k = k_bin(n, mu)
    if k < 0:
        raise RegimeError("negative k is outside the regime", module="asymptotic", mu=mu)
    if hm0 is None:
        hm0 = hm_table(0.0)
    uv = uv_state(s, k, hm0)
    FU, FV, RU, RV = regime_factors(s, mu, n, k, uv)
    Z = 1 + FU + FV
    p = {k - 1: FV / Z, k: 1 / Z, k + 1: FU / Z}
    lo = k - 1 if omega_min is None else min(omega_min, k - 1)
    hi = k + 1 if omega_max is None else max(omega_max, k + 1)
    omegas = list(range(lo, hi + 1))
    probs = [p.get(w, 0.0) for w in omegas]
    extra = {"k": k, "s": s, "F_U": FU, "F_V": FV}
    return WindingDistribution(n, float(T), float(mu), omegas, probs, 0, 0.0, extra)
