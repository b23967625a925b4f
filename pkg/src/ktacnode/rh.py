"""Equilibrium measure, g-function and the outer model matrix.

All square roots and fourth roots here have their cut on the band
[a, b] = [-2/sqrt(T) + i mu, 2/sqrt(T) + i mu].  Boundary values on the
band are selected with side="+" (from above) or side="-" (from below).
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
from mpmath import mp

from .errors import DomainError
from .orthopoly import eval_poly
from .precision import DEFAULT_CONTEXT


@dataclass(frozen=True)
class EquilibriumData:
    T: object
    mu: object
    a: object
    b: object
    ell: object

    @classmethod
    def build(cls, T, mu):
        T = mpmath.mpf(T)
        mu = mpmath.mpf(mu)
        r = 2 / mpmath.sqrt(T)
        return cls(T, mu, mpmath.mpc(-r, mu), mpmath.mpc(r, mu),
                   -1 - mpmath.log(T) - T * mu * mu / 2)

    @property
    def half_width(self):
        return 2 / mpmath.sqrt(self.T)


def rho(w, T, mu):
    """Semicircle density (T/2pi) sqrt(4/T - (w - i mu)^2)."""
    v = mpmath.mpmathify(w) - 1j * mpmath.mpf(mu)
    return mpmath.mpf(T) / (2 * mpmath.pi) * mpmath.sqrt(4 / mpmath.mpf(T) - v * v)


def rho_mass(T, mu):
    """Integral of rho over the band (should be 1)."""
    r = 2 / mpmath.sqrt(mpmath.mpf(T))
    return mpmath.re(mpmath.quad(lambda x: rho(mpmath.mpc(x, mu), T, mu), [-r, 0, r]))


def _on_band(v, r):
    return mpmath.im(v) == 0 and abs(mpmath.re(v)) <= r


def R_shifted(v, T, side=None):
    """R as a function of v = z - i mu: R^2 = v^2 - 4/T, R ~ v, cut on [-r, r]."""
    T = mpmath.mpf(T)
    c = 4 / T
    v = mpmath.mpmathify(v)
    r = mpmath.sqrt(c)
    if _on_band(v, r):
        if side not in ("+", "-"):
            raise DomainError("point on the band needs side '+' or '-'", module="rh")
        x = mpmath.re(v)
        val = 1j * mpmath.sqrt(c - x * x)
        return val if side == "+" else -val
    return v * mpmath.sqrt(1 - c / (v * v))


def R(z, T, mu, side=None):
    return R_shifted(mpmath.mpmathify(z) - 1j * mpmath.mpf(mu), T, side)


def V_potential(z, T, mu):
    z = mpmath.mpmathify(z)
    return mpmath.mpf(T) * z * z / 2 - 1j * mpmath.mpf(T) * mpmath.mpf(mu) * z


def g_function(z, T, mu, side=None):
    """g(z) = g0(z - i mu); g0(v) = (T/4) v (v - R) - log(v - R) - 1/2 + log(2/T).

    The log is principal, which places its cut on (-inf + i mu, a]; points on
    the ray (-inf + i mu, b] need side "+" or "-".
    """
    T = mpmath.mpf(T)
    mu = mpmath.mpf(mu)
    v = mpmath.mpmathify(z) - 1j * mu
    r = 2 / mpmath.sqrt(T)
    on_ray = mpmath.im(v) == 0 and mpmath.re(v) <= r
    if on_ray and side not in ("+", "-"):
        raise DomainError("z on the cut; pass side '+' or '-'", module="rh",
                          z=str(z))
    if on_ray:
        Rv = R_shifted(v, T, side)
        q = v - Rv
        lg = mpmath.log(abs(q)) + 1j * mpmath.arg(q)
        if mpmath.re(q) < 0 and mpmath.im(q) == 0:
            # left of the band: v - R is negative real; take the limit from the side
            lg = mpmath.log(-q) + (1j * mpmath.pi if side == "-" else -1j * mpmath.pi)
    else:
        Rv = R_shifted(v, T)
        q = v - Rv
        lg = mpmath.log(q)
    return T / 4 * v * (v - Rv) - lg - mpmath.mpf(1) / 2 + mpmath.log(2 / T)


def g_log_integral(z, T, mu):
    """g(z) as the log potential of rho by adaptive quadrature."""
    T = mpmath.mpf(T)
    mu = mpmath.mpf(mu)
    r = 2 / mpmath.sqrt(T)
    z = mpmath.mpmathify(z)
    return mpmath.quad(lambda x: mpmath.log(z - mpmath.mpc(x, mu)) * rho(mpmath.mpc(x, mu), T, mu),
                       [-r, 0, r])


def variational(x, T, mu):
    """g_+ + g_- - V - ell at the point x + i mu."""
    eq = EquilibriumData.build(T, mu)
    z = mpmath.mpc(x, mu)
    return (g_function(z, T, mu, "+") + g_function(z, T, mu, "-")
            - V_potential(z, T, mu) - eq.ell)


def gamma(z, T, mu, side=None):
    """((z - a)/(z - b))^(1/4) with cut on the band and gamma -> 1 at infinity."""
    eq = EquilibriumData.build(T, mu)
    z = mpmath.mpmathify(z)
    v = z - 1j * eq.mu
    if _on_band(v, eq.half_width):
        if side not in ("+", "-"):
            raise DomainError("point on the band needs side '+' or '-'", module="rh")
        ratio = abs((z - eq.a) / (z - eq.b))
        ph = mpmath.expjpi(mpmath.mpf(-1) / 4 if side == "+" else mpmath.mpf(1) / 4)
        return mpmath.root(ratio, 4) * ph
    return mpmath.power((z - eq.a) / (z - eq.b), mpmath.mpf(1) / 4)


def d_function(z, T, mu, side=None):
    """d(z) = (R(z) + 2i/sqrt(T)) / (z - i mu)."""
    T = mpmath.mpf(T)
    z = mpmath.mpmathify(z)
    v = z - 1j * mpmath.mpf(mu)
    return (R_shifted(v, T, side) + 2j / mpmath.sqrt(T)) / v


def outer_model(z, T, mu, k, side=None):
    """M_out(z) as a 2x2 mpmath matrix."""
    gm = gamma(z, T, mu, side)
    d = d_function(z, T, mu, side)
    gi = 1 / gm
    A = mpmath.matrix([[(gm + gi) / 2, (gm - gi) / (-2j)],
                       [(gm - gi) / (2j), (gm + gi) / 2]])
    ph = mpmath.expjpi(mpmath.mpf(k) / 2)          # e^{i k pi / 2}
    L = mpmath.matrix([[1 / ph, 0], [0, ph]])
    Rm = mpmath.matrix([[ph, 0], [0, 1 / ph]])
    dk = mpmath.matrix([[d ** k, 0], [0, d ** (-k)]])
    return L * A * Rm * dk


def op_asymptotics_check(n, z, sys, eq, k, eps=None):
    """(ratio11, ratio21) comparing p_n, p_{n-1}/h_{n-1} with the outer model."""
    with mp.workprec(sys.mantissa_bits):
        z = mpmath.mpmathify(z)
        if eps is None:
            eps = mpmath.mpf(0.25) / mpmath.sqrt(eq.T)
        if abs(mpmath.im(z) - eq.mu) <= eps:
            raise DomainError("z too close to the band", module="rh", z=str(z))
        M = outer_model(z, eq.T, eq.mu, k)
        g = g_function(z, eq.T, eq.mu)
        pn = eval_poly(sys, n, z)
        pm = eval_poly(sys, n - 1, z)
        r11 = pn * mpmath.exp(-n * g) / M[0, 0]
        r21 = pm / sys.norms[n - 1] * mpmath.exp(-n * (g - eq.ell)) / M[1, 0]
        return r11, r21


def structure_check(T, mu, k, n_points=20, bits=256):
    """Residuals of the outer-model structure on n_points interior band points.

    det M = 1 (band and off-band points), M+ = M- [[0,1],[-1,0]] on the
    band, d+ d- = -1 on the band, and the mass of rho.
    """
    with mp.workprec(bits):
        eq = EquilibriumData.build(T, mu)
        r = eq.half_width
        J = mpmath.matrix([[0, 1], [-1, 0]])
        det_res = jump_res = dd_res = mpmath.mpf(0)
        for j in range(n_points):
            x = r * mpmath.cos(mpmath.pi * (j + mpmath.mpf(1) / 2) / n_points)
            z = mpmath.mpc(x, eq.mu)
            Mp = outer_model(z, T, mu, k, "+")
            Mm = outer_model(z, T, mu, k, "-")
            jump_res = max(jump_res, mpmath.mnorm(Mp - Mm * J, 1))
            dd_res = max(dd_res, abs(d_function(z, T, mu, "+") * d_function(z, T, mu, "-") + 1))
            det_res = max(det_res, abs(mpmath.det(Mp) - 1), abs(mpmath.det(Mm) - 1))
            off = mpmath.mpc(x, eq.mu + (j + 1) * mpmath.mpf(0.3))
            det_res = max(det_res, abs(mpmath.det(outer_model(off, T, mu, k)) - 1))
        mass_res = abs(rho_mass(T, mu) - 1)
        return {"det_residual": float(det_res), "jump_residual": float(jump_res),
                "dd_residual": float(dd_res), "mass_residual": float(mass_res),
                "n_points": n_points}
