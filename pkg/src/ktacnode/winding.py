"""Exact finite-n winding distribution from Hankel ratios over the lattice shift."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import mpmath
from mpmath import mp

from .errors import AccuracyError, DomainError, NonexistenceError
from .orthopoly import op_system
from .precision import DEFAULT_CONTEXT

IMAG_TOLERANCE = 1e-10


def epsilon_n(n):
    """Lattice offset of the probabilistic kernel: 0 for odd n, 1/2 for even n."""
    return mpmath.mpf(0) if n % 2 else mpmath.mpf(1) / 2


def k_bin(n, mu):
    """Integer k with (k - 1/2) L < mu <= (k + 1/2) L, L = log n / (3 pi n)."""
    if n < 2:
        raise DomainError("k-bin needs n >= 2", module="winding", n=n)
    L = math.log(n) / (3 * math.pi * n)
    k = math.ceil(mu / L - 0.5)
    # guard the half-open edges against rounding in mu / L
    if not (k - 0.5) * L < mu:
        k += 1
    if not mu <= (k + 0.5) * L:
        k -= 1
    return k


@dataclass
class WindingDistribution:
    n: int
    T: float
    mu: float
    omegas: list
    probs: list
    quadrature_nodes: int
    residual_imag: float
    extra: dict = field(default_factory=dict)

    def prob(self, omega):
        try:
            return self.probs[self.omegas.index(omega)]
        except ValueError:
            return 0.0

    def to_json_obj(self):
        out = {"n": self.n, "T": self.T, "mu": self.mu, "omega": list(self.omegas),
               "prob": list(self.probs), "residual_imag": self.residual_imag}
        out.update(self.extra)
        return out


def log_hankel_profile(n, T, mu, N_tau, ctx=DEFAULT_CONTEXT):
    """log H_n at tau = j/N_tau for j < N_tau, and at epsilon(n).

    Returns (list of per-node norm tuples, norms at epsilon(n)).
    """
    systems = []
    for j in range(N_tau):
        tau = mpmath.mpf(j) / N_tau
        try:
            sys = op_system(n, T, mu, tau, ctx, full_residual=False)
        except NonexistenceError as e:
            e.context["tau"] = float(tau)
            raise
        systems.append(sys)
    eps = epsilon_n(n)
    ref = None
    for j, sys in enumerate(systems):
        if mpmath.mpf(j) / N_tau == eps:
            ref = sys
    if ref is None:
        ref = op_system(n, T, mu, eps, ctx, full_residual=False)
    return systems, ref


def winding_distribution_exact(n, T, mu, omega_min=None, omega_max=None, N_tau=None,
                               ctx=DEFAULT_CONTEXT, systems=None):
    """P(omega) = e^{2 pi i omega eps} int_0^1 H(tau)/H(eps) e^{-2 pi i omega tau} dtau.

    The tau integral is the periodic trapezoid rule on N_tau nodes.
    """
    if n < 1:
        raise DomainError("n must be >= 1", module="winding")
    if not T > 0:
        raise DomainError("T must be positive", module="winding")
    if N_tau is None:
        N_tau = ctx.n_tau
    if omega_min is None or omega_max is None:
        k = k_bin(n, mu) if n >= 2 else 0
        omega_min = k - 4 if omega_min is None else omega_min
        omega_max = k + 4 if omega_max is None else omega_max
    if omega_min > omega_max:
        raise DomainError("empty omega range", module="winding")
    if n >= 2:
        k = k_bin(n, mu)
        if omega_min > k - 2 or omega_max < k + 2:
            raise DomainError("omega range must cover k-2..k+2", module="winding",
                              k=k, omega_min=omega_min, omega_max=omega_max)
    wmax = max(abs(omega_min), abs(omega_max))
    if not N_tau > 2 * wmax + 2:
        raise DomainError("N_tau must exceed 2 max|omega| + 2", module="winding",
                          N_tau=N_tau, max_abs_omega=wmax)
    if systems is None:
        systems, ref = log_hankel_profile(n, T, mu, N_tau, ctx)
    else:
        ref = op_system(n, T, mu, epsilon_n(n), ctx, full_residual=False)
    with ctx.workprec():
        eps = epsilon_n(n)
        ratios = []
        for sys in systems:
            s = mpmath.fsum(mpmath.log(a / b) for a, b in zip(sys.norms, ref.norms))
            ratios.append(mpmath.exp(s))
        omegas = list(range(omega_min, omega_max + 1))
        probs, imag = [], 0.0
        for w in omegas:
            acc = mpmath.fsum(r * mpmath.expjpi(-2 * w * mpmath.mpf(j) / N_tau)
                              for j, r in enumerate(ratios)) / N_tau
            val = mpmath.expjpi(2 * w * eps) * acc
            imag = max(imag, float(abs(mpmath.im(val))))
            probs.append(float(mpmath.re(val)))
    if imag > IMAG_TOLERANCE:
        raise AccuracyError("winding probabilities have imaginary parts",
                            module="winding", residual_imag=imag, N_tau=N_tau)
    return WindingDistribution(n, float(T), float(mu), omegas, probs, N_tau, imag,
                               {"ctx": ctx.as_dict()})


def check_derivative_identity(n, T, mu, tau, delta, ctx=DEFAULT_CONTEXT):
    """|central difference of log H_n in tau - (i n T mu + T c_sub(tau))|."""
    if not 0 < delta < 0.125:
        raise DomainError("delta must lie in (0, 1/8)", module="winding", delta=delta)
    with ctx.workprec():
        tau = mpmath.mpf(tau)
        delta = mpmath.mpf(delta)
        sp = op_system(n, T, mu, tau + delta, ctx, full_residual=False)
        sm = op_system(n, T, mu, tau - delta, ctx, full_residual=False)
        s0 = op_system(n, T, mu, tau, ctx, full_residual=False)
        fd = mpmath.fsum(mpmath.log(a / b) for a, b in zip(sp.norms, sm.norms)) / (2 * delta)
        rhs = 1j * n * mpmath.mpf(T) * mpmath.mpf(mu) + mpmath.mpf(T) * s0.c_sub
        return float(abs(fd - rhs))
