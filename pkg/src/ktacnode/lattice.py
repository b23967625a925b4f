"""The shifted lattice {(m + tau)/n}, the complex Gaussian weight and moments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
from mpmath import mp

from .errors import DomainError
from .precision import DEFAULT_CONTEXT, polynomial_tail_cutoff


@dataclass(frozen=True)
class LatticeSpec:
    n: int
    tau: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer", module="lattice", n=self.n)


@dataclass(frozen=True)
class WeightParams:
    T: float
    mu: float

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError("T must be positive", module="lattice", T=self.T)


def window_radius(n, T, ctx=DEFAULT_CONTEXT, degree=None, time=None):
    """Half width of the truncation window.

    The Gaussian factor is exp(-time*n*x^2/2) (time defaults to T); the
    polynomial factor has total degree `degree` (default 2n, enough for
    every moment used by the degree-n system).  The drift factor is
    unimodular and needs no room.
    """
    if degree is None:
        degree = 2 * n
    if time is None:
        time = T
    return polynomial_tail_cutoff(time * n / 2.0, ctx.tail_epsilon, degree,
                                  2.0 / math.sqrt(T))


def node_range(n, tau, X):
    """Integer range of m with |(m + tau)/n| <= X."""
    tau = float(tau)
    m_lo = math.ceil(-X * n - tau)
    m_hi = math.floor(X * n - tau)
    return m_lo, m_hi


def lattice_nodes(spec, w, ctx=DEFAULT_CONTEXT, degree=None, time=None, X=None):
    """Sorted nodes (m + tau)/n inside the window, as mpf at ctx precision."""
    n = spec.n
    if X is None:
        X = window_radius(n, w.T, ctx, degree, time)
    m_lo, m_hi = node_range(n, spec.tau, X)
    with ctx.workprec():
        tau = mpmath.mpf(spec.tau)
        return [(m + tau) / n for m in range(m_lo, m_hi + 1)]


def weight(x, n, T, mu):
    """exp(-(T n / 2)(x^2 - 2 i mu x)) at the current mpmath precision."""
    return mpmath.exp(-T * n * x * x / 2) * mpmath.expj(T * n * mu * x)


def weight_values(nodes, n, T, mu, ctx=DEFAULT_CONTEXT, time=None):
    """Weights divided by n (the 1/n of the pairing is folded in)."""
    with ctx.workprec():
        T = mpmath.mpf(T)
        mu = mpmath.mpf(mu)
        a = T if time is None else mpmath.mpf(time)
        return [weight(x, n, a, mu) / n for x in nodes]


@lru_cache(maxsize=256)
def _moments_cached(n, T, mu, tau, max_order, bits, eps):
    from .precision import PrecisionContext
    ctx = PrecisionContext(mantissa_bits=bits, tail_epsilon=eps)
    spec = LatticeSpec(n, tau)
    w = WeightParams(T, mu)
    nodes = lattice_nodes(spec, w, ctx, degree=max(max_order, 2 * n))
    if not nodes:
        raise DomainError("empty lattice window", module="lattice", n=n, tau=tau)
    wts = weight_values(nodes, n, T, mu, ctx)
    with ctx.workprec():
        out = []
        pw = list(wts)
        for k in range(max_order + 1):
            out.append(mpmath.fsum(pw))
            pw = [p * x for p, x in zip(pw, nodes)]
        return tuple(out)


def moments(spec, w, max_order, ctx=DEFAULT_CONTEXT):
    """m_k = (1/n) sum_x x^k exp(-(Tn/2)(x^2 - 2 i mu x)), k = 0..max_order."""
    if max_order < 0:
        raise DomainError("max_order must be >= 0", module="lattice")
    return list(_moments_cached(spec.n, _key(w.T), _key(w.mu), _key(spec.tau),
                                int(max_order), ctx.mantissa_bits, ctx.tail_epsilon))


def _key(v):
    # mpf and float keys both hash; keep mpf exact
    return v if isinstance(v, mpmath.mpf) else float(v)
