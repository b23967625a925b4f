"""Working-precision context, Gaussian tail cutoffs and periodic quadrature."""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath
from mpmath import mp

from .errors import DomainError


@dataclass(frozen=True)
class PrecisionContext:
    """Immutable precision policy shared by the extended-precision modules.

    tail_epsilon defaults to 2**-(mantissa_bits - 16).
    """

    mantissa_bits: int = 256
    tail_epsilon: float | None = None
    max_newton_iters: int = 50
    n_tau: int = 64

    def __post_init__(self):
        if int(self.mantissa_bits) != self.mantissa_bits or self.mantissa_bits < 64:
            raise DomainError("mantissa_bits must be an integer >= 64",
                              module="precision", mantissa_bits=self.mantissa_bits)
        if self.tail_epsilon is None:
            object.__setattr__(self, "tail_epsilon", 2.0 ** -(self.mantissa_bits - 16))
        if not (0 < self.tail_epsilon < 2.0 ** -32):
            raise DomainError("tail_epsilon must lie in (0, 2^-32)",
                              module="precision", tail_epsilon=self.tail_epsilon)
        if self.max_newton_iters < 1:
            raise DomainError("max_newton_iters must be positive", module="precision")
        if self.n_tau < 2:
            raise DomainError("n_tau must be at least 2", module="precision")

    def workprec(self):
        """Context manager setting mpmath's working precision to mantissa_bits."""
        return mp.workprec(self.mantissa_bits)

    @property
    def existence_threshold(self):
        # relative size below which a norm is treated as vanished
        return mpmath.mpf(2) ** (-(self.mantissa_bits // 2))

    def as_dict(self):
        return {"mantissa_bits": self.mantissa_bits,
                "tail_epsilon": float(self.tail_epsilon),
                "max_newton_iters": self.max_newton_iters,
                "n_tau": self.n_tau}


DEFAULT_CONTEXT = PrecisionContext()


def _log_gauss_tail(scale, X):
    # log of int_X^inf exp(-scale x^2) dx
    r = mpmath.sqrt(scale)
    return mpmath.log(mpmath.sqrt(mpmath.pi) / (2 * r)) + mpmath.log(mpmath.erfc(r * X))


def gaussian_tail_cutoff(scale, eps):
    """Smallest X >= 0 with int_X^inf exp(-scale x^2) dx <= eps.

    Found by bisection on the erfc form of the tail, so the result is
    monotone in both arguments.
    """
    if not scale > 0:
        raise DomainError("scale must be positive", module="precision", scale=scale)
    if not eps > 0:
        raise DomainError("eps must be positive", module="precision", eps=eps)
    with mp.workprec(80):
        scale = mpmath.mpf(scale)
        log_eps = mpmath.log(mpmath.mpf(eps))
        if _log_gauss_tail(scale, 0) <= log_eps:
            return 0.0
        hi = mpmath.mpf(1) / mpmath.sqrt(scale)
        while _log_gauss_tail(scale, hi) > log_eps:
            hi *= 2
        lo = mpmath.mpf(0)
        for _ in range(200):
            mid = (lo + hi) / 2
            if _log_gauss_tail(scale, mid) > log_eps:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15 * hi:
                break
        return float(hi)


def polynomial_tail_cutoff(scale, eps, degree, radius):
    """Cutoff that also absorbs polynomial growth of degree `degree`.

    A monic polynomial of degree d orthogonal on an interval of half width
    `radius` has size about ((|x| + radius) / (radius / 2))**d off the
    interval, while its norm is about (radius/2)**d.  The returned X is the
    smallest value past the plain Gaussian cutoff at which
    ((X + radius)/(radius/2))**d * exp(-scale X^2) <= eps.
    """
    X0 = gaussian_tail_cutoff(scale, eps)
    if degree <= 0:
        return X0
    import math
    log_eps = math.log(eps)

    def excess(X):
        return degree * math.log(2.0 * (X + radius) / radius) - scale * X * X - log_eps

    if excess(X0) <= 0:
        return X0
    hi = max(X0, 1e-3)
    while excess(hi) > 0:
        hi *= 1.5
    lo = X0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def periodic_trapezoid(f, N):
    """(1/N) * sum_{j<N} f(j/N) with exact accumulation of mpmath values."""
    if int(N) != N or N < 2:
        raise DomainError("periodic_trapezoid needs N >= 2", module="precision", N=N)
    N = int(N)
    vals = [f(mpmath.mpf(j) / N) for j in range(N)]
    return mpmath.fsum(vals) / N
