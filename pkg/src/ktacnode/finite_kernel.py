"""Exact finite-n extended kernel, correlation determinants and the scaled comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
from mpmath import mp

from .errors import AccuracyError, DomainError
from .lattice import node_range
from .orthopoly import eval_all, eval_poly, op_system
from .precision import DEFAULT_CONTEXT, gaussian_tail_cutoff, polynomial_tail_cutoff
from .winding import epsilon_n

TIME_SCALE = 2.0 ** (-10.0 / 3.0) * math.pi ** 2
ANGLE_SCALE = 2.0 ** (-5.0 / 3.0) * math.pi


@dataclass(frozen=True)
class ExtendedKernelQuery:
    t_i: float
    t_j: float
    phi: float
    theta: float
    n: int | None = None
    T: float | None = None
    mu: float | None = None
    tau: float | None = None


def _window(sys, a_time, ctx, scale=1.0):
    X = polynomial_tail_cutoff(a_time * sys.n / 2.0, ctx.tail_epsilon, max(sys.n - 1, 0),
                               2.0 / math.sqrt(float(sys.T)))
    m_lo, m_hi = node_range(sys.n, sys.tau, scale * X)
    with mp.workprec(sys.mantissa_bits):
        tau = mpmath.mpf(sys.tau)
        return [(m + tau) / sys.n for m in range(m_lo, m_hi + 1)]


def _s_all(sys, a_time, phis, ctx, window_scale=1.0):
    """S_{j,a}(phi) for j = 0..n-1 and every phi in phis (list of lists)."""
    if not a_time > 0:
        raise DomainError("a_time must be positive; the lattice sum diverges otherwise",
                          module="finite_kernel", a_time=a_time)
    n = sys.n
    nodes = _window(sys, a_time, ctx, window_scale)
    with mp.workprec(sys.mantissa_bits):
        a = mpmath.mpf(a_time)
        mu = mpmath.mpf(sys.mu)
        out = [[mpmath.mpc(0)] * n for _ in phis]
        for x in nodes:
            p = eval_all(sys, x, upto=n - 1)
            base = mpmath.exp(-a * n * x * x / 2) * mpmath.expj(a * n * mu * x) / n
            for r, phi in enumerate(phis):
                wx = base * mpmath.expj(mpmath.mpf(phi) * n * x)
                row = out[r]
                for j in range(n):
                    row[j] += p[j] * wx
        return out


def s_transform(sys, j, a_time, phi, ctx=DEFAULT_CONTEXT, window_scale=1.0):
    """(1/n) sum_x p_j(x) exp(-a n (x^2 - 2 i mu x)/2) exp(i phi n x) over the lattice."""
    if int(j) != j or not 0 <= j <= sys.n - 1:
        raise DomainError("j must lie in 0..n-1", module="finite_kernel", j=j)
    return _s_all(sys, a_time, [phi], ctx, window_scale)[0][int(j)]


def s_transform_bruteforce(sys, j, a_time, phi, width):
    """Naive Horner summation over |x| <= width; a slow reference route."""
    m_lo, m_hi = node_range(sys.n, sys.tau, width)
    n = sys.n
    with mp.workprec(sys.mantissa_bits):
        a = mpmath.mpf(a_time)
        mu = mpmath.mpf(sys.mu)
        tau = mpmath.mpf(sys.tau)
        terms = []
        for m in range(m_lo, m_hi + 1):
            x = (m + tau) / n
            terms.append(eval_poly(sys, j, x) * mpmath.exp(-a * n * (x * x - 2j * mu * x) / 2)
                         * mpmath.expj(mpmath.mpf(phi) * n * x))
        return mpmath.fsum(terms) / n


def heat_sum(n, tau, dt, dphi, ctx=DEFAULT_CONTEXT, window_scale=1.0):
    """(1/2pi) sum_{s in L} exp(-dt n s^2/2 - i n dphi s), dphi = theta - phi."""
    if not dt > 0:
        raise DomainError("dt must be positive", module="finite_kernel", dt=dt)
    X = gaussian_tail_cutoff(dt * n / 2.0, ctx.tail_epsilon) * window_scale
    m_lo, m_hi = node_range(n, tau, X)
    with ctx.workprec():
        dt_ = mpmath.mpf(dt)
        dp = mpmath.mpf(dphi)
        tau_ = mpmath.mpf(tau)
        terms = []
        for m in range(m_lo, m_hi + 1):
            s = (m + tau_) / n
            terms.append(mpmath.exp(-dt_ * n * s * s / 2) * mpmath.expj(-n * dp * s))
        return mpmath.fsum(terms) / (2 * mpmath.pi)


def heat_sum_poisson(n, tau, dt, dphi, ctx=DEFAULT_CONTEXT, n_images=None):
    """The same sum after Poisson resummation: a wrapped Gaussian in the angle."""
    if not dt > 0:
        raise DomainError("dt must be positive", module="finite_kernel", dt=dt)
    with ctx.workprec():
        dt_ = mpmath.mpf(dt)
        dp = mpmath.mpf(dphi)
        if n_images is None:
            n_images = int(math.ceil(math.sqrt(2 * dt * ctx.mantissa_bits / n) / (2 * math.pi))) + 2
        terms = []
        for l in range(-n_images, n_images + 1):
            arg = dp + 2 * mpmath.pi * l
            terms.append(mpmath.expj(2 * mpmath.pi * l * mpmath.mpf(tau))
                         * mpmath.exp(-n * arg * arg / (2 * dt_)))
        pref = mpmath.sqrt(2 * mpmath.pi * n / dt_) / (2 * mpmath.pi)
        return pref * mpmath.fsum(terms)


def _system_for(q, sys, ctx):
    if sys is None:
        if None in (q.n, q.T, q.mu):
            raise DomainError("query needs n, T, mu when no OP system is given",
                              module="finite_kernel")
        tau = epsilon_n(q.n) if q.tau is None else q.tau
        return op_system(q.n, q.T, q.mu, tau, ctx, full_residual=False)
    for name in ("n", "T", "mu", "tau"):
        v = getattr(q, name)
        if v is not None and float(v) != float(getattr(sys, name)):
            raise DomainError(f"query {name} does not match the OP system", module="finite_kernel")
    return sys


def _check_times(sys, *ts):
    T = float(sys.T)
    for t in ts:
        if not 0 < t < T:
            raise DomainError("times must lie strictly inside (0, T)", module="finite_kernel",
                              t=t, T=T)


def finite_kernel_mp(q, sys=None, ctx=DEFAULT_CONTEXT, window_scale=1.0):
    """K_{t_i,t_j}(phi, theta) as an mpc at the system's precision."""
    sys = _system_for(q, sys, ctx)
    _check_times(sys, q.t_i, q.t_j)
    T = float(sys.T)
    A = _s_all(sys, T - q.t_i, [q.phi], ctx, window_scale)[0]
    B = _s_all(sys, q.t_j, [-q.theta], ctx, window_scale)[0]
    with mp.workprec(sys.mantissa_bits):
        total = mpmath.fsum(a * b / h for a, b, h in zip(A, B, sys.norms))
        K = sys.n / (2 * mpmath.pi) * total
        if q.t_i < q.t_j:
            K -= heat_sum(sys.n, sys.tau, q.t_j - q.t_i, q.theta - q.phi, ctx, window_scale)
        return K


def finite_kernel(q, sys=None, ctx=DEFAULT_CONTEXT, window_scale=1.0):
    """Extended kernel K_{t_i,t_j}(phi, theta) as a Python complex."""
    return complex(finite_kernel_mp(q, sys, ctx, window_scale))


def density_profile(sys, t, thetas, ctx=DEFAULT_CONTEXT):
    """Equal-time diagonal K_{t,t}(theta, theta) on a grid, sharing the lattice sums."""
    _check_times(sys, t)
    T = float(sys.T)
    A = _s_all(sys, T - t, list(thetas), ctx)
    B = _s_all(sys, t, [-th for th in thetas], ctx)
    out = []
    with mp.workprec(sys.mantissa_bits):
        for a_row, b_row in zip(A, B):
            K = sys.n / (2 * mpmath.pi) * mpmath.fsum(a * b / h for a, b, h in zip(a_row, b_row, sys.norms))
            out.append(complex(K))
    return out


def correlation(points, sys, ctx=DEFAULT_CONTEXT, imag_tol=1e-8):
    """m-point correlation det[K_{t_i,t_j}(theta_i, theta_j)] for points (theta, t)."""
    if not points:
        raise DomainError("need at least one point", module="finite_kernel")
    times = [t for _, t in points]
    if any(b < a for a, b in zip(times, times[1:])):
        raise DomainError("times must be weakly increasing", module="finite_kernel")
    if float(sys.tau) != epsilon_n(sys.n):
        raise DomainError("correlations need tau = epsilon(n)", module="finite_kernel",
                          tau=float(sys.tau))
    m = len(points)
    with mp.workprec(sys.mantissa_bits):
        M = mpmath.matrix(m, m)
        for i, (th_i, t_i) in enumerate(points):
            for j, (th_j, t_j) in enumerate(points):
                M[i, j] = finite_kernel_mp(ExtendedKernelQuery(t_i, t_j, th_i, th_j), sys, ctx)
        D = mpmath.det(M)
        scale = max(abs(D), mpmath.mpf(10) ** -300)
        # a repeated point gives a zero determinant; its imaginary part is rounding
        if abs(mpmath.im(D)) > imag_tol * max(scale, mpmath.mpf(1e-30)):
            raise AccuracyError("correlation determinant is not real", module="finite_kernel",
                                imag=float(mpmath.im(D)), real=float(mpmath.re(D)))
        return float(mpmath.re(D))


def scaled_coordinates(n, T, xi, eta, tau_i, tau_j):
    """(t_i, t_j, phi, theta) for the tacnode scaling around t = T/2, angle -pi."""
    dt = TIME_SCALE * n ** (-1.0 / 3.0)
    da = ANGLE_SCALE * n ** (-2.0 / 3.0)
    return (T / 2 + dt * tau_i, T / 2 + dt * tau_j, -math.pi - da * xi, -math.pi - da * eta)


def jacobian(n):
    """pi / (2^{5/3} n^{2/3}): the angle spacing per unit of the scaled variable."""
    return math.pi / (2.0 ** (5.0 / 3.0) * n ** (2.0 / 3.0))


def scaled_comparison(n, k, xi, eta, tau_i, tau_j, ctx=DEFAULT_CONTEXT, T=None, sys=None,
                      lax=None, contour=None, s=None):
    """(finite_scaled, asymptotic, abs_diff) for the k-tacnode kernel at desk scale.

    T defaults to pi^2 (1 - n^{-2/3}); mu = k log n / (3 pi n).
    """
    from .asymptotic import s_param
    from .lax import tacnode_kernel

    if T is None:
        T = math.pi ** 2 * (1 - n ** (-2.0 / 3.0))
    mu = k * math.log(n) / (3 * math.pi * n)
    if s is None:
        s = s_param(T, n)
    if sys is None:
        sys = op_system(n, T, mu, epsilon_n(n), ctx, full_residual=False)
    t_i, t_j, phi, theta = scaled_coordinates(n, T, xi, eta, tau_i, tau_j)
    K = finite_kernel(ExtendedKernelQuery(t_i, t_j, phi, theta), sys, ctx)
    finite_scaled = K * jacobian(n)
    asym = tacnode_kernel(xi, eta, tau_i, tau_j, s, k, lax=lax, contour=contour)
    return finite_scaled, asym, abs(finite_scaled - asym)
