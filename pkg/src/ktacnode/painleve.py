"""Hastings-McLeod solutions of Painleve II and the coupled (U_k, V_k) ladder.

u'' = 2u^3 + s u - alpha is solved as a two-point boundary value problem by
Chebyshev-Lobatto spectral elements with damped Newton.  Elements keep
relative accuracy in the exponentially small right tail, which a single
global polynomial does not.

The coupled system U'' = 2 U^2 V + s U, V'' = 2 U V^2 + s V has purely
imaginary solutions U = -i a, V = i b with a, b > 0 on the real line, and
the Backlund step maps (a_k, b_k) to (a_{k+1}, b_{k+1}) algebraically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.integrate import solve_ivp
from scipy.special import airy

from .errors import AccuracyError, DomainError, SolverError


# ---------------------------------------------------------------------------
# spectral elements

def _cheb_lobatto(p):
    """Chebyshev-Lobatto nodes ascending on [-1, 1] and the differentiation matrix."""
    x = -np.cos(np.pi * np.arange(p + 1) / p)
    c = np.ones(p + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(p + 1)
    X = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (X + np.eye(p + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


@dataclass
class HMTable:
    alpha: float
    grid: np.ndarray
    u: np.ndarray
    u_prime: np.ndarray
    max_residual: float
    breaks: np.ndarray = field(repr=False, default=None)
    coef: list = field(repr=False, default=None)   # chebyshev coefficients per element
    newton_iters: int = 0

    def _element(self, s):
        s = float(s)
        if s < self.breaks[0] - 1e-12 or s > self.breaks[-1] + 1e-12:
            raise DomainError("s outside table range", module="painleve",
                              s=s, lo=float(self.breaks[0]), hi=float(self.breaks[-1]))
        e = int(np.searchsorted(self.breaks, s, side="right")) - 1
        return min(max(e, 0), len(self.breaks) - 2)

    def evaluate(self, s, derivative=0):
        """Spectral interpolant of u (or its derivative) at s."""
        e = self._element(s)
        a, b = self.breaks[e], self.breaks[e + 1]
        t = (2.0 * float(s) - a - b) / (b - a)
        c = self.coef[e]
        if derivative:
            c = C.chebder(c, derivative) * (2.0 / (b - a)) ** derivative
        return float(C.chebval(t, c))

    def residual_at(self, s):
        u = self.evaluate(s)
        return self.evaluate(s, 2) - 2 * u ** 3 - s * u + self.alpha

    def to_csv(self):
        lines = [f"# alpha={self.alpha!r}", f"# max_residual={self.max_residual:.3e}",
                 "s,u,u_prime"]
        for s, u, up in zip(self.grid, self.u, self.u_prime):
            lines.append(f"{s:.12g},{u:.17g},{up:.17g}")
        return "\n".join(lines) + "\n"


def _left_asymptotic(s, alpha):
    # u ~ sqrt(t/2) + sum_j c_j t^(1/2 - 3j/2), t = -s
    t = -s
    a2 = alpha * alpha
    r2 = math.sqrt(2.0)
    c = (alpha / 2,
         r2 * (-6 * a2 - 1) / 16,
         alpha * (a2 + 11 / 16),
         r2 * (-420 * a2 * a2 - 708 * a2 - 73) / 256)
    return math.sqrt(t / 2) + sum(cj * t ** (0.5 - 1.5 * (j + 1)) for j, cj in enumerate(c))


def _right_asymptotic(s, alpha):
    if alpha == 0:
        return float(airy(s)[0])
    return alpha / s + (2 * alpha - 2 * alpha ** 3) / s ** 4


def _initial_guess(s, alpha):
    sig = 0.5 * (1 - np.tanh(s))
    left = np.sqrt(np.maximum(-s / 2.0, 0.0) + 0.05)
    right = airy(np.maximum(s, -2.0))[0] + alpha / np.sqrt(s * s + 1.0)
    return sig * left + (1 - sig) * right


def solve_hm(alpha=0.0, s_min=-14.0, s_max=16.0, grid_size=401, max_newton_iters=50,
             element_width=1.0, degree=14, tol=1e-10):
    """Hastings-McLeod solution of u'' = 2u^3 + su - alpha on [s_min, s_max].

    Dirichlet data come from the two-term asymptotics at each end.  The
    table holds grid_size uniform samples plus the element representation
    used by evaluate().
    """
    if not alpha > -0.5:
        raise DomainError("alpha must exceed -1/2", module="painleve", alpha=alpha)
    if not s_min < -5:
        raise DomainError("s_min must be < -5", module="painleve", s_min=s_min)
    if not s_max > 8:
        raise DomainError("s_max must be > 8", module="painleve", s_max=s_max)
    if grid_size < 200:
        raise DomainError("grid_size must be >= 200", module="painleve", grid_size=grid_size)
    alpha = float(alpha)
    n_el = max(2, int(math.ceil((s_max - s_min) / element_width)))
    breaks = np.linspace(s_min, s_max, n_el + 1)
    p = degree
    xr, Dr = _cheb_lobatto(p)
    N = n_el * p + 1
    S = np.empty(N)
    for e in range(n_el):
        a, b = breaks[e], breaks[e + 1]
        S[e * p:e * p + p + 1] = 0.5 * (a + b) + 0.5 * (b - a) * xr
    h = breaks[1] - breaks[0]
    D1 = Dr * (2.0 / h)
    D2 = D1 @ D1

    # assemble the linear part once: rows for interior collocation, interfaces, ends
    L = np.zeros((N, N))
    interior = np.zeros(N, dtype=bool)
    for e in range(n_el):
        sl = slice(e * p, e * p + p + 1)
        for i in range(1, p):
            L[e * p + i, sl] = D2[i]
            interior[e * p + i] = True
    for e in range(n_el - 1):
        r = (e + 1) * p
        L[r, e * p:e * p + p + 1] += D1[p]
        L[r, (e + 1) * p:(e + 1) * p + p + 1] -= D1[0]
    L[0, 0] = 1.0
    L[N - 1, N - 1] = 1.0
    rhs_bc = np.zeros(N)
    rhs_bc[0] = _left_asymptotic(s_min, alpha)
    rhs_bc[N - 1] = _right_asymptotic(s_max, alpha)

    def F(u):
        r = L @ u
        r[interior] -= 2 * u[interior] ** 3 + S[interior] * u[interior] - alpha
        r -= rhs_bc
        return r

    def J(u):
        Jm = L.copy()
        idx = np.nonzero(interior)[0]
        Jm[idx, idx] -= 6 * u[idx] ** 2 + S[idx]
        return Jm

    u = _initial_guess(S, alpha)
    u[0], u[-1] = rhs_bc[0], rhs_bc[-1]
    res = F(u)
    nrm = np.max(np.abs(res))
    it = 0
    converged = False
    for it in range(1, max_newton_iters + 1):
        du = np.linalg.solve(J(u), -res)
        lam = 1.0
        while True:
            trial = u + lam * du
            r2 = F(trial)
            n2 = np.max(np.abs(r2))
            if n2 < nrm or lam < 1e-4:
                break
            lam *= 0.5
        u, res, nrm = trial, r2, n2
        if np.max(np.abs(lam * du)) <= 1e-15 * (1 + np.max(np.abs(u))) or nrm < 1e-14:
            converged = True
            break
    if not converged:
        raise SolverError("Newton iteration did not converge", module="painleve",
                          alpha=alpha, iterations=it, residual=float(nrm))

    coef = []
    for e in range(n_el):
        vals = u[e * p:e * p + p + 1]
        coef.append(C.chebfit(xr, vals, p))
    tab = HMTable(alpha, None, None, None, 0.0, breaks, coef, it)
    # independent residual at points between collocation nodes
    mids = []
    for e in range(n_el):
        a, b = breaks[e], breaks[e + 1]
        xm = 0.5 * (xr[:-1] + xr[1:])
        mids.extend(0.5 * (a + b) + 0.5 * (b - a) * xm)
    max_res = max(abs(tab.residual_at(s)) for s in mids)
    grid = np.linspace(s_min, s_max, grid_size)
    tab.grid = grid
    tab.u = np.array([tab.evaluate(s) for s in grid])
    tab.u_prime = np.array([tab.evaluate(s, 1) for s in grid])
    tab.max_residual = float(max_res)
    if max_res > tol:
        raise AccuracyError("collocation residual above tolerance", module="painleve",
                            alpha=alpha, max_residual=float(max_res))
    if alpha >= 0 and np.any(tab.u <= 0):
        raise AccuracyError("solution not positive on the grid", module="painleve",
                            alpha=alpha)
    return tab


_HM_CACHE = {}


def hm_table(alpha=0.0, **kw):
    """Cached solve_hm with default arguments."""
    key = (float(alpha), tuple(sorted(kw.items())))
    if key not in _HM_CACHE:
        _HM_CACHE[key] = solve_hm(alpha, **kw)
    return _HM_CACHE[key]


# ---------------------------------------------------------------------------
# Airy-kernel Fredholm determinant

def _airy_kernel(x, y):
    ai_x, aip_x, _, _ = airy(x)
    ai_y, aip_y, _, _ = airy(y)
    X, Y = np.meshgrid(x, y, indexing="ij")
    num = np.outer(ai_x, aip_y) - np.outer(aip_x, ai_y)
    diff = X - Y
    with np.errstate(divide="ignore", invalid="ignore"):
        K = num / diff
    close = np.abs(diff) < 1e-12
    if np.any(close):
        diag = (aip_x ** 2 - x * ai_x ** 2)
        K[close] = np.broadcast_to(diag[:, None], K.shape)[close]
    return K


def _nodes(s, quad_order, length):
    t, w = np.polynomial.legendre.leggauss(quad_order)
    x = s + 0.5 * length * (t + 1)
    return x, 0.5 * length * w


def airy_log_det(s, quad_order=60, length=16.0):
    """log det(I - K_Ai) on (s, s + length) by Gauss-Legendre Nystrom."""
    x, w = _nodes(s, quad_order, length)
    sw = np.sqrt(w)
    A = sw[:, None] * _airy_kernel(x, x) * sw[None, :]
    sign, logdet = np.linalg.slogdet(np.eye(len(x)) - A)
    if sign <= 0:
        raise AccuracyError("Fredholm determinant not positive", module="painleve", s=s)
    return logdet


def _q_resolvent(s, quad_order, length):
    x, w = _nodes(s, quad_order, length)
    K = _airy_kernel(x, x)
    Q = np.linalg.solve(np.eye(len(x)) - K * w[None, :], airy(x)[0])
    ks = _airy_kernel(np.array([s + 1e-300]), x)[0]
    return float(airy(s)[0] + np.dot(ks * w, Q))


def hm_oracle_fredholm(s, quad_order=60, method="auto", h=0.05, length=16.0):
    """Hastings-McLeod u(s) for alpha = 0 from the Airy-kernel determinant.

    method "logdet": q^2 = -(d/ds)^2 log det via a 7-point central stencil.
    method "resolvent": q(s) = ((I - K)^{-1} Ai)(s), no differencing.
    "auto" uses logdet for s <= 3 and the resolvent beyond, where q^2 drops
    below the differencing noise floor.
    """
    if quad_order < 30:
        raise DomainError("quad_order must be >= 30", module="painleve")
    if method == "auto":
        method = "logdet" if s <= 3 else "resolvent"
    if method == "resolvent":
        return _q_resolvent(float(s), quad_order, length)
    if method != "logdet":
        raise DomainError(f"unknown method {method!r}", module="painleve")
    c = np.array([2, -27, 270, -490, 270, -27, 2]) / 180.0
    vals = np.array([airy_log_det(s + j * h, quad_order, length) for j in range(-3, 4)])
    q2 = -np.dot(c, vals) / h ** 2
    if q2 < 0:
        raise AccuracyError("negative q^2 from log-det stencil", module="painleve", s=s)
    return float(math.sqrt(q2))


# ---------------------------------------------------------------------------
# coupled system and Backlund ladder

@dataclass(frozen=True)
class PainleveState:
    s: float
    U: complex
    U_prime: complex
    V: complex
    V_prime: complex
    k: int

    @property
    def wronskian(self):
        return self.U * self.V_prime - self.V * self.U_prime

    @property
    def H(self):
        """U^2 V^2 + s U V + U' V'."""
        return (self.U * self.V) ** 2 + self.s * self.U * self.V + self.U_prime * self.V_prime

    def vector(self):
        return np.array([self.U, self.U_prime, self.V, self.V_prime], dtype=complex)


def seed_uv0(hm0, s):
    """(U_0, V_0) = (-i u, i u) with u = u_HM^(0) interpolated from the table."""
    if hm0.alpha != 0:
        raise DomainError("seed needs the alpha = 0 table", module="painleve")
    u = hm0.evaluate(s)
    up = hm0.evaluate(s, 1)
    return PainleveState(float(s), -1j * u, -1j * up, 1j * u, 1j * up, 0)


UNDERFLOW_GUARD = 1e-280


def backlund_step(state):
    """(U_k, V_k) -> (U_{k+1}, V_{k+1}).

    U_{k+1} = U'^2/(4U) - U''/8 - sU/8 and V_{k+1} = 4/U, with U'' taken
    from the coupled equation.  The new derivatives come from differentiating
    these closed forms and eliminating second derivatives the same way.
    """
    U, Up, V, Vp, s = state.U, state.U_prime, state.V, state.V_prime, state.s
    if abs(U) < UNDERFLOW_GUARD:
        raise AccuracyError("U_k too small for a Backlund step", module="painleve",
                            s=s, k=state.k)
    Upp = 2 * U * U * V + s * U
    U1 = Up * Up / (4 * U) - Upp / 8 - s * U / 8
    V1 = 4 / U
    # d/ds of Up^2/(4U) - (2U^2V + sU)/8 - sU/8 = Up^2/(4U) - U^2 V/4 - sU/4
    Uppp_part = (2 * Up * Upp * U - Up ** 3) / (4 * U * U)
    U1p = Uppp_part - (2 * U * Up * V + U * U * Vp) / 4 - (U + s * Up) / 4
    V1p = -4 * Up / (U * U)
    return PainleveState(s, U1, U1p, V1, V1p, state.k + 1)


def uv_state(s, k, hm0=None):
    """Pointwise provider: seed from the alpha = 0 table, then k Backlund steps."""
    if hm0 is None:
        hm0 = hm_table(0.0)
    st = seed_uv0(hm0, s)
    for _ in range(k):
        st = backlund_step(st)
    return st


def _rhs(s, y):
    U, Up, V, Vp = y
    return np.array([Up, 2 * U * U * V + s * U, Vp, 2 * U * V * V + s * V])


def propagate_uv(state, s_target, rtol=1e-12, atol=1e-300, guard=1e-250, blowup=1e12):
    """Integrate the coupled system from state.s to s_target (DOP853)."""
    if s_target == state.s:
        return state
    y0 = state.vector()
    scale = max(1.0, float(np.max(np.abs(y0))))

    def near_zero(s, y):
        return min(abs(y[0]), abs(y[2])) - guard
    near_zero.terminal = True

    def blow(s, y):
        return blowup * scale - max(abs(y[0]), abs(y[2]))
    blow.terminal = True

    sol = solve_ivp(_rhs, (state.s, s_target), y0, method="DOP853", rtol=rtol,
                    atol=atol, events=[near_zero, blow])
    if sol.status == 1:
        loc = float(sol.t_events[0][0] if len(sol.t_events[0]) else sol.t_events[1][0])
        raise AccuracyError("trajectory approaches a zero or pole of U, V",
                            module="painleve", location=loc, k=state.k)
    if sol.status != 0:
        raise SolverError(sol.message, module="painleve")
    U, Up, V, Vp = sol.y[:, -1]
    out = PainleveState(float(s_target), U, Up, V, Vp, state.k)
    drift = abs(out.wronskian - state.wronskian)
    if drift > 1e-9 * max(1.0, abs(state.wronskian)):
        raise AccuracyError("wronskian drift above 1e-9", module="painleve",
                            drift=float(drift), k=state.k)
    return out


def log_derivatives(state):
    """p = U'/U, q = V'/V and the rescaled P, Q at x = -2^(1/3) s.

    P(x) = 2^(-1/3) p(-2^(-1/3) x), Q likewise; at x = -2^(1/3) s the
    argument of p is s itself.
    """
    if state.U == 0 or state.V == 0:
        raise DomainError("U or V vanishes", module="painleve", s=state.s)
    p = state.U_prime / state.U
    q = state.V_prime / state.V
    c = 2.0 ** (-1.0 / 3.0)
    x = -(2.0 ** (1.0 / 3.0)) * state.s
    return p, q, c * p, c * q, x
