"""Jimbo-Miwa zeta-equation along Sigma_T and the k-tacnode kernel.

Only the column of L~_k that decays at both ends of a contour component is
ever needed: column 2 on the upper component (f = -L12, g = -L22) and
column 1 on the lower one (f = L11, g = L21).  Writing that column as
w(zeta) zeta^(-sigma k) e^(sigma i theta), theta = (4/3) zeta^3 + s zeta,
with sigma = -1 for column 2 and +1 for column 1, the normalized vector w
tends to a unit vector at infinity and obeys
    w' = (A(zeta) + sigma i theta'(zeta) - sigma k / zeta) w.
w is started from its formal 1/zeta series at the far end of each ray and
integrated inward; the two halves of a component meet at an anchor on the
horizontal segment, where their mismatch is the accuracy report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import AccuracyError, DomainError
from .painleve import PainleveState, hm_table, uv_state

SQRT3 = math.sqrt(3.0)


# ---------------------------------------------------------------------------
# contour

@dataclass
class SigmaTContour:
    """Two polylines with Gauss-Legendre nodes; optional vertical shift."""
    R_max: float = 6.0
    n_nodes: int = 64
    shift: float = 0.0

    def __post_init__(self):
        if self.R_max <= 2.5:
            raise DomainError("R_max must exceed the vertex radius 2", module="lax")
        t, w = np.polynomial.legendre.leggauss(self.n_nodes)
        self._t = 0.5 * (t + 1)
        self._w = 0.5 * w
        self.components = {"upper": self._component(+1), "lower": self._component(-1)}

    def vertices(self, side):
        h = 1j * self.shift
        if side > 0:
            return SQRT3 + 1j + h, -SQRT3 + 1j + h, np.exp(1j * np.pi / 6), np.exp(5j * np.pi / 6)
        # lower: from e^{-5 i pi/6} inf to -sqrt3 - i to sqrt3 - i to e^{-i pi/6} inf
        return -SQRT3 - 1j + h, SQRT3 - 1j + h, np.exp(-5j * np.pi / 6), np.exp(-1j * np.pi / 6)

    def _component(self, side):
        v_in, v_out, d_in, d_out = self.vertices(side)
        L = self.R_max - 2.0
        t, w = self._t, self._w
        # incoming ray, oriented from infinity to v_in
        ray_in = v_in + d_in * L * (1 - t)
        w_in = -d_in * L * w
        hor = v_in + (v_out - v_in) * t
        w_hor = (v_out - v_in) * w
        ray_out = v_out + d_out * L * t
        w_out = d_out * L * w
        nodes = np.concatenate([ray_in, hor, ray_out])
        weights = np.concatenate([w_in, w_hor, w_out])
        seg = np.concatenate([np.zeros(len(t), int), np.ones(len(t), int), 2 * np.ones(len(t), int)])
        return {"nodes": nodes, "weights": weights, "segment": seg, "t": np.concatenate([1 - t, t, t]),
                "v_in": v_in, "v_out": v_out, "d_in": d_in, "d_out": d_out}

    def all_nodes(self):
        up, lo = self.components["upper"], self.components["lower"]
        return (np.concatenate([up["nodes"], lo["nodes"]]),
                np.concatenate([up["weights"], lo["weights"]]))

    def refined(self, factor=2):
        return SigmaTContour(self.R_max, self.n_nodes * factor, self.shift)


# ---------------------------------------------------------------------------
# coefficient matrix and formal series

def coefficient_matrix(zeta, s, U, Up, V, Vp):
    """Jimbo-Miwa generator A(zeta) of the zeta-equation."""
    d = 1j * (s + 2 * U * V)
    return np.array([[-4j * zeta ** 2 - d, 4j * zeta * U - 2 * Up],
                     [-4j * zeta * V - 2 * Vp, 4j * zeta ** 2 + d]], dtype=complex)


def formal_series(col, s, k, U, Up, V, Vp, order=40):
    """Coefficients c_j (j = 0..order) of w = sum c_j zeta^-j for the given column.

    col = 1 (sigma = -1): c_0 = (0, 1); col = 0 (sigma = +1): c_0 = (1, 0).
    At each order m >= 1 a 2x2 system fixes the active component at order
    m+1 and the passive one at order m. With U V' - V U' = k its
    determinant is 8im for col 1 and -8im for col 0.
    """
    a = [0j] * (order + 2)
    b = [0j] * (order + 2)
    get = lambda arr, j: arr[j] if j >= 0 else 0j
    UV = U * V
    if col == 1:
        b[0] = 1.0
        a[1] = U / 2
        for m in range(1, order + 1):
            r1 = (-2j * s - 2j * UV) * get(a, m - 1) - 2 * Up * get(b, m - 1) + (k + m - 2) * get(a, m - 2)
            r2 = -1j * V * (s + UV) * a[m] + (V / 2) * (k + m - 1) * get(a, m - 1)
            M = np.array([[8j, -4j * U], [-2 * Vp, k + m + V * Up]])
            x = np.linalg.solve(M, np.array([r1, r2]))
            a[m + 1], b[m] = x[0], x[1]
    elif col == 0:
        a[0] = 1.0
        b[1] = V / 2
        for m in range(1, order + 1):
            r1 = 2 * Vp * get(a, m - 1) - (2j * s + 2j * UV) * get(b, m - 1) + (k - m + 2) * get(b, m - 2)
            r2 = -1j * U * (s + UV) * b[m] + (U / 2) * (k - m + 1) * get(b, m - 1)
            M = np.array([[8j, -4j * V], [2 * Up, k - m - U * Vp]])
            x = np.linalg.solve(M, np.array([r1, r2]))
            b[m + 1], a[m] = x[0], x[1]
    else:
        raise DomainError("col must be 0 or 1", module="lax")
    return np.array([a[:order + 1], b[:order + 1]]).T


def series_value(coeffs, zeta):
    """Sum the formal series, truncated at its smallest block of three terms."""
    powers = zeta ** -np.arange(len(coeffs))
    terms = coeffs * powers[:, None]
    mags = np.max(np.abs(terms), axis=1)
    blocks = np.array([mags[j:j + 3].max() for j in range(1, len(mags) - 2)])
    stop = 1 + int(np.argmin(blocks)) if len(blocks) else len(coeffs)
    return terms[:stop].sum(axis=0)


# ---------------------------------------------------------------------------
# solution

@dataclass
class LaxSolution:
    s: float
    k: int
    state: PainleveState
    contour: SigmaTContour
    nodes: np.ndarray
    weights: np.ndarray
    f: np.ndarray
    g: np.ndarray
    fp: np.ndarray
    gp: np.ndarray
    w: np.ndarray            # normalized column at each node
    mismatch: float
    det_residual: float = float("nan")
    extra: dict = field(default_factory=dict)


def _normalized_rhs(col, s, k, U, Up, V, Vp):
    sig = 1 if col == 0 else -1

    def B(zeta):
        A = coefficient_matrix(zeta, s, U, Up, V, Vp)
        return A + (sig * 1j * (4 * zeta ** 2 + s) - sig * k / zeta) * np.eye(2)
    return B


def _integrate_path(B, z0, z1, w0, t_eval, rtol, atol):
    dz = z1 - z0

    def rhs(t, y):
        return dz * (B(z0 + t * dz) @ y)

    te = np.unique(np.append(np.asarray([] if t_eval is None else t_eval, float), 1.0))
    sol = solve_ivp(rhs, (0.0, 1.0), w0, method="DOP853", rtol=rtol, atol=atol, t_eval=te)
    if sol.status != 0:
        raise AccuracyError(sol.message, module="lax")
    vals = {float(t): sol.y[:, i] for i, t in enumerate(sol.t)}
    return sol.y[:, -1], vals


def _solve_component(comp, col, s, k, state, R_max, rtol, atol, order):
    U, Up, V, Vp = state.U, state.U_prime, state.V, state.V_prime
    B = _normalized_rhs(col, s, k, U, Up, V, Vp)
    coeffs = formal_series(col, s, k, U, Up, V, Vp, order)
    nodes, seg, t = comp["nodes"], comp["segment"], comp["t"]
    L = R_max - 2.0
    out = np.zeros((len(nodes), 2), dtype=complex)
    anchor = 0.5 * (comp["v_in"] + comp["v_out"])
    # incoming half: far end of the incoming ray -> v_in -> anchor
    far_in = comp["v_in"] + comp["d_in"] * L
    w0 = series_value(coeffs, far_in)
    idx = np.nonzero(seg == 0)[0]
    # ray parameter from far end (0) to vertex (1): node = far + (v - far) * p
    p_nodes = 1 - t[idx]
    wv, vals = _integrate_path(B, far_in, comp["v_in"], w0, p_nodes, rtol, atol)
    for i, p in zip(idx, p_nodes):
        out[i] = vals[float(p)]
    idx_h = np.nonzero((seg == 1) & (t < 0.5))[0]
    p_h = t[idx_h] / 0.5
    wa_in, vals = _integrate_path(B, comp["v_in"], anchor, wv, p_h, rtol, atol)
    for i, p in zip(idx_h, p_h):
        out[i] = vals[float(p)]
    # outgoing half: far end of the outgoing ray -> v_out -> anchor
    far_out = comp["v_out"] + comp["d_out"] * L
    w0 = series_value(coeffs, far_out)
    idx = np.nonzero(seg == 2)[0]
    p_nodes = 1 - t[idx]
    wv, vals = _integrate_path(B, far_out, comp["v_out"], w0, p_nodes, rtol, atol)
    for i, p in zip(idx, p_nodes):
        out[i] = vals[float(p)]
    idx_h = np.nonzero((seg == 1) & (t >= 0.5))[0]
    p_h = (1 - t[idx_h]) / 0.5
    wa_out, vals = _integrate_path(B, comp["v_out"], anchor, wv, p_h, rtol, atol)
    for i, p in zip(idx_h, p_h):
        out[i] = vals[float(p)]
    mismatch = float(np.max(np.abs(wa_in - wa_out)) / max(1.0, np.max(np.abs(wa_in))))
    return out, mismatch


def _column_from_w(w, zeta, col, s, k):
    sig = 1 if col == 0 else -1
    theta = 4.0 / 3.0 * zeta ** 3 + s * zeta
    return w * (zeta ** (sig * k) * np.exp(-sig * 1j * theta))[:, None]


def solve_lax(s, k, uv_provider=None, contour=None, tol=1e-8, rtol=1e-12, atol=1e-14,
              order=40):
    """Recessive columns of L~_k at every node of Sigma_T."""
    if contour is None:
        contour = SigmaTContour()
    if uv_provider is None:
        state = uv_state(s, k)
    elif isinstance(uv_provider, PainleveState):
        state = uv_provider
    else:
        state = uv_provider(s, k)
    if state.k != k or abs(state.s - s) > 1e-12 * max(1, abs(s)):
        raise DomainError("Painleve state does not match (s, k)", module="lax")
    return _solve_with_state(state, contour, tol, rtol, atol, order)


def _ode_residual(comp, w, B):
    """Midpoint residual of the Legendre interpolant of w on each segment."""
    seg, t = comp["segment"], comp["t"]
    L = np.abs(comp["nodes"][seg == 0] - comp["v_in"]).max() / np.max(1 - t[seg == 0])
    speeds = {0: -comp["d_in"] * L, 1: comp["v_out"] - comp["v_in"], 2: comp["d_out"] * L}
    starts = {0: comp["v_in"] + comp["d_in"] * L, 1: comp["v_in"], 2: comp["v_out"]}
    worst = 0.0
    for sg in (0, 1, 2):
        idx = np.nonzero(seg == sg)[0]
        tt = t[idx] if sg else 1 - t[idx]
        order = np.argsort(tt)
        tt, ww = tt[order], w[idx][order]
        x = 2 * tt - 1
        mid = 0.5 * (x[1:] + x[:-1])
        for c in range(2):
            coef = np.polynomial.legendre.legfit(x, ww[:, c], len(x) - 1)
            if c == 0:
                vals = np.empty((len(mid), 2), complex)
                ders = np.empty((len(mid), 2), complex)
            vals[:, c] = np.polynomial.legendre.legval(mid, coef)
            ders[:, c] = np.polynomial.legendre.legval(mid, np.polynomial.legendre.legder(coef)) * 2
        zeta = starts[sg] + speeds[sg] * 0.5 * (mid + 1)
        for z, v, d in zip(zeta, vals, ders):
            r = np.max(np.abs(d / speeds[sg] - B(z) @ v)) / max(1.0, np.max(np.abs(v)))
            worst = max(worst, r)
    return worst


def _det_residual(state, contour, rtol, atol, points=(-1.0, 0.5, 1.0)):
    """det [lower column 1, upper column 2] at real points; both belong to one solution."""
    s, k = state.s, state.k
    U, Up, V, Vp = state.U, state.U_prime, state.V, state.V_prime
    L = contour.R_max - 2.0
    cols = []
    for name, col in (("lower", 0), ("upper", 1)):
        comp = contour.components[name]
        B = _normalized_rhs(col, s, k, U, Up, V, Vp)
        coeffs = formal_series(col, s, k, U, Up, V, Vp)
        far = comp["v_in"] + comp["d_in"] * L
        wv, _ = _integrate_path(B, far, comp["v_in"], series_value(coeffs, far), None, rtol, atol)
        vals = []
        for x in points:
            wx, _ = _integrate_path(B, comp["v_in"], complex(x), wv, None, rtol, atol)
            vals.append(_column_from_w(wx[None, :], np.array([complex(x)]), col, s, k)[0])
        cols.append(vals)
    dets = [a[0] * b[1] - a[1] * b[0] for a, b in zip(*cols)]
    return float(max(abs(d - 1) for d in dets))


def _solve_with_state(state, contour, tol, rtol, atol, order, checks=True):
    s, k = state.s, state.k
    parts = []
    mism = 0.0
    ode_res = 0.0
    U, Up, V, Vp = state.U, state.U_prime, state.V, state.V_prime
    for name, col in (("upper", 1), ("lower", 0)):
        comp = contour.components[name]
        w, mm = _solve_component(comp, col, s, k, state, contour.R_max, rtol, atol, order)
        mism = max(mism, mm)
        if checks:
            ode_res = max(ode_res, _ode_residual(comp, w, _normalized_rhs(col, s, k, U, Up, V, Vp)))
        column = _column_from_w(w, comp["nodes"], col, s, k)
        if col == 1:
            f, g = -column[:, 0], -column[:, 1]
        else:
            f, g = column[:, 0], column[:, 1]
        A = np.array([coefficient_matrix(z, s, U, Up, V, Vp) for z in comp["nodes"]])
        fp = A[:, 0, 0] * f + A[:, 0, 1] * g
        gp = A[:, 1, 0] * f + A[:, 1, 1] * g
        parts.append((comp["nodes"], comp["weights"], f, g, fp, gp, w))
    cat = lambda i: np.concatenate([p[i] for p in parts])
    det_res = _det_residual(state, contour, rtol, atol) if checks else float("nan")
    sol = LaxSolution(s, k, state, contour, cat(0), cat(1), cat(2), cat(3), cat(4), cat(5),
                      cat(6), mism, det_res, {"ode_residual": ode_res})
    if mism > tol:
        raise AccuracyError("two-sided integration mismatch above tolerance", module="lax",
                            mismatch=mism, s=s, k=k)
    if checks and det_res > tol:
        raise AccuracyError("det L drifted from 1", module="lax", det_residual=det_res, s=s, k=k)
    return sol


def solve_lax_zero_drift(s, hm0=None, contour=None, tol=1e-8, rtol=1e-12, atol=1e-14,
                         source="fredholm"):
    """k = 0 solution built straight from u_HM in the real Flaschka-Newell form.

    source="fredholm" takes u and u' from the Airy-kernel determinant route,
    independent of the Painleve boundary value solver; "table" uses hm0.
    """
    if source == "fredholm":
        from .painleve import hm_oracle_fredholm
        u = hm_oracle_fredholm(s, method="resolvent")
        h = 1e-2
        q = [hm_oracle_fredholm(s + j * h, method="resolvent") for j in (-2, -1, 1, 2)]
        up = (q[0] - 8 * q[1] + 8 * q[2] - q[3]) / (12 * h)
    elif source == "table":
        if hm0 is None:
            hm0 = hm_table(0.0)
        u = hm0.evaluate(s)
        up = hm0.evaluate(s, 1)
    else:
        raise DomainError("source must be 'fredholm' or 'table'", module="lax")
    if contour is None:
        contour = SigmaTContour()
    # the zero-drift generator has off-diagonal entries 4 zeta u +- 2i u'
    # which is the Jimbo-Miwa form with U = -i u, V = i u
    state = PainleveState(float(s), -1j * u, -1j * up, 1j * u, 1j * up, 0)
    return _solve_with_state(state, contour, tol, rtol, atol, 40)


def conjugation_defect(lax):
    """k = 0 reflection symmetry of (f, g) across the imaginary axis and the real axis.

    For u on the upper component checks f(-conj u) = conj f(u),
    g(-conj u) = conj g(u), f(conj u) = -conj g(u) and g(conj u) = -conj f(u).  Returns the worst
    defect relative to the largest value of (f, g) on the contour.
    """
    u = lax.nodes
    worst = 0.0
    scale = max(np.abs(lax.f).max(), np.abs(lax.g).max())
    for i in np.nonzero(u.imag > 0)[0]:
        j = int(np.argmin(np.abs(u + np.conj(u[i]))))
        m = int(np.argmin(np.abs(u - np.conj(u[i]))))
        if abs(u[j] + np.conj(u[i])) > 1e-12 or abs(u[m] - np.conj(u[i])) > 1e-12:
            continue
        d = max(abs(lax.f[j] - np.conj(lax.f[i])), abs(lax.g[j] - np.conj(lax.g[i])),
                abs(lax.f[m] + np.conj(lax.g[i])), abs(lax.g[m] + np.conj(lax.f[i])))
        worst = max(worst, d / scale)
    return worst


def f_g(lax, u):
    """(f_k(u), g_k(u)) at a node u of the contour."""
    if np.imag(u) == 0:
        raise DomainError("u on the real axis is not on Sigma_T", module="lax")
    i = int(np.argmin(np.abs(lax.nodes - u)))
    if abs(lax.nodes[i] - u) > 1e-12 * (1 + abs(u)):
        raise DomainError("u is not a contour node", module="lax")
    return lax.f[i], lax.g[i]


def fit_inverse_zeta_coefficients(s, k, state=None, radii=(4.0, 10.0), n_samples=40,
                                  degree=12, start_radius=14.0, rtol=1e-13, atol=1e-16):
    """Recover the 1/zeta coefficient of W = L~ zeta^{-k sigma3} e^{i theta sigma3}.

    The column is started from the bare leading vector (no series) further
    out and integrated inward; samples on the rays are fitted by a
    polynomial in 1/zeta and divided by the fitted constant, which removes
    the normalization error of the crude start.  Returns a dict with the
    fitted (1,2), (2,1) and (1,1) entries of the coefficient.
    """
    if state is None:
        state = uv_state(s, k)
    U, Up, V, Vp = state.U, state.U_prime, state.V, state.V_prime
    out = {}
    rs = np.linspace(radii[0], radii[1], n_samples)[::-1]
    for col, direction in ((1, np.exp(1j * np.pi / 6)), (0, np.exp(-1j * np.pi / 6))):
        B = _normalized_rhs(col, s, k, U, Up, V, Vp)
        w0 = np.array([0, 1], complex) if col == 1 else np.array([1, 0], complex)
        z_far = start_radius * direction
        z_near = rs[-1] * direction
        p_eval = (start_radius - rs) / (start_radius - rs[-1])
        _, vals = _integrate_path(B, z_far, z_near, w0, p_eval, rtol, atol)
        W = np.array([vals[float(p)] for p in p_eval])
        x = 1.0 / (rs * direction)
        # least squares in the complex variable x
        Vm = np.vander(x, degree + 1, increasing=True)
        c0, *_ = np.linalg.lstsq(Vm, W[:, 0], rcond=None)
        c1, *_ = np.linalg.lstsq(Vm, W[:, 1], rcond=None)
        if col == 1:
            norm = c1[0]
            out["12"] = c0[1] / norm
            out["22"] = c1[1] / norm
        else:
            norm = c0[0]
            out["21"] = c1[1] / norm
            out["11"] = c0[1] / norm
    return out


# ---------------------------------------------------------------------------
# kernel

def phi_heat(xi, eta, tau_i, tau_j):
    if tau_i >= tau_j:
        return 0.0
    d = tau_j - tau_i
    return math.exp(-(xi - eta) ** 2 / (2 * d)) / math.sqrt(2 * math.pi * d)


def tacnode_kernel_tilde(xi, eta, tau_i, tau_j, lax):
    """Double contour quadrature; returns the complex value."""
    u = lax.nodes
    w = lax.weights
    eu = np.exp(tau_i * u ** 2 / 2 - 1j * xi * u) * w
    ev = np.exp(-tau_j * u ** 2 / 2 + 1j * eta * u) * w
    Fu, Gu = lax.f * eu, lax.g * eu
    Fv, Gv = lax.f * ev, lax.g * ev
    D = u[:, None] - u[None, :]
    close = np.abs(D) < 1e-8 * (1 + np.abs(u))[:, None]
    Dinv = np.where(close, 0.0, 1.0 / np.where(close, 1.0, D))
    total = Fu @ Dinv @ Gv - Gu @ Dinv @ Fv
    # removable diagonal: (f(u)g(v) - g(u)f(v))/(u - v) -> f'g - g'f
    ii, jj = np.nonzero(close)
    diag = (lax.fp[ii] * lax.g[ii] - lax.gp[ii] * lax.f[ii]) * eu[ii] * ev[jj]
    total = total + diag.sum()
    return total / (2 * np.pi) / (2j * np.pi)


def tacnode_kernel(xi, eta, tau_i, tau_j, s, k, lax=None, contour=None, imag_tol=1e-6):
    """K^(k)(xi, eta; s) = K~ - phi; raises if the imaginary residue exceeds imag_tol."""
    if lax is None:
        lax = solve_lax(s, k, contour=contour)
    if lax.k != k or abs(lax.s - s) > 1e-12 * max(1, abs(s)):
        raise DomainError("Lax solution does not match (s, k)", module="lax")
    val = tacnode_kernel_tilde(xi, eta, tau_i, tau_j, lax)
    if abs(val.imag) > imag_tol:
        raise AccuracyError("tacnode kernel has an imaginary part", module="lax",
                            imag=float(val.imag), xi=xi, eta=eta)
    return float(val.real) - phi_heat(xi, eta, tau_i, tau_j)
