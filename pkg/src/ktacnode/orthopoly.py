"""Monic orthogonal polynomials for the complex discrete Gaussian weight.

The pairing is bilinear, <f, g> = (1/n) sum_x f(x) g(x) w(x), with no complex
conjugation.  Two builders produce the same OPSystem:

* build_op_system works from the moment vector by modified Gram-Schmidt.
  It is the reference construction but the Hankel moment basis loses
  roughly 2.5 bits per degree, so use it with generous precision.
* build_op_system_lattice runs the Stieltjes procedure on node values.
  It keeps nearly full precision and is what the winding and kernel code use.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath
from mpmath import mp

from .errors import DomainError, NonexistenceError
from .lattice import LatticeSpec, WeightParams, lattice_nodes, moments, weight_values
from .precision import DEFAULT_CONTEXT


@dataclass(frozen=True)
class OPSystem:
    n: int
    T: object
    mu: object
    tau: object
    coeffs: tuple          # coeffs[j][i] = coefficient of x^i in p_j, j = 0..n
    norms: tuple           # h_0 .. h_{n-1}
    alphas: tuple          # x p_j = p_{j+1} + alpha_j p_j + beta_j p_{j-1}
    betas: tuple           # beta_0 = 0
    residual: object       # max_{j != k} |<p_j,p_k>| / |h_j h_k|^(1/2)
    mantissa_bits: int
    method: str = "mgs"

    @property
    def c_sub(self):
        """Coefficient of x^(n-1) in p_n."""
        return self.coeffs[self.n][self.n - 1] if self.n >= 1 else mpmath.mpc(0)

    @property
    def log_hankel(self):
        return mpmath.fsum(mpmath.log(h) for h in self.norms)


def _coeffs_from_recurrence(alphas, betas, n):
    coeffs = [[mpmath.mpf(1)]]
    prev = None
    for j in range(n):
        cur = coeffs[j]
        new = [mpmath.mpc(0)] * (j + 2)
        for i, c in enumerate(cur):
            new[i + 1] += c
            new[i] -= alphas[j] * c
        if prev is not None:
            for i, c in enumerate(prev):
                new[i] -= betas[j] * c
        new[j + 1] = mpmath.mpf(1)
        prev = cur
        coeffs.append(new)
    return coeffs


def _recurrence_from_coeffs(coeffs, norms, n):
    alphas, betas = [], []
    for j in range(n):
        sub_j = coeffs[j][j - 1] if j >= 1 else 0
        alphas.append(sub_j - coeffs[j + 1][j])
        betas.append(norms[j] / norms[j - 1] if j >= 1 else mpmath.mpc(0))
    return alphas, betas


def build_op_system(mom, n, T, mu, tau, ctx=DEFAULT_CONTEXT):
    """Modified Gram-Schmidt (two passes) on 1, x, ..., x^n under the moment pairing."""
    if len(mom) < 2 * n + 1:
        raise DomainError("need at least 2n+1 moments", module="orthopoly",
                          have=len(mom), need=2 * n + 1)
    thresh = ctx.existence_threshold
    with ctx.workprec():
        m = [mpmath.mpmathify(v) for v in mom]
        polys, trans, norms = [], [], []
        for j in range(n + 1):
            v = [mpmath.mpc(0)] * j + [mpmath.mpc(1)]
            for _pass in range(2):
                for i in range(j):
                    t = trans[i]
                    c = mpmath.fsum(v[a] * t[a] for a in range(len(v))) / norms[i]
                    p = polys[i]
                    for a in range(len(p)):
                        v[a] -= c * p[a]
                v[j] = mpmath.mpc(1)
            polys.append(v)
            # moment transform t[a] = <x^a, p_j> for a = 0..n
            t = [mpmath.fsum(v[b] * m[a + b] for b in range(j + 1))
                 for a in range(min(n, 2 * n - j) + 1)]
            trans.append(t)
            if j < n:
                terms = [v[a] * t[a] for a in range(j + 1)]
                h = mpmath.fsum(terms)
                scale = mpmath.fsum(abs(x) for x in terms)
                if scale == 0 or abs(h) <= thresh * scale:
                    raise NonexistenceError(
                        f"norm h_{j} vanishes to working precision", module="orthopoly",
                        degree=j, tau=float(mpmath.re(tau)))
                norms.append(h)
        resid = mpmath.mpf(0)
        for j in range(n):
            for k in range(j):
                pr = mpmath.fsum(polys[j][a] * trans[k][a] for a in range(j + 1))
                r = abs(pr) / mpmath.sqrt(abs(norms[j] * norms[k]))
                resid = max(resid, r)
        alphas, betas = _recurrence_from_coeffs(polys, norms, n)
        return OPSystem(n, T, mu, tau, tuple(tuple(p) for p in polys), tuple(norms),
                        tuple(alphas), tuple(betas), resid, ctx.mantissa_bits, "mgs")


def build_op_system_lattice(n, T, mu, tau, ctx=DEFAULT_CONTEXT, full_residual=True):
    """Stieltjes procedure on the truncated lattice.

    Node values of p_0..p_n are generated by the three-term recurrence whose
    coefficients come from weighted sums at the nodes.  With
    full_residual=False only pairs |j - k| <= 2 enter the residual.
    """
    spec = LatticeSpec(n, tau)
    wp = WeightParams(T, mu)
    nodes = lattice_nodes(spec, wp, ctx)
    if not nodes:
        raise DomainError("empty lattice window", module="orthopoly", n=n)
    thresh = ctx.existence_threshold
    with ctx.workprec():
        wts = weight_values(nodes, n, T, mu, ctx)
        xs = nodes
        vals = []
        prev = None
        cur = [mpmath.mpf(1)] * len(xs)
        alphas, betas, norms = [], [], []
        for j in range(n + 1):
            vals.append(cur)
            if j == n:
                break
            wv = [w * v for w, v in zip(wts, cur)]
            terms = [a * v for a, v in zip(wv, cur)]
            h = mpmath.fsum(terms)
            scale = mpmath.fsum(abs(t) for t in terms)
            if abs(h) <= thresh * scale:
                raise NonexistenceError(
                    f"norm h_{j} vanishes to working precision", module="orthopoly",
                    degree=j, tau=float(mpmath.re(tau)))
            a = mpmath.fsum(t * x for t, x in zip(terms, xs)) / h
            b = h / norms[-1] if norms else mpmath.mpc(0)
            norms.append(h)
            alphas.append(a)
            betas.append(b)
            if prev is None:
                nxt = [(x - a) * v for x, v in zip(xs, cur)]
            else:
                nxt = [(x - a) * v - b * u for x, v, u in zip(xs, cur, prev)]
            prev, cur = cur, nxt
        resid = mpmath.mpf(0)
        wvals = [[w * v for w, v in zip(wts, row)] for row in vals[:n]]
        for j in range(n):
            ks = range(j) if full_residual else range(max(0, j - 2), j)
            for k in ks:
                pr = mpmath.fsum(a * v for a, v in zip(wvals[j], vals[k]))
                resid = max(resid, abs(pr) / mpmath.sqrt(abs(norms[j] * norms[k])))
        coeffs = _coeffs_from_recurrence(alphas, betas, n)
        return OPSystem(n, T, mu, tau, tuple(tuple(c) for c in coeffs), tuple(norms),
                        tuple(alphas), tuple(betas), resid, ctx.mantissa_bits, "stieltjes")


def op_system(n, T, mu, tau, ctx=DEFAULT_CONTEXT, method="stieltjes", full_residual=True):
    """Convenience front end choosing the builder."""
    if method == "stieltjes":
        return build_op_system_lattice(n, T, mu, tau, ctx, full_residual)
    if method == "mgs":
        mom = moments(LatticeSpec(n, tau), WeightParams(T, mu), 2 * n, ctx)
        return build_op_system(mom, n, T, mu, tau, ctx)
    raise DomainError(f"unknown method {method!r}", module="orthopoly")


def _same_params(a, b):
    return a.n == b.n and a.T == b.T and a.mu == b.mu


def hankel_ratio(sys_a, sys_b, ctx=None):
    """H_n(tau_a) / H_n(tau_b) as exp of summed log ratios of the norms."""
    if not _same_params(sys_a, sys_b):
        raise DomainError("systems differ in (n, T, mu)", module="orthopoly")
    bits = max(sys_a.mantissa_bits, sys_b.mantissa_bits)
    with mp.workprec(bits):
        s = mpmath.fsum(mpmath.log(ha / hb) for ha, hb in zip(sys_a.norms, sys_b.norms))
        return mpmath.exp(s)


def eval_poly(sys, j, z):
    """Horner evaluation of p_j at z."""
    if int(j) != j or not 0 <= j <= sys.n:
        raise DomainError("degree out of range", module="orthopoly", j=j, n=sys.n)
    with mp.workprec(sys.mantissa_bits):
        z = mpmath.mpmathify(z)
        acc = mpmath.mpc(0)
        for c in reversed(sys.coeffs[j]):
            acc = acc * z + c
        return acc


def eval_all(sys, z, upto=None):
    """[p_0(z), ..., p_upto(z)] from the three-term recurrence (default upto = n)."""
    if upto is None:
        upto = sys.n
    with mp.workprec(sys.mantissa_bits):
        z = mpmath.mpmathify(z)
        out = [mpmath.mpc(1)]
        prev = None
        for j in range(upto):
            nxt = (z - sys.alphas[j]) * out[-1]
            if prev is not None:
                nxt -= sys.betas[j] * prev
            prev = out[-1]
            out.append(nxt)
        return out
