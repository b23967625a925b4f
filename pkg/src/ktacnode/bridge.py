"""Rejection sampler of nonintersecting random-walk bridges on the circle with drift.

Each walker's winding w is drawn from the wrapped Gaussian pmf of a single
circle bridge (displacement variance T/n, mean mu*T), then its path is a
discrete Gaussian walk with step variance (T/n_steps)/n pinned to 2*pi*w.  Walkers all
start and end at angle 0; a proposal is accepted when the cyclic order of
step 1 is kept strictly at every interior step, and weakly at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi
MIN_ACCEPTANCE = 1e-6


@dataclass
class BridgeEnsemble:
    n_walkers: int
    n_steps: int
    T: float
    mu: float
    seed: int
    paths: np.ndarray          # (n_walkers, n_steps + 1) unwrapped angles
    winding: np.ndarray        # per-walker net wraps

    @property
    def total_winding(self):
        return int(self.winding.sum())


def wrapped_bridge_pmf(T, mu, n, omegas):
    """Winding pmf of one circle bridge with variance T/n and drift mu.

    P(w) is proportional to exp(-n (2 pi w - mu T)^2 / (2 T)).
    """
    omegas = np.asarray(omegas)
    full = np.arange(-_winding_span(T, mu, n), _winding_span(T, mu, n) + 1)
    logw = -n * (TWO_PI * full - mu * T) ** 2 / (2 * T)
    logw -= logw.max()
    p = np.exp(logw)
    p /= p.sum()
    table = dict(zip(full.tolist(), p.tolist()))
    return np.array([table.get(int(w), 0.0) for w in omegas])


def _winding_span(T, mu, n):
    # 40 standard deviations of the displacement cover double precision
    sd = math.sqrt(T / n)
    return int(math.ceil((abs(mu) * T + 40 * sd) / TWO_PI)) + 1


def _propose_accepted(rng, B, n, N, T, mu):
    """B proposals built step by step; returns accepted paths and windings.

    Each step is drawn from its bridge conditional given the pinned end
    point, so a proposal can be dropped at the first order violation.  The
    drift only enters through the winding law, since pinning removes it
    from the path.
    """
    span = _winding_span(T, mu, n)
    ws = np.arange(-span, span + 1)
    w = rng.choice(ws, size=(B, n), p=wrapped_bridge_pmf(T, mu, n, ws))
    var = (T / N) / n
    target = TWO_PI * w
    X = np.zeros((B, n, N + 1))
    x = np.zeros((B, n))
    active = np.arange(B)
    for k in range(N - 1):
        rem = N - k
        mean = x + (target[active] - x) / rem
        x = mean + rng.normal(0.0, math.sqrt(var * (rem - 1) / rem), size=x.shape)
        if k == 0:
            order = np.argsort(x, axis=1)
            x = np.take_along_axis(x, order, axis=1)
            target = np.take_along_axis(target, order, axis=1)
            w = np.take_along_axis(w, order, axis=1)
            ok = np.all(np.diff(w, axis=1) >= 0, axis=1) & (w[:, -1] - w[:, 0] <= 1)
        else:
            ok = np.all(np.diff(x, axis=1) > 0, axis=1) & (x[:, -1] - x[:, 0] < TWO_PI)
        X[active, :, k + 1] = x
        active, x = active[ok], x[ok]
        if active.size == 0:
            break
    X[active, :, N] = target[active]
    return X[active], w[active]


def sample_bridge_ensemble(n_walkers, n_steps, T, mu, n_samples, seed, batch=20000,
                           max_proposals=10 ** 9, min_budget=10 ** 6):
    """Accepted samples of n nonintersecting circle bridges; deterministic given seed."""
    if int(n_walkers) != n_walkers or not 1 <= n_walkers <= 6:
        raise DomainError("n_walkers must be an integer in 1..6", module="bridge",
                          n_walkers=n_walkers)
    if n_steps < 32:
        raise DomainError("n_steps must be at least 32", module="bridge", n_steps=n_steps)
    if not T > 0:
        raise DomainError("T must be positive", module="bridge", T=T)
    if n_samples < 1:
        raise DomainError("n_samples must be positive", module="bridge")
    rng = np.random.default_rng(seed)
    out = []
    proposed = 0
    while len(out) < n_samples:
        X, w = _propose_accepted(rng, batch, n_walkers, n_steps, T, mu)
        proposed += batch
        for b in range(len(X)):
            if len(out) == n_samples:
                break
            out.append(BridgeEnsemble(n_walkers, n_steps, T, mu, seed, X[b], w[b]))
        rate = len(out) / proposed
        if (proposed >= min_budget and rate < MIN_ACCEPTANCE) or proposed >= max_proposals:
            raise DomainError("acceptance too low; use fewer walkers", module="bridge",
                              acceptance=rate, proposed=proposed, accepted=len(out))
    return out


@dataclass
class WindingHistogram:
    n_samples: int
    omegas: list
    counts: list
    pmf: list
    stderr: list
    wilson_lo: list
    wilson_hi: list
    z: float = 3.0
    extra: dict = field(default_factory=dict)

    def to_json_obj(self):
        return {"n_samples": self.n_samples, "omegas": self.omegas, "counts": self.counts,
                "pmf": self.pmf, "stderr": self.stderr, "wilson_lo": self.wilson_lo,
                "wilson_hi": self.wilson_hi, "z": self.z}

    def interval(self, omega):
        if omega in self.omegas:
            i = self.omegas.index(omega)
            return self.wilson_lo[i], self.wilson_hi[i]
        return wilson_interval(0, self.n_samples, self.z)


def wilson_interval(count, total, z=3.0):
    p = count / total
    denom = 1 + z * z / total
    centre = (p + z * z / (2 * total)) / denom
    half = z * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def winding_histogram(ensembles, z=3.0, omegas=None):
    """Empirical pmf of the total winding with standard errors and Wilson intervals."""
    if not ensembles:
        raise DomainError("no accepted samples", module="bridge")
    totals = np.array([e.total_winding for e in ensembles])
    N = len(totals)
    if omegas is None:
        omegas = list(range(int(totals.min()), int(totals.max()) + 1))
    counts = [int(np.sum(totals == w)) for w in omegas]
    pmf = [c / N for c in counts]
    se = [math.sqrt(p * (1 - p) / N) for p in pmf]
    ivs = [wilson_interval(c, N, z) for c in counts]
    return WindingHistogram(N, list(omegas), counts, pmf, se, [a for a, _ in ivs],
                            [b for _, b in ivs], z)
