"""Command line entry point: ktacnode <command> [options].

Configuration precedence is flags > --config file (key=value lines) >
defaults.  Results go to --out (written atomically) or stdout, always with a
metadata block echoing the resolved configuration.  Failures print a JSON
error object {code, module, message, context} on stderr.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass

from . import __version__
from .errors import DomainError, KTacnodeError
from .precision import PrecisionContext

PI2 = math.pi ** 2


class UsageError(DomainError):
    module = "cli"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass(frozen=True)
class Param:
    name: str
    type: object
    default: object = None
    help: str = ""


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).split(",") if x.strip()]


def _omega_range(text):
    if text is None:
        return None
    if isinstance(text, tuple):
        return text
    lo, sep, hi = str(text).partition("..")
    if not sep:
        raise UsageError(f"omega range must look like a..b, got {text!r}")
    return int(lo), int(hi)


COMMON = [
    Param("bits", int, 256, "mantissa bits of the extended-precision work"),
    Param("format", str, "json", "json or csv"),
    Param("out", str, None, "output path (stdout if omitted)"),
]

COMMANDS = {
    "winding-exact": [
        Param("n", int, None, "number of particles"),
        Param("T", float, PI2, "return time"),
        Param("mu", float, 0.0, "drift"),
        Param("omega", _omega_range, None, "winding range a..b"),
        Param("n_tau", int, 64, "quadrature nodes in the lattice offset"),
    ],
    "winding-asymptotic": [
        Param("n", int, None), Param("T", float, PI2), Param("mu", float, 0.0),
        Param("omega", _omega_range, None),
        Param("s_method", str, "series", "series or integral"),
    ],
    "winding-compare": [
        Param("n", int, None), Param("k", int, 0, "drift level; mu = k log n / (3 pi n)"),
        Param("T", float, None, "defaults to pi^2 (1 - n^(-2/3))"),
        Param("omega", _omega_range, None), Param("n_tau", int, 64),
    ],
    "hm-table": [
        Param("alpha", float, 0.0), Param("s_min", float, -14.0), Param("s_max", float, 16.0),
        Param("grid_size", int, 401),
    ],
    "backlund-ladder": [
        Param("k_max", int, 3), Param("s", _floats, [-6.0, -3.0, 0.0, 3.0, 6.0]),
    ],
    "kernel-finite": [
        Param("n", int, None), Param("k", int, 0), Param("T", float, PI2),
        Param("mu", float, None, "defaults to k log n / (3 pi n)"),
        Param("xi", _floats, [0.0]), Param("eta", _floats, [0.0]),
        Param("tau_i", _floats, [0.0]), Param("tau_j", _floats, [0.0]),
    ],
    "kernel-tacnode": [
        Param("s", float, 0.0), Param("k", int, 0),
        Param("xi", _floats, [0.0]), Param("eta", _floats, [0.0]),
        Param("tau_i", _floats, [0.0]), Param("tau_j", _floats, [0.0]),
        Param("r_max", float, 6.0), Param("nodes", int, 64),
    ],
    "kernel-compare": [
        Param("n", int, None), Param("k", int, 0), Param("T", float, PI2),
        Param("xi", _floats, [0.0]), Param("eta", _floats, [0.0]),
        Param("tau_i", _floats, [0.0]), Param("tau_j", _floats, [0.0]),
        Param("r_max", float, 6.0), Param("nodes", int, 64),
    ],
    "rh-check": [
        Param("T", float, 9.0), Param("mu", float, 0.05), Param("k", int, 1),
        Param("n_points", int, 20),
    ],
    "simulate": [
        Param("walkers", int, 3), Param("steps", int, 32), Param("T", float, 5.0),
        Param("mu", float, 0.0), Param("samples", int, 2000), Param("seed", int, 0),
        Param("paths_out", str, None, "CSV of step,walker,angle for every sample"),
    ],
}


def build_parser():
    p = _Parser(prog="ktacnode", description="Winding numbers and kernels of circle bridges.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name, params in COMMANDS.items():
        sp = sub.add_parser(name, argument_default=argparse.SUPPRESS)
        sp.add_argument("--config", help="key=value file; flags override it")
        for prm in params + COMMON:
            flag = "--" + prm.name.replace("_", "-")
            sp.add_argument(flag, dest=prm.name, type=str, help=prm.help)
    return p


def load_config(path):
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}", path=path)
    for i, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError("config lines must be key=value", path=path, line=i)
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def resolve(command, flags, config):
    """Merge flags > config > defaults into typed values."""
    params = {p.name: p for p in COMMANDS[command] + COMMON}
    unknown = sorted(set(config) - set(params))
    if unknown:
        raise UsageError("unknown config keys", keys=unknown)
    resolved = {}
    for name, prm in params.items():
        if name in flags:
            raw = flags[name]
        elif name in config:
            raw = config[name]
        else:
            resolved[name] = prm.default
            continue
        try:
            resolved[name] = prm.type(raw)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {name}: {raw!r}", detail=str(exc))
    for name, prm in params.items():
        if resolved[name] is None and prm.default is None and name in _REQUIRED.get(command, ()):
            raise UsageError(f"--{name.replace('_', '-')} is required")
    if resolved["format"] not in ("json", "csv"):
        raise UsageError("format must be json or csv")
    return resolved


_REQUIRED = {
    "winding-exact": ("n",), "winding-asymptotic": ("n",), "winding-compare": ("n",),
    "kernel-finite": ("n",), "kernel-compare": ("n",),
}


def _constants():
    from .asymptotic import REGIME_BOUND
    from .winding import IMAG_TOLERANCE
    return {"imag_tolerance": IMAG_TOLERANCE, "regime_bound": REGIME_BOUND}


def _metadata(command, cfg, ctx, tolerances):
    return {"command": command, "config": _echo(cfg), "precision": ctx.as_dict(),
            "version": __version__, "constants": _constants(), "tolerances": tolerances}


def _echo(cfg):
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.items()}


def _broadcast(cfg, names):
    cols = [cfg[n] for n in names]
    m = max(len(c) for c in cols)
    for n, c in zip(names, cols):
        if len(c) not in (1, m):
            raise UsageError("point lists must have equal length or length 1", name=n)
    return [tuple(c[i] if len(c) > 1 else c[0] for c in cols) for i in range(m)]


# ---------------------------------------------------------------------------
# commands: each returns (result dict, csv header, csv rows, tolerances)

def _default_omega(cfg, centre):
    if cfg["omega"] is not None:
        return cfg["omega"]
    return centre - 3, centre + 3


def cmd_winding_exact(cfg, ctx):
    from .winding import IMAG_TOLERANCE, k_bin, winding_distribution_exact
    lo, hi = _default_omega(cfg, max(k_bin(cfg["n"], cfg["mu"]), 0))
    d = winding_distribution_exact(cfg["n"], cfg["T"], cfg["mu"], lo, hi, cfg["n_tau"], ctx)
    res = d.to_json_obj()
    res["sum"] = math.fsum(d.probs)
    rows = [(w, p) for w, p in zip(d.omegas, d.probs)]
    return res, ["omega", "prob"], rows, {"imag_tolerance": IMAG_TOLERANCE,
                                          "residual_imag": d.residual_imag}


def cmd_winding_asymptotic(cfg, ctx):
    from .asymptotic import s_param, winding_distribution_asymptotic
    from .winding import k_bin
    s = s_param(cfg["T"], cfg["n"], cfg["s_method"], ctx)
    k = k_bin(cfg["n"], cfg["mu"])
    lo, hi = _default_omega(cfg, max(k, 0))
    d = winding_distribution_asymptotic(cfg["n"], cfg["T"], cfg["mu"], ctx, lo, hi, s=s)
    rows = [(w, p) for w, p in zip(d.omegas, d.probs)]
    return d.to_json_obj(), ["omega", "prob"], rows, {"s_method": cfg["s_method"]}


def cmd_winding_compare(cfg, ctx):
    from .asymptotic import winding_distribution_asymptotic
    from .winding import winding_distribution_exact
    n, k = cfg["n"], cfg["k"]
    T = cfg["T"] if cfg["T"] is not None else PI2 * (1 - n ** (-2.0 / 3.0))
    mu = k * math.log(n) / (3 * math.pi * n)
    lo, hi = _default_omega(cfg, k)
    ex = winding_distribution_exact(n, T, mu, lo, hi, cfg["n_tau"], ctx)
    th = winding_distribution_asymptotic(n, T, mu, ctx, lo, hi)
    rows = [(w, ex.prob(w), th.prob(w), abs(ex.prob(w) - th.prob(w))) for w in ex.omegas]
    res = {"n": n, "k": k, "T": T, "mu": mu, "omega": ex.omegas,
           "exact": ex.probs, "theorem": [th.prob(w) for w in ex.omegas],
           "max_abs_diff": max(r[3] for r in rows), "s": th.extra["s"],
           "F_U": th.extra["F_U"], "F_V": th.extra["F_V"]}
    return res, ["omega", "exact", "theorem", "abs_diff"], rows, {
        "exact_residual_imag": ex.residual_imag}


def cmd_hm_table(cfg, ctx):
    from .painleve import solve_hm
    tab = solve_hm(cfg["alpha"], cfg["s_min"], cfg["s_max"], cfg["grid_size"])
    rows = list(zip(tab.grid.tolist(), tab.u.tolist(), tab.u_prime.tolist()))
    res = {"alpha": tab.alpha, "s": tab.grid.tolist(), "u": tab.u.tolist(),
           "u_prime": tab.u_prime.tolist(), "max_residual": tab.max_residual}
    return res, ["s", "u", "u_prime"], rows, {"max_residual": tab.max_residual}


def cmd_backlund_ladder(cfg, ctx):
    from .painleve import backlund_step, hm_table, seed_uv0
    hm0 = hm_table(0.0)
    rows = []
    worst = 0.0
    for s in cfg["s"]:
        st = seed_uv0(hm0, s)
        for k in range(cfg["k_max"] + 1):
            if k:
                st = backlund_step(st)
            lam = abs(st.wronskian - k)
            worst = max(worst, lam)
            rows.append((s, k, st.U.real, st.U.imag, st.V.real, st.V.imag,
                         st.U_prime.imag, st.V_prime.imag, lam))
    header = ["s", "k", "U_re", "U_im", "V_re", "V_im", "U_prime_im", "V_prime_im",
              "lambda_residual"]
    res = {"rows": [dict(zip(header, r)) for r in rows], "max_lambda_residual": worst}
    return res, header, rows, {"max_lambda_residual": worst}


def cmd_kernel_finite(cfg, ctx):
    from .finite_kernel import ExtendedKernelQuery, finite_kernel, jacobian, scaled_coordinates
    from .orthopoly import op_system
    from .winding import epsilon_n
    n, T = cfg["n"], cfg["T"]
    mu = cfg["mu"] if cfg["mu"] is not None else cfg["k"] * math.log(n) / (3 * math.pi * n)
    sysm = op_system(n, T, mu, epsilon_n(n), ctx)
    rows = []
    for xi, eta, ti, tj in _broadcast(cfg, ["xi", "eta", "tau_i", "tau_j"]):
        t_i, t_j, phi, theta = scaled_coordinates(n, T, xi, eta, ti, tj)
        K = finite_kernel(ExtendedKernelQuery(t_i, t_j, phi, theta), sysm, ctx)
        rows.append((xi, eta, ti, tj, t_i, t_j, phi, theta, K.real, K.imag, K.real * jacobian(n)))
    header = ["xi", "eta", "tau_i", "tau_j", "t_i", "t_j", "phi", "theta", "K_re", "K_im",
              "K_scaled"]
    res = {"n": n, "T": T, "mu": mu, "rows": [dict(zip(header, r)) for r in rows]}
    return res, header, rows, {"op_residual": float(sysm.residual),
                               "tail_epsilon": ctx.tail_epsilon}


def cmd_kernel_tacnode(cfg, ctx):
    from .lax import SigmaTContour, solve_lax, tacnode_kernel
    s, k = cfg["s"], cfg["k"]
    lax = solve_lax(s, k, contour=SigmaTContour(cfg["r_max"], cfg["nodes"]))
    rows = []
    for xi, eta, ti, tj in _broadcast(cfg, ["xi", "eta", "tau_i", "tau_j"]):
        rows.append((xi, eta, ti, tj, s, k, tacnode_kernel(xi, eta, ti, tj, s, k, lax=lax)))
    header = ["xi", "eta", "tau_i", "tau_j", "s", "k", "K"]
    res = {"rows": [dict(zip(header, r)) for r in rows]}
    return res, header, rows, {"anchor_mismatch": lax.mismatch, "det_residual": lax.det_residual,
                               "ode_residual": float(lax.extra["ode_residual"])}


def cmd_kernel_compare(cfg, ctx):
    from .asymptotic import s_param
    from .finite_kernel import scaled_comparison
    from .lax import SigmaTContour, solve_lax
    from .orthopoly import op_system
    from .winding import epsilon_n
    n, k, T = cfg["n"], cfg["k"], cfg["T"]
    mu = k * math.log(n) / (3 * math.pi * n)
    s = s_param(T, n)
    lax = solve_lax(s, k, contour=SigmaTContour(cfg["r_max"], cfg["nodes"]))
    sysm = op_system(n, T, mu, epsilon_n(n), ctx, full_residual=False)
    rows = []
    for xi, eta, ti, tj in _broadcast(cfg, ["xi", "eta", "tau_i", "tau_j"]):
        fin, asym, diff = scaled_comparison(n, k, xi, eta, ti, tj, ctx, T=T, sys=sysm, lax=lax, s=s)
        rows.append((xi, eta, ti, tj, fin.real, fin.imag, asym, diff))
    header = ["xi", "eta", "tau_i", "tau_j", "finite_re", "finite_im", "tacnode", "abs_diff"]
    res = {"n": n, "k": k, "T": T, "mu": mu, "s": s, "rows": [dict(zip(header, r)) for r in rows]}
    return res, header, rows, {"anchor_mismatch": lax.mismatch, "det_residual": lax.det_residual}


def cmd_rh_check(cfg, ctx):
    from .rh import structure_check
    res = structure_check(cfg["T"], cfg["mu"], cfg["k"], cfg["n_points"], ctx.mantissa_bits)
    rows = [(key, val) for key, val in res.items()]
    return res, ["quantity", "value"], rows, {}


def cmd_simulate(cfg, ctx):
    from .bridge import sample_bridge_ensemble, winding_histogram
    ens = sample_bridge_ensemble(cfg["walkers"], cfg["steps"], cfg["T"], cfg["mu"],
                                 cfg["samples"], cfg["seed"])
    hist = winding_histogram(ens)
    if cfg["paths_out"]:
        buf = io.StringIO()
        buf.write("sample,step,walker,angle\n")
        for i, e in enumerate(ens):
            for w in range(e.n_walkers):
                for step, ang in enumerate(e.paths[w]):
                    buf.write(f"{i},{step},{w},{ang!r}\n")
        _atomic_write(cfg["paths_out"], buf.getvalue())
    rows = list(zip(hist.omegas, hist.counts, hist.pmf, hist.wilson_lo, hist.wilson_hi))
    return hist.to_json_obj(), ["omega", "count", "pmf", "wilson_lo", "wilson_hi"], rows, {
        "wilson_z": hist.z}


HANDLERS = {
    "winding-exact": cmd_winding_exact, "winding-asymptotic": cmd_winding_asymptotic,
    "winding-compare": cmd_winding_compare, "hm-table": cmd_hm_table,
    "backlund-ladder": cmd_backlund_ladder, "kernel-finite": cmd_kernel_finite,
    "kernel-tacnode": cmd_kernel_tacnode, "kernel-compare": cmd_kernel_compare,
    "rh-check": cmd_rh_check, "simulate": cmd_simulate,
}


# ---------------------------------------------------------------------------
# output

def _json_default(o):
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    if hasattr(o, "tolist"):
        return o.tolist()
    return str(o)


def render(fmt, meta, result, header, rows):
    if fmt == "json":
        return json.dumps({"metadata": meta, "result": result}, indent=2, sort_keys=True,
                          default=_json_default) + "\n"
    lines = ["# metadata=" + json.dumps(meta, sort_keys=True, default=_json_default),
             ",".join(header)]
    for r in rows:
        lines.append(",".join(repr(float(x)) if isinstance(x, float) else str(x) for x in r))
    return "\n".join(lines) + "\n"


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".ktacnode-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _glue_negative_values(argv):
    # "--omega -3..3" would read -3..3 as a flag; glue such values to their flag
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (a.startswith("--") and "=" not in a and nxt is not None and len(nxt) > 1
                and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == ".")):
            out.append(f"{a}={nxt}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def run(argv=None, stdout=None, stderr=None):
    """Run one command; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    if argv is None:
        argv = sys.argv[1:]
    try:
        ns = build_parser().parse_args(_glue_negative_values(list(argv)))
        if ns.command is None:
            raise UsageError("a command is required", commands=sorted(COMMANDS))
        flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
        config = load_config(ns.config) if getattr(ns, "config", None) else {}
        cfg = resolve(ns.command, flags, config)
        ctx = PrecisionContext(mantissa_bits=cfg["bits"])
        result, header, rows, tol = HANDLERS[ns.command](cfg, ctx)
        text = render(cfg["format"], _metadata(ns.command, cfg, ctx, tol), result, header, rows)
        if cfg["out"]:
            _atomic_write(cfg["out"], text)
        else:
            stdout.write(text)
        return 0
    except KTacnodeError as exc:
        stderr.write(json.dumps(exc.to_dict(), sort_keys=True) + "\n")
        return exc.exit_code
    except Exception as exc:  # numeric library failures still get a JSON object
        err = {"code": 1, "module": "cli", "message": f"{type(exc).__name__}: {exc}",
               "context": {}}
        stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return 1


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
