"""Command-line entry point.

    shemoments moments   --measure lebesgue --nu 1 --lambda 1 --t 1 --x 0 --p 2
    shemoments twopoint  --measure delta --t 0.5 --x 0 --y 0.3
    shemoments growth    --measure exp_decay:1
    shemoments simulate  --measure delta --seed 7 --T 0.25 --M 100
    shemoments holder    --t0 0.5 --direction space
    shemoments validate  [--only bc-identities] [--quick]

Every command accepts ``--config FILE`` (flat ``key = value`` lines, ``#``
comments); flags given on the command line override the file.  Each run
writes its table and a manifest.json to ``--out``.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numerical divergence.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import io
from ._quadrature import OUTER_RTOL
from .errors import (ConfigError, DivergentJ0, DivergentMoment, InsufficientReplicates, NoSignChange,
                     NumericalBlowup, QuadratureError, WindowTooNarrow)
from .measures import (InitialMeasure, atoms, dirac, exp_decay, exp_growth, gaussian_bump, indicator,
                       lebesgue)

__all__ = ["main", "parse_measure", "load_config", "build_parser"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGENT = 0, 1, 2, 3

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _nums(text, n, name):
    parts = [p.strip() for p in text.split(",")] if text else []
    if len(parts) != n:
        raise ConfigError(f"measure {name!r} needs {n} comma-separated parameters, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"measure {name!r}: bad number in {text!r}") from exc


def parse_measure(text) -> InitialMeasure:
    """lebesgue | delta[:loc] | exp_decay:a | exp_growth:a,p | gaussian_bump:c,w
    | indicator:l,r | atoms:(loc,mass);(loc,mass)..."""
    text = str(text).strip()
    name, _, arg = text.partition(":")
    name = name.strip().lower()
    arg = arg.strip()
    try:
        if name == "lebesgue" and not arg:
            return lebesgue()
        if name in ("delta", "dirac"):
            return dirac(_nums(arg, 1, name)[0]) if arg else dirac()
        if name == "exp_decay":
            return exp_decay(*_nums(arg, 1, name))
        if name == "exp_growth":
            return exp_growth(*_nums(arg, 2, name))
        if name == "gaussian_bump":
            return gaussian_bump(*_nums(arg, 2, name))
        if name == "indicator":
            return indicator(*_nums(arg, 2, name))
        if name == "atoms":
            pat = re.compile(rf"\(\s*({_NUM})\s*,\s*({_NUM})\s*\)")
            items = [s.strip() for s in arg.split(";") if s.strip()]
            pairs = []
            for item in items:
                m = pat.fullmatch(item)
                if not m:
                    raise ConfigError(f"bad atom {item!r}; expected (loc,mass)")
                pairs.append((float(m.group(1)), float(m.group(2))))
            if not pairs:
                raise ConfigError("atoms: needs at least one (loc,mass) pair")
            return atoms(pairs)
    except ValueError as exc:
        raise ConfigError(f"measure {text!r}: {exc}") from exc
    raise ConfigError(f"unknown measure {text!r}; expected lebesgue, delta[:loc], exp_decay:a, "
                      "exp_growth:a,p, gaussian_bump:c,w, indicator:l,r or atoms:(loc,mass);...")


def load_config(path):
    """Flat key = value file; keys use the long flag names (dashes or underscores)."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for i, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{i}: expected key = value")
        key = key.strip().replace("-", "_")
        out["lam" if key == "lambda" else key] = value.strip()
    return out


# -- parser -------------------------------------------------------------------

def _common(p, measure_default="lebesgue"):
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--measure", help=f"initial measure (default {measure_default})")
    p.add_argument("--nu", type=float, help="diffusion coefficient (default 1)")
    p.add_argument("--lambda", dest="lam", type=float, help="noise strength lambda (default 1)")
    p.add_argument("--vv", type=float, help="noise offset: rho(u)^2 = lambda^2 (vv^2 + u^2) (default 0)")
    p.add_argument("--seed", type=int, help="64-bit RNG seed (default 0)")
    p.add_argument("--out", help="output directory (default shemoments_out/<command>)")
    p.add_argument("--format", choices=("csv", "json"), help="table format (default csv)")


DEFAULTS = {
    "measure": "lebesgue", "nu": 1.0, "lam": 1.0, "vv": 0.0, "seed": 0, "format": "csv",
    "t": "1", "x": "0", "y": "0.5", "p": "2", "method": "auto",
    "t_max": 100.0, "alpha_bracket": None,
    "L": 5.0, "dx": 0.05, "dt": None, "T": 0.5, "M": 100, "scheme": "exponential_mild",
    "boundary": "dirichlet_zero", "record": None, "query": "0", "binary": False,
    "t0": 0.5, "direction": "space", "window": None,
    "only": None, "quick": False,
}

_TYPES = {"nu": float, "lam": float, "vv": float, "seed": int, "t_max": float, "L": float, "dx": float,
          "dt": float, "T": float, "M": int, "t0": float}


def build_parser():
    ap = argparse.ArgumentParser(prog="shemoments", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="second moments and p-th moment bounds")
    _common(p)
    p.add_argument("--t", help="time(s), comma separated")
    p.add_argument("--x", help="position(s), comma separated")
    p.add_argument("--p", help="even moment order(s)")
    p.add_argument("--method", choices=("auto", "quad"), help="closed forms when available, or quadrature")

    p = sub.add_parser("twopoint", help="two-point correlation E[u(t,x) u(t,y)]")
    _common(p)
    p.add_argument("--t", help="time(s)")
    p.add_argument("--x", help="first position(s)")
    p.add_argument("--y", help="second position(s)")

    p = sub.add_parser("growth", help="empirical exponential growth index (p = 2)")
    _common(p)
    p.add_argument("--t-max", dest="t_max", type=float, help="largest time of the fit (default 100)")
    p.add_argument("--alpha-bracket", dest="alpha_bracket", help="lo,hi scan range for alpha")

    p = sub.add_parser("simulate", help="Monte Carlo fields and moment estimates")
    _common(p)
    _sim_flags(p)
    p.add_argument("--record", help="times to store, comma separated (default T)")
    p.add_argument("--query", help="x values for moment estimates (default 0)")
    p.add_argument("--binary", action="store_true", default=None, help="also write SHE1 files per replicate")

    p = sub.add_parser("holder", help="Hoelder exponent from simulated variograms")
    _common(p)
    _sim_flags(p)
    p.add_argument("--t0", type=float, help="base time, > 0 (default 0.5)")
    p.add_argument("--direction", choices=("space", "time"), help="variogram direction")
    p.add_argument("--window", help="h_min,h_max (default dx..8dx in space, 16dt..256dt in time)")

    p = sub.add_parser("validate", help="acceptance campaign")
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--only", help="comma-separated criterion numbers, names or groups")
    p.add_argument("--quick", action="store_true", default=None, help="fewer replicates, wider bands")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), help="report table format")
    return ap


def _sim_flags(p):
    p.add_argument("--L", type=float, help="half-width of the box (default 5)")
    p.add_argument("--dx", type=float, help="lattice spacing (default 0.05)")
    p.add_argument("--dt", type=float, help="time step (default dx^2/4)")
    p.add_argument("--T", type=float, help="horizon (default 0.5)")
    p.add_argument("--M", type=int, help="replicates (default 100)")
    p.add_argument("--scheme", choices=("exponential_mild", "explicit_fd"))
    p.add_argument("--boundary", choices=("dirichlet_zero", "periodic"))


def _resolve(args):
    """Merge defaults < config file < flags into one dict."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        for k, v in load_config(args.config).items():
            if k not in cfg:
                raise ConfigError(f"unknown config key {k!r}")
            cfg[k] = v
    for k, v in vars(args).items():
        if k in ("config", "command"):
            continue
        if v is not None:
            cfg[k] = v
    for k, typ in _TYPES.items():
        if cfg.get(k) is not None:
            try:
                cfg[k] = typ(cfg[k])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{k}: cannot parse {cfg[k]!r}") from exc
    for k in ("binary", "quick"):
        if isinstance(cfg[k], str):
            cfg[k] = cfg[k].strip().lower() in ("1", "true", "yes", "on")
    cfg["command"] = args.command
    if cfg.get("out") is None:
        cfg["out"] = str(Path("shemoments_out") / args.command)
    return cfg


def _floats(text, name):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{name}: expected comma-separated numbers, got {text!r}") from exc


def _write_table(cfg, stem, header, rows):
    out = Path(cfg["out"])
    if cfg["format"] == "json":
        path = io.write_json(out / f"{stem}.json", [dict(zip(header, r)) for r in rows])
    else:
        path = io.write_csv(out / f"{stem}.csv", header, rows)
    return path


def _manifest(cfg, outputs):
    clean = {k: v for k, v in cfg.items() if k != "out"}
    return io.write_manifest(cfg["out"], cfg["command"], clean, seed=cfg.get("seed"), outputs=outputs)


def _say(quiet, *msg):
    if not quiet:
        print(*msg)


# -- commands -------------------------------------------------------------------

def cmd_moments(cfg, quiet=False):
    from .kernels import GrowthEnvelope
    from .moments import MomentRequest, pth_moment_upper, second_moment_exact

    mu = parse_measure(cfg["measure"])
    nu, lam, vv = cfg["nu"], cfg["lam"], cfg["vv"]
    header = ["measure", "nu", "lambda", "vv", "t", "x", "p", "value", "quantity", "formula", "branch",
              "method", "tolerance"]
    rows = []
    for p in (int(v) for v in _floats(cfg["p"], "p")):
        for t in _floats(cfg["t"], "t"):
            for x in _floats(cfg["x"], "x"):
                req = MomentRequest(mu, GrowthEnvelope.quasi_linear(lam, vv), nu, t, x, p)
                if p == 2:
                    val = second_moment_exact(req, cfg["method"])
                    quantity, branch = "E[u^2]", "exact"
                else:
                    b = pth_moment_upper(req, cfg["method"])
                    val, quantity, branch = b.pth_power, f"E[|u|^{p}] upper bound", b.branch
                formula = _formula_id(mu, cfg["method"])
                rows.append([mu.spec(), nu, lam, vv, t, x, p, val, quantity, formula, branch, cfg["method"],
                             "machine" if formula.startswith("closed") else f"rtol={OUTER_RTOL:g}"])
                _say(quiet, f"t={t:g} x={x:g} p={p}: {io.fmt(val)}")
    return [_write_table(cfg, "moments", header, rows)]


def _formula_id(mu, method):
    if method == "quad":
        return "quadrature"
    if mu.is_lebesgue:
        return "closed-lebesgue"
    if mu.single_atom is not None:
        return "closed-dirac"
    return "quadrature"


def cmd_twopoint(cfg, quiet=False):
    from .moments import MomentRequest, two_point_general

    mu = parse_measure(cfg["measure"])
    nu, lam, vv = cfg["nu"], cfg["lam"], cfg["vv"]
    header = ["measure", "nu", "lambda", "vv", "t", "x", "y", "value"]
    rows = []
    for t in _floats(cfg["t"], "t"):
        for x in _floats(cfg["x"], "x"):
            for y in _floats(cfg["y"], "y"):
                val = two_point_general(MomentRequest.quasi(mu, nu, lam, vv, t, x), y)
                rows.append([mu.spec(), nu, lam, vv, t, x, y, val])
                _say(quiet, f"t={t:g} x={x:g} y={y:g}: {io.fmt(val)}")
    return [_write_table(cfg, "twopoint", header, rows)]


def cmd_growth(cfg, quiet=False):
    from .growth import empirical_growth_index

    mu = parse_measure(cfg["measure"])
    if cfg["vv"] != 0:
        raise ConfigError("the empirical growth index needs vv = 0")
    bracket = tuple(_floats(cfg["alpha_bracket"], "alpha_bracket")) if cfg["alpha_bracket"] else None
    if bracket is not None and len(bracket) != 2:
        raise ConfigError("alpha_bracket needs two numbers")
    rep = empirical_growth_index(mu, cfg["nu"], cfg["lam"], t_max=cfg["t_max"], alpha_bracket=bracket)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    path = out / "growth.json"
    path.write_text(rep.to_json() + "\n")
    _say(quiet, rep.to_json())
    return [path]


def _sim_config(cfg, **extra):
    from .simulator import SimConfig

    kw = dict(L=cfg["L"], dx=cfg["dx"], dt=cfg["dt"], T=cfg["T"], M=cfg["M"], seed=cfg["seed"],
              scheme=cfg["scheme"], boundary=cfg["boundary"], nu=cfg["nu"])
    kw.update(extra)
    return SimConfig(**kw)


def cmd_simulate(cfg, quiet=False):
    from .simulator import mc_mean, mc_moment, run_ensemble

    mu = parse_measure(cfg["measure"])
    sc = _sim_config(cfg)
    query = _floats(cfg["query"], "query")
    sc.check_query(max(abs(v) for v in query) if query else 0.0)
    times = _floats(cfg["record"], "record") if cfg["record"] else [sc.T]
    steps = sorted({sc.step_of(t) for t in times})
    rho = cfg["lam"] if cfg["vv"] == 0 else _quasi_rho(cfg)
    ens = run_ensemble(mu, rho, sc, record_steps=steps)
    out = Path(cfg["out"])
    outputs = []
    if cfg["format"] == "json":
        outputs.append(io.write_json(out / "fields.json", {
            "t": ens.steps * sc.dt, "x": sc.x, "replicates": ens.replicates, "values": ens.values}))
    else:
        outputs.append(io.write_field_csv(out / "fields.csv", ens))
    if cfg["binary"]:
        for r, rep in enumerate(ens.replicates):
            outputs.append(io.write_she1(out / f"field_{int(rep):05d}.she1", ens.values[r], sc.dx, sc.dt, sc.nu))
    rows = []
    for n in ens.steps:
        t = n * sc.dt
        if n == 0:
            continue
        for x in query:
            for est in (mc_mean(ens, t, x), mc_moment(ens, 2, t, x)):
                rows.append([est.p, est.t, est.x, est.y, est.mean, est.stderr, est.M])
                _say(quiet, f"p={est.p} t={est.t:g} x={est.x:g}: {io.fmt(est.mean)} +- {io.fmt(est.stderr)}")
    outputs.append(_write_table(cfg, "estimates", ["p", "t", "x", "y", "mean", "stderr", "M"], rows))
    return outputs


def _quasi_rho(cfg):
    from .kernels import GrowthEnvelope

    return GrowthEnvelope.quasi_linear(cfg["lam"], cfg["vv"])


def cmd_holder(cfg, quiet=False):
    from .simulator import holder_estimate, run_ensemble

    mu = parse_measure(cfg["measure"])
    t0 = cfg["t0"]
    if not t0 > 0:
        raise ConfigError("t0 must be positive")
    probe = _sim_config(cfg, T=t0 + 1.0)
    if cfg["window"]:
        window = tuple(_floats(cfg["window"], "window"))
        if len(window) != 2:
            raise ConfigError("window needs h_min,h_max")
    elif cfg["direction"] == "space":
        window = (probe.dx, 8 * probe.dx)
    else:
        window = (16 * probe.dt, 256 * probe.dt)
    n0 = probe.step_of(t0)
    if cfg["direction"] == "time":
        kmax = int(math.floor(window[1] / probe.dt + 1e-9))
        steps = [n0] + [n0 + 2 ** j for j in range(0, kmax.bit_length())]
        T = steps[-1] * probe.dt
    else:
        steps, T = [n0], n0 * probe.dt
    sc = _sim_config(cfg, T=T)
    rho = cfg["lam"] if cfg["vv"] == 0 else _quasi_rho(cfg)
    ens = run_ensemble(mu, rho, sc, record_steps=steps)
    h, resid = holder_estimate(ens, cfg["direction"], t0, window)
    result = {"direction": cfg["direction"], "t0": t0, "window": list(window), "exponent": h,
              "fit_residual": resid, "M": sc.M}
    _say(quiet, f"{cfg['direction']} exponent {io.fmt(h)} (residual {io.fmt(resid)})")
    return [io.write_json(Path(cfg["out"]) / "holder.json", result)]


def cmd_validate(cfg, quiet=False):
    from .validation import run_campaign

    only = [s for s in str(cfg["only"]).split(",") if s.strip()] if cfg["only"] else None
    try:
        results = run_campaign(only=only, quick=bool(cfg["quick"]),
                               echo=None if quiet else (lambda r: print(r.line(), flush=True)))
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    report = out / "report.txt"
    report.write_text("".join(r.line(with_time=False) + "\n" for r in results))
    rows = [[r.number, r.name, "PASS" if r.passed else "FAIL", json.dumps(io._jsonable(r.details), sort_keys=True),
             "quick" if r.quick else "full"] for r in results]
    table = _write_table(cfg, "criteria", ["criterion", "name", "status", "details", "mode"], rows)
    cfg["_passed"] = all(r.passed for r in results)
    return [report, table]


COMMANDS = {"moments": cmd_moments, "twopoint": cmd_twopoint, "growth": cmd_growth,
            "simulate": cmd_simulate, "holder": cmd_holder, "validate": cmd_validate}


def main(argv=None, quiet=False):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = _resolve(args)
        outputs = COMMANDS[args.command](cfg, quiet=quiet)
        passed = cfg.pop("_passed", True)
        _manifest(cfg, outputs)
    except (ConfigError, InsufficientReplicates, WindowTooNarrow) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergentJ0, DivergentMoment, NumericalBlowup, QuadratureError, NoSignChange) as exc:
        print(f"divergence: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DIVERGENT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
