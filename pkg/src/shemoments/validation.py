"""Acceptance campaign: one check per criterion, shared by the CLI and the tests.

Each check returns a CriterionResult holding the pass flag, the measured
errors and the wall time.  Reports exclude timings so they are reproducible
byte for byte; timings go to the console only.
"""
from __future__ import annotations

import filecmp
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _quadrature as q
from .errors import NoSignChange
from .growth import empirical_growth_index, growth_index_exact_exp_decay, intermittency_ratios, \
    lyapunov_bound_lebesgue, lyapunov_exact_pam
from .kernels import GrowthEnvelope, kernel_H, kernel_K
from .measures import dirac, dirac_derivative, exp_decay, lebesgue
from .moments import (MomentRequest, bc_delta_integral, bc_lebesgue_integral, bc_moment_lebesgue,
                      pth_moment_upper, second_moment_exact, second_moment_lower, two_point_delta,
                      two_point_lebesgue)
from .picard import PicardGrid, picard_second_moment
from .special import erf

__all__ = ["CriterionResult", "CRITERIA", "GROUPS", "run_criterion", "run_campaign"]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    runtime: float = 0.0
    budget: float | None = None
    quick: bool = False

    def line(self, with_time=True):
        status = "PASS" if self.passed else "FAIL"
        parts = [f"criterion {self.number:2d} {self.name}: {status}"]
        parts += [f"{k}={_short(v)}" for k, v in self.details.items()]
        if with_time:
            budget = f"/{self.budget:g}s" if self.budget else ""
            parts.append(f"time={self.runtime:.1f}s{budget}")
        if self.quick:
            parts.append("[quick]")
        return " ".join(parts)


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_short(x) for x in v) + "]"
    return str(v)


# -- 1: kernel identity --------------------------------------------------------

def check_kernel_identity(quick=False):
    """H(t) against the space-time quadrature of K."""
    worst = 0.0
    for nu in (0.5, 1.0):
        for lam in (0.5, 1.0, 2.0):
            for t in (0.25, 0.5, 1.0, 2.0):
                def space(tau):
                    sd = math.sqrt(0.5 * nu * tau)
                    fn = lambda y: kernel_K(tau, y, nu, lam)
                    return q.integrate_significant(fn, (-40.0 * sd, 40.0 * sd), [(0.0, sd)], n=24)
                val = q.split_time_integral(space, t, rtol=1e-10)
                ref = kernel_H(t, nu, lam)
                worst = max(worst, abs(val - ref) / ref)
    return worst < 1e-6, {"max_rel_err": worst, "tol": 1e-6}


# -- 2: closed forms against the general evaluator ------------------------------

def check_closed_vs_quad(quick=False):
    ts = (0.25, 0.5, 1.0, 1.5, 2.0)
    xs = (-1.0, -0.5, 0.0, 0.5, 1.0)
    if quick:
        ts, xs = ts[::2], xs[::2]
    nu, lam = 1.0, 1.0
    err_leb = err_dirac = 0.0
    for t in ts:
        for x in xs:
            leb = MomentRequest.quasi(lebesgue(), nu, lam, 0.0, t, x)
            exact = 1.0 + kernel_H(t, nu, lam)
            err_leb = max(err_leb, abs(second_moment_exact(leb, "quad") - exact) / exact)
            dr = MomentRequest.quasi(dirac(), nu, lam, 0.0, t, x)
            exact = kernel_K(t, x, nu, lam) / lam ** 2
            err_dirac = max(err_dirac, abs(second_moment_exact(dr, "quad") - exact) / exact)
    ok = err_leb < 1e-4 and err_dirac < 1e-3
    return ok, {"lebesgue_rel_err": err_leb, "dirac_rel_err": err_dirac, "grid": f"{len(ts)}x{len(xs)}"}


# -- 3, 4: Bertini-Cancrini identities ---------------------------------------

def _random_points(seed, n):
    rng = np.random.default_rng(seed)
    return [(float(rng.uniform(0.1, 2.0)), float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2)))
            for _ in range(n)]


def check_bc_two_point(quick=False):
    nu = 1.0
    err_leb = err_delta = 0.0
    for t, x, y in _random_points(20240601, 10):
        diff = two_point_lebesgue(nu, 1.0, 0.0, t, x, y) - bc_lebesgue_integral(nu, t, x, y)
        err_leb = max(err_leb, abs(diff - erf(abs(x - y) / math.sqrt(4.0 * nu * t))))
        err_delta = max(err_delta, abs(bc_delta_integral(nu, t, x, y) - two_point_delta(nu, 1.0, 0.0, t, x, y)))
    ok = err_leb < 1e-6 and err_delta < 1e-6
    return ok, {"lebesgue_abs_err": err_leb, "delta_abs_err": err_delta}


def check_bc_moment(quick=False):
    worst = 0.0
    for nu in (0.5, 1.0, 2.0):
        for t in np.linspace(0.05, 5.0, 25):
            a = bc_moment_lebesgue(2, nu, float(t))
            b = 1.0 + kernel_H(float(t), nu, 1.0)
            worst = max(worst, abs(a - b))
    return worst < 1e-10, {"max_abs_err": worst}


# -- 5: Picard iteration --------------------------------------------------------

def _picard_distances(iterates, exact, relative):
    out = []
    for f in iterates:
        if relative:
            rel = np.max(np.abs(f.values - exact), axis=1) / np.max(np.abs(exact), axis=1)
            out.append(float(rel[1:].max()))
        else:
            out.append(float(np.max(np.abs(f.values - exact))))
    return out


def check_picard(quick=False):
    nu, lam = 1.0, 1.0
    grid = PicardGrid(T=1.0, K=200, N=400)
    details = {}
    ok = True
    for name, mu, relative, tol in (("lebesgue", lebesgue(), False, 1e-3), ("delta", dirac(), True, 1e-2)):
        its, status = picard_second_moment(mu, nu, lam, 0.0, grid, max_iter=30)
        T, X = np.meshgrid(its[0].t, its[0].x, indexing="ij")
        exact = 1.0 + kernel_H(T, nu, lam) if name == "lebesgue" else kernel_K(T, X, nu, lam) / lam ** 2
        d = _picard_distances(its, exact, relative)
        mono = all(b <= a for a, b in zip(d, d[1:]))
        good = mono and d[-1] < tol and len(d) - 1 <= 30
        ok &= good
        details[f"{name}_final"] = d[-1]
        details[f"{name}_status"] = str(status)
        details[f"{name}_monotone"] = mono
    its, status = picard_second_moment(dirac_derivative(1), nu, lam, 0.0, grid, max_iter=10)
    div = (not status.converged) and status.n <= 10
    ok &= div
    details["delta_prime_status"] = str(status)
    return ok, details


# -- 6, 7: Monte Carlo ---------------------------------------------------------

_MC_CACHE = {}


def mc_runs(quick=False):
    """The two ensembles shared by criteria 6 and 7 (cached per process)."""
    from .simulator import SimConfig, run_ensemble

    key = bool(quick)
    if key not in _MC_CACHE:
        M = 2000 if quick else 10_000
        cfg_l = SimConfig(L=6.0, dx=0.05, T=0.5, M=M, seed=20240601)
        cfg_d = SimConfig(L=6.0, dx=0.05, T=0.25, M=M, seed=20240602)
        cfg_l.check_query(1.5)
        cfg_d.check_query(1.5)
        _MC_CACHE[key] = (run_ensemble(lebesgue(), 0.5, cfg_l), run_ensemble(dirac(), 0.5, cfg_d))
    return _MC_CACHE[key]


def check_mc_moment(quick=False):
    from .simulator import mc_moment

    ens_l, ens_d = mc_runs(quick)
    lam = 0.5
    extra = 0.05 if quick else 0.0
    e = mc_moment(ens_l, 2, 0.5, 0.0)
    exact_l = 1.0 + kernel_H(0.5, 1.0, lam)
    ok_l = abs(e.mean - exact_l) <= 3 * e.stderr + (0.05 + extra) * exact_l
    d = mc_moment(ens_d, 2, 0.25, 0.0)
    exact_d = kernel_K(0.25, 0.0, 1.0, lam) / lam ** 2
    ok_d = abs(d.mean - exact_d) <= (0.10 + extra) * exact_d
    return ok_l and ok_d, {
        "lebesgue": f"{e.mean:.5f}+-{e.stderr:.5f} vs {exact_l:.5f}",
        "delta": f"{d.mean:.5f}+-{d.stderr:.5f} vs {exact_d:.5f}",
        "M": e.M,
    }


def check_mc_mean(quick=False):
    from .simulator import mc_mean

    ens_l, ens_d = mc_runs(quick)
    xs = (-1.0, -0.5, 0.0, 0.5, 1.0, 1.5)
    worst = 0.0
    ok = True
    for ens, mu, t in ((ens_l, lebesgue(), 0.5), (ens_d, dirac(), 0.25)):
        for x in xs:
            m = mc_mean(ens, t, x)
            ref = float(mu.j0_array(1.0, m.t, m.x))
            z = abs(m.mean - ref) / m.stderr
            worst = max(worst, z)
            ok &= z <= 3.0
    return ok, {"max_z": worst, "nodes": 2 * len(xs)}


# -- 8: growth index ----------------------------------------------------------

def check_growth(quick=False):
    ok = True
    details = {}
    for beta in (1.0, 0.25):
        try:
            rep = empirical_growth_index(exp_decay(beta), 1.0, 1.0)
            val = rep.empirical_transition
        except NoSignChange:
            val = math.nan
        expected = growth_index_exact_exp_decay(beta, 1.0, 1.0)
        good = abs(val - expected) <= 0.05 * expected
        ok &= good
        details[f"exp_decay_{beta:g}"] = val
    try:
        val = empirical_growth_index(dirac(), 1.0, 1.0).empirical_transition
    except NoSignChange:
        val = math.nan
    ok &= 0.45 <= val <= 0.55
    details["delta"] = val
    return ok, details


# -- 9: Lyapunov exponents ------------------------------------------------------

def check_lyapunov(quick=False):
    ratios = [r for _, r in intermittency_ratios(8, 1.0, 1.0)][1:]
    increasing = all(b > a for a, b in zip(ratios, ratios[1:]))
    dominated = True
    # the bound is stated for even orders only
    for lam in (0.5, 1.0, 2.0):
        for nu in (0.5, 1.0):
            for p in (2, 4, 6, 8):
                dominated &= lyapunov_bound_lebesgue(p, abs(lam), nu) >= lyapunov_exact_pam(p, lam, nu)
    return increasing and dominated, {"ratios_increase": increasing, "bound_dominates": dominated}


# -- 10: Hoelder exponents -----------------------------------------------------

def holder_ensemble(M=200, seed=20240603, t0=0.5):
    from .simulator import SimConfig, run_ensemble

    # dx = 0.025 keeps the lattice bias of the spatial slope near 0.04
    cfg = SimConfig(L=5.0, dx=0.025, T=t0 + 0.05, M=M, seed=seed)
    n0 = cfg.step_of(t0)
    rec = [n0] + [n0 + 2 ** j for j in range(0, 9)]
    return run_ensemble(lebesgue(), 1.0, cfg, record_steps=rec)


def check_holder(quick=False):
    from .simulator import holder_estimate

    ens = holder_ensemble(M=100 if quick else 200)
    cfg = ens.config
    hs, rs = holder_estimate(ens, "space", 0.5, (cfg.dx, 8 * cfg.dx))
    ht, rt = holder_estimate(ens, "time", 0.5, (16 * cfg.dt, 256 * cfg.dt))
    ok = 0.4 <= hs <= 0.6 and 0.15 <= ht <= 0.35
    return ok, {"space": hs, "space_resid": rs, "time": ht, "time_resid": rt}


# -- 11: bound sandwich --------------------------------------------------------

def check_bounds(quick=False):
    rng = np.random.default_rng(20240604)
    nu = 1.0
    worst_eq = 0.0
    strict = True
    for _ in range(100):
        t = float(rng.uniform(0.1, 3.0))
        x = float(rng.uniform(-2.0, 2.0))
        for mu in (dirac(), lebesgue()):
            req = MomentRequest.quasi(mu, nu, 1.0, 0.0, t, x)
            lo, ex, up = second_moment_lower(req), second_moment_exact(req), pth_moment_upper(req).value
            worst_eq = max(worst_eq, abs(lo - ex) / ex, abs(up - ex) / ex)
            env = GrowthEnvelope.bounds(Lip_up=1.3, lip_low=0.7)
            req2 = MomentRequest(mu, env, nu, t, x)
            mid = second_moment_exact(MomentRequest.quasi(mu, nu, 1.0, 0.0, t, x))
            strict &= second_moment_lower(req2) < mid < pth_moment_upper(req2).value
    ok = worst_eq < 1e-10 and strict
    return ok, {"quasi_rel_gap": worst_eq, "strict_ordering": strict}


# -- 12: determinism ----------------------------------------------------------

def check_determinism(quick=False):
    from .cli import main

    same = True
    with tempfile.TemporaryDirectory() as tmp:
        runs = [
            ["simulate", "--measure", "delta", "--seed", "7", "--lambda", "1", "--T", "0.05", "--M", "4",
             "--L", "3", "--record", "0.01,0.05"],
            ["simulate", "--measure", "lebesgue", "--seed", "11", "--lambda", "0.5", "--T", "0.05", "--M", "4",
             "--L", "3", "--format", "json"],
            ["validate", "--only", "bc-identities"],
        ]
        for i, args in enumerate(runs):
            outs = []
            for rep in range(2):
                out = Path(tmp) / f"run{i}_{rep}"
                code = main(args + ["--out", str(out)], quiet=True)
                if code != 0:
                    same = False
                outs.append(out)
            cmp = filecmp.dircmp(outs[0], outs[1])
            files = sorted(p.name for p in outs[0].iterdir())
            same &= bool(files) and not cmp.left_only and not cmp.right_only
            same &= all(filecmp.cmp(outs[0] / f, outs[1] / f, shallow=False) for f in files)
    return same, {"byte_identical": same}


# -- registry ------------------------------------------------------------------

CRITERIA = {
    1: ("kernel-identity", check_kernel_identity, 10),
    2: ("closed-vs-quadrature", check_closed_vs_quad, 60),
    3: ("bc-two-point", check_bc_two_point, 30),
    4: ("bc-moment", check_bc_moment, None),
    5: ("picard", check_picard, 120),
    6: ("mc-second-moment", check_mc_moment, 300),
    7: ("mc-mean", check_mc_mean, None),
    8: ("growth-index", check_growth, 180),
    9: ("lyapunov", check_lyapunov, None),
    10: ("holder", check_holder, 300),
    11: ("bound-sandwich", check_bounds, None),
    12: ("determinism", check_determinism, None),
}

GROUPS = {
    "kernel-identity": (1,),
    "closed-forms": (2,),
    "bc-identities": (3, 4),
    "picard": (5,),
    "monte-carlo": (6, 7),
    "growth": (8,),
    "lyapunov": (9,),
    "holder": (10,),
    "bounds": (11,),
    "determinism": (12,),
}


def run_criterion(number, quick=False) -> CriterionResult:
    name, fn, budget = CRITERIA[number]
    t0 = time.perf_counter()
    ok, details = fn(quick=quick)
    dt = time.perf_counter() - t0
    if number in (6, 7):
        # both Monte Carlo checks share one pair of ensembles; criterion 6 pays for them
        budget = CRITERIA[6][2]
    within = budget is None or quick or dt < budget
    if not within:
        details = dict(details, over_budget=True)
    return CriterionResult(number, name, bool(ok) and within, details, dt, budget, quick)


def run_campaign(only=None, quick=False, echo=None):
    """Run the selected criteria (all by default); ``echo`` receives each result."""
    numbers = sorted(CRITERIA) if not only else sorted({n for g in only for n in _resolve(g)})
    results = []
    for n in numbers:
        res = run_criterion(n, quick)
        results.append(res)
        if echo is not None:
            echo(res)
    return results


def _resolve(token):
    token = str(token).strip()
    if token in GROUPS:
        return GROUPS[token]
    for n, (name, _, _) in CRITERIA.items():
        if token == name or token == str(n):
            return (n,)
    raise KeyError(f"unknown criterion or group {token!r}; choose from "
                   f"{', '.join(list(GROUPS) + [str(n) for n in CRITERIA])}")
