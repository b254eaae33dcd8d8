"""Lyapunov exponents, growth-index bounds and the empirical growth index.

The empirical index fits r(alpha), the slope in t of
sup_{|x| >= alpha t} log E[u(t,x)^2], and brackets its sign change.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import NoSignChange
from .kernels import GrowthEnvelope, even_ceil, z_p
from .measures import InitialMeasure, exp_tail_rate
from .moments import second_moment

__all__ = [
    "GrowthReport",
    "lyapunov_bound_lebesgue",
    "lyapunov_exact_pam",
    "intermittency_ratios",
    "growth_index_bounds",
    "growth_index_exact_exp_decay",
    "empirical_growth_index",
]


def lyapunov_bound_lebesgue(p, Lip, nu, vip_zero=True):
    """Upper bound on the order-p Lyapunov exponent for Lebesgue data."""
    if int(p) != p or p < 2 or int(p) % 2:
        raise ValueError("p must be an even integer >= 2")
    return (2 ** 3 if vip_zero else 2 ** 5) * p ** 3 * Lip ** 4 / nu


def lyapunov_exact_pam(n, lam, nu):
    """lambda^4 n (n^2 - 1) / (4! nu) for the parabolic Anderson model."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    return lam ** 4 * n * (n * n - 1) / (24.0 * nu)


def intermittency_ratios(n_max, lam, nu):
    """[(n, lambda_n / n)] for n = 1..n_max."""
    return [(n, lyapunov_exact_pam(n, lam, nu) / n) for n in range(1, n_max + 1)]


def growth_index_bounds(p, env: GrowthEnvelope, beta, nu, nonnegative=True):
    """(lower, upper) bounds on the exponential growth indices of order p.

    The p = 2 upper bound uses its dedicated form; p > 2 uses z_{ceil_2(p)}.
    A nonzero upper offset leaves the upper bound infinite, a nonzero lower
    offset makes both indices infinite.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    if env.vip_low != 0:
        return math.inf, math.inf
    lower = env.lip_low ** 2 / 2.0 if nonnegative else 0.0
    if env.Vip_up != 0:
        return lower, math.inf
    L2 = env.Lip_up ** 2
    if p == 2:
        thresh, plateau = L2 / (2.0 * nu), L2 / 2.0
        branch = lambda b: b * nu / 2.0 + L2 * L2 / (8.0 * nu * b)
    else:
        z2 = z_p(even_ceil(p)) ** 2
        thresh, plateau = z2 * L2 / nu, z2 * L2
        branch = lambda b: b * nu / 2.0 + z2 * z2 * L2 * L2 / (2.0 * nu * b)
    if beta >= thresh:
        upper = plateau
    elif beta <= 0:
        upper = math.inf
    else:
        upper = branch(beta)
    return lower, upper


def growth_index_exact_exp_decay(beta, lam, nu):
    """Order-2 growth index for mu(dx) = e^{-beta|x|} dx."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    l2 = lam * lam
    if beta <= l2 / (2.0 * nu):
        return beta * nu / 2.0 + l2 * l2 / (8.0 * beta * nu)
    return l2 / 2.0


@dataclass
class GrowthReport:
    p: int
    lower_index_bound: float
    upper_index_bound: float
    empirical_transition: float
    bracket: tuple
    per_alpha_rates: list = field(default_factory=list)  # (alpha, rate, fit residual)
    t_window: tuple = ()

    def to_json(self):
        def enc(v):
            return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")
        return json.dumps({
            "p": self.p,
            "bounds": [enc(self.lower_index_bound), enc(self.upper_index_bound)],
            "transition": self.empirical_transition,
            "bracket": list(self.bracket),
            "per_alpha": [[a, r] for a, r, _ in sorted(self.per_alpha_rates)],
            "fit_residuals": [[a, res] for a, _, res in sorted(self.per_alpha_rates)],
            "t_window": list(self.t_window),
        }, indent=2)


class _RayProfile:
    """log E[u(t,x)^2] along one ray x = sign * r, r >= 0, with memoisation."""

    def __init__(self, fn, t, sign, r_max, sd):
        self.fn, self.t, self.sign = fn, t, sign
        self.cache = {}
        self.r_max = r_max
        # coarse scan, then golden section around the best coarse point
        rs = np.linspace(0.0, r_max, 13)
        vals = np.array([self(r) for r in rs])
        i = int(np.argmax(vals))
        lo, hi = rs[max(i - 1, 0)], rs[min(i + 1, len(rs) - 1)]
        if i == 0 and vals[1] < vals[0]:
            res_x, res_v = 0.0, vals[0]
            # check the left edge really is a local max on a finer scale
            if self(0.05 * sd) > res_v:
                res = optimize.minimize_scalar(lambda r: -self(r), bounds=(lo, hi), method="bounded",
                                               options={"xatol": 1e-3 * sd})
                res_x, res_v = res.x, -res.fun
        else:
            res = optimize.minimize_scalar(lambda r: -self(r), bounds=(lo, hi), method="bounded",
                                           options={"xatol": 1e-3 * sd})
            res_x, res_v = res.x, -res.fun
        self.r_star, self.v_star = res_x, max(res_v, vals[i])
        tail = np.maximum(vals[i:], -1e300)
        self.unimodal = bool(np.all(np.diff(tail) <= 1e-9))
        self.scan = (rs, vals)

    def __call__(self, r):
        key = round(float(r), 12)
        if key not in self.cache:
            self.cache[key] = self.fn(self.t, self.sign * key)
        return self.cache[key]

    def sup_beyond(self, r0):
        if r0 <= self.r_star:
            return self.v_star
        if self.unimodal:
            return self(r0)
        # dense fallback beyond r0
        rs = np.linspace(r0, self.r_max, 41)
        return max(self(r) for r in rs)


def empirical_growth_index(mu: InitialMeasure, nu, lam, t_max=100.0, alpha_bracket=None,
                           n_t=6, coarse_step=0.1, tol=0.01, method="auto"):
    """Empirical order-2 growth index from the exact second moment (vv = 0)."""
    if not mu.is_nonnegative or mu.is_zero:
        raise ValueError("empirical growth index needs a nonnegative, nonzero measure")
    l2 = lam * lam
    env = GrowthEnvelope.quasi_linear(lam, 0.0)
    beta = exp_tail_rate(mu)
    lower_b, upper_b = growth_index_bounds(2, env, beta, nu, nonnegative=True)
    if alpha_bracket is None:
        hi = 2.0 * l2 if not math.isfinite(upper_b) else max(2.0 * l2, 1.5 * upper_b)
        alpha_bracket = (0.0, hi)
    a_lo, a_hi = alpha_bracket
    ts = np.linspace(t_max / 2.0, t_max, n_t)
    signs = (1.0,) if mu.is_symmetric else (1.0, -1.0)

    def logm2(t, x):
        v = second_moment(mu, nu, lam, 0.0, t, x, method)
        return math.log(v) if v > 0 else -math.inf

    profiles = {}
    for t in ts:
        sd = math.sqrt(nu * t)
        r_max = a_hi * t + 10.0 * sd
        profiles[t] = [_RayProfile(logm2, t, s, r_max, sd) for s in signs]

    rates = {}

    def rate(alpha):
        if alpha not in rates:
            ys = np.array([max(p.sup_beyond(alpha * t) for p in profiles[t]) for t in ts])
            coef, res, *_ = np.polyfit(ts, ys, 1, full=True)
            resid = math.sqrt(float(res[0]) / len(ts)) if len(res) else 0.0
            rates[alpha] = (float(coef[0]), resid)
        return rates[alpha][0]

    step = coarse_step * l2
    grid = np.arange(a_lo, a_hi + 0.5 * step, step)
    r_grid = [rate(float(a)) for a in grid]
    lo = hi = None
    for a0, a1, r0, r1 in zip(grid[:-1], grid[1:], r_grid[:-1], r_grid[1:]):
        if r0 > 0 >= r1:
            lo, hi = float(a0), float(a1)
            break
    if lo is None:
        raise NoSignChange(f"r(alpha) keeps one sign on [{a_lo}, {a_hi}]: "
                           f"r = {r_grid[0]:.4g} .. {r_grid[-1]:.4g}")
    while hi - lo > tol * l2:
        mid = 0.5 * (lo + hi)
        if rate(mid) > 0:
            lo = mid
        else:
            hi = mid
    per_alpha = [(a, r, res) for a, (r, res) in sorted(rates.items())]
    return GrowthReport(p=2, lower_index_bound=lower_b, upper_index_bound=upper_b,
                        empirical_transition=0.5 * (lo + hi), bracket=(lo, hi),
                        per_alpha_rates=per_alpha, t_window=(float(ts[0]), float(ts[-1])))
