"""Second-moment formulas, p-th moment bounds, two-point correlations and the
Bertini-Cancrini comparison integrals.

The general evaluator computes

    ||u(t,x)||_2^2 = J0^2(t,x) + (J0^2 star K)(t,x) + vv^2 H(t),

where (J0^2 star K)(t,x) = int_0^t dtau c(tau) int J0(t-tau,y)^2 G_{nu/2}(tau,x-y) dy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import _quadrature as q
from .errors import DivergentJ0, DivergentMoment, QuadratureError
from .kernels import (
    GrowthEnvelope,
    a_p_vip,
    kernel_c,
    kernel_H,
    kernel_K,
    lam_for_variant,
    z_p,
)
from .measures import InitialMeasure, check_j0_finite, j0
from .special import erf, erfc, exp_erfc, heat_kernel, std_normal_cdf, std_normal_pdf

__all__ = [
    "MomentRequest",
    "MomentBound",
    "GridFunction",
    "inner_j0sq",
    "star_K",
    "second_moment_exact",
    "second_moment",
    "second_moment_lower",
    "pth_moment_upper",
    "two_point_lebesgue",
    "two_point_delta",
    "two_point_general",
    "two_point_bounds",
    "second_moment_grid",
    "bc_lebesgue_integral",
    "bc_delta_integral",
    "bc_moment_lebesgue",
    "stochastic_term_delta_limit",
]


@dataclass(frozen=True)
class MomentRequest:
    mu: InitialMeasure
    env: GrowthEnvelope
    nu: float
    t: float
    x: float = 0.0
    p: int = 2

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if not self.t > 0:
            raise ValueError("t must be positive")
        if int(self.p) != self.p or self.p < 2 or int(self.p) % 2:
            raise ValueError(f"p must be an even integer >= 2, got {self.p}")
        if not check_j0_finite(self.mu, self.nu, self.t, self.x):
            raise DivergentJ0(f"initial data {self.mu.spec()} is not admissible at t={self.t}")

    @classmethod
    def quasi(cls, mu, nu, lam, vv=0.0, t=1.0, x=0.0, p=2):
        return cls(mu, GrowthEnvelope.quasi_linear(lam, vv), nu, t, x, p)

    @property
    def lam(self):
        if self.env.quasi is None:
            raise ValueError("request has no quasi-linear envelope")
        return self.env.quasi[0]

    @property
    def vv(self):
        return self.env.quasi[1]


@dataclass(frozen=True)
class MomentBound:
    """Bound on ||u(t,x)||_p^2 with the variant that produced it."""

    value: float
    p: int
    branch: str
    a_p_vip: float
    z_p: float
    lam_eff: float

    @property
    def pth_power(self):
        """The matching bound on E|u|^p."""
        return self.value ** (self.p / 2)


# -- inner space integral ---------------------------------------------------

def inner_j0sq(mu: InitialMeasure, nu, s, tau, x, method="auto"):
    """F(s, tau; x) = int J0(s,y)^2 G_{nu/2}(tau, x - y) dy."""
    if method == "auto":
        if mu.is_lebesgue:
            return 1.0
        if mu.is_pure_atomic:
            return float(q.gaussian_product_atoms(mu.atoms, nu, s, tau, x))
    sk = math.sqrt(nu * tau / 2.0)
    feats = mu.features(nu, s) + [(x, sk)]
    rate = mu.max_tail_rate()
    R = 14.0 * sk + 2.0 * rate * sk * sk
    lo = min([x - R] + [c - 14.0 * w for c, w in feats])
    hi = max([x + R] + [c + 14.0 * w for c, w in feats])

    def fn(y):
        J = mu.j0_array(nu, s, y)
        return J * J * heat_kernel(nu / 2.0, tau, x - y)

    runs = q.significant_edges(fn, (lo, hi), feats)
    if not runs:
        return 0.0
    compact = all(d.tail.kind == "compact" for _, d in mu.terms)
    if not compact and (runs[0][0] <= lo or runs[-1][-1] >= hi):
        raise DivergentMoment("inner integrand is still significant at the truncation hull")
    total = 0.0
    for edges in runs:
        nodes, weights = q.composite_nodes(edges, 16)
        total += float(np.dot(weights, fn(nodes)))
    return total


def star_K(mu: InitialMeasure, nu, lam, t, x, method="auto"):
    """(J0^2 star K)(t, x) with K = K(.;nu,lam)."""
    if lam == 0:
        return 0.0
    if method == "auto" and mu.is_lebesgue:
        return float(kernel_H(t, nu, lam))

    def g(tau):
        if tau <= 0 or tau >= t:
            return 0.0
        return kernel_c(tau, nu, lam) * inner_j0sq(mu, nu, t - tau, tau, x, method)

    try:
        return q.split_time_integral(g, t)
    except QuadratureError as exc:
        raise DivergentMoment(str(exc)) from exc


def _moment_formula(mu, nu, lam, vip, t, x, factor=1.0, method="auto"):
    """factor J0^2 + (factor J0^2 star K_lam) + vip^2 H_lam."""
    H = kernel_H(t, nu, lam) if lam != 0 else 0.0
    if method == "auto":
        if mu.is_lebesgue:
            return factor * (1.0 + H) + vip * vip * H
        one = mu.single_atom
        if one is not None and lam != 0:
            a, m = one
            return factor * m * m * kernel_K(t, x - a, nu, lam) / lam ** 2 + vip * vip * H
    J = j0(mu, nu, t, x, method="quad" if method == "quad" else "auto")
    return factor * (J * J + star_K(mu, nu, lam, t, x, method)) + vip * vip * H


def second_moment_exact(req: MomentRequest, method="auto"):
    """||u(t,x)||_2^2 in the quasi-linear case.

    ``method="auto"`` takes the closed forms for Lebesgue and single-atom data;
    ``method="quad"`` forces nested quadrature of the space-time convolution.
    """
    if req.env.quasi is None:
        raise ValueError("second_moment_exact needs a quasi-linear envelope")
    return _moment_formula(req.mu, req.nu, req.lam, req.vv, req.t, req.x, 1.0, method)


def second_moment(mu, nu, lam, vv, t, x, method="auto"):
    return second_moment_exact(MomentRequest.quasi(mu, nu, lam, vv, t, x), method)


def second_moment_lower(req: MomentRequest, method="auto"):
    env = req.env
    return _moment_formula(req.mu, req.nu, env.lip_low, env.vip_low, req.t, req.x, 1.0, method)


def pth_moment_upper(req: MomentRequest, method="auto") -> MomentBound:
    """Upper bound on ||u(t,x)||_p^2: the p = 2 branch uses Lip_up, the p > 2
    branch doubles the J0 terms and uses lam_hat = a_{p,vip} z_p Lip_up."""
    env, p = req.env, int(req.p)
    a, z = a_p_vip(p, env.Vip_up), z_p(p)
    if p == 2:
        lam, factor, branch = env.Lip_up, 1.0, "p=2"
    else:
        lam, factor, branch = lam_for_variant("hat_p", env, p), 2.0, "p>2"
    val = _moment_formula(req.mu, req.nu, lam, env.Vip_up, req.t, req.x, factor, method)
    return MomentBound(value=val, p=p, branch=branch, a_p_vip=a, z_p=z, lam_eff=lam)


# -- two-point correlations ------------------------------------------------

def two_point_lebesgue(nu, lam, vv, t, x, y):
    d = abs(x - y)
    rt = 2.0 * math.sqrt(nu * t)
    l2 = lam * lam
    a = (l2 * l2 * t - 2.0 * l2 * d) / (4.0 * nu)
    return 1.0 + (1.0 + vv * vv) * (exp_erfc(a, (d - l2 * t) / rt) - erfc(d / rt))


def two_point_delta(nu, lam, vv, t, x, y):
    d = abs(x - y)
    rt = 2.0 * math.sqrt(nu * t)
    l2 = lam * lam
    a = (l2 * l2 * t - 2.0 * l2 * d) / (4.0 * nu)
    ee = exp_erfc(a, (d - l2 * t) / rt)
    return (heat_kernel(nu, t, x) * heat_kernel(nu, t, y) - vv * vv * erfc(d / rt)
            + (l2 / (4.0 * nu) * heat_kernel(nu / 2.0, t, 0.5 * (x + y)) + vv * vv) * ee)


def _noise_offset_terms(nu, lam, vip, t, d):
    """lam^2 vip^2 int_0^t G_{2nu}(tau, d) dtau in closed form."""
    l2v2 = lam * lam * vip * vip
    return (l2v2 / nu * d * (std_normal_cdf(d / math.sqrt(2.0 * nu * t)) - 1.0)
            + 2.0 * l2v2 * t * heat_kernel(2.0 * nu, t, d))


@dataclass
class GridFunction:
    """Values f(t_i, x_j) on a strictly increasing t-grid and uniform x-grid."""

    t: np.ndarray
    x: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.t.size == 0 or self.x.size == 0:
            raise ValueError("grids must be non-empty")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("t-grid must be strictly increasing")
        if self.values.shape != (self.t.size, self.x.size):
            raise ValueError("values shape does not match the grids")

    def __call__(self, s, z):
        """Bilinear interpolation; clamps outside the grid."""
        s = np.asarray(s, dtype=float)
        z = np.asarray(z, dtype=float)
        s, z = np.broadcast_arrays(s, z)
        ti = np.clip(np.searchsorted(self.t, s) - 1, 0, self.t.size - 2) if self.t.size > 1 else np.zeros(s.shape, int)
        dx = self.x[1] - self.x[0]
        xj = np.clip(((z - self.x[0]) / dx).astype(int), 0, self.x.size - 2)
        if self.t.size > 1:
            t0, t1 = self.t[ti], self.t[ti + 1]
            wt = np.clip((s - t0) / (t1 - t0), 0.0, 1.0)
        else:
            wt = np.zeros(s.shape)
        wx = np.clip((z - self.x[xj]) / dx, 0.0, 1.0)
        v = self.values
        ti1 = np.minimum(ti + 1, self.t.size - 1)
        a = v[ti, xj] * (1 - wx) + v[ti, xj + 1] * wx
        b = v[ti1, xj] * (1 - wx) + v[ti1, xj + 1] * wx
        out = a * (1 - wt) + b * wt
        return out if out.ndim else float(out)


def second_moment_grid(mu: InitialMeasure, nu, lam, vip, T, K=200, N=400, L=None,
                       factor=1.0, n_time=24, n_hermite=40):
    """Tabulate factor J0^2 + (factor J0^2 star K) + vip^2 H on t_k = T (k/K)^2.

    Atom-only data use the exact Gaussian-product inner integral; otherwise
    the inner integral is Gauss-Hermite in the kernel variable.
    """
    if L is None:
        amax = max((abs(a) for a, _ in mu.atoms), default=0.0)
        L = 6.0 * math.sqrt(nu * T) + amax
    tg = T * (np.arange(1, K + 1) / K) ** 2
    xg = np.linspace(-L, L, N)
    vals = np.empty((K, N))
    xi, wi = q.gauss_hermite(n_hermite)
    for k, tk in enumerate(tg):
        J = mu.j0_array(nu, tk, xg)
        star = np.zeros(N)
        if lam != 0:
            taus, wts = q.split_time_nodes(tk, n_time)
            for tau, w in zip(taus, wts):
                s = tk - tau
                if mu.is_lebesgue:
                    F = np.ones(N)
                elif mu.is_pure_atomic:
                    F = q.gaussian_product_atoms(mu.atoms, nu, s, tau, xg)
                else:
                    sk = math.sqrt(nu * tau / 2.0)
                    ys = xg[:, None] - sk * xi[None, :]
                    Jy = mu.j0_array(nu, s, ys)
                    F = (Jy * Jy) @ wi
                star += w * kernel_c(tau, nu, lam) * F
        H = kernel_H(tk, nu, lam) if lam != 0 else 0.0
        vals[k] = factor * (J * J + star) + vip * vip * H
    return GridFunction(tg, xg, vals, meta={"lam": lam, "vip": vip, "factor": factor, "mu": mu.spec()})


def _two_point_formula(mu, nu, lam, vip, t, x, y, f_source="auto", grid=None, grid_shape=(200, 400)):
    d = abs(x - y)
    m = 0.5 * (x + y)
    base = j0(mu, nu, t, x) * j0(mu, nu, t, y)
    if lam == 0:
        return base
    H = lambda s: kernel_H(s, nu, lam)
    analytic = f_source == "auto" and (mu.is_lebesgue or mu.is_pure_atomic)
    one = mu.single_atom
    gh_x, gh_w = q.gauss_hermite(40)

    if analytic and mu.is_lebesgue:
        def inner(s, tau):
            return 1.0 + (1.0 + vip * vip) * H(s)
    elif analytic and one is not None:
        a, ma = one

        def inner(s, tau):
            return ma * ma * kernel_c(s, nu, lam) * heat_kernel(nu / 2.0, t, m - a) / lam ** 2 + vip * vip * H(s)
    elif analytic:
        def inner(s, tau):
            F = lambda ss, tt: float(q.gaussian_product_atoms(mu.atoms, nu, ss, tt, m))
            conv = q.split_time_integral(lambda sig: kernel_c(sig, nu, lam) * F(s - sig, sig + tau)
                                         if 0 < sig < s else 0.0, s, rtol=1e-10)
            return F(s, tau) + conv + vip * vip * H(s)
    else:
        if grid is None:
            Lg = max(abs(x), abs(y)) + 8.0 * math.sqrt(nu * t) + max((abs(a) for a, _ in mu.atoms), default=0.0)
            grid = second_moment_grid(mu, nu, lam, vip, t, K=grid_shape[0], N=grid_shape[1], L=Lg)

        def inner(s, tau):
            sk = math.sqrt(nu * tau / 2.0)
            return float(np.dot(gh_w, grid(s, m - sk * gh_x)))

    def g(tau):
        if tau <= 0 or tau >= t:
            return 0.0
        return heat_kernel(2.0 * nu, tau, d) * inner(t - tau, tau)

    T = q.split_time_integral(g, t)
    return base + lam * lam * T + _noise_offset_terms(nu, lam, vip, t, d)


def two_point_general(req: MomentRequest, y, f_source="auto", grid=None, grid_shape=(200, 400)):
    """E[u(t,x) u(t,y)] from the space-time integral of f = ||u||_2^2.

    ``f_source="auto"`` integrates the exact f analytically in space for
    Lebesgue and atomic data; ``"grid"`` (and every other measure) uses a
    bilinearly interpolated GridFunction cache.
    """
    if req.env.quasi is None:
        raise ValueError("two_point_general needs a quasi-linear envelope")
    return _two_point_formula(req.mu, req.nu, req.lam, req.vv, req.t, req.x, y,
                              f_source, grid, grid_shape)


def two_point_bounds(req: MomentRequest, y, f_source="auto", grid_shape=(200, 400)):
    """(lower, upper) two-point bounds with f-lower/f-upper from the p = 2 bounds."""
    env = req.env
    upper = _two_point_formula(req.mu, req.nu, env.Lip_up, env.Vip_up, req.t, req.x, y,
                               f_source, None, grid_shape)
    lower = _two_point_formula(req.mu, req.nu, env.lip_low, env.vip_low, req.t, req.x, y,
                               f_source, None, grid_shape)
    return lower, upper


# -- Bertini-Cancrini comparisons --------------------------------------------

def bc_lebesgue_integral(nu, t, x, y):
    """Integral form of the two-point function for Lebesgue data, lam = 1.

    With s = d^2 / (2 nu r^2) the first-passage density becomes 4 phi(r).
    """
    d = abs(x - y)
    g = lambda u: math.exp(u / (4.0 * nu)) * std_normal_cdf(math.sqrt(max(u, 0.0) / (2.0 * nu)))
    r0 = d / math.sqrt(2.0 * nu * t)
    if d == 0:
        return 2.0 * g(t)
    val, err = integrate.quad(lambda r: 4.0 * std_normal_pdf(r) * g(t - d * d / (2.0 * nu * r * r)),
                              r0, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    if not math.isfinite(val):
        raise QuadratureError("Lebesgue comparison integral did not converge")
    return val


def bc_delta_integral(nu, t, x, y):
    """Integral form of the two-point function for delta data, lam = 1.

    With s = 1 / (1 + r^2 / 2q), q = d^2 / (4 nu t), the integral becomes a
    half-line Gaussian integral.
    """
    d = abs(x - y)
    pref = math.exp(-(x * x + y * y) / (2.0 * nu * t)) / (2.0 * math.pi * nu * t)

    def h(one_minus_s):
        w = t * one_minus_s
        return 1.0 + math.sqrt(math.pi * w / nu) * math.exp(w / (4.0 * nu)) * std_normal_cdf(math.sqrt(w / (2.0 * nu)))

    if d == 0:
        return pref * h(1.0)
    qq = d * d / (4.0 * nu * t)

    def integrand(r):
        w2 = r * r / (2.0 * qq)
        return 2.0 * std_normal_pdf(r) * h(w2 / (1.0 + w2))

    val, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return pref * val


def bc_moment_lebesgue(n, nu, t):
    """2 exp(n(n^2-1) t / (4! nu)) Phi(sqrt(n(n^2-1) t / (12 nu)))."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be a positive integer")
    k = n * (n * n - 1)
    return 2.0 * math.exp(k * t / (24.0 * nu)) * float(std_normal_cdf(math.sqrt(k * t / (12.0 * nu))))


def stochastic_term_delta_limit(nu, lam, t, x):
    """||I(t,x)||_2^2 for delta data, vv = 0."""
    if not t > 0:
        raise ValueError("t must be positive")
    l2 = lam * lam
    return (l2 / (2.0 * nu) * math.exp(l2 * l2 * t / (4.0 * nu))
            * float(std_normal_cdf(l2 * math.sqrt(t / (2.0 * nu)))) * heat_kernel(nu / 2.0, t, x))
