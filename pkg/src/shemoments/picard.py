"""Picard iteration for the second moment on a space-time grid.

    f_0 = J0^2,   f_{n+1} = J0^2 + S[vv^2 + f_n],
    S[g](t,x) = lam^2 int_0^t ds int g(s,y) G_nu^2(t-s, x-y) dy.

Since G_nu^2(t,x) = (4 pi nu t)^{-1/2} G_{nu/2}(t,x), S maps
G_{nu/2}(s, . - m) r(s) to G_{nu/2}(t, . - m) V[r](t) with the Abel-type
operator V[r](t) = lam^2 int_0^t (4 pi nu (t-s))^{-1/2} r(s) ds.  Atom pairs
therefore stay in closed form in x and only a one-dimensional Volterra
iteration in t remains.  Everything else (density parts, the vv^2 source) is
carried as a grid function h and propagated by product integration:
piecewise-linear in s with exact weights for (t-s)^{-1/2}, and hat-function
weights in space applied by FFT.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite_e import hermeval

from . import _quadrature as q
from .measures import DistributionalInput, InitialMeasure
from .moments import GridFunction
from .special import heat_kernel, std_normal_cdf, std_normal_pdf

__all__ = ["PicardGrid", "PicardStatus", "picard_second_moment", "source_exponent"]

BLOWUP = 1e9


@dataclass(frozen=True)
class PicardGrid:
    """t_k = T (k/K)^2 for k = 0..K and N uniform x nodes on [-L, L]."""

    T: float = 1.0
    K: int = 200
    N: int = 400
    L: float | None = None

    def resolve(self, nu, centers=()):
        L = self.L
        if L is None:
            L = 6.0 * math.sqrt(nu * self.T) + max((abs(c) for c in centers), default=0.0)
        t = self.T * (np.arange(self.K + 1) / self.K) ** 2
        x = np.linspace(-L, L, self.N)
        return t, x


@dataclass(frozen=True)
class PicardStatus:
    converged: bool
    n: int
    reason: str = ""

    def __str__(self):
        return f"{'Converged' if self.converged else 'Diverged'}({self.n})"


# -- time weights --------------------------------------------------------

def _abel_weights(t, c0):
    """Lower-triangular A with (A r)_k = c0 int_0^{t_k} (t_k - s)^{-1/2} r_lin(s) ds
    for the piecewise-linear interpolant r_lin of r on the nodes t."""
    K = len(t) - 1
    A = np.zeros((K + 1, K + 1))
    alpha = np.zeros((K + 1, K + 1))
    beta = np.zeros((K + 1, K + 1))
    for k in range(1, K + 1):
        tm, tm1 = t[:k], t[1:k + 1]
        a = t[k] - tm
        b = t[k] - tm1
        sa, sb = np.sqrt(a), np.sqrt(b)
        dt = tm1 - tm
        i0 = 2.0 * (sa - sb)
        i1 = 2.0 * a * (sa - sb) - (2.0 / 3.0) * (a * sa - b * sb)
        be = c0 * i1 / dt
        al = c0 * i0 - be
        alpha[k, :k] = al
        beta[k, :k] = be
        A[k, :k] += al
        A[k, 1:k + 1] += be
    return A, alpha, beta


def _hat_kernel(offsets, dx, sigma):
    """W_j = int hat_j(y) G(0 - y) dy, G centred normal with sd sigma."""
    def F2(z):
        return z * std_normal_cdf(z / sigma) + sigma * std_normal_pdf(z / sigma)
    z = offsets * dx
    return (F2(z + dx) - 2.0 * F2(z) + F2(z - dx)) / dx


class _SpaceTimeOperator:
    """Applies S[h] on the grid for h given at every (t_k, x_j)."""

    def __init__(self, t, x, nu, lam):
        self.t, self.x = t, x
        K = len(t) - 1
        N = len(x)
        self.N, self.P = N, N
        M = N + 2 * self.P
        self.M = M
        dx = x[1] - x[0]
        c0 = lam * lam / math.sqrt(4.0 * math.pi * nu)
        self.A, alpha, beta = _abel_weights(t, c0)
        offs = np.arange(M)
        offs = np.where(offs > M // 2, offs - M, offs).astype(float)
        F = M // 2 + 1
        self.V = np.zeros((K + 1, K + 1, F))
        for k in range(1, K + 1):
            for m in range(k):
                tau = t[k] - 0.5 * (t[m] + t[m + 1])
                W = np.fft.rfft(_hat_kernel(offs, dx, math.sqrt(nu * tau / 2.0))).real
                self.V[k, m] += alpha[k, m] * W
                self.V[k, m + 1] += beta[k, m] * W

    def __call__(self, h):
        P = self.P
        padded = np.concatenate([np.repeat(h[:, :1], P, axis=1), h, np.repeat(h[:, -1:], P, axis=1)], axis=1)
        hh = np.fft.rfft(padded, axis=1)
        out_hat = np.einsum("kmf,mf->kf", self.V, hh)
        out = np.fft.irfft(out_hat, n=self.M, axis=1)
        return out[:, P:P + self.N]


# -- atom-pair sources ------------------------------------------------------

def _chebyshev_abel(fn, t, c0, n=64, rtol=1e-12):
    """c0 int_0^t (t-s)^{-1/2} s^{-1/2} fn(s) ds by Gauss-Chebyshev, doubling n."""
    prev = None
    while True:
        theta = (2 * np.arange(1, n + 1) - 1) * math.pi / (2 * n)
        s = 0.5 * t * (1.0 - np.cos(theta))
        val = c0 * math.pi / n * float(np.sum(fn(s)))
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300):
            return val
        if n >= 4096:
            return val
        prev, n = val, 2 * n


def _atom_pairs(atoms):
    pairs = []
    for i, (ai, mi) in enumerate(atoms):
        pairs.append((ai, ai, mi * mi))
        for aj, mj in atoms[i + 1:]:
            pairs.append((ai, aj, 2.0 * mi * mj))
    return pairs


def _deriv_pair_inner(a1, k1, a2, k2, nu, s, tau, x, n_gh=24):
    """int d^k1 G(s,y-a1) d^k2 G(s,y-a2) G_{nu/2}(tau, x-y) dy (vectorised in s)."""
    s = np.asarray(s, dtype=float)
    m = 0.5 * (a1 + a2)
    tot = s + tau
    mean = m + s / tot * (x - m)
    sd = np.sqrt(0.5 * nu * s * tau / tot)
    xi, wi = q.gauss_hermite(n_gh)
    Y = mean[..., None] + sd[..., None] * xi
    rs = np.sqrt(nu * s)[..., None]
    c1 = np.zeros(k1 + 1); c1[k1] = 1.0
    c2 = np.zeros(k2 + 1); c2[k2] = 1.0
    P = ((-1.0) ** (k1 + k2) * rs ** (-(k1 + k2))
         * hermeval((Y - a1) / rs, c1) * hermeval((Y - a2) / rs, c2))
    EP = P @ wi
    return heat_kernel(2.0 * nu, s, a1 - a2) * heat_kernel(nu / 2.0, tot, x - m) * EP


def source_exponent(dist: DistributionalInput, nu, t, x):
    """Small-s power of the integrand of S[J0^2](t,x) for derivative atoms.

    The source integral is finite iff the exponent is > -1.
    """
    s = t * np.logspace(-10, -6, 9)
    g = np.zeros_like(s)
    for i, (ai, mi, ki) in enumerate(dist.atoms):
        for aj, mj, kj in dist.atoms:
            g = g + mi * mj * _deriv_pair_inner(ai, ki, aj, kj, nu, s, t - s, x)
    g = g / np.sqrt(4.0 * math.pi * nu * (t - s))
    g = np.abs(g)
    if np.any(g == 0):
        return math.inf
    slope = np.polyfit(np.log(s), np.log(g), 1)[0]
    return float(slope)


# -- driver ----------------------------------------------------------------

def picard_second_moment(mu, nu, lam, vv=0.0, grid: PicardGrid | None = None,
                         tol=1e-6, max_iter=50, blowup=BLOWUP):
    """Run the Picard iteration; return (list of GridFunction iterates, status).

    Iterates live on t_1..t_K (t_0 = 0 is internal).  Divergence is a status:
    Diverged(n) once sup f_n exceeds ``blowup`` or is not finite.
    """
    grid = grid or PicardGrid()
    if isinstance(mu, DistributionalInput):
        if mu.order == 0:
            mu = InitialMeasure(atoms=tuple((a, m) for a, m, _ in mu.atoms))
        else:
            return _picard_distribution(mu, nu, lam, vv, grid, blowup)

    atom_locs = [a for a, _ in mu.atoms]
    t, x = grid.resolve(nu, atom_locs)
    K = len(t) - 1
    l2 = lam * lam
    c0 = l2 / math.sqrt(4.0 * math.pi * nu)
    meta = {"nu": nu, "lam": lam, "vv": vv, "T": grid.T, "K": grid.K, "N": grid.N, "mu": mu.spec()}

    # atom pairs: f_atoms = sum w G_{nu/2}(t, x - m) (r0 + rho)
    pairs = _atom_pairs(list(mu.atoms))
    tt = t[1:]
    G = []
    r0 = []
    vr0 = []
    for a1, a2, w in pairs:
        m = 0.5 * (a1 + a2)
        G.append(w * heat_kernel(nu / 2.0, tt[:, None], x[None, :] - m))
        r0.append(heat_kernel(2.0 * nu, tt, a1 - a2))
        if a1 == a2:
            v = np.full(K + 1, l2 / (4.0 * nu))
        else:
            d2 = (a1 - a2) ** 2
            v = np.zeros(K + 1)
            for k in range(1, K + 1):
                v[k] = _chebyshev_abel(lambda s: np.exp(-d2 / (4.0 * nu * s)), t[k], l2 / (4.0 * math.pi * nu))
        vr0.append(v)
    A, _, _ = _abel_weights(t, c0)
    rho = [np.zeros(K + 1) for _ in pairs]

    # grid part h
    has_density = bool(mu.terms)
    need_h = has_density or vv != 0
    ja = mu.j0_atoms(nu, tt[:, None], x[None, :])
    jall = mu.j0_array(nu, tt[:, None], x[None, :])
    h0 = np.zeros((K + 1, len(x)))
    if has_density:
        h0[1:] = jall * jall - ja * ja
        d0 = mu.density_value(x)
        h0[0] = d0 * d0
    src = h0.copy()
    if vv != 0:
        src = src + l2 * vv * vv * np.sqrt(t / (math.pi * nu))[:, None]
    op = _SpaceTimeOperator(t, x, nu, lam) if need_h and lam != 0 else None
    h = h0.copy()

    def assemble(rho, h):
        f = h[1:].copy()
        for g, r, p in zip(G, r0, rho):
            f += g * (r + p[1:])[:, None]
        return f

    f = assemble(rho, h)
    iterates = [GridFunction(tt, x, f, dict(meta, n=0))]
    for n in range(1, max_iter + 1):
        rho = [v + A @ p for v, p in zip(vr0, rho)]
        if op is not None:
            h = src + op(h)
        elif need_h:
            h = src.copy()
        f_new = assemble(rho, h)
        iterates.append(GridFunction(tt, x, f_new, dict(meta, n=n)))
        if not np.all(np.isfinite(f_new)) or f_new.max() > blowup:
            return iterates, PicardStatus(False, n, "sup f_n exceeded the blow-up threshold")
        change = float(np.max(np.abs(f_new - f)))
        f = f_new
        if change < tol:
            return iterates, PicardStatus(True, n, f"sup change {change:.3e}")
    return iterates, PicardStatus(False, max_iter, "iteration limit reached without convergence")


def _picard_distribution(dist, nu, lam, vv, grid, blowup):
    t, x = grid.resolve(nu, [a for a, _, _ in dist.atoms])
    tt = t[1:]
    J = dist.j0_array(nu, tt[:, None], x[None, :])
    meta = {"nu": nu, "lam": lam, "vv": vv, "mu": dist.spec()}
    iterates = [GridFunction(tt, x, J * J, dict(meta, n=0))]
    expo = min(source_exponent(dist, nu, grid.T, xx) for xx in (0.0, 0.5 * x[-1]))
    if lam != 0 and expo <= -1.0 + 0.05:
        f1 = np.full_like(J, np.inf)
        iterates.append(GridFunction(tt, x, f1, dict(meta, n=1)))
        return iterates, PicardStatus(False, 1, f"S[J0^2] diverges: integrand ~ s^{expo:.2f} as s -> 0")
    raise NotImplementedError("derivative atoms with an integrable source are not supported")
