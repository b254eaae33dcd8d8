"""Quadrature building blocks shared by the moment evaluators.

Inner space integrals use composite Gauss-Legendre on panels chosen by a
significance scan; outer time integrals over [0, t] are split at t/2 and use
square-root substitutions so t^{-1/2} singularities at either end disappear.
"""
from __future__ import annotations

import math
import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import QuadratureError
from .special import heat_kernel

OUTER_RTOL = 1e-9
# keep integrand values within e^{-SIG_LOG} of the maximum
SIG_LOG = 40.0


@lru_cache(maxsize=None)
def gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@lru_cache(maxsize=None)
def gauss_hermite(n):
    """Nodes/weights for int f(z) phi(z) dz with phi the standard normal density."""
    x, w = np.polynomial.hermite_e.hermegauss(n)
    return x, w / math.sqrt(2.0 * math.pi)


def composite_nodes(edges, n=16):
    """Nodes and weights of n-point Gauss-Legendre on each [edges[i], edges[i+1]]."""
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    xg, wg = gauss_legendre(n)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    weights = (half[:, None] * wg[None, :]).ravel()
    return nodes, weights


def significant_edges(fn, hull, features, n_uniform=257, n_feature=57, span=14.0):
    """Panel edges covering where fn exceeds e^{-SIG_LOG} of its maximum.

    ``features`` is a list of (center, width); scan points are a uniform grid
    on ``hull`` plus a local grid around each feature so narrow peaks are
    never missed.  Returns None when fn vanishes on every scan point.
    """
    lo, hi = hull
    pts = [np.linspace(lo, hi, n_uniform)]
    k = np.linspace(-span, span, n_feature)
    for c, w in features:
        if w > 0 and math.isfinite(c):
            pts.append(c + w * k)
    pts = np.unique(np.clip(np.concatenate(pts), lo, hi))
    vals = np.abs(fn(pts))
    vmax = vals.max() if vals.size else 0.0
    if not vmax > 0:
        return None
    if not math.isfinite(vmax):
        raise QuadratureError("integrand is not finite on the scan grid")
    sig = vals >= vmax * math.exp(-SIG_LOG)
    idx = np.flatnonzero(sig)
    # extend each run of significant points by one neighbour on each side
    keep = np.zeros_like(sig)
    keep[idx] = True
    keep[np.maximum(idx - 1, 0)] = True
    keep[np.minimum(idx + 1, len(pts) - 1)] = True
    edges_list = []
    run = []
    for i in range(len(pts)):
        if keep[i]:
            run.append(pts[i])
        elif run:
            edges_list.append(np.array(run))
            run = []
    if run:
        edges_list.append(np.array(run))
    return [e for e in edges_list if len(e) >= 2]


def integrate_significant(fn, hull, features, n=16):
    runs = significant_edges(fn, hull, features)
    if not runs:
        return 0.0
    total = 0.0
    for edges in runs:
        nodes, weights = composite_nodes(edges, n)
        total += float(np.dot(weights, fn(nodes)))
    return total


def split_time_integral(g, t, rtol=OUTER_RTOL, limit=200):
    """int_0^t g(tau) d tau with g allowed O(tau^{-1/2}) and O((t-tau)^{-1/2}) ends."""
    h = math.sqrt(t / 2.0)

    def left(u):
        return g(u * u) * 2.0 * u

    def right(v):
        return g(t - v * v) * 2.0 * v

    # roundoff warnings fire once the requested tolerance is at machine level
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        a, _ = integrate.quad(left, 0.0, h, epsrel=rtol, epsabs=0.0, limit=limit)
        b, _ = integrate.quad(right, 0.0, h, epsrel=rtol, epsabs=0.0, limit=limit)
    val = a + b
    if not math.isfinite(val):
        raise QuadratureError("time integral is not finite")
    return val


def split_time_nodes(t, n=48):
    """Fixed split/substituted Gauss-Legendre rule on [0, t] (nodes, weights)."""
    h = math.sqrt(t / 2.0)
    xg, wg = gauss_legendre(n)
    u = 0.5 * h * (xg + 1.0)
    w = 0.5 * h * wg * 2.0 * u
    tau = np.concatenate([u * u, t - u[::-1] ** 2])
    wts = np.concatenate([w, w[::-1]])
    return tau, wts


def gaussian_product_atoms(atoms_list, nu, s, tau, x):
    """int J0(s,y)^2 G_{nu/2}(tau, x - y) dy for J0 = sum m G_nu(s, . - a).

    Uses G(s, y-a) G(s, y-b) = G_{2nu}(s, a-b) G_{nu/2}(s, y - (a+b)/2) and the
    semigroup property of G_{nu/2}.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros(np.broadcast(x, np.asarray(s, float)).shape)
    n = len(atoms_list)
    for i in range(n):
        ai, mi = atoms_list[i]
        out = out + mi * mi * heat_kernel(2 * nu, s, 0.0) * heat_kernel(nu / 2, s + tau, x - ai)
        for j in range(i + 1, n):
            aj, mj = atoms_list[j]
            out = out + 2 * mi * mj * heat_kernel(2 * nu, s, ai - aj) * heat_kernel(
                nu / 2, s + tau, x - 0.5 * (ai + aj))
    return out
