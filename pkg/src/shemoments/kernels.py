"""The resolvent kernel K, its time integral H, and growth-envelope variants.

    K(t, x; nu, lam) = G_{nu/2}(t, x) * c(t)
    c(t) = lam^2 / sqrt(4 pi nu t) + lam^4/(2 nu) exp(lam^4 t / 4 nu) Phi(lam^2 sqrt(t / 2 nu))
    H(t; nu, lam)    = 2 exp(lam^4 t / 4 nu) Phi(lam^2 sqrt(t / 2 nu)) - 1 = (1 star K)(t, x)

The t^{-1/2} singularity of c is integrable; every consumer that integrates K
in time substitutes t = s^2 near zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .special import heat_kernel, std_normal_cdf

__all__ = [
    "GrowthEnvelope",
    "BdgConstants",
    "bdg_constants",
    "z_p",
    "a_p_vip",
    "even_ceil",
    "kernel_c",
    "kernel_K",
    "kernel_K_alt",
    "kernel_H",
    "lam_for_variant",
    "kernel_variant",
    "kernel_H_variant",
]


@dataclass(frozen=True)
class GrowthEnvelope:
    """Growth constants of the nonlinearity rho.

    |rho(u)| <= LIP |u| + const, |rho(u)|^2 <= Lip_up^2 (Vip_up^2 + u^2) and
    |rho(u)|^2 >= lip_low^2 (vip_low^2 + u^2).  ``quasi = (lam, vv)`` marks the
    quasi-linear case |rho(u)|^2 = lam^2 (vv^2 + u^2).
    """

    LIP: float
    Lip_up: float
    Vip_up: float = 0.0
    lip_low: float = 0.0
    vip_low: float = 0.0
    quasi: Optional[tuple] = None

    def __post_init__(self):
        if min(self.LIP, self.Lip_up, self.Vip_up, self.lip_low, self.vip_low) < 0:
            raise ValueError("growth constants and offsets must be non-negative")
        if self.lip_low > self.Lip_up:
            raise ValueError("lip_low must not exceed Lip_up")
        if self.quasi is not None:
            lam, vv = self.quasi
            if lam == 0:
                raise ValueError("quasi-linear lambda must be nonzero")
            lam, vv = abs(lam), abs(vv)
            if not (math.isclose(self.Lip_up, lam) and math.isclose(self.lip_low, lam)
                    and math.isclose(self.Vip_up, vv) and math.isclose(self.vip_low, vv)):
                raise ValueError("quasi-linear envelope must have Lip_up = lip_low = |lam| "
                                 "and Vip_up = vip_low = |vv|")

    @classmethod
    def quasi_linear(cls, lam, vv=0.0):
        lam, vv = float(lam), float(vv)
        a = abs(lam)
        return cls(LIP=a, Lip_up=a, Vip_up=abs(vv), lip_low=a, vip_low=abs(vv), quasi=(lam, vv))

    @classmethod
    def bounds(cls, Lip_up, lip_low=0.0, Vip_up=0.0, vip_low=0.0, LIP=None):
        return cls(LIP=Lip_up if LIP is None else LIP, Lip_up=Lip_up, Vip_up=Vip_up,
                   lip_low=lip_low, vip_low=vip_low)

    @property
    def is_quasi(self):
        return self.quasi is not None

    def rho(self) -> Callable:
        """A representative rho with these envelopes (quasi-linear case only)."""
        if self.quasi is None:
            raise ValueError("rho is only determined by a quasi-linear envelope")
        lam, vv = self.quasi
        if vv == 0:
            return lambda u: lam * u
        return lambda u: lam * np.sqrt(vv * vv + u * u)


@dataclass(frozen=True)
class BdgConstants:
    p: int
    z_p: float
    a_p_vip: float


def _check_even(p):
    if int(p) != p or p < 2 or int(p) % 2:
        raise ValueError(f"p must be an even integer >= 2, got {p}")
    return int(p)


def even_ceil(p):
    """Smallest even integer >= p."""
    k = math.ceil(p)
    return k + (k % 2)


def z_p(p):
    """BDG constant: 1 for p = 2, the envelope 2 sqrt(p) above."""
    p = _check_even(p)
    return 1.0 if p == 2 else 2.0 * math.sqrt(p)


def a_p_vip(p, vip):
    p = _check_even(p)
    if p == 2:
        return 1.0
    if vip == 0:
        return math.sqrt(2.0)
    return 2.0 ** ((p - 1) / p)


def bdg_constants(p, vip=0.0):
    return BdgConstants(p=_check_even(p), z_p=z_p(p), a_p_vip=a_p_vip(p, vip))


def kernel_c(tau, nu, lam):
    """Time factor c(tau) of K; +inf at tau = 0, 0 for tau < 0."""
    tau = np.asarray(tau, dtype=float)
    l2 = lam * lam
    l4 = l2 * l2
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ts = np.where(tau > 0, tau, np.nan)
        val = (l2 / np.sqrt(4.0 * np.pi * nu * ts)
               + l4 / (2.0 * nu) * np.exp(l4 * ts / (4.0 * nu)) * std_normal_cdf(l2 * np.sqrt(ts / (2.0 * nu))))
    val = np.where(tau > 0, val, np.where(tau == 0, np.inf, 0.0))
    return val if val.ndim else float(val)


def kernel_K(t, x, nu, lam):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("kernel_K requires t > 0")
    g = heat_kernel(nu / 2.0, t, x)
    with np.errstate(invalid="ignore"):
        out = np.where(g == 0, 0.0, g * kernel_c(t, nu, lam))
    return out if out.ndim else float(out)


def kernel_H(t, nu, lam):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("kernel_H requires t >= 0")
    l4 = lam ** 4
    with np.errstate(over="ignore"):
        out = 2.0 * np.exp(l4 * t / (4.0 * nu)) * std_normal_cdf(lam * lam * np.sqrt(t / (2.0 * nu))) - 1.0
    return out if out.ndim else float(out)


def kernel_K_alt(t, x, nu, lam):
    """K through H: G_{nu/2} (lam^2/sqrt(4 pi nu t) + lam^4/(4 nu) (H + 1))."""
    t = np.asarray(t, dtype=float)
    l2 = lam * lam
    out = heat_kernel(nu / 2.0, t, x) * (l2 / np.sqrt(4.0 * np.pi * nu * t)
                                          + l2 * l2 / (4.0 * nu) * (kernel_H(t, nu, lam) + 1.0))
    return out if np.ndim(out) else float(out)


def lam_for_variant(kind, env: GrowthEnvelope, p=2):
    """Effective lambda of the upper, lower, or hat_p kernel."""
    p = _check_even(p)
    if kind == "upper":
        return env.Lip_up
    if kind == "lower":
        return env.lip_low
    if kind == "hat_p":
        return a_p_vip(p, env.Vip_up) * z_p(p) * env.Lip_up
    raise ValueError(f"unknown kernel variant {kind!r}")


def _zero_like(t, x):
    out = np.zeros(np.broadcast(np.asarray(t, float), np.asarray(x, float)).shape)
    return out if out.ndim else 0.0


def kernel_variant(kind, env: GrowthEnvelope, p, t, x, nu):
    lam = lam_for_variant(kind, env, p)
    if lam == 0:
        return _zero_like(t, x)
    return kernel_K(t, x, nu, lam)


def kernel_H_variant(kind, env: GrowthEnvelope, p, t, nu):
    lam = lam_for_variant(kind, env, p)
    if lam == 0:
        return _zero_like(t, 0.0)
    return kernel_H(t, nu, lam)
