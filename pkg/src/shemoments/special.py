"""Scalar special functions and the one-dimensional heat kernel.

All functions broadcast over numpy arrays.  ``erf``/``erfc`` are the single
source of truth; the normal CDF is defined through them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

__all__ = [
    "KernelParams",
    "erf",
    "erfc",
    "erfcx",
    "exp_erfc",
    "std_normal_cdf",
    "std_normal_pdf",
    "heat_kernel",
]

SQRT2 = np.sqrt(2.0)
SQRT_2PI = np.sqrt(2.0 * np.pi)
# below this exponent exp() leaves the normal range
LOG_TINY = np.log(np.finfo(float).tiny)


@dataclass(frozen=True)
class KernelParams:
    """Diffusion coefficient ``nu`` and noise intensity ``lam``."""

    nu: float
    lam: float

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if self.lam == 0:
            raise ValueError("lambda must be nonzero")


def erf(x):
    return _sp.erf(x)


def erfc(x):
    return _sp.erfc(x)


def erfcx(x):
    """Scaled complementary error function ``exp(x**2) * erfc(x)``."""
    return _sp.erfcx(x)


def exp_erfc(a, b):
    """Evaluate ``exp(a) * erfc(b)`` without overflow or 0*inf.

    For ``b > 0`` the product is rewritten as ``exp(a - b**2) * erfcx(b)``.
    """
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    out = np.empty(a.shape)
    pos = b > 0
    with np.errstate(over="ignore", under="ignore"):
        out[pos] = np.exp(a[pos] - b[pos] ** 2) * _sp.erfcx(b[pos])
        out[~pos] = np.exp(a[~pos]) * _sp.erfc(b[~pos])
    return out if out.ndim else float(out)


def std_normal_cdf(x):
    """Standard normal distribution function Phi(x) = erfc(-x/sqrt2)/2.

    The erfc form keeps full relative precision in the lower tail, and
    Phi(-x) = 1 - Phi(x) holds to rounding.
    """
    return 0.5 * _sp.erfc(-np.asarray(x, dtype=float) / SQRT2)


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / SQRT_2PI


def heat_kernel(nu, t, x):
    """G_nu(t, x) = (2 pi nu t)^(-1/2) exp(-x^2 / (2 nu t)); zero for t <= 0.

    Returns an exact 0 when the exponent falls below the normal range.
    """
    nu = float(nu)
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
    out = np.zeros(t.shape)
    live = t > 0
    if np.any(live):
        tl = t[live]
        expo = -x[live] ** 2 / (2.0 * nu * tl)
        vals = np.where(expo < LOG_TINY, 0.0, np.exp(np.maximum(expo, LOG_TINY)))
        out[live] = vals / np.sqrt(2.0 * np.pi * nu * tl)
    return out if out.ndim else float(out)
