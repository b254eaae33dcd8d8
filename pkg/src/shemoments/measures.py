"""Signed initial measures and the homogeneous solution J0 = mu * G_nu(t, .).

A measure is a finite list of atoms plus a finite weighted sum of densities.
Each density carries a tail class, which decides admissibility analytically
and sets the quadrature truncation radius.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import DivergentJ0
from .special import exp_erfc, heat_kernel, std_normal_cdf

__all__ = [
    "Tail",
    "Density",
    "Lebesgue",
    "ExpDecay",
    "ExpGrowth",
    "GaussianBump",
    "Indicator",
    "CustomDensity",
    "InitialMeasure",
    "DistributionalInput",
    "lebesgue",
    "dirac",
    "exp_decay",
    "exp_growth",
    "gaussian_bump",
    "indicator",
    "atoms",
    "dirac_derivative",
    "j0",
    "check_j0_finite",
    "exp_tail_rate",
    "heat_derivative",
]

J0_RTOL = 1e-8
_TAIL_KINDS = ("compact", "polynomial", "exponential", "custom")


@dataclass(frozen=True)
class Tail:
    """Growth class of |f| at infinity.

    ``exponential`` means log|f(x)| <= C + rate*|x|**power (rate < 0 is decay).
    ``polynomial`` means |f(x)| <= C (1 + |x|)**power.  ``compact`` carries the
    support interval.  ``custom`` densities supply their own truncation radius.
    """

    kind: str
    rate: float = 0.0
    power: float = 0.0
    support: tuple | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in _TAIL_KINDS:
            raise ValueError(f"unknown tail class {self.kind!r}")
        if self.kind == "compact" and self.support is None:
            raise ValueError("compact tail needs a support interval")
        if self.kind == "exponential" and not self.power > 0:
            raise ValueError("exponential tail power must be positive")


class Density:
    """Nonnegative density with a tail class.  Subclasses may provide a
    closed-form heat flow in :meth:`heat`."""

    name = "density"
    tail: Tail
    breakpoints: tuple = ()

    def __call__(self, x):
        raise NotImplementedError

    def heat(self, nu, t, x):
        """Closed form of (f * G_nu(t, .))(x), or None if unavailable."""
        return None

    def features(self, nu, t):
        """(center, width) pairs of sharp structure in (f * G_nu(t))(.)."""
        w = math.sqrt(nu * t)
        return [(b, w) for b in self.breakpoints]

    @property
    def symmetric(self):
        return False

    def spec(self):
        return self.name


class Lebesgue(Density):
    name = "lebesgue"
    tail = Tail("polynomial", power=0.0)

    def __call__(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def heat(self, nu, t, x):
        return np.ones_like(np.asarray(x, dtype=float) + np.asarray(t, dtype=float))

    @property
    def symmetric(self):
        return True


def _two_sided_exp_heat(a, nu, t, x):
    """(e^{-a|.|} * G_nu(t))(x) for any real a (a < 0 is growth)."""
    s = np.sqrt(2.0 * nu * t)
    base = 0.5 * a * a * nu * t
    right = exp_erfc(base - a * x, (a * nu * t - x) / s)
    left = exp_erfc(base + a * x, (a * nu * t + x) / s)
    return 0.5 * (right + left)


@dataclass(frozen=True, eq=True)
class ExpDecay(Density):
    a: float
    name = "exp_decay"

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("exp_decay rate must be positive")

    @property
    def tail(self):
        return Tail("exponential", rate=-self.a, power=1.0)

    breakpoints = (0.0,)

    def __call__(self, x):
        return np.exp(-self.a * np.abs(np.asarray(x, dtype=float)))

    def heat(self, nu, t, x):
        return _two_sided_exp_heat(self.a, nu, np.asarray(t, float), np.asarray(x, float))

    @property
    def symmetric(self):
        return True

    def spec(self):
        return f"exp_decay:{self.a!r}"


@dataclass(frozen=True, eq=True)
class ExpGrowth(Density):
    """f(x) = exp(a |x|^p), a > 0, 0 < p <= 2."""

    a: float
    p: float = 1.0
    name = "exp_growth"

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("exp_growth rate must be positive")
        if not 0 < self.p <= 2:
            raise ValueError("exp_growth power must lie in (0, 2]")

    @property
    def tail(self):
        return Tail("exponential", rate=self.a, power=self.p)

    breakpoints = (0.0,)

    def __call__(self, x):
        return np.exp(self.a * np.abs(np.asarray(x, dtype=float)) ** self.p)

    def heat(self, nu, t, x):
        t = np.asarray(t, float)
        x = np.asarray(x, float)
        if self.p == 1.0:
            return _two_sided_exp_heat(-self.a, nu, t, x)
        if self.p == 2.0:
            q = 1.0 - 2.0 * self.a * nu * t
            with np.errstate(divide="ignore", invalid="ignore"):
                val = np.exp(self.a * x * x / q) / np.sqrt(q)
            return np.where(q > 0, val, np.inf)
        return None

    @property
    def symmetric(self):
        return True

    def spec(self):
        return f"exp_growth:{self.a!r},{self.p!r}"


@dataclass(frozen=True, eq=True)
class GaussianBump(Density):
    """f(x) = exp(-(x - c)^2 / (2 w^2)), unit height."""

    c: float
    w: float
    name = "gaussian_bump"

    def __post_init__(self):
        if not self.w > 0:
            raise ValueError("gaussian_bump width must be positive")

    @property
    def tail(self):
        # (x-c)^2/2w^2 >= x^2/4w^2 - c^2/2w^2
        return Tail("exponential", rate=-1.0 / (4.0 * self.w**2), power=2.0)

    @property
    def breakpoints(self):
        return (self.c,)

    def __call__(self, x):
        z = (np.asarray(x, dtype=float) - self.c) / self.w
        return np.exp(-0.5 * z * z)

    def heat(self, nu, t, x):
        v = self.w**2 + nu * np.asarray(t, float)
        z = np.asarray(x, float) - self.c
        return self.w / np.sqrt(v) * np.exp(-0.5 * z * z / v)

    def features(self, nu, t):
        return [(self.c, math.sqrt(self.w**2 + nu * t))]

    @property
    def symmetric(self):
        return self.c == 0

    def spec(self):
        return f"gaussian_bump:{self.c!r},{self.w!r}"


@dataclass(frozen=True, eq=True)
class Indicator(Density):
    left: float
    right: float
    name = "indicator"

    def __post_init__(self):
        if not self.right > self.left:
            raise ValueError("indicator needs left < right")

    @property
    def tail(self):
        return Tail("compact", support=(self.left, self.right))

    @property
    def breakpoints(self):
        return (self.left, self.right)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return ((x >= self.left) & (x <= self.right)).astype(float)

    def heat(self, nu, t, x):
        s = np.sqrt(nu * np.asarray(t, float))
        x = np.asarray(x, float)
        return std_normal_cdf((x - self.left) / s) - std_normal_cdf((x - self.right) / s)

    @property
    def symmetric(self):
        return self.left == -self.right

    def spec(self):
        return f"indicator:{self.left!r},{self.right!r}"


class CustomDensity(Density):
    """User-supplied density; J0 falls back to adaptive quadrature."""

    name = "custom"

    def __init__(self, fn: Callable, tail: Tail, breakpoints: Sequence[float] = (),
                 nonnegative: bool = True, label: str = "custom"):
        self.fn = fn
        self.tail = tail
        self.breakpoints = tuple(breakpoints)
        self.nonnegative = nonnegative
        self.label = label

    def __call__(self, x):
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    def spec(self):
        return self.label


def _tail_shift(tail: Tail, nu, t, x):
    """Extra truncation radius accounting for the tilt of e^{rate |y|^p}."""
    if tail.kind != "exponential":
        return 0.0
    r, p = abs(tail.rate), tail.power
    if p <= 1:
        return r * nu * t * max(p, 1e-3) * 2.0
    if p < 2:
        # slope of r|y|^p near |x| + window
        y = abs(x) + 12 * math.sqrt(nu * t)
        return 2.0 * r * p * y ** (p - 1) * nu * t
    return 0.0


def _window_radius(tail: Tail, nu, t, x):
    sd = math.sqrt(nu * t)
    if tail.kind == "custom" and tail.radius is not None:
        return max(tail.radius, 14 * sd)
    if tail.kind == "exponential" and tail.power == 2 and tail.rate > 0:
        q = 1.0 - 2.0 * tail.rate * nu * t
        sd = sd / math.sqrt(q)
        return 14 * sd + abs(x) * (1 / q - 1)
    if tail.kind == "polynomial" and tail.power > 0:
        return 14 * sd + 2 * tail.power * sd
    return 14 * sd + _tail_shift(tail, nu, t, x)


def _density_conv_quad(dens: Density, nu, t, x, sign=None):
    """Adaptive quadrature of int G(t, x-y) f(y) dy, truncated per tail class.

    With ``sign`` set to +1/-1 only the positive/negative part of f is used.
    """
    tail = dens.tail
    if sign is None:
        fn = dens
    elif sign > 0:
        fn = lambda y: np.maximum(dens(y), 0.0)
    else:
        fn = lambda y: np.maximum(-dens(y), 0.0)

    def integrand(y):
        g = heat_kernel(nu, t, x - y)
        if g == 0.0:
            return 0.0
        with np.errstate(over="ignore"):
            return float(g * fn(y))

    R = _window_radius(tail, nu, t, x)
    lo, hi = x - R, x + R
    if tail.kind == "compact":
        lo, hi = max(lo, tail.support[0]), min(hi, tail.support[1])
        if lo >= hi:
            return 0.0
    sd = math.sqrt(nu * t)
    # peak-resolving breakpoints: x, the density's kinks, a few sd marks
    pts = [x + k * sd for k in (-6, -3, -1, 0, 1, 3, 6)]
    pts += list(dens.breakpoints)
    shift = _tail_shift(tail, nu, t, x)
    if shift:
        pts += [x - shift, x + shift]
    pts = sorted(p for p in set(pts) if lo < p < hi)
    total = 0.0
    edges = [lo] + pts + [hi]
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(integrand, a, b, epsrel=J0_RTOL * 1e-2, epsabs=0.0, limit=200)
        total += val
    if tail.kind not in ("compact",):
        # widen once and confirm the truncation is below tolerance
        extra = 0.0
        for a, b in ((x - 2 * R, lo), (hi, x + 2 * R)):
            if b > a:
                extra += integrate.quad(integrand, a, b, epsrel=1e-6, epsabs=0.0, limit=200)[0]
        if total > 0 and extra > 1e-12 * total:
            return _density_conv_quad_wide(integrand, x, 4 * R, pts) if extra < np.inf else np.inf
        total += extra
    return total


def _density_conv_quad_wide(integrand, x, R, pts):
    edges = [x - R] + [p for p in pts if x - R < p < x + R] + [x + R]
    return sum(integrate.quad(integrand, a, b, epsrel=J0_RTOL * 1e-2, epsabs=0.0, limit=400)[0]
               for a, b in zip(edges[:-1], edges[1:]))


def heat_derivative(nu, t, z, order):
    """k-th x-derivative of G_nu(t, z), via probabilists' Hermite polynomials."""
    from numpy.polynomial.hermite_e import hermeval

    z = np.asarray(z, dtype=float)
    sd = np.sqrt(nu * t)
    coef = np.zeros(order + 1)
    coef[order] = 1.0
    return (-1.0) ** order * sd ** (-order) * hermeval(z / sd, coef) * heat_kernel(nu, t, z)


@dataclass(frozen=True)
class InitialMeasure:
    """mu = sum(mass * delta_loc) + sum(weight * density(x) dx).

    Immutable; supports ``+``, scalar ``*`` and negation so linear
    combinations stay in the same representation.
    """

    atoms: tuple = ()
    terms: tuple = ()  # (weight, Density) pairs

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple((float(a), float(m)) for a, m in self.atoms))
        object.__setattr__(self, "terms", tuple((float(w), d) for w, d in self.terms))

    # -- algebra -------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, InitialMeasure):
            return NotImplemented
        return InitialMeasure(self.atoms + other.atoms, self.terms + other.terms)

    def __mul__(self, c):
        c = float(c)
        return InitialMeasure(tuple((a, c * m) for a, m in self.atoms),
                              tuple((c * w, d) for w, d in self.terms))

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self

    def __sub__(self, other):
        return self + (-other)

    # -- structure -----------------------------------------------------
    @property
    def is_lebesgue(self):
        return not self.atoms and len(self.terms) == 1 and isinstance(self.terms[0][1], Lebesgue)

    @property
    def is_pure_atomic(self):
        return bool(self.atoms) and not self.terms

    @property
    def single_atom(self):
        """(loc, mass) if mu is one atom, else None."""
        if len(self.atoms) == 1 and not self.terms:
            return self.atoms[0]
        return None

    @property
    def is_nonnegative(self):
        if any(m < 0 for _, m in self.atoms):
            return False
        for w, d in self.terms:
            if w < 0 or getattr(d, "nonnegative", True) is False:
                return False
        return True

    @property
    def is_zero(self):
        return all(m == 0 for _, m in self.atoms) and all(w == 0 for w, _ in self.terms)

    @property
    def is_symmetric(self):
        atoms = sorted((round(a, 12), m) for a, m in self.atoms if m != 0)
        mirror = sorted((round(-a, 12), m) for a, m in self.atoms if m != 0)
        return atoms == mirror and all(d.symmetric for _, d in self.terms)

    def abs(self):
        """Total-variation majorant |mu| (termwise; exact when terms do not overlap in sign)."""
        terms = []
        for w, d in self.terms:
            if isinstance(d, CustomDensity) and not d.nonnegative:
                d = CustomDensity(lambda y, f=d: np.abs(f(y)), d.tail, d.breakpoints, True, d.label)
            terms.append((abs(w), d))
        return InitialMeasure(tuple((a, abs(m)) for a, m in self.atoms), tuple(terms))

    def jordan(self):
        """(mu_plus, mu_minus) with mu = mu_plus - mu_minus."""
        pos_atoms = tuple((a, m) for a, m in self.atoms if m > 0)
        neg_atoms = tuple((a, -m) for a, m in self.atoms if m < 0)
        pos_terms, neg_terms = [], []
        for w, d in self.terms:
            if isinstance(d, CustomDensity) and not d.nonnegative:
                f = d
                pos_terms.append((abs(w), CustomDensity(lambda y: np.maximum(np.sign(w) * f(y), 0),
                                                       d.tail, d.breakpoints, True, d.label + "+")))
                neg_terms.append((abs(w), CustomDensity(lambda y: np.maximum(-np.sign(w) * f(y), 0),
                                                       d.tail, d.breakpoints, True, d.label + "-")))
            elif w > 0:
                pos_terms.append((w, d))
            elif w < 0:
                neg_terms.append((-w, d))
        return (InitialMeasure(pos_atoms, tuple(pos_terms)),
                InitialMeasure(neg_atoms, tuple(neg_terms)))

    def features(self, nu, t):
        """(center, width) of sharp structure in J0(t, .)."""
        w = math.sqrt(nu * t)
        out = [(a, w) for a, m in self.atoms if m != 0]
        for _, d in self.terms:
            out.extend(d.features(nu, t))
        return out

    def max_tail_rate(self):
        """Largest |rate| among exponential tails (for tilt-aware windows)."""
        r = 0.0
        for _, d in self.terms:
            if d.tail.kind == "exponential":
                r = max(r, abs(d.tail.rate) * (2 * abs(d.tail.power) if d.tail.power == 2 else 1))
        return r

    def density_value(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, d in self.terms:
            out = out + w * d(x)
        return out

    # -- evaluation ----------------------------------------------------
    def j0_atoms(self, nu, t, x):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        out = np.zeros(np.broadcast(t, x).shape)
        for a, m in self.atoms:
            out = out + m * heat_kernel(nu, t, x - a)
        return out

    def j0_density(self, nu, t, x, method="auto"):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast(t, x).shape
        out = np.zeros(shape)
        for w, d in self.terms:
            if w == 0:
                continue
            val = d.heat(nu, t, x) if method == "auto" else None
            if val is None:
                tb, xb = np.broadcast_arrays(t, x)
                val = np.array([_signed_conv(d, nu, ti, xi) for ti, xi in zip(tb.ravel(), xb.ravel())])
                val = val.reshape(shape)
            out = out + w * val
        return out

    def j0_array(self, nu, t, x, method="auto"):
        """Vectorised J0(t, x); closed-form heat flows are used when available."""
        return self.j0_atoms(nu, t, x) + self.j0_density(nu, t, x, method=method)

    def spec(self):
        parts = []
        if self.atoms:
            if self.atoms == ((0.0, 1.0),):
                parts.append("delta")
            else:
                parts.append("atoms:" + ";".join(f"({a!r},{m!r})" for a, m in self.atoms))
        for w, d in self.terms:
            parts.append(d.spec() if w == 1 else f"{w!r}*{d.spec()}")
        return "+".join(parts) if parts else "zero"


def _signed_conv(d: Density, nu, t, x):
    if isinstance(d, CustomDensity) and not d.nonnegative:
        return _density_conv_quad(d, nu, t, x, +1) - _density_conv_quad(d, nu, t, x, -1)
    return _density_conv_quad(d, nu, t, x)


@dataclass(frozen=True)
class DistributionalInput:
    """Finite sum of derivatives of Dirac masses: mass * delta_loc^(order).

    Only the Picard divergence demonstration accepts these.
    """

    atoms: tuple = field(default_factory=tuple)  # (loc, mass, order)

    def __post_init__(self):
        atoms = tuple((float(a), float(m), int(k)) for a, m, k in self.atoms)
        if any(k < 0 for _, _, k in atoms):
            raise ValueError("derivative order must be non-negative")
        object.__setattr__(self, "atoms", atoms)

    @property
    def order(self):
        return max((k for _, _, k in self.atoms), default=0)

    def j0_array(self, nu, t, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(np.broadcast(np.asarray(t, float), x).shape)
        for a, m, k in self.atoms:
            out = out + m * heat_derivative(nu, t, x - a, k)
        return out

    def spec(self):
        return "dirac_derivative:" + ";".join(f"({a!r},{m!r},{k})" for a, m, k in self.atoms)


# -- catalog constructors -------------------------------------------------

def lebesgue():
    return InitialMeasure(terms=((1.0, Lebesgue()),))


def dirac(loc=0.0, mass=1.0):
    return InitialMeasure(atoms=((loc, mass),))


def atoms(pairs):
    return InitialMeasure(atoms=tuple(pairs))


def exp_decay(a):
    return InitialMeasure(terms=((1.0, ExpDecay(a)),))


def exp_growth(a, p=1.0):
    return InitialMeasure(terms=((1.0, ExpGrowth(a, p)),))


def gaussian_bump(c, w):
    return InitialMeasure(terms=((1.0, GaussianBump(c, w)),))


def indicator(left, right):
    return InitialMeasure(terms=((1.0, Indicator(left, right)),))


def dirac_derivative(order=1, loc=0.0, mass=1.0):
    return DistributionalInput(((loc, mass, order),))


# -- module-level operations ------------------------------------------------

def _tail_finite(tail: Tail, nu, t):
    if tail.kind in ("compact", "polynomial", "custom"):
        return True
    if tail.rate <= 0 or tail.power < 2:
        return True
    if tail.power == 2:
        return 2.0 * tail.rate * nu * t < 1.0
    return False


def check_j0_finite(mu: InitialMeasure, nu, t, x=0.0):
    """Decide (|mu| * G_nu(t))(x) < inf from the declared tail classes."""
    if not t > 0:
        raise ValueError("t must be positive")
    return all(_tail_finite(d.tail, nu, t) for w, d in mu.terms if w != 0)


def exp_tail_rate(mu: InitialMeasure):
    """sup{beta >= 0 : int e^{beta|x|} |mu|(dx) < inf}, from the tail classes."""
    beta = math.inf
    for w, d in mu.terms:
        if w == 0:
            continue
        tail = d.tail
        if tail.kind == "compact":
            continue
        if tail.kind == "exponential" and tail.rate < 0:
            if tail.power > 1:
                continue
            if tail.power == 1:
                beta = min(beta, -tail.rate)
                continue
        beta = 0.0
    return beta


def j0(mu, nu, t, x, method="auto"):
    """J0(t, x) = int G_nu(t, x - y) mu(dy).

    ``method="auto"`` takes the exact shortcuts (Lebesgue, atoms, catalog
    closed forms); ``method="quad"`` forces adaptive quadrature of every
    density term, positive and negative parts separately.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if isinstance(mu, DistributionalInput):
        return float(mu.j0_array(nu, t, x))
    if not check_j0_finite(mu, nu, t, x):
        raise DivergentJ0(f"(|mu| * G_nu)({t}, {x}) is infinite for {mu.spec()}")
    if mu.is_lebesgue and method == "auto":
        return 1.0
    val = float(mu.j0_atoms(nu, t, x))
    if not mu.terms:
        return val
    if method == "auto":
        val += float(mu.j0_density(nu, t, x, method="auto"))
        if not math.isfinite(val):
            raise DivergentJ0(f"J0 at ({t}, {x}) exceeds the floating-point range")
        return val
    plus, minus = mu.jordan()
    for sgn, part in ((1.0, plus), (-1.0, minus)):
        for w, d in part.terms:
            val += sgn * w * _density_conv_quad(d, nu, t, x)
    if not math.isfinite(val):
        raise DivergentJ0(f"J0 at ({t}, {x}) exceeds the floating-point range")
    return val
