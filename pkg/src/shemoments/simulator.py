"""Monte Carlo simulation of the stochastic heat equation on a lattice.

exponential_mild (default):
    u^1 = J0(dt, .) of the box problem on the lattice band   (no noise on the first step)
    u^{n+1} = P u^n + rho(u^n) dW^n,  dW^n_j ~ N(0, dt/dx)
with P the exact heat semigroup exp(nu dt/2 d^2/dx^2) on the box, applied
spectrally (DST-I for Dirichlet, real FFT for periodic boundaries).

explicit_fd:
    u^0 = rasterised mu,  u^{n+1} = u^n + a (u_{j+1} - 2u_j + u_{j-1}) + rho(u^n) dW^n
with a = nu dt / (2 dx^2), stable for nu dt / dx^2 <= 1/2.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy import fft as sfft

from . import _quadrature as q
from .errors import ConfigError, InsufficientReplicates, NumericalBlowup, WindowTooNarrow
from .kernels import GrowthEnvelope
from .measures import InitialMeasure
from .rng import normals

__all__ = [
    "SimConfig",
    "LatticeField",
    "Ensemble",
    "MomentEstimate",
    "run_ensemble",
    "simulate",
    "mc_moment",
    "mc_two_point",
    "mc_mean",
    "holder_estimate",
    "lattice_second_moment",
]

BLOWUP = 1e12


@dataclass(frozen=True)
class SimConfig:
    L: float = 5.0
    dx: float = 0.05
    dt: float | None = None  # default dx^2 / 4
    T: float = 0.5
    M: int = 100
    seed: int = 0
    scheme: str = "exponential_mild"
    boundary: str = "dirichlet_zero"
    nu: float = 1.0
    batch: int = 256

    def __post_init__(self):
        if self.dt is None:
            object.__setattr__(self, "dt", self.dx * self.dx / 4.0)
        if self.scheme not in ("exponential_mild", "explicit_fd"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.boundary not in ("dirichlet_zero", "periodic"):
            raise ConfigError(f"unknown boundary {self.boundary!r}")
        if not (self.L > 0 and self.dx > 0 and self.dt > 0 and self.T > 0 and self.nu > 0):
            raise ConfigError("L, dx, dt, T and nu must be positive")
        if self.M < 2:
            raise ConfigError("at least two replicates are required")
        if self.scheme == "explicit_fd" and self.nu * self.dt / self.dx ** 2 > 0.5 + 1e-12:
            raise ConfigError(f"explicit_fd unstable: nu dt / dx^2 = {self.nu * self.dt / self.dx ** 2:.4g} > 1/2")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def nx(self):
        n = int(round(2.0 * self.L / self.dx))
        return n + 1 if self.boundary == "dirichlet_zero" else n

    @property
    def nt(self):
        return int(round(self.T / self.dt))

    @property
    def x(self):
        return -self.L + self.dx * np.arange(self.nx)

    def step_of(self, t):
        return int(round(t / self.dt))

    def node_of(self, x):
        return int(round((x + self.L) / self.dx))

    def check_query(self, x_max):
        """Boundary influence at |x| <= x_max stays below a Gaussian 6-sd margin."""
        if self.L < abs(x_max) + 6.0 * math.sqrt(self.nu * self.T):
            raise ConfigError(f"L = {self.L} is too small for queries up to |x| = {x_max}")

    def to_dict(self):
        return asdict(self)


@dataclass
class LatticeField:
    """u at the recorded steps of one replicate; values[i, j] = u(steps[i] dt, x_j)."""

    values: np.ndarray
    steps: np.ndarray
    replicate: int
    config: SimConfig

    @property
    def t(self):
        return self.steps * self.config.dt

    @property
    def x(self):
        return self.config.x


@dataclass
class Ensemble:
    """All replicates: values[r, i, j] at recorded step steps[i]."""

    values: np.ndarray
    steps: np.ndarray
    config: SimConfig
    replicates: np.ndarray

    def fields(self) -> Iterator[LatticeField]:
        for r, rep in enumerate(self.replicates):
            yield LatticeField(self.values[r], self.steps, int(rep), self.config)

    def snap(self, t, x):
        """(row index, node index, |t offset|, |x offset|) of the nearest lattice point."""
        cfg = self.config
        n = cfg.step_of(t)
        i = int(np.argmin(np.abs(self.steps - n)))
        j = min(max(cfg.node_of(x), 0), cfg.nx - 1)
        return i, j, abs(self.steps[i] * cfg.dt - t), abs(cfg.x[j] - x)


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    stderr: float
    M: int
    p: int
    t: float = math.nan
    x: float = math.nan
    y: float | None = None
    offset: float = 0.0


# -- propagators ---------------------------------------------------------

class _Propagator:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        nu, dt, L = cfg.nu, cfg.dt, cfg.L
        if cfg.boundary == "dirichlet_zero":
            n_in = cfg.nx - 2
            k = np.arange(1, n_in + 1)
            kappa = math.pi * k / (2.0 * L)
            self.mult = np.exp(-0.5 * nu * kappa * kappa * dt)
        else:
            f = np.fft.rfftfreq(cfg.nx, d=cfg.dx)
            kappa = 2.0 * math.pi * f
            self.mult = np.exp(-0.5 * nu * kappa * kappa * dt)

    def __call__(self, u):
        if self.cfg.boundary == "dirichlet_zero":
            inner = sfft.dst(u[:, 1:-1], type=1, norm="ortho", axis=1)
            inner *= self.mult
            out = np.zeros_like(u)
            out[:, 1:-1] = sfft.idst(inner, type=1, norm="ortho", axis=1)
            return out
        return sfft.irfft(sfft.rfft(u, axis=1) * self.mult, n=u.shape[1], axis=1)


def _fd_step(u, a, periodic):
    out = np.empty_like(u)
    if periodic:
        out[:] = u + a * (np.roll(u, 1, axis=1) - 2.0 * u + np.roll(u, -1, axis=1))
    else:
        out[:, 1:-1] = u[:, 1:-1] + a * (u[:, 2:] - 2.0 * u[:, 1:-1] + u[:, :-2])
        out[:, 0] = out[:, -1] = 0.0
    return out


def _spectral_j0(mu: InitialMeasure, cfg: SimConfig, t):
    """J0(t, x_j) of the box problem restricted to the lattice band.

    Atoms enter through their exact sine (Dirichlet) or Fourier (periodic)
    coefficients damped by exp(-nu kappa^2 t / 2); the band-limited result is
    a semigroup under the propagator, so later steps carry no discretisation
    error once J0 is resolved on the grid.  Densities are sampled pointwise.
    """
    x, dx, nu, L = cfg.x, cfg.dx, cfg.nu, cfg.L
    out = np.zeros(cfg.nx)
    if mu.atoms:
        if cfg.boundary == "dirichlet_zero":
            n_in = cfg.nx - 2
            kappa = math.pi * np.arange(1, n_in + 1) / (2.0 * L)
            coef = np.zeros(n_in)
            for a, m in mu.atoms:
                coef += m * np.sin(kappa * (a + L))
            coef *= math.sqrt(2.0 / (n_in + 1)) / dx * np.exp(-0.5 * nu * kappa * kappa * t)
            out[1:-1] = sfft.idst(coef, type=1, norm="ortho")
        else:
            kappa = 2.0 * math.pi * np.fft.rfftfreq(cfg.nx, d=dx)
            coef = np.zeros(kappa.size, dtype=complex)
            for a, m in mu.atoms:
                coef += m * np.exp(-1j * kappa * (a + L))
            coef *= np.exp(-0.5 * nu * kappa * kappa * t) / dx
            out += sfft.irfft(coef, n=cfg.nx)
    if mu.terms:
        out += mu.j0_density(nu, t, x)
    return out


def _rasterise(mu: InitialMeasure, cfg: SimConfig):
    """Cell averages of mu itself (explicit_fd only): atoms become mass/dx spikes."""
    x, dx = cfg.x, cfg.dx
    out = np.zeros(cfg.nx)
    for a, m in mu.atoms:
        j = cfg.node_of(a)
        if 0 <= j < cfg.nx:
            out[j] += m / dx
    if mu.terms:
        xg, wg = q.gauss_legendre(5)
        pts = x[:, None] + 0.5 * dx * xg[None, :]
        out += (mu.density_value(pts) * (0.5 * wg)[None, :]).sum(axis=1)
    return out


def _resolve_rho(rho) -> Callable:
    if isinstance(rho, GrowthEnvelope):
        return rho.rho()
    if callable(rho):
        return rho
    lam = float(rho)
    return lambda u: lam * u


def run_ensemble(mu: InitialMeasure, rho, cfg: SimConfig, record_steps: Sequence[int] | None = None,
                 replicates: Sequence[int] | None = None) -> Ensemble:
    """Simulate all replicates (batched) and keep only the recorded steps."""
    rho_fn = _resolve_rho(rho)
    nt, nx = cfg.nt, cfg.nx
    steps = np.array(sorted(set(record_steps if record_steps is not None else [nt])), dtype=int)
    if steps.size and (steps.min() < 0 or steps.max() > nt):
        raise ConfigError("recorded steps must lie in [0, nt]")
    reps = np.arange(cfg.M) if replicates is None else np.asarray(replicates, dtype=np.int64)
    out = np.empty((reps.size, steps.size, nx))
    periodic = cfg.boundary == "periodic"
    noise_scale = math.sqrt(cfg.dt / cfg.dx)

    if cfg.scheme == "exponential_mild":
        prop = _Propagator(cfg)
        u_first = _spectral_j0(mu, cfg, cfg.dt)
        n_start = 1
    else:
        a = cfg.nu * cfg.dt / (2.0 * cfg.dx ** 2)
        u_first = _rasterise(mu, cfg)
        n_start = 0
    if not periodic:
        u_first[0] = u_first[-1] = 0.0
    rec_index = {int(s): i for i, s in enumerate(steps)}

    for b0 in range(0, reps.size, cfg.batch):
        rb = reps[b0:b0 + cfg.batch]
        u = np.tile(u_first, (rb.size, 1))
        if 0 in rec_index:
            # step 0 of the mild scheme is the measure itself: record J0(dt) only if asked at n = 1
            out[b0:b0 + rb.size, rec_index[0]] = _rasterise(mu, cfg) if cfg.scheme == "exponential_mild" else u
        if n_start in rec_index and n_start > 0:
            out[b0:b0 + rb.size, rec_index[n_start]] = u
        dW = np.empty((rb.size, nx))
        for n in range(n_start, nt):
            normals(cfg.seed, rb, n, nx, out=dW)
            dW *= noise_scale
            noise = rho_fn(u) * dW
            if cfg.scheme == "exponential_mild":
                u = prop(u) + noise
            else:
                u = _fd_step(u, a, periodic) + noise
            if not periodic:
                u[:, 0] = u[:, -1] = 0.0
            if n + 1 in rec_index:
                out[b0:b0 + rb.size, rec_index[n + 1]] = u
            peak = np.max(np.abs(u), axis=1)
            bad = np.flatnonzero(~(peak <= BLOWUP))
            if bad.size:
                rep = int(rb[bad[0]])
                raise NumericalBlowup(f"replicate {rep} exceeded {BLOWUP:g} at step {n + 1}",
                                      replicate=rep, step=n + 1)
    return Ensemble(out, steps, cfg, reps)


def simulate(mu: InitialMeasure, rho, cfg: SimConfig, record_steps=None) -> Iterator[LatticeField]:
    """Stream of LatticeField, one per replicate."""
    yield from run_ensemble(mu, rho, cfg, record_steps).fields()


# -- estimators ------------------------------------------------------------

def _as_ensemble(fields) -> Ensemble:
    if isinstance(fields, Ensemble):
        return fields
    fields = list(fields)
    if not fields:
        raise InsufficientReplicates("no replicates supplied")
    cfg = fields[0].config
    vals = np.stack([f.values for f in fields])
    return Ensemble(vals, fields[0].steps, cfg, np.array([f.replicate for f in fields]))


def _estimate(samples, p, t, x, y=None, offset=0.0):
    M = samples.size
    if M < 2:
        raise InsufficientReplicates(f"need at least 2 replicates, got {M}")
    mean = float(np.sum(samples) / M)
    sd = float(np.sqrt(np.sum((samples - mean) ** 2) / (M - 1)))
    return MomentEstimate(mean, sd / math.sqrt(M), M, p, t, x, y, offset)


def mc_moment(fields, p, t, x) -> MomentEstimate:
    """Sample mean of u(t,x)^p at the nearest lattice node."""
    ens = _as_ensemble(fields)
    i, j, ot, ox = ens.snap(t, x)
    u = ens.values[:, i, j]
    return _estimate(u ** p, p, ens.steps[i] * ens.config.dt, ens.config.x[j], offset=max(ot, ox))


def mc_mean(fields, t, x) -> MomentEstimate:
    return mc_moment(fields, 1, t, x)


def mc_two_point(fields, t, x, y) -> MomentEstimate:
    ens = _as_ensemble(fields)
    i, j, ot, ox = ens.snap(t, x)
    _, k, _, oy = ens.snap(t, y)
    prod = ens.values[:, i, j] * ens.values[:, i, k]
    return _estimate(prod, 2, ens.steps[i] * ens.config.dt, ens.config.x[j], ens.config.x[k],
                     offset=max(ot, ox, oy))


def holder_estimate(fields, direction, t0, window, x_window=None):
    """Hoelder exponent from the log-log slope of the variogram.

    ``window`` = (h_min, h_max); lags are dyadic multiples of dx (space) or dt
    (time) inside it.  For time, the ensemble must record steps n0 + 2^j.
    Returns (exponent, rms residual of the fit).
    """
    ens = _as_ensemble(fields)
    cfg = ens.config
    if not t0 > 0:
        raise ValueError("t0 must be positive: the time line t = 0 is excluded")
    h_min, h_max = window
    x = cfg.x
    if x_window is None:
        x_window = (-cfg.L / 2.0, cfg.L / 2.0)
    cols = np.flatnonzero((x >= x_window[0]) & (x <= x_window[1]))
    lags, gam = [], []
    if direction == "space":
        i = int(np.argmin(np.abs(ens.steps - cfg.step_of(t0))))
        U = ens.values[:, i, :]
        j = 0
        while 2 ** j * cfg.dx <= h_max * (1 + 1e-9):
            k = 2 ** j
            h = k * cfg.dx
            if h >= h_min * (1 - 1e-9):
                c = cols[cols + k < cfg.nx]
                d = U[:, c + k] - U[:, c]
                lags.append(h)
                gam.append(float(np.mean(d * d)))
            j += 1
    elif direction == "time":
        n0 = cfg.step_of(t0)
        row = {int(s): r for r, s in enumerate(ens.steps)}
        if n0 not in row:
            raise ValueError("t0 is not a recorded step")
        j = 0
        while 2 ** j * cfg.dt <= h_max * (1 + 1e-9):
            k = 2 ** j
            h = k * cfg.dt
            if h >= h_min * (1 - 1e-9) and n0 + k in row:
                d = ens.values[:, row[n0 + k], cols] - ens.values[:, row[n0], cols]
                lags.append(h)
                gam.append(float(np.mean(d * d)))
            j += 1
    else:
        raise ValueError("direction must be 'space' or 'time'")
    if len(lags) < 4:
        raise WindowTooNarrow(f"only {len(lags)} dyadic lags fit in the window {window}")
    lx, ly = np.log(lags), np.log(gam)
    coef, res, *_ = np.polyfit(lx, ly, 1, full=True)
    resid = math.sqrt(float(res[0]) / len(lags)) if len(res) else 0.0
    return float(coef[0]) / 2.0, resid


def lattice_second_moment(mu: InitialMeasure, lam, cfg: SimConfig, steps=None):
    """Exact E[u^n_j u^n_k] of the exponential_mild scheme with rho(u) = lam u.

    C^{n+1} = P C P^T + lam^2 (dt/dx) diag(C).  Periodic Lebesgue data keep C
    circulant, so only its first row is propagated.  Returns {step: diag(C)}.
    """
    if cfg.scheme != "exponential_mild":
        raise ConfigError("lattice_second_moment covers the exponential_mild scheme")
    steps = set(steps if steps is not None else [cfg.nt])
    prop = _Propagator(cfg)
    u1 = _spectral_j0(mu, cfg, cfg.dt)
    g = lam * lam * cfg.dt / cfg.dx
    out = {}
    if cfg.boundary == "periodic" and mu.is_lebesgue:
        c = np.ones(cfg.nx)  # C = u1 u1^T with u1 = 1
        mult2 = prop.mult ** 2
        for n in range(1, cfg.nt + 1):
            if n in steps:
                out[n] = np.full(cfg.nx, c[0])
            if n == cfg.nt:
                break
            d = c[0]
            c = sfft.irfft(sfft.rfft(c) * mult2, n=cfg.nx)
            c[0] += g * d
        return out
    C = np.outer(u1, u1)
    for n in range(1, cfg.nt + 1):
        if n in steps:
            out[n] = np.diag(C).copy()
        if n == cfg.nt:
            break
        d = np.diag(C).copy()
        C = prop(prop(C).T).T
        C[np.diag_indices_from(C)] += g * d
    return out
