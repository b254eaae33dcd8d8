"""Monte Carlo simulation of the parabolic Anderson model against its formulas.

Run with ``python3 demos/monte_carlo_check.py`` (about a minute).  Uses a
modest ensemble, so the Monte Carlo error bars are a few percent.
"""
import numpy as np

from shemoments import (SimConfig, dirac, holder_estimate, kernel_H, kernel_K, lattice_second_moment, lebesgue,
                        mc_mean, mc_moment, mc_two_point, run_ensemble, two_point_lebesgue)

lam = 0.5
cfg = SimConfig(L=4.0, dx=0.05, T=0.5, M=1000, seed=2024)
print(f"lattice: {cfg.nx} nodes, {cfg.nt} steps, {cfg.M} replicates")

ens = run_ensemble(lebesgue(), lam, cfg)
est = mc_moment(ens, 2, 0.5, 0.0)
print("\nflat data, t=0.5, x=0")
print(f"  E[u^2]  Monte Carlo {est.mean:.4f} +- {est.stderr:.4f}   formula {1 + kernel_H(0.5, 1.0, lam):.4f}")
tp = mc_two_point(ens, 0.5, 0.0, 0.5)
print(f"  E[u(0)u(0.5)]  Monte Carlo {tp.mean:.4f} +- {tp.stderr:.4f}   "
      f"formula {two_point_lebesgue(1.0, lam, 0.0, 0.5, 0.0, 0.5):.4f}")
m = mc_mean(ens, 0.5, 0.0)
print(f"  E[u]  Monte Carlo {m.mean:.4f} +- {m.stderr:.4f}   (stays 1)")

cfg_d = SimConfig(L=4.0, dx=0.05, T=0.25, M=1000, seed=2025)
ens_d = run_ensemble(dirac(), lam, cfg_d)
est = mc_moment(ens_d, 2, 0.25, 0.0)
lat = lattice_second_moment(dirac(), lam, cfg_d)[cfg_d.nt][cfg_d.node_of(0.0)]
print("\npoint mass, t=0.25, x=0")
print(f"  E[u^2]  Monte Carlo {est.mean:.4f} +- {est.stderr:.4f}   exact lattice value {lat:.4f}   "
      f"continuum formula {kernel_K(0.25, 0.0, 1.0, lam) / lam ** 2:.4f}")

print("\nlattice bias of E[u^2] shrinks under refinement (exact lattice recursion, no sampling)")
oracle = kernel_K(0.25, 0.0, 1.0, lam) / lam ** 2
for dx in (0.1, 0.05, 0.025):
    c = SimConfig(L=3.0, dx=dx, T=0.25, M=2)
    v = lattice_second_moment(dirac(), lam, c)[c.nt][c.node_of(0.0)]
    print(f"  dx={dx:<6g} relative bias {abs(v / oracle - 1):.2e}")

print("\nroughness of the field at t=0.5 (flat data, lambda=1)")
c = SimConfig(L=3.0, dx=0.05, T=0.5, M=100, seed=7)
n0 = c.step_of(0.5)
ens_h = run_ensemble(lebesgue(), 1.0, c, record_steps=[n0])
h, res = holder_estimate(ens_h, "space", 0.5, (c.dx, 8 * c.dx))
print(f"  spatial exponent {h:.3f} (residual {res:.3f}); the continuum value is 1/2")
inner = ens_h.values[:, 0, np.abs(c.x) <= 1.0]
print(f"  field range on |x| <= 1 at t=0.5: {inner.min():.3f} .. {inner.max():.3f}")
