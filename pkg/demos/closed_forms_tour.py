"""A walk through the closed-form moment formulas.

Run with ``python3 demos/closed_forms_tour.py``.  Every number printed is
computed twice: once from a closed form and once by an independent route
(quadrature or an integral representation), so the output doubles as a
consistency check.
"""
import math

from shemoments import (MomentRequest, bc_delta_integral, bc_lebesgue_integral, dirac, exp_decay, intermittency_ratios,
                        kernel_H, lebesgue, second_moment, second_moment_exact, two_point_delta, two_point_lebesgue)
from shemoments.special import erf

nu, lam = 1.0, 1.0

print("Flat initial data: E[u(t,x)^2] = 1 + H(t), the same at every x")
for t in (0.25, 1.0, 4.0):
    closed = second_moment(lebesgue(), nu, lam, 0.0, t, 0.0)
    quad = second_moment(lebesgue(), nu, lam, 0.0, t, 0.0, method="quad")
    print(f"  t={t:<5g} closed {closed:.12f}   quadrature {quad:.12f}")

print("\nPoint mass at the origin: E[u(t,x)^2] = K(t,x) / lambda^2")
for t, x in ((0.5, 0.0), (0.5, 1.0), (2.0, 0.0)):
    closed = second_moment(dirac(), nu, lam, 0.0, t, x)
    quad = second_moment(dirac(), nu, lam, 0.0, t, x, method="quad")
    print(f"  t={t:<4g} x={x:<4g} closed {closed:.10f}   quadrature {quad:.10f}")

print("\nData with no closed form (e^{-|x|}) go through nested quadrature")
req = MomentRequest.quasi(exp_decay(1.0), nu, lam, 0.0, 1.0, 0.5)
print(f"  E[u(1, 0.5)^2] = {second_moment_exact(req):.10f}")

print("\nTwo-point correlations against the older integral forms")
for x, y in ((0.0, 0.5), (0.0, 1.0), (0.2, -0.4)):
    d = two_point_lebesgue(nu, lam, 0.0, 1.0, x, y) - bc_lebesgue_integral(nu, 1.0, x, y)
    print(f"  flat data, |x-y|={abs(x - y):<4g} difference {d:.10f}  erf(|x-y|/2) {erf(abs(x - y) / 2):.10f}")
    print(f"  point mass, (x,y)=({x:g},{y:g})  closed {two_point_delta(nu, lam, 0.0, 1.0, x, y):.10f}  "
          f"integral {bc_delta_integral(nu, 1.0, x, y):.10f}")

print("\nIntermittency: lambda_n / n grows with n")
for n, r in intermittency_ratios(6, lam, nu):
    print(f"  n={n}  lambda_n/n = {r:.5f}")

print("\nLong-time growth of the second moment for flat data")
for t in (10.0, 20.0, 40.0):
    print(f"  t={t:<4g} log(1+H)/t = {math.log(1 + kernel_H(t, nu, lam)) / t:.5f}   (limit lambda^4/4nu = 0.25)")
