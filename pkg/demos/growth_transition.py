"""Where the second moment stops growing: the exponential growth index.

Run with ``python3 demos/growth_transition.py`` (a couple of minutes).  For
data e^{-beta|x|} the transition speed alpha* has an exact value; the
empirical estimate scans rays |x| = alpha t of the exact second moment.
"""
from shemoments import dirac, empirical_growth_index, exp_decay, growth_index_exact_exp_decay

nu, lam = 1.0, 1.0
print("beta     exact    empirical   bracket")
for beta in (0.25, 0.4, 1.0):
    rep = empirical_growth_index(exp_decay(beta), nu, lam)
    lo, hi = rep.bracket
    print(f"{beta:<8g} {growth_index_exact_exp_decay(beta, lam, nu):.4f}   {rep.empirical_transition:.4f}"
          f"      [{lo:.4f}, {hi:.4f}]")

rep = empirical_growth_index(dirac(), nu, lam)
print(f"point mass: empirical {rep.empirical_transition:.4f}, bounds {rep.lower_index_bound:g}..{rep.upper_index_bound:g}")
print("\nper-ray growth rates r(alpha) for the point mass")
for a, r, _ in rep.per_alpha_rates[:12]:
    print(f"  alpha={a:.3f}  r={r:+.4f}")
