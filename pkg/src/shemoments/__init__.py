"""Moments, growth indices and Monte Carlo checks for the 1-D stochastic heat equation

    du/dt = (nu/2) d^2u/dx^2 + rho(u) W_dot,   u(0, .) = mu,

driven by space-time white noise, with measure-valued initial data mu.
"""
__version__ = "0.1.0"

from .errors import (ConfigError, DivergentJ0, DivergentMoment, InsufficientReplicates, NoSignChange,
                     NumericalBlowup, QuadratureError, SHEError, WindowTooNarrow)
from .special import (KernelParams, erf, erfc, erfcx, exp_erfc, heat_kernel, std_normal_cdf,
                      std_normal_pdf)
from .measures import (DistributionalInput, InitialMeasure, atoms, check_j0_finite, dirac,
                       dirac_derivative, exp_decay, exp_growth, exp_tail_rate, gaussian_bump, indicator,
                       j0, lebesgue)
from .kernels import (BdgConstants, GrowthEnvelope, a_p_vip, bdg_constants, even_ceil, kernel_c, kernel_H,
                      kernel_H_variant, kernel_K, kernel_variant, z_p)
from .moments import (GridFunction, MomentBound, MomentRequest, bc_delta_integral, bc_lebesgue_integral,
                      bc_moment_lebesgue, pth_moment_upper, second_moment, second_moment_exact,
                      second_moment_grid, second_moment_lower, stochastic_term_delta_limit,
                      two_point_bounds, two_point_delta, two_point_general, two_point_lebesgue)
from .picard import PicardGrid, PicardStatus, picard_second_moment
from .growth import (GrowthReport, empirical_growth_index, growth_index_bounds,
                     growth_index_exact_exp_decay, intermittency_ratios, lyapunov_bound_lebesgue,
                     lyapunov_exact_pam)
from .rng import normals, philox4x32, rng_stream
from .simulator import (Ensemble, LatticeField, MomentEstimate, SimConfig, holder_estimate,
                        lattice_second_moment, mc_mean, mc_moment, mc_two_point, run_ensemble, simulate)
