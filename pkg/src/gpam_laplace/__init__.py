"""Laplace asymptotics for the generalised parabolic Anderson model on the 2-torus.

Pseudo-spectral solvers for the renormalised equation, its Taylor hierarchy
in the noise intensity, a variational minimiser for the rate functional, and
Monte Carlo estimators for the expansion coefficients.
"""
__version__ = "0.1.0"

from .combinatorics import compositions, maps_G, riordan_derivative, series_exp_truncate, weights_W
from .estimators import expansion_compare, fernique_tail, mc_coeff, mc_direct, mc_shifted, q_integrability, varadhan_check
from .functionals import builtin_functional, fhat, qhat
from .hierarchy import build_hierarchy, march_series, remainder
from .minimizer import gradient, minimize, multistart, nondegeneracy_probe, total_objective
from .noise import model_norm_approx, renorm_constant, sample_white_noise, second_order_object
from .solvers import make_context, solve_shifted, solve_skeleton
from .spectral import Mollifier, TorusGrid

__all__ = [
    "TorusGrid", "Mollifier", "make_context", "solve_skeleton", "solve_shifted",
    "sample_white_noise", "renorm_constant", "second_order_object", "model_norm_approx",
    "build_hierarchy", "march_series", "remainder",
    "compositions", "riordan_derivative", "maps_G", "weights_W", "series_exp_truncate",
    "builtin_functional", "fhat", "qhat",
    "total_objective", "gradient", "minimize", "multistart", "nondegeneracy_probe",
    "mc_direct", "mc_shifted", "mc_coeff", "expansion_compare", "varadhan_check",
    "fernique_tail", "q_integrability",
]
