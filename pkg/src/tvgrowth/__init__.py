"""TV-type signal denoising with linear-growth densities in one dimension."""

from .analysis import check_bounds, check_symmetry, crit_bracket, detect_jumps, find_lambda_crit
from .bvp import NoBracketError, integrate, shoot, shoot_symmetric_step
from .densities import (
    CustomDensity,
    Density,
    FEps,
    PhiMu,
    conjugate,
    inv_deriv,
    lambda_inf,
    lambda_mu,
    make_density,
    make_f_eps,
    make_phi_mu,
    omega_inf,
    thresholds,
)
from .grid_energy import Grid, Signal
from .minimizer import SolverConfig, solve
from .signals import gen_signal

__version__ = "0.1.0"

__all__ = [
    "CustomDensity", "Density", "FEps", "PhiMu", "conjugate", "inv_deriv", "lambda_inf",
    "lambda_mu", "make_density", "make_f_eps", "make_phi_mu", "omega_inf", "thresholds",
    "Grid", "Signal", "SolverConfig", "solve", "gen_signal", "NoBracketError", "integrate",
    "shoot", "shoot_symmetric_step", "check_bounds", "check_symmetry", "crit_bracket",
    "detect_jumps", "find_lambda_crit",
]
