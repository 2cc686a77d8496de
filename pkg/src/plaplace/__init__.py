"""Radial self-similar profiles for u_t = div(|grad u|^{p-2} grad u) + |u|^{q-1} u."""

from .classify import DecayReport, classify_decay, classify_trajectory, estimate_L, verify_expansion
from .errors import (BracketError, DivergentNormError, DomainError, ExtrapolationError,
                     InsufficientHorizonError, NotFoundError, ParameterError, PlaplaceError,
                     SingularityError, StepFailure, UndefinedRegimeError)
from .exponents import (Exponents, Params, Regime, alpha_star, classify_regime, compute_exponents,
                        ell_constant, eta_bar_constant, expansion_constants, lambda_constant,
                        varrho_constant)
from .profile_ode import IntegratorControls, Termination, Trajectory, default_controls, solve
from .selfsim import SelfSimilarSolution, build_solution, norm_scaling, reconstruct_u
from .shooting import bisect_fast_decay, find_min_zero_threshold, sweep_initial_values

__version__ = "0.1.0"
