"""Continuous online learning: losses that vary continuously with the
learner's decisions, the algorithms that exploit that structure, and the
regret/equilibrium ledgers that certify them."""

from . import config
from ._kernels import BACKEND, NUMBA_ENABLED
from .algorithms import (AlgorithmState, ConfigurationError, Schedule,
                         constant, contraction_rate, corollary_f_stepsize,
                         greedy_step, inv_sqrt, lambda_trap_step, mann_step,
                         midpoint_step, mirror_descent_step, prop8_stepsize,
                         prop8_threshold, resolve_schedule, run,
                         theorem5_ratio_bound, theorem5_stepsize)
from .core import (Bifunction, FeedbackSpec, FeedbackStream, ProblemError,
                   Regularity, estimate_regularity, first_order_feedback,
                   loss_at)
from .geometry import (Ball, Box, BregmanGeometry, DecisionSet, EUCLIDEAN,
                       GeometryError, NEG_ENTROPY, ProductSet, Simplex,
                       bregman, diameter, geometry_by_name, mirror_step,
                       project)
from .imitation import (TabularMDP, il_convergence_check, make_il_problem,
                        random_mdp, random_policy, state_distribution)
from .metrics import (BoundReport, RunTrace, averaged_iterate,
                      check_theorem_bounds, dynamic_regret, read_trace_csv,
                      regret_slope, static_regret, weighted_static_regret)
from .oracles import (EquilibriumCertificate, GridUnsupported,
                      NoCertifiedRoute, NonConvergence, OracleError,
                      best_response, dual_residual, dual_to_primal_bound,
                      dvi_residual, find_equilibrium, gap)
from .problems import (PredictableSequence, convex_opt_bifunction,
                       expansive_tracking_1d, linear_vi_bifunction,
                       make_linear_tracking, make_quadratic_tracking,
                       matrix_game_bifunction, rotation_tracking,
                       tracking_equilibrium)

__version__ = "0.1.0"
