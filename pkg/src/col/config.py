"""Repo-wide numeric tolerances and oracle defaults.

Single source of truth: every module and test pulls its tolerance
constants from here instead of re-declaring magic numbers.
"""

# Exactness tolerance for identities that hold in closed form
# (idempotent projections, B_R(x||x) = 0, zero-step updates).
TOL_EXACT = 1e-12

# Slack granted to analytic inequalities checked on sampled data
# (monotonicity, contraction, per-step ratio bounds).
TOL_PROP = 1e-9

# Agreement tolerance between closed-form operations and brute-force
# grid oracles.
TOL_GRID = 1e-3

# Default function-gap tolerance for inner solvers and equilibrium search.
ORACLE_TOL = 1e-8

# Default grid resolution (points per intrinsic dimension) for
# grid-based residual maximization, d <= 3 only.
GRID_POINTS_PER_DIM = 101

# Floor applied to simplex iterates before evaluating entropy gradients;
# keeps Bregman divergences finite without visibly moving trajectories.
ENTROPY_FLOOR = 1e-12

# Iteration cap for certified inner solvers; exceeding it signals
# mis-specified regularity constants rather than a hard problem.
SOLVER_ITER_CAP = 200_000
