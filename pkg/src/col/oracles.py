"""Per-round best responses, equilibrium search, and residual functions.

The gap rho(x) = f_x(x) - min f_x(.) is the instantaneous dynamic regret
and doubles as the primal equilibrium residual; the dual residual and the
dual-VI residual are computed in closed form where available and by dense
grids for intrinsic dimension <= 3 otherwise (certified answers only).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import GRID_POINTS_PER_DIM, ORACLE_TOL, SOLVER_ITER_CAP
from .core import Bifunction
from .geometry import Ball, Box, DecisionSet, ProductSet, Simplex
from .problems import ep_phi


class OracleError(RuntimeError):
    pass


class NonConvergence(OracleError):
    """Inner solver exceeded its iteration cap (mis-specified constants?)."""


class NoCertifiedRoute(OracleError):
    """No certified equilibrium route: beta >= alpha, d > 3, no closed form."""


class GridUnsupported(OracleError):
    """Grid evaluation refused beyond intrinsic dimension 3."""


def intrinsic_dim(dset: DecisionSet) -> int:
    if isinstance(dset, Simplex):
        return dset.dim - 1
    if isinstance(dset, ProductSet):
        return sum(intrinsic_dim(p) for p in dset.parts)
    return dset.dim


@dataclass(frozen=True)
class EquilibriumCertificate:
    x_star: np.ndarray
    gap_value: float
    method: str  # "fixed_point" | "gap_minimization"
    iterations: int
    estimated_constants: bool = False


def best_response(problem: Bifunction, x, tol: float = ORACLE_TOL) -> np.ndarray:
    """argmin over the set of f_x(.), within function gap tol.

    Uses the closed form when the problem provides one; otherwise projected
    gradient descent on the alpha-strongly convex loss with the stopping
    rule ||gradient mapping|| <= sqrt(2 alpha tol), which converts the
    mapping norm to a function gap via strong convexity.
    """
    if problem.has_best_response:
        return problem.closed_form_best_response(x)
    reg = problem.regularity
    if reg.alpha <= 0 or reg.gamma <= 0:
        raise NoCertifiedRoute("inner solver needs alpha > 0 and gamma > 0")
    step = 1.0 / reg.gamma
    thresh = float(np.sqrt(2.0 * reg.alpha * tol))
    z = problem.dset.project(x)
    for _ in range(SOLVER_ITER_CAP):
        g = problem.grad(x, z)
        z_next = problem.dset.project(z - step * g)
        mapping = float(np.linalg.norm(z - z_next)) / step
        z = z_next
        if mapping <= thresh:
            return z
    raise NonConvergence("best-response solver hit the iteration cap")


def gap(problem: Bifunction, x, tol: float = ORACLE_TOL) -> float:
    """rho(x) = f_x(x) - f_x(best response); nonnegative up to tol."""
    br = best_response(problem, x, tol)
    return problem.eval(x, x) - problem.eval(x, br)


def find_equilibrium(problem: Bifunction, tol: float = ORACLE_TOL,
                     max_iter: int = 10_000,
                     grid_points: int = GRID_POINTS_PER_DIM) -> EquilibriumCertificate:
    """Equilibrium search with a certificate.

    With alpha > beta the best-response map is a beta/alpha-contraction and
    fixed-point iteration is geometric.  Otherwise, multi-start gap
    minimization with grid seeding for intrinsic dimension <= 3 (uncertified
    route, labeled in the certificate).
    """
    reg = problem.regularity
    estimated = not (reg.certified("alpha") and reg.certified("beta"))
    if reg.alpha > 0 and reg.beta < reg.alpha:
        x = problem.dset.center()
        inner_tol = min(tol, ORACLE_TOL) * 1e-2
        for it in range(1, max_iter + 1):
            t = best_response(problem, x, inner_tol)
            if float(np.linalg.norm(x - t)) <= tol:
                return EquilibriumCertificate(
                    x_star=t, gap_value=gap(problem, t, inner_tol),
                    method="fixed_point", iterations=it,
                    estimated_constants=estimated)
            x = t
        raise NonConvergence("fixed-point iteration exceeded max_iter")

    if intrinsic_dim(problem.dset) > 3 and not problem.has_best_response:
        raise NoCertifiedRoute(
            "beta >= alpha with d > 3 and no closed form; supply x_star")

    x_best, g_best, evals = _minimize_gap(problem, tol, grid_points, max_iter)
    if g_best > tol:
        raise NonConvergence(f"gap minimization stalled at {g_best:.3e} > tol {tol:.1e}")
    return EquilibriumCertificate(x_star=x_best, gap_value=g_best,
                                  method="gap_minimization", iterations=evals,
                                  estimated_constants=estimated)


def _minimize_gap(problem, tol, grid_points, max_iter):
    """Grid seeding plus compass pattern search on rho; deterministic."""
    dset = problem.dset
    pts = dset.grid(min(grid_points, 41))
    vals = np.array([gap(problem, p) for p in pts])
    order = np.argsort(vals, kind="stable")
    evals = len(pts)
    x_best, g_best = pts[order[0]], float(vals[order[0]])
    for idx in order[:5]:
        x, fx = pts[idx], float(vals[idx])
        step = dset.diameter() / min(grid_points, 41)
        d = dset.dim
        it = 0
        while step > 1e-12 and fx > tol * 0.5 and it < max_iter:
            improved = False
            for i in range(d):
                for sign in (1.0, -1.0):
                    cand = x.copy()
                    cand[i] += sign * step
                    cand = dset.project(cand)
                    fc = gap(problem, cand)
                    evals += 1
                    if fc < fx - 1e-15:
                        x, fx = cand, fc
                        improved = True
            if not improved:
                step *= 0.5
            it += 1
        if fx < g_best:
            x_best, g_best = x, fx
    return x_best, g_best, evals


def dual_residual(problem: Bifunction, x_hat,
                  grid_points: int = GRID_POINTS_PER_DIM) -> float:
    """r_dep(x') = max over x of Phi(x, x').

    Closed form for convex-optimization sources (h(x') - min h) and matrix
    games (best-response payoff spread); dense grid for intrinsic d <= 3.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    if problem.family == "convex_opt":
        return float(problem.params["h"](x_hat)) - problem.params["h_min"]
    if problem.family == "matrix_game":
        a = problem.params["payoff"]
        m = a.shape[0]
        u_hat, v_hat = x_hat[:m], x_hat[m:]
        return float(np.max(a.T @ u_hat) - np.min(a @ v_hat))
    if intrinsic_dim(problem.dset) > 3:
        raise GridUnsupported("dual residual needs a closed form beyond d = 3")
    pts = problem.dset.grid(grid_points)
    return max(ep_phi(problem, p, x_hat) for p in pts)


def dvi_residual(problem: Bifunction, x_hat,
                 grid_points: int = GRID_POINTS_PER_DIM) -> float:
    """max over grid x of <grad f_x(x), x_hat - x>.

    Nonpositive iff x_hat solves the dual VI at the grid resolution.
    """
    if intrinsic_dim(problem.dset) > 3:
        raise GridUnsupported("DVI residual grid refused beyond d = 3")
    x_hat = np.asarray(x_hat, dtype=float)
    pts = problem.dset.grid(grid_points)
    return max(float(np.dot(problem.grad(p, p), x_hat - p)) for p in pts)


def primal_residual(problem: Bifunction, x_hat, tol: float = ORACLE_TOL) -> float:
    """r_ep(x') = max over x of -Phi(x', x); equals the gap for normalized Phi."""
    br = best_response(problem, x_hat, tol)
    return ep_phi(problem, x_hat, x_hat) - ep_phi(problem, x_hat, br)


def dual_solution_deficit(problem: Bifunction, x_star, n_samples: int = 1000,
                          seed: int = 0) -> float:
    """max sampled Phi(x, x_star); <= tol certifies x_star as a dual-EP solution."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(n_samples):
        x = problem.dset.sample(rng)
        worst = max(worst, ep_phi(problem, x, x_star))
    return worst


def dual_to_primal_bound(problem: Bifunction, x_hat,
                         grid_points: int = GRID_POINTS_PER_DIM):
    """Evaluate the dual-to-primal conversion at x_hat.

    Returns (r_dep, r_ep, bound, applicable): for skew-symmetric problems
    the bound is r_dep itself (equality); otherwise, whenever
    r_dep <= 2 L D, the bound is 2 sqrt(2 L D r_dep) with L the query
    Lipschitz constant of Phi.
    """
    r_dep = dual_residual(problem, x_hat, grid_points)
    r_ep = primal_residual(problem, x_hat)
    if problem.skew_symmetric:
        return r_dep, r_ep, r_dep, True
    lip = problem.query_lipschitz
    dia = problem.dset.diameter()
    if not np.isfinite(lip):
        return r_dep, r_ep, float("inf"), False
    applicable = r_dep <= 2.0 * lip * dia
    bound = 2.0 * float(np.sqrt(max(2.0 * lip * dia * max(r_dep, 0.0), 0.0)))
    return r_dep, r_ep, bound, applicable
