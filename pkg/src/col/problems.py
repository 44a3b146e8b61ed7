"""Benchmark problem instances.

Three groups: the quadratic/linear-map tracking family (the canonical
(alpha, beta)-regular problems, including rotations and expansive 1-D
instances), bifunctions built from equilibrium-problem sources (convex
optimization, matrix games, linear VIs), and the predictable time-varying
wrapper that adds a drift budget a_n on top of a tracking base.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Bifunction, ProblemError, Regularity
from .geometry import Ball, Box, DecisionSet, ProductSet, Simplex, as_point


def _spectral_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2))


# ---------------------------------------------------------------------------
# tracking family: f_x(x') = (alpha/2) ||x' - (M x + c)||^2


def make_linear_tracking(alpha: float, matrix, c, dset: DecisionSet,
                         name: str = "linear_tracking") -> Bifunction:
    """Tracking loss toward the moving target M x + c.

    Certified constants: strong convexity and smoothness both alpha, query
    Lipschitz beta = alpha ||M||_2, gradient bound alpha (||M|| R + ||c|| + R)
    with R the largest point norm in the set.  Best response is the projected
    target, a beta/alpha-Lipschitz map.
    """
    if alpha <= 0:
        raise ProblemError("alpha must be positive")
    mat = np.atleast_2d(np.asarray(matrix, dtype=float))
    d = dset.dim
    if mat.shape != (d, d):
        raise ProblemError(f"matrix shape {mat.shape} does not match set dim {d}")
    offset = as_point(c, d)
    beta = alpha * _spectral_norm(mat)
    radius = dset.max_norm()
    g_bound = alpha * (_spectral_norm(mat) * radius + float(np.linalg.norm(offset)) + radius)
    reg = Regularity(alpha=alpha, beta=beta, gamma=alpha, G=g_bound)

    def eval_fn(x, xp):
        r = xp - mat @ x - offset
        return 0.5 * alpha * float(np.dot(r, r))

    def grad_fn(x, xp):
        return alpha * (xp - mat @ x - offset)

    def best_response_fn(x):
        return dset.project(mat @ x + offset)

    # query Lipschitz of x -> f_x(z): |f_x(z)-f_y(z)| <= alpha ||M|| D_max * ||x-y||
    # with D_max = max ||z - Mx - c|| over the set
    d_max = radius + _spectral_norm(mat) * radius + float(np.linalg.norm(offset))
    return Bifunction(
        dset=dset, eval_fn=eval_fn, grad_fn=grad_fn, regularity=reg,
        best_response_fn=best_response_fn, family="tracking",
        params={"alpha": alpha, "matrix": mat, "c": offset},
        query_lipschitz=alpha * _spectral_norm(mat) * d_max,
    )


def make_quadratic_tracking(alpha: float, lam: float, c, dset: DecisionSet) -> Bifunction:
    """Scalar tracking f_x(x') = (alpha/2)||x' - lam x - c||^2.

    lam may be negative (expansive/oscillating targets); beta = alpha |lam|.
    """
    mat = float(lam) * np.eye(dset.dim)
    problem = make_linear_tracking(alpha, mat, c, dset)
    problem.params["lambda"] = float(lam)
    return problem


def rotation_tracking(alpha: float, angle_deg: float, dset: DecisionSet) -> Bifunction:
    """2-D rotation target: alpha = beta, the non-expansive boundary case."""
    if dset.dim != 2:
        raise ProblemError("rotation tracking is 2-D")
    t = np.deg2rad(angle_deg)
    q = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    problem = make_linear_tracking(alpha, q, np.zeros(2), dset)
    problem.params["angle_deg"] = float(angle_deg)
    return problem


def expansive_tracking_1d() -> Bifunction:
    """1-D expansive instance T(x) = clip(-2x + 0.6) on [-1, 1].

    The unique fixed point 0.2 is interior; greedy diverges (beta/alpha = 2)
    while the 1-D trap update converges.
    """
    return make_quadratic_tracking(1.0, -2.0, [0.6], Box([-1.0], [1.0]))


def tracking_equilibrium(problem: Bifunction, tol: float = 1e-14,
                         max_iter: int = 100_000) -> np.ndarray:
    """Fixed point of x -> project(Mx + c), for contractive targets only."""
    if problem.family != "tracking":
        raise ProblemError("not a tracking problem")
    mat = problem.params["matrix"]
    if _spectral_norm(mat) >= 1.0:
        raise ProblemError("target map is not a contraction")
    x = problem.dset.center()
    for _ in range(max_iter):
        nxt = problem.closed_form_best_response(x)
        if float(np.linalg.norm(nxt - x)) <= tol:
            return nxt
        x = nxt
    raise ProblemError("fixed-point iteration did not converge")


# ---------------------------------------------------------------------------
# EP sources: Phi(x, x) = 0, monotone


def convex_opt_bifunction(h, grad_h, dset: DecisionSet, minimizer,
                          strong_convexity: float = 0.0) -> Bifunction:
    """Phi(x, x') = h(x') - h(x) for convex h; skew-symmetric.

    ``minimizer`` is the argmin of h over the set (doubles as the constant
    best response).  The query gradient is -grad h, so beta = 0: the problem
    is offline.
    """
    xmin = as_point(minimizer, dset.dim)
    h_min = float(h(xmin))
    rng = np.random.default_rng(0)
    g_bound = max(float(np.linalg.norm(grad_h(dset.sample(rng)))) for _ in range(256))

    def eval_fn(x, xp):
        return float(h(xp)) - float(h(x))

    def grad_fn(x, xp):
        return np.asarray(grad_h(xp), dtype=float)

    reg = Regularity(alpha=strong_convexity, beta=0.0,
                     gamma=max(strong_convexity, 0.0), G=g_bound,
                     estimated=frozenset({"gamma", "G"}))
    return Bifunction(
        dset=dset, eval_fn=eval_fn, grad_fn=grad_fn, regularity=reg,
        best_response_fn=lambda x: xmin.copy(), family="convex_opt",
        params={"h": h, "grad_h": grad_h, "minimizer": xmin, "h_min": h_min},
        skew_symmetric=True, query_lipschitz=g_bound,
    )


def matrix_game_bifunction(payoff) -> Bifunction:
    """Saddle-point reduction of the game min_u max_v u^T A v.

    Decision x = (u, v) on a product of simplexes;
    Phi(x, x') = -u^T A v' + u'^T A v is skew-symmetric, linear in x'.
    """
    a = np.atleast_2d(np.asarray(payoff, dtype=float))
    m, n = a.shape
    dset = ProductSet([Simplex(m), Simplex(n)])

    def split(x):
        return x[:m], x[m:]

    def eval_fn(x, xp):
        u, v = split(x)
        up, vp = split(xp)
        return -float(u @ a @ vp) + float(up @ a @ v)

    def grad_fn(x, xp):
        u, v = split(x)
        return np.concatenate([a @ v, -a.T @ u])

    def best_response_fn(x):
        u, v = split(x)
        up = np.zeros(m)
        up[int(np.argmin(a @ v))] = 1.0
        vp = np.zeros(n)
        vp[int(np.argmax(a.T @ u))] = 1.0
        return np.concatenate([up, vp])

    beta = _spectral_norm(a)
    # gradient bound over the simplexes: column/row payoff vectors
    g_bound = float(np.sqrt(np.max(np.sum(a ** 2, axis=0)) + np.max(np.sum(a ** 2, axis=1))))
    reg = Regularity(alpha=0.0, beta=beta, gamma=0.0, G=g_bound)
    return Bifunction(
        dset=dset, eval_fn=eval_fn, grad_fn=grad_fn, regularity=reg,
        best_response_fn=best_response_fn, family="matrix_game",
        params={"payoff": a}, skew_symmetric=True, query_lipschitz=g_bound,
    )


def linear_vi_bifunction(mat, q, dset: DecisionSet, psd_tol: float = 1e-9) -> Bifunction:
    """VI reduction Phi(x, x') = <M x + q, x' - x>; monotone iff M is PSD.

    Not skew-symmetric: Phi(x,x') + Phi(x',x) = -<M(x-x'), x-x'>.
    """
    m = np.atleast_2d(np.asarray(mat, dtype=float))
    d = dset.dim
    if m.shape != (d, d):
        raise ProblemError("matrix shape does not match set dim")
    qv = as_point(q, d)
    sym_eigs = np.linalg.eigvalsh(0.5 * (m + m.T))
    if sym_eigs.min() < -psd_tol:
        raise ProblemError(f"M is not PSD (min symmetric eigenvalue {sym_eigs.min():.3e})")

    def field_at(x):
        return m @ x + qv

    def eval_fn(x, xp):
        return float(np.dot(field_at(x), xp - x))

    def grad_fn(x, xp):
        return field_at(x)

    def best_response_fn(x):
        f = field_at(x)
        return _linear_minimizer(dset, f)

    radius = dset.max_norm()
    f_bound = _spectral_norm(m) * radius + float(np.linalg.norm(qv))
    # grad_x Phi = M^T (x' - x) - (M x + q)
    lip = _spectral_norm(m) * dset.diameter() + f_bound
    reg = Regularity(alpha=0.0, beta=_spectral_norm(m), gamma=0.0, G=f_bound)
    return Bifunction(
        dset=dset, eval_fn=eval_fn, grad_fn=grad_fn, regularity=reg,
        best_response_fn=best_response_fn, family="linear_vi",
        params={"matrix": m, "q": qv}, skew_symmetric=False, query_lipschitz=lip,
    )


def _linear_minimizer(dset: DecisionSet, f: np.ndarray) -> np.ndarray:
    """argmin over the set of <f, x>, closed form per variant."""
    if isinstance(dset, Box):
        return np.where(f > 0, dset.lower, dset.upper).astype(float)
    if isinstance(dset, Ball):
        norm = float(np.linalg.norm(f))
        if norm == 0.0:
            return dset.center()
        return dset.center_point - dset.radius * f / norm
    if isinstance(dset, Simplex):
        out = np.zeros(dset.dim)
        out[int(np.argmin(f))] = 1.0
        return out
    if isinstance(dset, ProductSet):
        return np.concatenate([_linear_minimizer(p, f[a:b])
                               for p, (a, b) in zip(dset.parts, dset.blocks())])
    raise ProblemError(f"no linear minimizer for {type(dset).__name__}")


def ep_phi(problem: Bifunction, x, xp) -> float:
    """Phi(x, x') = f_x(x') - f_x(x); equals eval for normalized problems."""
    return problem.eval(x, xp) - problem.eval(x, x)


# ---------------------------------------------------------------------------
# predictable (time-varying) wrapper


DRIFT_SCHEDULES = {
    "zero": lambda n: 0.0,
    "inv_square": lambda n: float(n) ** -2.0,
    "inv_sqrt": lambda n: float(n) ** -0.5,
}


@dataclass(frozen=True)
class PredictableSequence:
    """Tracking base plus an adversarial linear drift within budget a_n.

    Realized round-n loss: l_n(x) = f_{x_n}(x) + <delta_n, x> with
    delta_n = delta_{n-1} + a_n u_n, delta_0 = 0 and u_n seeded unit vectors,
    so the per-round gradient drift is exactly beta ||x_n - x_{n-1}|| + a_n.
    """

    base: Bifunction
    schedule: str
    seed: int = 0

    def __post_init__(self):
        if self.base.family != "tracking":
            raise ProblemError("predictable wrapper needs a tracking base")
        if self.schedule not in DRIFT_SCHEDULES:
            raise ProblemError(f"unknown drift schedule {self.schedule!r}")

    @property
    def dset(self) -> DecisionSet:
        return self.base.dset

    @property
    def regularity(self) -> Regularity:
        return self.base.regularity

    def budgets(self, n_rounds: int) -> np.ndarray:
        fn = DRIFT_SCHEDULES[self.schedule]
        return np.array([fn(n) for n in range(1, n_rounds + 1)])

    def drift_path(self, n_rounds: int) -> np.ndarray:
        """delta_n for n = 1..N; increments have norms exactly a_n."""
        a = self.budgets(n_rounds)
        d = self.dset.dim
        rng = np.random.default_rng(np.random.SeedSequence([int(self.seed), 7]))
        if d == 1:
            dirs = np.where(rng.uniform(size=n_rounds) < 0.5, -1.0, 1.0)[:, None]
        else:
            dirs = rng.standard_normal((n_rounds, d))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        return np.cumsum(a[:, None] * dirs, axis=0)

    def loss(self, n: int, query, x, drift: np.ndarray) -> float:
        return self.base.eval(query, x) + float(np.dot(drift[n - 1], as_point(x, self.dset.dim)))

    def grad(self, n: int, query, x, drift: np.ndarray) -> np.ndarray:
        return self.base.grad(query, x) + drift[n - 1]

    def best_response(self, n: int, query, drift: np.ndarray) -> np.ndarray:
        alpha = self.base.params["alpha"]
        mat = self.base.params["matrix"]
        c = self.base.params["c"]
        target = mat @ as_point(query, self.dset.dim) + c - drift[n - 1] / alpha
        return self.dset.project(target)
