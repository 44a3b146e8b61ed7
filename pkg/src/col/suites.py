"""Named property suites behind ``col check --suite <name>``.

Each suite replays a module's invariants with fixed seeds and reports the
worst-case margin per invariant (margin >= 0 means the property held).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import algorithms as alg
from . import oracles
from .config import TOL_EXACT, TOL_GRID, TOL_PROP
from .core import (FeedbackSpec, FeedbackStream, estimate_regularity,
                   gradient_check, joint_smoothness_deficit,
                   monotonicity_deficit)
from .geometry import (Ball, Box, EUCLIDEAN, NEG_ENTROPY, Simplex, bregman,
                       mirror_step)
from .imitation import (il_convergence_check, make_il_problem, random_mdp,
                        random_policy, state_distribution)
from .metrics import (check_theorem_bounds, contraction_ratio_series,
                      predictable_contraction_deficit)
from .problems import (PredictableSequence, convex_opt_bifunction, ep_phi,
                       expansive_tracking_1d, linear_vi_bifunction,
                       make_quadratic_tracking, matrix_game_bifunction,
                       rotation_tracking)


@dataclass
class CheckResult:
    name: str
    margin: float
    passed: bool
    info: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: worst margin {self.margin:.3e} {self.info}"


@dataclass
class SuiteReport:
    suite: str
    results: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> list[str]:
        return [r.line() for r in self.results]


def grid_argmin(dset, objective, coarse: int = 101, refinements: int = 3):
    """Brute-force argmin oracle: coarse grid plus local grid refinement.

    ``objective`` maps an (M, d) array of points to (M,) values.  Refinement
    grids are clipped back onto the set by projection, so boundary minima
    stay reachable.  Purely enumerative; no gradient logic.
    """
    pts = dset.grid(coarse)
    best = pts[int(np.argmin(objective(pts)))]
    width = dset.diameter() / coarse
    for _ in range(refinements):
        axes = [np.linspace(best[i] - width, best[i] + width, 41)
                for i in range(dset.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        local = np.stack([m.ravel() for m in mesh], axis=1)
        local = np.stack([dset.project(p) for p in local])
        best = local[int(np.argmin(objective(local)))]
        width /= 20.0
    return best


def _qt_instance(d=5):
    box = Box([-1.0] * d, [1.0] * d)
    return make_quadratic_tracking(2.0, 0.5, [0.0] * d, box)


def _il_instance():
    mdp = random_mdp(3, 2, 5, seed=42)
    expert = random_policy(3, 2, seed=7)
    return make_il_problem(mdp, expert, mu_reg=1.0, seed=1)


def geometry_suite(n_samples: int = 2000, seed: int = 0) -> SuiteReport:
    rng = np.random.default_rng(seed)
    sets = [Box([-1.0, -1.0], [1.0, 1.0]), Ball([0.3, -0.2], 1.5), Simplex(3)]
    results = []

    worst = 0.0
    for dset in sets:
        for _ in range(n_samples // len(sets)):
            p = rng.normal(scale=2.0, size=dset.dim)
            pp = dset.project(p)
            worst = max(worst, float(np.linalg.norm(dset.project(pp) - pp)))
    results.append(CheckResult("projection idempotent", TOL_EXACT - worst,
                               worst <= TOL_EXACT))

    worst = np.inf
    for dset in sets:
        for _ in range(n_samples // len(sets)):
            p = rng.normal(scale=2.0, size=dset.dim)
            q = rng.normal(scale=2.0, size=dset.dim)
            lhs = float(np.linalg.norm(p - q))
            rhs = float(np.linalg.norm(dset.project(p) - dset.project(q)))
            worst = min(worst, lhs - rhs)
    results.append(CheckResult("projection nonexpansive", worst + TOL_EXACT,
                               worst >= -TOL_EXACT))

    worst = 0.0
    for dset, geom in [(sets[0], EUCLIDEAN), (sets[2], NEG_ENTROPY)]:
        for _ in range(200):
            x = dset.sample(rng)
            g = rng.normal(size=dset.dim)
            worst = max(worst, float(np.linalg.norm(
                mirror_step(geom, dset, x, g, 0.0) - x)))
    results.append(CheckResult("mirror_step eta=0 identity", TOL_EXACT - worst,
                               worst <= TOL_EXACT))

    # Euclidean mirror step vs grid argmin of <eta g, z> + B(z||x), d <= 2
    worst = 0.0
    for dset in (Box([-1.0, -1.0], [1.0, 1.0]), Ball([0.0, 0.0], 1.0)):
        for _ in range(10):
            x = dset.sample(rng)
            g = rng.normal(size=2)
            eta = rng.uniform(0.05, 0.5)

            def objective(pts):
                return eta * pts @ g + 0.5 * np.sum((pts - x) ** 2, axis=1)

            zg = grid_argmin(dset, objective)
            z = mirror_step(EUCLIDEAN, dset, x, g, eta)
            worst = max(worst, float(np.linalg.norm(z - zg)))
    results.append(CheckResult("euclidean mirror_step matches grid argmin",
                               TOL_GRID - worst, worst <= TOL_GRID))

    worst = np.inf
    zero_at = 0.0
    for _ in range(10_000):
        x = sets[2].sample(rng)
        y = sets[2].sample(rng)
        worst = min(worst, bregman(NEG_ENTROPY, x, np.maximum(y, 1e-9)))
        worst = min(worst, bregman(EUCLIDEAN, x, y))
        zero_at = max(zero_at, bregman(EUCLIDEAN, x, x))
    results.append(CheckResult("bregman nonnegative, zero at x'=x",
                               min(worst, TOL_EXACT - zero_at),
                               worst >= 0 and zero_at <= TOL_EXACT))
    return SuiteReport("geometry", results)


def regularity_suite(n_pairs: int = 10_000, seed: int = 0) -> SuiteReport:
    results = []
    qt = _qt_instance()
    il = _il_instance()
    for name, problem, pairs in (("tracking", qt, n_pairs), ("imitation", il, 2000)):
        m = monotonicity_deficit(problem, pairs, seed=seed)
        results.append(CheckResult(
            f"(alpha-beta)-strong monotonicity [{name}]", m + TOL_PROP,
            m >= -TOL_PROP))
    for name, problem, pairs in (("tracking", qt, n_pairs), ("imitation", il, 2000)):
        m = joint_smoothness_deficit(problem, pairs, seed=seed)
        results.append(CheckResult(
            f"(gamma+beta) joint smoothness [{name}]", m + TOL_PROP,
            m >= -TOL_PROP))

    spec = FeedbackSpec.combined(sigma=0.3, schedule="constant", kappa=0.1)
    s1 = FeedbackStream(qt, spec, run_seed=5, n_rounds=64)
    s2 = FeedbackStream(qt, spec, run_seed=5, n_rounds=64)
    identical = all(np.array_equal(s1.gradient(n, qt.dset.center()),
                                   s2.gradient(n, qt.dset.center()))
                    for n in range(1, 65))
    results.append(CheckResult("feedback reproducibility (bit-identical)",
                               0.0 if identical else -1.0, identical))

    est = estimate_regularity(qt, 10_000, seed=seed)
    errs = [abs(est.alpha - 2.0) / 2.0, abs(est.beta - 1.0),
            abs(est.gamma - 2.0) / 2.0]
    worst = max(errs)
    results.append(CheckResult("estimated constants within 5% (tracking)",
                               0.05 - worst, worst <= 0.05))
    return SuiteReport("regularity", results)


def residuals_suite(seed: int = 0) -> SuiteReport:
    rng = np.random.default_rng(seed)
    results = []
    box = Box([-1.0, -1.0], [1.0, 1.0])
    conv = convex_opt_bifunction(
        lambda x: float(np.dot(x, x)), lambda x: 2.0 * x, box,
        minimizer=[0.0, 0.0], strong_convexity=2.0)
    game = matrix_game_bifunction([[1.0, -1.0], [-1.0, 1.0]])
    lvi = linear_vi_bifunction(np.eye(2), [0.0, 0.0], Ball([0.0, 0.0], 1.0))

    # vectorized grid evaluation: F(x) = grad f_x(x) on a fixed grid gives
    # the DVI residual max <F(x), x_hat - x> and, for VI-type sources whose
    # Phi(x, .) is linear, the dual residual as well
    worst = np.inf
    for problem in (conv, game, lvi):
        pts = problem.dset.grid(61)
        f_grid = np.stack([problem.grad(p, p) for p in pts])
        diag = np.einsum("ij,ij->i", f_grid, pts)
        for _ in range(100):
            x_hat = problem.dset.sample(rng)
            r_dvi = float(np.max(f_grid @ x_hat - diag))
            if problem.family == "linear_vi":
                r_dep = r_dvi
            else:
                r_dep = oracles.dual_residual(problem, x_hat)
            r_ep = oracles.primal_residual(problem, x_hat)
            worst = min(worst, r_dep - r_dvi, r_ep - r_dep)
    results.append(CheckResult("residual ordering dvi <= dual <= gap",
                               worst + TOL_GRID, worst >= -TOL_GRID))

    worst = 0.0
    for problem in (conv, game):
        for _ in range(100):
            x_hat = problem.dset.sample(rng)
            r_dep, r_ep, bound, _ = oracles.dual_to_primal_bound(problem, x_hat)
            worst = max(worst, abs(r_ep - r_dep))
    results.append(CheckResult("skew symmetry: gap equals dual residual",
                               TOL_PROP - worst, worst <= TOL_PROP))

    worst = np.inf
    pts = lvi.dset.grid(201)
    f_grid = np.stack([lvi.grad(p, p) for p in pts])
    diag = np.einsum("ij,ij->i", f_grid, pts)
    lip_d = 2.0 * lvi.query_lipschitz * lvi.dset.diameter()
    for _ in range(100):
        x_hat = lvi.dset.sample(rng)
        r_dep = float(np.max(f_grid @ x_hat - diag))
        r_ep = oracles.primal_residual(lvi, x_hat)
        if r_dep <= lip_d:
            bound = 2.0 * float(np.sqrt(lip_d * max(r_dep, 0.0)))
            worst = min(worst, bound + TOL_GRID - r_ep)
    results.append(CheckResult("dual-to-primal sqrt conversion (linear VI)",
                               worst, worst >= 0))

    # near-fixed-point: gap <= eps implies ||x - T(x)|| <= sqrt(2 eps / alpha)
    qt = _qt_instance(d=2)
    worst = np.inf
    for _ in range(200):
        x = qt.dset.sample(rng) * 0.2
        eps = oracles.gap(qt, x)
        dist = float(np.linalg.norm(x - oracles.best_response(qt, x)))
        worst = min(worst, float(np.sqrt(2.0 * eps / qt.regularity.alpha))
                    + TOL_PROP - dist)
    results.append(CheckResult("near-fixed-point distance bound", worst,
                               worst >= 0))

    # strongly convex set inequality at a boundary equilibrium on a ball
    ball = Ball([0.0, 0.0], 1.0)
    bqt = make_quadratic_tracking(2.0, 0.3, [2.0, 0.0], ball)
    cert = oracles.find_equilibrium(bqt, tol=1e-12)
    g_star = bqt.grad(cert.x_star, cert.x_star)
    gn = float(np.linalg.norm(g_star))
    worst = np.inf
    for _ in range(1000):
        x = ball.sample(rng)
        lhs = float(np.dot(g_star, x - cert.x_star))
        rhs = (1.0 / (2.0 * ball.radius)) * float(
            np.dot(x - cert.x_star, x - cert.x_star)) * gn
        worst = min(worst, lhs - rhs)
    results.append(CheckResult("strongly convex set inequality (ball)",
                               worst + 1e-6, worst >= -1e-6))
    return SuiteReport("residuals", results)


def contraction_suite(seed: int = 0) -> SuiteReport:
    rng = np.random.default_rng(seed)
    results = []
    qt = _qt_instance()
    ratio = qt.regularity.ratio
    worst = np.inf
    for _ in range(10_000):
        x = qt.dset.sample(rng)
        y = qt.dset.sample(rng)
        lhs = ratio * float(np.linalg.norm(x - y)) + TOL_PROP
        rhs = float(np.linalg.norm(qt.closed_form_best_response(x)
                                   - qt.closed_form_best_response(y)))
        worst = min(worst, lhs - rhs)
    results.append(CheckResult("best response is beta/alpha-Lipschitz",
                               worst, worst >= 0))

    qt2 = _qt_instance(d=2)
    eta = 0.2
    rate = alg.contraction_rate(qt2.regularity, 1.0, eta)
    trace = alg.run("mirror_descent", qt2, n_rounds=200, x1=[1.0, 0.0],
                    schedule=alg.constant(eta))
    ratios, mask = contraction_ratio_series(trace)
    worst = float(np.max(ratios[mask])) if mask.any() else 0.0
    results.append(CheckResult(
        "mirror-descent per-step Bregman ratio <= Prop 8 rate",
        rate + TOL_PROP - worst, worst <= rate + TOL_PROP,
        info=f"(rate {rate:.4f})"))

    rot = rotation_tracking(1.0, 30.0, Ball([0.0, 0.0], 1.0))
    tr_mid = alg.run("midpoint", rot, n_rounds=400, x1=[0.5, 0.0])
    tr_mann = alg.run("mann", rot, n_rounds=400, x1=[0.5, 0.0],
                      schedule=alg.constant(0.5))
    d_mid = float(np.linalg.norm(tr_mid.xs[-1] - tr_mid.best_responses[-1]))
    d_mann = float(np.linalg.norm(tr_mann.xs[-1] - tr_mann.best_responses[-1]))
    results.append(CheckResult("midpoint/Mann converge at alpha = beta",
                               1e-4 - max(d_mid, d_mann),
                               max(d_mid, d_mann) <= 1e-4))

    exp1d = expansive_tracking_1d()
    tr = alg.run("lambda_trap", exp1d, n_rounds=100, x1=[-1.0])
    gap_end = float(np.abs(tr.xs[-1] - tr.best_responses[-1]))
    results.append(CheckResult("1-D trap converges on expansive instance",
                               1e-6 - gap_end, gap_end <= 1e-6))
    return SuiteReport("contraction", results)


def theorems_suite(seed: int = 0) -> SuiteReport:
    results = []
    qt = _qt_instance(d=2)
    tr_greedy = alg.run("greedy", qt, n_rounds=300, x1=[1.0, 0.0])
    tr_md = alg.run("mirror_descent", qt, n_rounds=300, x1=[1.0, 0.0],
                    schedule=alg.constant(0.2))
    for name, tr in (("greedy", tr_greedy), ("mirror descent", tr_md)):
        up = check_theorem_bounds(tr, qt, "dynamic_upper")
        lo = check_theorem_bounds(tr, qt, "dynamic_lower")
        results.append(CheckResult(f"dynamic-regret sandwich [{name}]",
                                   min(up.min_slack, lo.min_slack),
                                   up.holds and lo.holds))
        red = check_theorem_bounds(tr, qt, "static_reduction")
        results.append(CheckResult(f"static-regret reduction [{name}]",
                                   red.min_slack, red.holds))

    game = matrix_game_bifunction([[1.0, -1.0], [-1.0, 1.0]])
    x1 = np.array([0.9, 0.1, 0.2, 0.8])
    tr = alg.run("mirror_descent", game, n_rounds=500, x1=x1,
                 geometry=NEG_ENTROPY, schedule=alg.inv_sqrt(), x_star=None)
    rep = check_theorem_bounds(tr, game, "static_to_dual")
    results.append(CheckResult("averaged iterate dual residual <= static/N",
                               rep.min_slack + 1e-9, rep.min_slack >= -1e-9))
    return SuiteReport("theorems", results)


def predictable_suite(seed: int = 0) -> SuiteReport:
    rng = np.random.default_rng(seed)
    results = []
    base = make_quadratic_tracking(2.0, 0.2, [0.0, 0.0],
                                   Box([-1.0, -1.0], [1.0, 1.0]))
    seq = PredictableSequence(base, "inv_sqrt", seed=seed)
    n = 500
    drift = seq.drift_path(n)
    budgets = seq.budgets(n)

    inc = np.linalg.norm(np.diff(np.vstack([np.zeros(2), drift]), axis=0), axis=1)
    worst = float(np.max(np.abs(inc - budgets)))
    results.append(CheckResult("drift increments have norms exactly a_n",
                               TOL_EXACT * 10 - worst, worst <= TOL_EXACT * 10))

    # Definition-3 drift inequality at random evaluation points
    worst = np.inf
    xs = [base.dset.sample(rng) for _ in range(50)]
    for k in range(1, n):
        x_prev, x_cur = xs[(k - 1) % 50], xs[k % 50]
        z = xs[(k + 7) % 50]
        g_cur = base.grad(x_cur, z) + drift[k]
        g_prev = base.grad(x_prev, z) + drift[k - 1]
        lhs = float(np.linalg.norm(g_cur - g_prev))
        bound = base.regularity.beta * float(np.linalg.norm(x_cur - x_prev)) \
            + budgets[k]
        worst = min(worst, bound + TOL_PROP - lhs)
    results.append(CheckResult("Definition-3 gradient drift bound", worst,
                               worst >= 0))

    eta = alg.theorem5_stepsize(base.regularity, 1.0)
    tr = alg.run("mirror_descent", seq, n_rounds=n, x1=[1.0, 0.0],
                 schedule=alg.constant(eta))
    m = predictable_contraction_deficit(tr, budgets, base.regularity.alpha,
                                        base.regularity.beta)
    results.append(CheckResult("per-round minimizer drift bound", m + TOL_PROP,
                               m >= -TOL_PROP))

    seq0 = PredictableSequence(base, "zero", seed=seed)
    tr0 = alg.run("mirror_descent", seq0, n_rounds=n, x1=[1.0, 0.0],
                  schedule=alg.constant(eta))
    tail = float(tr0.gaps[-1])
    results.append(CheckResult("zero budget: regret increments vanish",
                               TOL_PROP - tail, tail <= TOL_PROP))
    return SuiteReport("predictable", results)


def imitation_suite(seed: int = 0) -> SuiteReport:
    rng = np.random.default_rng(seed)
    results = []
    worst = 0.0
    for k in range(20):
        mdp = random_mdp(4, 3, 6, seed=100 + k)
        pi = random_policy(4, 3, seed=200 + k)
        d = state_distribution(mdp, pi)
        worst = max(worst, abs(float(np.sum(d)) - 1.0),
                    float(-np.min(np.minimum(d, 0.0))))
    results.append(CheckResult("state distribution sums to one",
                               TOL_EXACT * 10 - worst, worst <= TOL_EXACT * 10))

    il = _il_instance()
    err = gradient_check(il, n_points=10, seed=seed)
    results.append(CheckResult("imitation gradient matches finite differences",
                               1e-5 - err, err <= 1e-5))

    cert = oracles.find_equilibrium(il, tol=1e-10)
    g = oracles.gap(il, cert.x_star)
    results.append(CheckResult("fixed-point route certifies the equilibrium",
                               1e-10 - g, g <= 1e-10))

    rep = il_convergence_check(il, n_rounds=200)
    results.append(CheckResult("linear-convergence ratio bound",
                               rep.bound + 1e-6 - rep.max_ratio, rep.holds,
                               info=f"(bound {rep.bound:.4f})"))
    return SuiteReport("imitation", results)


SUITES = {
    "geometry": geometry_suite,
    "regularity": regularity_suite,
    "residuals": residuals_suite,
    "contraction": contraction_suite,
    "theorems": theorems_suite,
    "predictable": predictable_suite,
    "imitation": imitation_suite,
}


def run_suite(name: str) -> SuiteReport:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; available: {sorted(SUITES)}")
    return SUITES[name]()
