"""Regret ledgers: run traces, CSV persistence, and theorem checkers.

Trace CSV schema (bit-exact column order):
    n, x_0..x_{d-1}, loss, gap, delta, xi_norm, static_regret_cum,
    dynamic_regret_cum
Floats are written as shortest round-trip decimals; unknown fields are nan.
All checkers report margins (slack), not just booleans.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Bifunction
from .geometry import BregmanGeometry, EUCLIDEAN, bregman
from .problems import PredictableSequence, _linear_minimizer


class TraceError(ValueError):
    pass


@dataclass
class RunTrace:
    """Per-round record of one run; cumulative columns are exact prefix sums.

    ``losses_star`` holds l_n(x_star) when an equilibrium certificate is
    available (static_regret_cum is its prefix-sum complement), and
    ``best_responses`` the per-round minimizers x_n^*.
    """

    problem_id: str
    algorithm_id: str
    seed: int
    xs: np.ndarray            # (N, d) decisions, row n is round n+1
    losses: np.ndarray        # (N,) l_n(x_n)
    gaps: np.ndarray          # (N,) rho_n
    xi_norms: np.ndarray      # (N,) ||xi_n||
    deltas: np.ndarray | None = None        # (N,) ||x_n - x_star||
    losses_star: np.ndarray | None = None   # (N,) l_n(x_star)
    best_responses: np.ndarray | None = None  # (N, d)
    x_star: np.ndarray | None = None
    drift: np.ndarray | None = None         # (N, d) predictable drift path
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.xs.shape[0]
        for name in ("losses", "gaps", "xi_norms"):
            if getattr(self, name).shape[0] != n:
                raise TraceError(f"{name} length mismatch")
        self.dynamic_regret_cum = np.cumsum(self.gaps)
        if self.losses_star is not None:
            self.static_regret_cum = np.cumsum(self.losses - self.losses_star)
        else:
            self.static_regret_cum = np.full(n, np.nan)

    @property
    def n_rounds(self) -> int:
        return self.xs.shape[0]

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    def to_csv(self, path):
        d = self.dim
        header = ["n"] + [f"x_{i}" for i in range(d)] + [
            "loss", "gap", "delta", "xi_norm",
            "static_regret_cum", "dynamic_regret_cum"]
        deltas = self.deltas if self.deltas is not None \
            else np.full(self.n_rounds, np.nan)
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for k in range(self.n_rounds):
                row = [str(k + 1)]
                row += [repr(float(v)) for v in self.xs[k]]
                row += [repr(float(self.losses[k])), repr(float(self.gaps[k])),
                        repr(float(deltas[k])), repr(float(self.xi_norms[k])),
                        repr(float(self.static_regret_cum[k])),
                        repr(float(self.dynamic_regret_cum[k]))]
                fh.write(",".join(row) + "\n")

    def prefix(self, n: int) -> "RunTrace":
        """Restriction to the first n rounds."""
        take = lambda a: None if a is None else a[:n]
        return RunTrace(
            problem_id=self.problem_id, algorithm_id=self.algorithm_id,
            seed=self.seed, xs=self.xs[:n], losses=self.losses[:n],
            gaps=self.gaps[:n], xi_norms=self.xi_norms[:n],
            deltas=take(self.deltas), losses_star=take(self.losses_star),
            best_responses=take(self.best_responses), x_star=self.x_star,
            drift=take(self.drift), meta=dict(self.meta))


TRACE_COLUMNS = ("n", "loss", "gap", "delta", "xi_norm",
                 "static_regret_cum", "dynamic_regret_cum")


def read_trace_csv(path) -> dict:
    """Parse a trace CSV back into arrays keyed by column group."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    x_cols = [h for h in header if h.startswith("x_")]
    d = len(x_cols)
    expected = ["n"] + [f"x_{i}" for i in range(d)] + list(TRACE_COLUMNS[1:])
    if header != expected:
        raise TraceError(f"unexpected trace header {header}")
    data = np.array([[float(v) for v in r] for r in rows])
    return {
        "n": data[:, 0].astype(int),
        "xs": data[:, 1:1 + d],
        "loss": data[:, 1 + d],
        "gap": data[:, 2 + d],
        "delta": data[:, 3 + d],
        "xi_norm": data[:, 4 + d],
        "static_regret_cum": data[:, 5 + d],
        "dynamic_regret_cum": data[:, 6 + d],
    }


# ---------------------------------------------------------------------------
# regret accounting


def dynamic_regret(trace: RunTrace, up_to: int | None = None) -> float:
    """Sum of per-round gaps rho_n up to round N."""
    n = trace.n_rounds if up_to is None else up_to
    return float(trace.dynamic_regret_cum[n - 1])


def _round_loss(trace: RunTrace, problem, n: int, point) -> float:
    """l_n(point) re-evaluated from the recorded query history (1-indexed n)."""
    base = problem.eval(trace.xs[n - 1], point)
    if trace.drift is not None:
        base += float(np.dot(trace.drift[n - 1], point))
    return base


def cumulative_loss_minimizer(trace: RunTrace, problem: Bifunction,
                              weights: np.ndarray | None = None) -> np.ndarray:
    """argmin over the set of sum_n w_n l_n(.), closed form where possible."""
    n = trace.n_rounds
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if problem.family == "tracking":
        alpha = problem.params["alpha"]
        mat = problem.params["matrix"]
        c = problem.params["c"]
        targets = trace.xs @ mat.T + c
        if trace.drift is not None:
            targets = targets - trace.drift / alpha
        return problem.dset.project(np.average(targets, axis=0, weights=w))
    if problem.family in ("matrix_game", "linear_vi"):
        # loss is linear in the decision argument with slope grad(x_n, .)
        slopes = np.stack([problem.grad(trace.xs[k], trace.xs[k]) for k in range(n)])
        return _linear_minimizer(problem.dset, w @ slopes)
    return _pgd_cumulative(trace, problem, w)


def _pgd_cumulative(trace, problem, w):
    reg = problem.regularity
    if reg.alpha <= 0 or reg.gamma <= 0:
        raise TraceError("no closed form and no strongly convex inner route")
    step = 1.0 / (reg.gamma * float(np.sum(w)))
    u = problem.dset.center()
    for _ in range(100_000):
        g = np.zeros(problem.dset.dim)
        for k in range(trace.n_rounds):
            g += w[k] * problem.grad(trace.xs[k], u)
        u_next = problem.dset.project(u - step * g)
        if np.linalg.norm(u - u_next) / step <= np.sqrt(
                2.0 * reg.alpha * float(np.sum(w)) * 1e-10):
            return u_next
        u = u_next
    raise TraceError("cumulative-loss solver did not converge")


def static_regret(trace: RunTrace, problem: Bifunction,
                  comparator=None) -> float:
    """sum l_n(x_n) minus the best fixed decision (or a given comparator)."""
    n = trace.n_rounds
    if comparator is None:
        comparator = cumulative_loss_minimizer(trace, problem)
    comp_losses = np.array([_round_loss(trace, problem, k + 1, comparator)
                            for k in range(n)])
    return float(np.sum(trace.losses) - np.sum(comp_losses))


def weighted_static_regret(trace: RunTrace, problem: Bifunction,
                           weights) -> float:
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise TraceError("weights must be positive")
    comparator = cumulative_loss_minimizer(trace, problem, w)
    comp_losses = np.array([_round_loss(trace, problem, k + 1, comparator)
                            for k in range(trace.n_rounds)])
    return float(w @ trace.losses - w @ comp_losses)


def averaged_iterate(trace: RunTrace, weights=None) -> np.ndarray:
    """Convex combination of iterates (uniform by default); feasible by convexity."""
    if weights is None:
        return trace.xs.mean(axis=0)
    w = np.asarray(weights, dtype=float)
    return (w @ trace.xs) / float(np.sum(w))


def path_variation(trace: RunTrace) -> tuple[float, float]:
    """(sum ||x_n - x_{n+1}||, sum ||x_n^* - x_{n+1}^*||)."""
    dx = float(np.sum(np.linalg.norm(np.diff(trace.xs, axis=0), axis=1)))
    if trace.best_responses is None:
        return dx, float("nan")
    dbr = float(np.sum(np.linalg.norm(np.diff(trace.best_responses, axis=0), axis=1)))
    return dx, dbr


def bregman_to_star_series(trace: RunTrace, geom: BregmanGeometry = EUCLIDEAN) -> np.ndarray:
    """B_R(x_star || x_n) per round; requires a certified x_star."""
    if trace.x_star is None:
        raise TraceError("trace has no equilibrium certificate")
    if geom.kind == "euclidean":
        diff = trace.xs - trace.x_star
        return 0.5 * np.sum(diff * diff, axis=1)
    return np.array([bregman(geom, trace.x_star, x) for x in trace.xs])


def contraction_ratio_series(trace: RunTrace, geom: BregmanGeometry = EUCLIDEAN,
                             floor: float = 1e-12):
    """(ratios, mask): B_{n+1}/B_n wherever the denominator exceeds floor."""
    b = bregman_to_star_series(trace, geom)
    mask = b[:-1] > floor
    ratios = np.full(trace.n_rounds - 1, np.nan)
    ratios[mask] = b[1:][mask] / b[:-1][mask]
    return ratios, mask


# ---------------------------------------------------------------------------
# theorem checkers


@dataclass
class BoundReport:
    which: str
    ns: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    slack: np.ndarray  # >= 0 everywhere iff the bound holds

    @property
    def min_slack(self) -> float:
        return float(np.min(self.slack))

    @property
    def holds(self) -> bool:
        return bool(np.all(self.slack >= 0))


def _require_star(trace: RunTrace, x_star):
    xs = trace.x_star if x_star is None else np.asarray(x_star, dtype=float)
    if xs is None:
        raise TraceError("checker needs an equilibrium certificate x_star")
    return xs


def check_theorem_bounds(trace: RunTrace, problem: Bifunction, which: str,
                         x_star=None, checkpoints=None) -> BoundReport:
    """Evaluate a named inequality at every N up to the trace length.

    which: 'dynamic_upper'   Regret_N^d <= min{G sum Delta_n, Regret_N^s(x*)}
                             + sum min{beta D Delta_n, beta^2/(2 alpha) Delta_n^2}
           'dynamic_lower'   Regret_N^d >= (alpha/2) sum ||x_n^* - x_star||^2
                             (needs a dual-EP certificate for x_star)
           'static_to_dual'  r_dep(avg iterate) <= Regret_N^s / N
           'static_reduction'  the full reduction through the linearized
                             static regret (alpha > beta problems)
    """
    if which == "dynamic_upper":
        return _check_dynamic_upper(trace, problem, x_star)
    if which == "dynamic_lower":
        return _check_dynamic_lower(trace, problem, x_star)
    if which == "static_to_dual":
        return _check_static_to_dual(trace, problem, checkpoints)
    if which == "static_reduction":
        return _check_static_reduction(trace, problem, x_star)
    raise TraceError(f"unknown bound {which!r}")


def _losses_at(trace: RunTrace, problem, point) -> np.ndarray:
    # reuse the recorded l_n(x_star) column when it matches the comparator
    if trace.losses_star is not None and trace.x_star is not None \
            and np.array_equal(np.asarray(point, dtype=float), trace.x_star):
        return trace.losses_star
    return np.array([_round_loss(trace, problem, k + 1, point)
                     for k in range(trace.n_rounds)])


def _check_dynamic_upper(trace, problem, x_star):
    xs_star = _require_star(trace, x_star)
    reg = problem.regularity
    dia = problem.dset.diameter()
    diff = trace.xs - xs_star
    delta_sq = np.sum(diff * diff, axis=1)
    delta = np.sqrt(delta_sq)
    star_losses = _losses_at(trace, problem, xs_star)
    static_cum = np.cumsum(trace.losses - star_losses)
    first = np.minimum(reg.G * np.cumsum(delta), static_cum)
    second = np.cumsum(np.minimum(reg.beta * dia * delta,
                                  (reg.beta ** 2 / (2.0 * reg.alpha)) * delta_sq))
    rhs = first + second
    lhs = trace.dynamic_regret_cum
    ns = np.arange(1, trace.n_rounds + 1)
    return BoundReport("dynamic_upper", ns, lhs, rhs, rhs - lhs)


def _check_dynamic_lower(trace, problem, x_star):
    xs_star = _require_star(trace, x_star)
    if trace.best_responses is None:
        raise TraceError("lower bound needs recorded best responses")
    reg = problem.regularity
    diff = trace.best_responses - xs_star
    rhs = (reg.alpha / 2.0) * np.cumsum(np.sum(diff * diff, axis=1))
    lhs = trace.dynamic_regret_cum
    ns = np.arange(1, trace.n_rounds + 1)
    return BoundReport("dynamic_lower", ns, lhs, rhs, lhs - rhs)


def _check_static_to_dual(trace, problem, checkpoints):
    from .oracles import dual_residual
    n = trace.n_rounds
    if checkpoints is None:
        if problem.family == "matrix_game":
            checkpoints = np.arange(1, n + 1)
        else:
            checkpoints = np.unique(np.geomspace(1, n, num=min(20, n)).astype(int))
    lhs, rhs = [], []
    for k in checkpoints:
        sub = trace.prefix(int(k))
        x_hat = averaged_iterate(sub)
        lhs.append(dual_residual(problem, x_hat))
        rhs.append(static_regret(sub, problem) / float(k))
    lhs = np.array(lhs)
    rhs = np.array(rhs)
    return BoundReport("static_to_dual", np.asarray(checkpoints), lhs, rhs, rhs - lhs)


def _check_static_reduction(trace, problem, x_star):
    xs_star = _require_star(trace, x_star)
    reg = problem.regularity
    if not reg.alpha > reg.beta:
        raise TraceError("static reduction needs alpha > beta")
    star_losses = _losses_at(trace, problem, xs_star)
    static_cum = np.cumsum(trace.losses - star_losses)
    lin = np.empty(trace.n_rounds)
    for k in range(trace.n_rounds):
        g = problem.grad(trace.xs[k], trace.xs[k])
        if trace.drift is not None:
            g = g + trace.drift[k]
        lin[k] = float(np.dot(g, trace.xs[k] - xs_star))
    rhs = static_cum + (reg.beta ** 2 / (2.0 * reg.alpha * (reg.alpha - reg.beta))) \
        * np.cumsum(lin)
    lhs = trace.dynamic_regret_cum
    ns = np.arange(1, trace.n_rounds + 1)
    return BoundReport("static_reduction", ns, lhs, rhs, rhs - lhs)


def predictable_contraction_deficit(trace: RunTrace, budgets: np.ndarray,
                                    alpha: float, beta: float) -> float:
    """Worst slack of ||x_n^* - x_{n-1}^*|| <= (beta/alpha)||x_n - x_{n-1}|| + a_n/alpha."""
    if trace.best_responses is None:
        raise TraceError("needs recorded best responses")
    dbr = np.linalg.norm(np.diff(trace.best_responses, axis=0), axis=1)
    dx = np.linalg.norm(np.diff(trace.xs, axis=0), axis=1)
    bound = (beta / alpha) * dx + budgets[1:] / alpha
    return float(np.min(bound - dbr))


def regret_slope(cum_regret: np.ndarray, lo: int, hi: int) -> float:
    """Least-squares slope of log cumulative regret vs log N over [lo, hi]."""
    ns = np.arange(1, len(cum_regret) + 1)
    mask = (ns >= lo) & (ns <= hi) & (cum_regret > 0)
    if mask.sum() < 2:
        return float("nan")
    x = np.log(ns[mask].astype(float))
    y = np.log(cum_regret[mask])
    return float(np.polyfit(x, y, 1)[0])
