"""Decision-update rules behind a single stepping interface.

Update kinds (config-addressable): ``greedy``, ``mann``, ``mirror_descent``,
``midpoint``, ``lambda_trap``.  Mann convention: x_{n+1} = eta x_n +
(1 - eta) x_n^*, so eta = 0 is exactly the greedy update and eta = 1 freezes
the iterate; schedules must stay in [0, 1].

``run`` executes N rounds and records decisions, losses, gaps, distances to
a certified equilibrium, and feedback bias norms.  Tracking-family problems
on box/ball sets with Euclidean geometry, and imitation problems, dispatch
to the jit kernels in ``col._kernels``; everything else takes the generic
loop.  Both paths are deterministic given (config, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .config import ORACLE_TOL
from .core import (Bifunction, FeedbackSpec, FeedbackStream, ProblemError,
                   Regularity, bias_array, noise_array)
from .geometry import (Ball, Box, BregmanGeometry, EUCLIDEAN, as_point,
                       is_simplex_like, mirror_step)
from .metrics import RunTrace
from .oracles import best_response
from .problems import PredictableSequence, tracking_equilibrium


ALGORITHM_KINDS = ("greedy", "mann", "mirror_descent", "midpoint", "lambda_trap")

_MODE_CODES = {
    "greedy": _kernels.MODE_GREEDY,
    "mann": _kernels.MODE_MANN,
    "mirror_descent": _kernels.MODE_MIRROR,
    "midpoint": _kernels.MODE_MIDPOINT,
    "lambda_trap": _kernels.MODE_LAMBDA_TRAP,
}


class ConfigurationError(ProblemError):
    """Inconsistent run configuration, surfaced before round 1."""


SCHEDULE_KINDS = ("constant", "inv_sqrt", "prop8", "theorem5", "corollary_f")


@dataclass(frozen=True)
class Schedule:
    """Step-size schedule n -> eta_n (n is 1-indexed).

    ``prop8``/``theorem5``/``corollary_f`` are certified constants computed
    from the problem's regularity at run time (for prop8, ``value`` is the
    fraction of the admissible threshold, default 0.9).
    """

    kind: str
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ConfigurationError(f"unknown schedule {self.kind!r}")

    def __call__(self, n: int) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "inv_sqrt":
            return self.value / math.sqrt(n)
        raise ConfigurationError(f"schedule {self.kind!r} must be resolved "
                                 "against a problem first")

    def label(self) -> str:
        return f"{self.kind}[{self.value:g}]"

    @staticmethod
    def from_config(node) -> "Schedule":
        if isinstance(node, (int, float)):
            return Schedule("constant", float(node))
        default = 0.9 if node["kind"] == "prop8" else 1.0
        return Schedule(node["kind"], float(node.get("value", default)))


def resolve_schedule(schedule: "Schedule | None", reg: Regularity,
                     geometry: BregmanGeometry) -> "Schedule | None":
    """Materialize certified named schedules into constants."""
    if schedule is None or schedule.kind in ("constant", "inv_sqrt"):
        return schedule
    smoothness = geometry.smoothness
    if not np.isfinite(smoothness):
        raise ConfigurationError(f"{schedule.kind} stepsize needs a smooth "
                                 "mirror map (Euclidean geometry)")
    if schedule.kind == "prop8":
        if not 0.0 < schedule.value < 1.0:
            raise ConfigurationError("prop8 fraction must lie in (0, 1)")
        return Schedule("constant", prop8_stepsize(reg, smoothness, schedule.value))
    if schedule.kind == "theorem5":
        return Schedule("constant", theorem5_stepsize(reg, smoothness))
    return Schedule("constant", corollary_f_stepsize(reg))


def constant(eta: float) -> Schedule:
    return Schedule("constant", eta)


def inv_sqrt(scale: float = 1.0) -> Schedule:
    return Schedule("inv_sqrt", scale)


# certified step sizes computed from regularity constants
def prop8_threshold(reg: Regularity, smoothness: float) -> float:
    """Largest admissible constant step for linear mirror-descent convergence."""
    return 2.0 * (reg.alpha - reg.beta) / (smoothness * (reg.gamma + reg.beta) ** 2)


def prop8_stepsize(reg: Regularity, smoothness: float, fraction: float = 0.9) -> float:
    return fraction * prop8_threshold(reg, smoothness)


def contraction_rate(reg: Regularity, smoothness: float, eta: float) -> float:
    """Per-round Bregman contraction factor 1 - 2 eta (alpha-beta)/L + eta^2 (gamma+beta)^2."""
    return 1.0 - 2.0 * eta * (reg.alpha - reg.beta) / smoothness \
        + eta ** 2 * (reg.gamma + reg.beta) ** 2


def theorem5_stepsize(reg: Regularity, smoothness: float) -> float:
    """Constant step alpha / (2 L gamma^2) for predictable problems."""
    return reg.alpha / (2.0 * smoothness * reg.gamma ** 2)


def theorem5_ratio_bound(reg: Regularity, smoothness: float) -> float:
    """beta/alpha must stay below alpha / (2 L^2 gamma)."""
    return reg.alpha / (2.0 * smoothness ** 2 * reg.gamma)


def corollary_f_stepsize(reg: Regularity) -> float:
    """(alpha - beta) / (gamma + beta)^2, the linear-convergence step for OGD."""
    return (reg.alpha - reg.beta) / (reg.gamma + reg.beta) ** 2


@dataclass
class AlgorithmState:
    """Mutable per-run state; ``current`` stays feasible after every step."""

    current: np.ndarray
    round: int = 1
    geometry: BregmanGeometry = EUCLIDEAN
    schedule: Schedule | None = None
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    def advance(self, new_point: np.ndarray) -> np.ndarray:
        self.current = new_point
        self.round += 1
        return new_point


def greedy_step(state: AlgorithmState, problem: Bifunction) -> np.ndarray:
    """x_{n+1} = argmin over the set of the round's loss."""
    return state.advance(best_response(problem, state.current, ORACLE_TOL))


def mann_step(state: AlgorithmState, problem: Bifunction) -> np.ndarray:
    """x_{n+1} = eta x_n + (1 - eta) x_n^*; eta = 0 recovers greedy."""
    eta = state.schedule(state.round)
    if not 0.0 <= eta <= 1.0:
        raise ConfigurationError(f"mann mixing weight {eta} outside [0, 1]")
    br = best_response(problem, state.current, ORACLE_TOL)
    return state.advance(eta * state.current + (1.0 - eta) * br)


def mirror_descent_step(state: AlgorithmState, problem: Bifunction,
                        g: np.ndarray) -> np.ndarray:
    """x_{n+1} = argmin <eta g, x> + B_R(x || x_n) over the set."""
    eta = state.schedule(state.round)
    nxt = mirror_step(state.geometry, problem.dset, state.current, g, eta)
    return state.advance(nxt)


def midpoint_step(state: AlgorithmState, problem: Bifunction) -> np.ndarray:
    """x_{n+1} = (x_n + x_n^*)/2 (Euclidean, functional feedback)."""
    br = best_response(problem, state.current, ORACLE_TOL)
    return state.advance(0.5 * (state.current + br))


def lambda_trap_step(state: AlgorithmState, problem: Bifunction,
                     lam: float) -> np.ndarray:
    """1-D trap update x_{n+1} = (lam x_n + x_n^*)/(1 + lam).

    Moves toward x_n^* by |x_n - x_n^*|/(1 + lam), so the next minimizer
    cannot cross the iterate; lam = 0 recovers greedy.
    """
    if problem.dset.dim != 1:
        raise ConfigurationError("lambda_trap is one-dimensional only")
    if lam < 0:
        raise ConfigurationError("lambda must be nonnegative")
    br = best_response(problem, state.current, ORACLE_TOL)
    return state.advance((lam * state.current + br) / (1.0 + lam))


# ---------------------------------------------------------------------------
# run loop


def _resolve_x_star(problem: Bifunction, x_star):
    if x_star is None:
        return None
    if isinstance(x_star, str):
        if x_star != "auto":
            raise ConfigurationError(f"unknown x_star request {x_star!r}")
        if problem.family == "tracking":
            mat = problem.params["matrix"]
            if float(np.linalg.norm(mat, 2)) < 1.0:
                return tracking_equilibrium(problem)
            return None
        if problem.family == "imitation":
            return problem.params["expert"].ravel().copy()
        return None
    return as_point(x_star, problem.dset.dim)


def _validate(kind, problem_like, feedback, geometry, schedule, n_rounds,
              trap_lambda):
    if kind not in ALGORITHM_KINDS:
        raise ConfigurationError(f"unknown algorithm kind {kind!r}; "
                                 f"expected one of {ALGORITHM_KINDS}")
    if n_rounds < 1:
        raise ConfigurationError("horizon must be at least 1")
    dset = problem_like.dset
    if not geometry.compatible_with(dset):
        raise ConfigurationError("entropy geometry requires a simplex-like set")
    if kind in ("greedy", "mann", "midpoint", "lambda_trap"):
        if feedback.mode != "deterministic":
            raise ConfigurationError(f"{kind} needs functional feedback; "
                                     "stochastic/adversarial channels apply to mirror_descent")
        if kind in ("midpoint", "lambda_trap") and geometry.kind != "euclidean":
            raise ConfigurationError(f"{kind} is defined for the Euclidean norm")
    if kind in ("mann", "mirror_descent") and schedule is None:
        raise ConfigurationError(f"{kind} requires a step-size schedule")
    if kind == "lambda_trap":
        if dset.dim != 1:
            raise ConfigurationError("lambda_trap is one-dimensional only")
        if trap_lambda is not None and trap_lambda < 0:
            raise ConfigurationError("trap lambda must be nonnegative")


def run(kind: str, problem, feedback: FeedbackSpec = None, n_rounds: int = 100,
        seed: int = 0, geometry: BregmanGeometry = EUCLIDEAN,
        schedule: Schedule | None = None, x1=None, trap_lambda: float | None = None,
        x_star="auto", problem_id: str | None = None,
        algorithm_id: str | None = None) -> RunTrace:
    """Execute N rounds and return the trace; deterministic given the seed."""
    feedback = feedback or FeedbackSpec.deterministic()
    predictable = isinstance(problem, PredictableSequence)
    base = problem.base if predictable else problem
    _validate(kind, base, feedback, geometry, schedule, n_rounds, trap_lambda)

    dset = base.dset
    x1 = dset.center() if x1 is None else as_point(x1, dset.dim)
    if not dset.contains(x1, tol=1e-9):
        raise ConfigurationError("x1 lies outside the decision set")

    aid = algorithm_id or _default_algorithm_id(kind, schedule, geometry)
    schedule = resolve_schedule(schedule, base.regularity, geometry)

    if kind == "mann":
        etas = np.array([schedule(n) for n in range(1, n_rounds + 1)])
        if np.any(etas < 0) or np.any(etas > 1):
            raise ConfigurationError("mann schedule must stay in [0, 1]")
    elif schedule is not None:
        etas = np.array([schedule(n) for n in range(1, n_rounds + 1)])
        if np.any(etas < 0):
            raise ConfigurationError("step sizes must be nonnegative")
    else:
        etas = np.zeros(n_rounds)

    lam = trap_lambda
    if kind == "lambda_trap" and lam is None:
        lam = base.regularity.ratio
        if not np.isfinite(lam):
            raise ConfigurationError("cannot infer trap lambda (alpha = 0)")

    xs_star = None if predictable else _resolve_x_star(base, x_star)
    drift = problem.drift_path(n_rounds) if predictable else None

    pid = problem_id or _default_problem_id(problem, predictable)

    if base.family == "tracking" and geometry.kind == "euclidean" \
            and isinstance(dset, (Box, Ball)):
        trace = _run_tracking_kernel(kind, base, feedback, n_rounds, seed,
                                     etas, x1, lam, xs_star, drift)
    elif base.family == "imitation" and kind == "mirror_descent" \
            and geometry.kind == "euclidean":
        trace = _run_imitation_kernel(base, feedback, n_rounds, seed, etas, x1)
    else:
        trace = _run_generic(kind, problem, base, feedback, n_rounds, seed,
                             geometry, etas, x1, lam, xs_star, drift)

    trace.problem_id = pid
    trace.algorithm_id = aid
    trace.seed = seed
    trace.meta.update({"kind": kind, "geometry": geometry.kind,
                       "feedback": feedback.mode, "n_rounds": n_rounds})
    return trace


def _default_problem_id(problem, predictable):
    if predictable:
        return f"predictable[{problem.base.family},{problem.schedule}]"
    return problem.family


def _default_algorithm_id(kind, schedule, geometry):
    parts = [kind]
    if schedule is not None:
        parts.append(schedule.label())
    if geometry.kind != "euclidean":
        parts.append(geometry.kind)
    return ":".join(parts)


def _run_tracking_kernel(kind, base, feedback, n_rounds, seed, etas, x1,
                         lam, xs_star, drift):
    dset = base.dset
    d = dset.dim
    alpha = base.params["alpha"]
    mat = np.ascontiguousarray(base.params["matrix"])
    c = np.ascontiguousarray(base.params["c"])
    if isinstance(dset, Box):
        set_kind, lo, hi = _kernels.SET_BOX, dset.lower, dset.upper
        center, radius = np.zeros(d), 1.0
    else:
        set_kind, lo, hi = _kernels.SET_BALL, np.zeros(d), np.zeros(d)
        center, radius = dset.center_point, dset.radius
    noise = noise_array(feedback, seed, n_rounds, d)
    bias = bias_array(feedback, n_rounds, d)
    drift_arr = drift if drift is not None else np.zeros((n_rounds, d))
    has_star = xs_star is not None
    star = xs_star if has_star else np.zeros(d)
    xs, brs, losses, gaps, losses_star, deltas = _kernels.tracking_trace(
        _MODE_CODES[kind], float(alpha), mat, c, set_kind,
        np.ascontiguousarray(lo, dtype=float), np.ascontiguousarray(hi, dtype=float),
        np.ascontiguousarray(center, dtype=float), float(radius),
        np.ascontiguousarray(x1, dtype=float), np.ascontiguousarray(etas, dtype=float),
        float(lam if lam is not None else 0.0),
        np.ascontiguousarray(noise), np.ascontiguousarray(bias),
        np.ascontiguousarray(drift_arr), np.ascontiguousarray(star, dtype=float),
        has_star)
    return RunTrace(
        problem_id="", algorithm_id="", seed=seed, xs=xs, losses=losses,
        gaps=gaps, xi_norms=np.linalg.norm(bias, axis=1),
        deltas=deltas if has_star else None,
        losses_star=losses_star if has_star else None,
        best_responses=brs, x_star=xs_star if has_star else None,
        drift=drift if drift is not None else None)


def _run_imitation_kernel(base, feedback, n_rounds, seed, etas, x1):
    if feedback.mode not in ("deterministic", "stochastic"):
        raise ConfigurationError("imitation runs support deterministic or "
                                 "stochastic (sampled) feedback only")
    mdp = base.params["mdp"]
    expert = np.ascontiguousarray(base.params["expert"])
    mu = float(base.params["mu_reg"])
    s, a = expert.shape
    pi1 = np.ascontiguousarray(x1.reshape(s, a))
    etas = np.ascontiguousarray(etas, dtype=float)
    p = np.ascontiguousarray(mdp.transitions)
    p0 = np.ascontiguousarray(mdp.initial)
    if feedback.mode == "deterministic":
        policies, losses, deltas = _kernels.il_deterministic_trace(
            p, p0, expert, mu, mdp.horizon, pi1, etas)
    else:
        rng = np.random.default_rng(
            np.random.SeedSequence([int(seed), int(feedback.noise_seed), 11]))
        u_state = rng.uniform(size=(n_rounds, mdp.horizon))
        u_action = rng.uniform(size=(n_rounds, mdp.horizon))
        policies, losses, deltas = _kernels.il_stochastic_trace(
            p, p0, expert, mu, mdp.horizon, pi1, etas, u_state, u_action)
    # the expert is the unique equilibrium: l_n(expert) = 0 exactly
    return RunTrace(
        problem_id="", algorithm_id="", seed=seed, xs=policies, losses=losses,
        gaps=losses.copy(), xi_norms=np.zeros(n_rounds), deltas=deltas,
        losses_star=np.zeros(n_rounds), best_responses=None,
        x_star=expert.ravel().copy())


def _run_generic(kind, problem, base, feedback, n_rounds, seed, geometry,
                 etas, x1, lam, xs_star, drift):
    noise = noise_array(feedback, seed, n_rounds, base.dset.dim)
    bias = bias_array(feedback, n_rounds, base.dset.dim)
    predictable = isinstance(problem, PredictableSequence)
    d = base.dset.dim
    xs = np.empty((n_rounds, d))
    brs = np.empty((n_rounds, d))
    losses = np.empty(n_rounds)
    gaps = np.empty(n_rounds)
    deltas = np.full(n_rounds, np.nan)
    losses_star = np.full(n_rounds, np.nan)
    has_star = xs_star is not None

    x = x1.copy()
    for n in range(1, n_rounds + 1):
        if predictable:
            br = problem.best_response(n, x, drift)
            loss = problem.loss(n, x, x, drift)
            loss_br = problem.loss(n, x, br, drift)
        else:
            br = best_response(base, x, ORACLE_TOL)
            loss = base.eval(x, x)
            loss_br = base.eval(x, br)
        xs[n - 1] = x
        brs[n - 1] = br
        losses[n - 1] = loss
        gaps[n - 1] = loss - loss_br
        if has_star:
            deltas[n - 1] = float(np.linalg.norm(x - xs_star))
            losses_star[n - 1] = base.eval(x, xs_star)

        eta = etas[n - 1]
        if kind == "greedy":
            x = br
        elif kind == "mann":
            x = eta * x + (1.0 - eta) * br
        elif kind == "midpoint":
            x = 0.5 * (x + br)
        elif kind == "lambda_trap":
            x = (lam * x + br) / (1.0 + lam)
        else:
            if predictable:
                g = problem.grad(n, x, x, drift) + noise[n - 1] + bias[n - 1]
            else:
                g = base.grad(x, x) + noise[n - 1] + bias[n - 1]
            x = mirror_step(geometry, base.dset, x, g, eta)
    return RunTrace(
        problem_id="", algorithm_id="", seed=seed, xs=xs, losses=losses,
        gaps=gaps, xi_norms=np.linalg.norm(bias, axis=1),
        deltas=deltas if has_star else None,
        losses_star=losses_star if has_star else None,
        best_responses=brs, x_star=xs_star if has_star else None,
        drift=drift)
