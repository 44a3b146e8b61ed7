"""Tabular online imitation learning as a COL instance.

The learner's policy is an S x A row-stochastic matrix living on a product
of simplexes.  The round-n loss weights squared action-matching error by the
average state distribution of the *queried* policy plus a Frobenius
regularizer:

    f_q(pi) = sum_s (d^q(s) + mu)/2 ||pi(s,.) - expert(s,.)||^2

Strong convexity alpha >= mu is certified by the regularizer; the query
Lipschitz constant beta comes from the sensitivity of d^pi and is estimated
empirically (inflated by a 1.2 safety factor).  Stochastic feedback samples
one state per MDP step from the exact per-step distributions and one expert
action label per sampled state, giving an unbiased gradient estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import Bifunction, ProblemError, Regularity
from .geometry import ProductSet, Simplex


@dataclass(frozen=True)
class TabularMDP:
    """Episodic MDP: transitions (S, A, S) row-stochastic, horizon H."""

    transitions: np.ndarray
    initial: np.ndarray
    horizon: int

    def __post_init__(self):
        p = np.asarray(self.transitions, dtype=float)
        p0 = np.asarray(self.initial, dtype=float)
        if p.ndim != 3 or p.shape[0] != p.shape[2]:
            raise ProblemError(f"transition tensor shape {p.shape} must be (S, A, S)")
        if np.any(p < 0) or np.any(np.abs(p.sum(axis=2) - 1.0) > 1e-12):
            raise ProblemError("each P(.|s,a) must be a distribution (1e-12 tol)")
        if p0.shape != (p.shape[0],) or np.any(p0 < 0) \
                or abs(float(p0.sum()) - 1.0) > 1e-12:
            raise ProblemError("initial state distribution invalid")
        if self.horizon < 1:
            raise ProblemError("horizon must be >= 1")
        object.__setattr__(self, "transitions", np.ascontiguousarray(p))
        object.__setattr__(self, "initial", np.ascontiguousarray(p0))

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[1]

    def to_file(self, path):
        """Plain-text layout: header 'S A H', then S*A lines with the S
        transition probabilities of P(.|s,a) in s-major a-minor order, then
        one line with the initial distribution."""
        with open(path, "w") as fh:
            fh.write(f"{self.n_states} {self.n_actions} {self.horizon}\n")
            for s in range(self.n_states):
                for a in range(self.n_actions):
                    fh.write(" ".join(repr(float(v))
                                      for v in self.transitions[s, a]) + "\n")
            fh.write(" ".join(repr(float(v)) for v in self.initial) + "\n")

    @staticmethod
    def from_file(path) -> "TabularMDP":
        with open(path) as fh:
            tokens = fh.read().split("\n")
        s, a, h = (int(v) for v in tokens[0].split())
        rows = [np.array([float(v) for v in line.split()])
                for line in tokens[1:1 + s * a + 1] if line.strip()]
        p = np.stack(rows[:s * a]).reshape(s, a, s)
        return TabularMDP(transitions=p, initial=rows[s * a], horizon=h)


def random_mdp(n_states: int, n_actions: int, horizon: int, seed: int = 0,
               concentration: float = 1.0) -> TabularMDP:
    """Seeded MDP with Dirichlet transition rows and initial distribution."""
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.full(n_states, concentration),
                      size=(n_states, n_actions))
    p0 = rng.dirichlet(np.full(n_states, concentration))
    return TabularMDP(transitions=p, initial=p0, horizon=horizon)


def random_policy(n_states: int, n_actions: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.dirichlet(np.ones(n_actions), size=n_states)


def validate_policy(policy, n_states: int, n_actions: int) -> np.ndarray:
    pi = np.asarray(policy, dtype=float)
    if pi.shape != (n_states, n_actions):
        raise ProblemError(f"policy shape {pi.shape} != ({n_states}, {n_actions})")
    if np.any(pi < 0) or np.any(np.abs(pi.sum(axis=1) - 1.0) > 1e-12):
        raise ProblemError("policy rows must be distributions (1e-12 tol)")
    return np.ascontiguousarray(pi)


def state_distribution(mdp: TabularMDP, policy) -> np.ndarray:
    """Average state distribution d^pi = (1/H) sum_t d_t^pi, exact recursion."""
    pi = validate_policy(policy, mdp.n_states, mdp.n_actions)
    return _kernels.mdp_avg_state_distribution(mdp.transitions, mdp.initial,
                                               pi, mdp.horizon)


def step_distributions(mdp: TabularMDP, policy) -> np.ndarray:
    pi = validate_policy(policy, mdp.n_states, mdp.n_actions)
    return _kernels.mdp_step_distributions(mdp.transitions, mdp.initial,
                                           pi, mdp.horizon)


def estimate_query_lipschitz(mdp: TabularMDP, expert: np.ndarray, mu: float,
                             n_samples: int = 2000, seed: int = 0,
                             safety: float = 1.2) -> float:
    """Empirical bound on beta: max ||grad f_x(z) - grad f_y(z)|| / ||x - y||.

    Sampled policy triples, inflated by a safety factor; beta reflects the
    Lipschitz sensitivity of d^pi, which is awkward to certify analytically.
    """
    rng = np.random.default_rng(seed)
    s, a = expert.shape
    worst = 0.0
    for _ in range(n_samples):
        x = rng.dirichlet(np.ones(a), size=s)
        y = rng.dirichlet(np.ones(a), size=s)
        z = rng.dirichlet(np.ones(a), size=s)
        dq = float(np.linalg.norm((x - y).ravel()))
        if dq < 1e-9:
            continue
        dx = _kernels.mdp_avg_state_distribution(mdp.transitions, mdp.initial,
                                                 np.ascontiguousarray(x), mdp.horizon)
        dy = _kernels.mdp_avg_state_distribution(mdp.transitions, mdp.initial,
                                                 np.ascontiguousarray(y), mdp.horizon)
        gdiff = ((dx - dy)[:, None] * (z - expert)).ravel()
        worst = max(worst, float(np.linalg.norm(gdiff)) / dq)
    return safety * worst


def make_il_problem(mdp: TabularMDP, expert, mu_reg: float,
                    beta_samples: int = 2000, seed: int = 0) -> Bifunction:
    """Imitation bifunction over the product of per-state action simplexes.

    Certified alpha = mu_reg and gamma = 1 + mu_reg (state weights live in
    [mu, 1 + mu]); beta is estimated.  The expert itself is the best
    response from every query, hence the unique equilibrium.
    """
    if mu_reg < 0:
        raise ProblemError("regularizer must be nonnegative")
    ex = validate_policy(expert, mdp.n_states, mdp.n_actions)
    s, a = ex.shape
    dset = ProductSet([Simplex(a) for _ in range(s)])
    beta_hat = estimate_query_lipschitz(mdp, ex, mu_reg, beta_samples, seed)
    g_bound = (1.0 + mu_reg) * float(np.sqrt(2.0 * s))
    reg = Regularity(alpha=mu_reg, beta=beta_hat, gamma=1.0 + mu_reg,
                     G=g_bound, estimated=frozenset({"beta"}))

    def weights(pi_q):
        dbar = _kernels.mdp_avg_state_distribution(
            mdp.transitions, mdp.initial, np.ascontiguousarray(pi_q), mdp.horizon)
        return dbar + mu_reg

    def eval_fn(x, xp):
        w = weights(x.reshape(s, a))
        diff = xp.reshape(s, a) - ex
        return float(np.sum(0.5 * w * np.sum(diff * diff, axis=1)))

    def grad_fn(x, xp):
        w = weights(x.reshape(s, a))
        return (w[:, None] * (xp.reshape(s, a) - ex)).ravel()

    def best_response_fn(x):
        return ex.ravel().copy()

    # |f_x(z) - f_y(z)| <= ||d^x - d^y||_inf * max row cost; crude bound
    lip = float(np.sqrt(s)) * 1.0
    return Bifunction(
        dset=dset, eval_fn=eval_fn, grad_fn=grad_fn, regularity=reg,
        best_response_fn=best_response_fn, family="imitation",
        params={"mdp": mdp, "expert": ex, "mu_reg": float(mu_reg)},
        query_lipschitz=lip)


def sampled_feedback(problem: Bifunction, policy, rng: np.random.Generator) -> np.ndarray:
    """One unbiased sampled gradient (states from d_t, expert action labels)."""
    mdp = problem.params["mdp"]
    ex = problem.params["expert"]
    mu = problem.params["mu_reg"]
    s, a = ex.shape
    pi = np.asarray(policy, dtype=float).reshape(s, a)
    dists = _kernels.mdp_step_distributions(mdp.transitions, mdp.initial,
                                            np.ascontiguousarray(pi), mdp.horizon)
    ghat = np.zeros((s, a))
    for t in range(mdp.horizon):
        st = int(np.searchsorted(np.cumsum(dists[t]), rng.uniform()))
        st = min(st, s - 1)
        at = int(np.searchsorted(np.cumsum(ex[st]), rng.uniform()))
        at = min(at, a - 1)
        ghat[st] += pi[st] / mdp.horizon
        ghat[st, at] -= 1.0 / mdp.horizon
    return (ghat + mu * (pi - ex)).ravel()


@dataclass
class ConvergenceReport:
    ratios: np.ndarray          # per-step squared-distance ratios (nan when skipped)
    checked: np.ndarray         # mask of rounds with a well-defined ratio
    bound: float                # 1 - ((alpha - beta)/(gamma + beta))^2
    max_ratio: float
    holds: bool
    final_distance_sq: float


def il_convergence_check(problem: Bifunction, eta: float | None = None,
                         n_rounds: int = 200, x1=None, tol: float = 1e-6,
                         ratio_floor: float = 1e-12) -> ConvergenceReport:
    """Run deterministic OGD and check the linear-convergence ratio bound.

    Per-step squared distances to the equilibrium must contract by at least
    1 - ((alpha - beta)/(gamma + beta))^2 (+ tol); rounds with squared
    distance below ``ratio_floor`` are skipped.
    """
    from .algorithms import Schedule, corollary_f_stepsize, run
    from .core import FeedbackSpec
    from .oracles import find_equilibrium

    reg = problem.regularity
    if not reg.alpha > reg.beta:
        raise ProblemError("regime violated: needs alpha > estimated beta")
    if eta is None:
        eta = corollary_f_stepsize(reg)
    cert = find_equilibrium(problem, tol=1e-10)
    pi_hat = cert.x_star
    trace = run("mirror_descent", problem, FeedbackSpec.deterministic(),
                n_rounds=n_rounds, schedule=Schedule("constant", eta),
                x1=x1, x_star=pi_hat)
    diff = trace.xs - pi_hat
    dist_sq = np.sum(diff * diff, axis=1)
    denom = dist_sq[:-1]
    checked = denom > ratio_floor
    ratios = np.full(n_rounds - 1, np.nan)
    ratios[checked] = dist_sq[1:][checked] / denom[checked]
    rate = 1.0 - ((reg.alpha - reg.beta) / (reg.gamma + reg.beta)) ** 2
    max_ratio = float(np.max(ratios[checked])) if checked.any() else 0.0
    return ConvergenceReport(
        ratios=ratios, checked=checked, bound=rate, max_ratio=max_ratio,
        holds=bool(max_ratio <= rate + tol), final_distance_sq=float(dist_sq[-1]))
