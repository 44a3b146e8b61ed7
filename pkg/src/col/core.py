"""Problem descriptors: bifunction losses, regularity constants, feedback.

A bifunction f_x(x') has a *query* argument x that fixes the round's loss
and a *decision* argument x' that the loss evaluates.  Descriptors are
immutable and shareable; feedback streams carry per-run state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .config import TOL_PROP
from .geometry import DecisionSet, as_point


class ProblemError(ValueError):
    pass


@dataclass(frozen=True)
class Regularity:
    """Constants of an (alpha, beta)-regular problem.

    alpha: strong convexity of f_x(.)          beta: Lipschitz constant of
    the query map x -> grad f_x(z)             gamma: smoothness of f_x(.)
    G: bound on ||grad f_x(x)|| over the set.

    ``estimated`` names the constants that are empirical rather than
    certified.
    """

    alpha: float
    beta: float
    gamma: float
    G: float
    estimated: frozenset = frozenset()

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "G"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ProblemError(f"regularity constant {name}={v} must be finite and >= 0")
        if self.certified("alpha") and self.certified("gamma") \
                and self.gamma < self.alpha - 1e-12:
            raise ProblemError("gamma < alpha with both certified")
        object.__setattr__(self, "estimated", frozenset(self.estimated))

    def certified(self, name: str) -> bool:
        return name not in self.estimated

    @property
    def ratio(self) -> float:
        """beta/alpha, the problem-difficulty ratio."""
        return self.beta / self.alpha if self.alpha > 0 else float("inf")


@dataclass(frozen=True)
class Bifunction:
    """A COL problem: loss f_x(x') over a compact convex set.

    ``eval_fn(x, xp)`` returns f_x(xp); ``grad_fn(x, xp)`` its derivative in
    the decision argument; ``best_response_fn`` is an optional closed-form
    argmin of f_x(.).  ``family``/``params`` make problems config-addressable
    and let the runner pick specialized kernels.
    """

    dset: DecisionSet
    eval_fn: object
    grad_fn: object
    regularity: Regularity
    best_response_fn: object = None
    family: str = "custom"
    params: dict = field(default_factory=dict)
    skew_symmetric: bool = False
    query_lipschitz: float = float("nan")  # Lipschitz bound of x -> f_x(z)

    def eval(self, x, xp) -> float:
        return float(self.eval_fn(as_point(x, self.dset.dim),
                                  as_point(xp, self.dset.dim)))

    def grad(self, x, xp) -> np.ndarray:
        return np.asarray(self.grad_fn(as_point(x, self.dset.dim),
                                       as_point(xp, self.dset.dim)), dtype=float)

    @property
    def has_best_response(self) -> bool:
        return self.best_response_fn is not None

    def closed_form_best_response(self, x) -> np.ndarray:
        if self.best_response_fn is None:
            raise ProblemError("no closed-form best response")
        return np.asarray(self.best_response_fn(as_point(x, self.dset.dim)), dtype=float)

    def with_regularity(self, reg: Regularity) -> "Bifunction":
        return replace(self, regularity=reg)


def loss_at(problem: Bifunction, query, decision) -> float:
    """f_query(decision); both points must lie in the set."""
    q = as_point(query, problem.dset.dim)
    z = as_point(decision, problem.dset.dim)
    for name, p in (("query", q), ("decision", z)):
        if not problem.dset.contains(p, tol=1e-7):
            raise ProblemError(f"{name} point lies outside the decision set")
    return problem.eval(q, z)


# ---------------------------------------------------------------------------
# feedback channel


@dataclass(frozen=True)
class FeedbackSpec:
    """First-order feedback g_n = grad l_n(x_n) + eps_n + xi_n.

    mode: 'deterministic' | 'stochastic' | 'adversarial' | 'combined'.
    eps_n is isotropic Gaussian noise of scale sigma drawn from a seeded
    stream; xi_n follows a named bias schedule with ||xi_n|| <= kappa.
    """

    mode: str = "deterministic"
    sigma: float = 0.0
    noise_seed: int = 0
    bias_schedule: str = "zero"  # zero | summable (kappa/n) | constant
    kappa: float = 0.0

    def __post_init__(self):
        if self.mode not in ("deterministic", "stochastic", "adversarial", "combined"):
            raise ProblemError(f"unknown feedback mode {self.mode!r}")
        if self.bias_schedule not in ("zero", "summable", "constant"):
            raise ProblemError(f"unknown bias schedule {self.bias_schedule!r}")
        if self.sigma < 0 or self.kappa < 0:
            raise ProblemError("noise scales must be nonnegative")

    @property
    def has_noise(self) -> bool:
        return self.mode in ("stochastic", "combined") and self.sigma > 0

    @property
    def has_bias(self) -> bool:
        return self.mode in ("adversarial", "combined") and \
            self.bias_schedule != "zero" and self.kappa > 0

    @staticmethod
    def deterministic() -> "FeedbackSpec":
        return FeedbackSpec()

    @staticmethod
    def stochastic(sigma: float, noise_seed: int = 0) -> "FeedbackSpec":
        return FeedbackSpec(mode="stochastic", sigma=sigma, noise_seed=noise_seed)

    @staticmethod
    def adversarial(schedule: str, kappa: float) -> "FeedbackSpec":
        return FeedbackSpec(mode="adversarial", bias_schedule=schedule, kappa=kappa)

    @staticmethod
    def combined(sigma: float, schedule: str, kappa: float,
                 noise_seed: int = 0) -> "FeedbackSpec":
        return FeedbackSpec(mode="combined", sigma=sigma, noise_seed=noise_seed,
                            bias_schedule=schedule, kappa=kappa)


def noise_array(spec: FeedbackSpec, run_seed: int, n_rounds: int, dim: int) -> np.ndarray:
    """Pre-generated Gaussian noise, bit-reproducible from (run_seed, spec)."""
    if not spec.has_noise:
        return np.zeros((n_rounds, dim))
    rng = np.random.default_rng(np.random.SeedSequence([int(run_seed), int(spec.noise_seed)]))
    return spec.sigma * rng.standard_normal((n_rounds, dim))


def bias_array(spec: FeedbackSpec, n_rounds: int, dim: int) -> np.ndarray:
    """Adversarial bias path xi_n; constant direction, norm per schedule."""
    if not spec.has_bias:
        return np.zeros((n_rounds, dim))
    direction = np.ones(dim) / np.sqrt(dim)
    n = np.arange(1, n_rounds + 1, dtype=float)
    if spec.bias_schedule == "constant":
        norms = np.full(n_rounds, spec.kappa)
    else:  # summable: kappa/n, so the cumulative bias stays O(log N)
        norms = spec.kappa / n
    return norms[:, None] * direction[None, :]


class FeedbackStream:
    """Per-run feedback channel with pre-generated noise and bias paths."""

    def __init__(self, problem: Bifunction, spec: FeedbackSpec,
                 run_seed: int, n_rounds: int):
        self.problem = problem
        self.spec = spec
        d = problem.dset.dim
        self.noise = noise_array(spec, run_seed, n_rounds, d)
        self.bias = bias_array(spec, n_rounds, d)

    def gradient(self, n: int, x) -> np.ndarray:
        """Feedback for round n (1-indexed) at decision x."""
        g = self.problem.grad(x, x)
        return g + self.noise[n - 1] + self.bias[n - 1]

    def bias_norm(self, n: int) -> float:
        return float(np.linalg.norm(self.bias[n - 1]))


def first_order_feedback(problem: Bifunction, spec: FeedbackSpec, n: int,
                         x_n, run_seed: int = 0, n_rounds: int | None = None) -> np.ndarray:
    """One-shot feedback query; deterministic mode returns grad f_{x_n}(x_n)."""
    horizon = n_rounds if n_rounds is not None else n
    stream = FeedbackStream(problem, spec, run_seed, horizon)
    return stream.gradient(n, x_n)


# ---------------------------------------------------------------------------
# empirical regularity estimation


def estimate_regularity(problem: Bifunction, n_samples: int, seed: int = 0) -> Regularity:
    """Sample-based bounds on (alpha, beta, gamma, G), flagged as estimated.

    Lower-bounds alpha by the worst segment strong-convexity ratio and
    upper-bounds beta/gamma/G by the largest sampled ratios; cheap and
    conservative, adequate for configuring step sizes.
    """
    if n_samples < 2:
        raise ProblemError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    dset = problem.dset
    alpha_hat = np.inf
    beta_hat = 0.0
    gamma_hat = 0.0
    g_hat = 0.0
    for _ in range(n_samples):
        q = dset.sample(rng)
        x1 = dset.sample(rng)
        x2 = dset.sample(rng)
        q2 = dset.sample(rng)
        d12 = np.linalg.norm(x1 - x2)
        if d12 > 1e-9:
            gdiff = problem.grad(q, x1) - problem.grad(q, x2)
            alpha_hat = min(alpha_hat, float(np.dot(gdiff, x1 - x2)) / d12 ** 2)
            gamma_hat = max(gamma_hat, float(np.linalg.norm(gdiff)) / d12)
        dq = np.linalg.norm(q - q2)
        if dq > 1e-9:
            qdiff = problem.grad(q, x1) - problem.grad(q2, x1)
            beta_hat = max(beta_hat, float(np.linalg.norm(qdiff)) / dq)
        g_hat = max(g_hat, float(np.linalg.norm(problem.grad(q, q))))
    alpha_hat = max(0.0, alpha_hat if np.isfinite(alpha_hat) else 0.0)
    return Regularity(alpha=alpha_hat, beta=beta_hat,
                      gamma=max(gamma_hat, alpha_hat), G=g_hat,
                      estimated=frozenset({"alpha", "beta", "gamma", "G"}))


# ---------------------------------------------------------------------------
# sampled predicates used by property suites


def monotonicity_deficit(problem: Bifunction, n_pairs: int, seed: int = 0,
                         modulus: float | None = None) -> float:
    """Worst slack of <grad f_x(x) - grad f_y(y), x - y> >= mu ||x-y||^2.

    mu defaults to alpha - beta; the returned value is the minimum of
    LHS - mu||x-y||^2 over sampled pairs (>= -tol means the predicate holds).
    """
    reg = problem.regularity
    mu = (reg.alpha - reg.beta) if modulus is None else modulus
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(n_pairs):
        x = problem.dset.sample(rng)
        y = problem.dset.sample(rng)
        lhs = float(np.dot(problem.grad(x, x) - problem.grad(y, y), x - y))
        worst = min(worst, lhs - mu * float(np.dot(x - y, x - y)))
    return worst


def joint_smoothness_deficit(problem: Bifunction, n_pairs: int, seed: int = 0) -> float:
    """Worst slack of (gamma+beta)||x-y|| - ||grad f_x(x) - grad f_y(y)||."""
    reg = problem.regularity
    bound = reg.gamma + reg.beta
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(n_pairs):
        x = problem.dset.sample(rng)
        y = problem.dset.sample(rng)
        lhs = bound * float(np.linalg.norm(x - y))
        rhs = float(np.linalg.norm(problem.grad(x, x) - problem.grad(y, y)))
        worst = min(worst, lhs - rhs)
    return worst


def gradient_check(problem: Bifunction, n_points: int = 20, seed: int = 0,
                   h: float = 1e-6) -> float:
    """Max abs error of grad_fn vs central finite differences of eval_fn."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    d = problem.dset.dim
    for _ in range(n_points):
        q = problem.dset.sample(rng)
        z = problem.dset.sample(rng)
        g = problem.grad(q, z)
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            fd = (problem.eval_fn(q, z + e) - problem.eval_fn(q, z - e)) / (2 * h)
            worst = max(worst, abs(fd - g[i]))
    return worst
