"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The fallback is the *same* function object left undecorated, so both paths
execute identical floating-point operations in identical order; traces are
bit-for-bit equal whichever path is active.  Selection happens once at
import time via the ``COL_NUMBA`` environment variable:

    COL_NUMBA=1  (default)  jit-compile kernels when numba is importable
    COL_NUMBA=0             force the pure-numpy/python path

``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

import os

import numpy as np


def _flag_enabled() -> bool:
    raw = os.environ.get("COL_NUMBA", "1").strip().lower()
    return raw not in ("0", "false", "off", "no")


NUMBA_ENABLED = False
if _flag_enabled():
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _njit = None

BACKEND = "numba" if NUMBA_ENABLED else "numpy"


def _jit(fn):
    if NUMBA_ENABLED:
        return _njit(cache=True)(fn)
    return fn


# Update-rule codes shared with col.algorithms.
MODE_GREEDY = 0
MODE_MANN = 1
MODE_MIRROR = 2
MODE_MIDPOINT = 3
MODE_LAMBDA_TRAP = 4

# Decision-set codes for the tracking kernel.
SET_BOX = 0
SET_BALL = 1


def _simplex_project(v):
    # Exact sort-based Euclidean projection onto the probability simplex.
    n = v.shape[0]
    u = np.sort(v)[::-1].copy()
    css = np.cumsum(u)
    theta = 0.0
    for j in range(n):
        t = (css[j] - 1.0) / (j + 1.0)
        if u[j] - t > 0.0:
            theta = t
    w = np.empty(n)
    for i in range(n):
        wi = v[i] - theta
        w[i] = wi if wi > 0.0 else 0.0
    return w


def _project_box(y, lo, hi):
    out = np.empty_like(y)
    for i in range(y.shape[0]):
        v = y[i]
        if v < lo[i]:
            v = lo[i]
        elif v > hi[i]:
            v = hi[i]
        out[i] = v
    return out


def _project_ball(y, center, radius):
    d2 = 0.0
    for i in range(y.shape[0]):
        dv = y[i] - center[i]
        d2 += dv * dv
    dist = np.sqrt(d2)
    out = np.empty_like(y)
    if dist <= radius:
        for i in range(y.shape[0]):
            out[i] = y[i]
        return out
    s = radius / dist
    for i in range(y.shape[0]):
        out[i] = center[i] + s * (y[i] - center[i])
    return out


def _tracking_trace(mode, alpha, mat, c, set_kind, lo, hi, center, radius,
                    x1, etas, trap_lam, noise, bias, drift,
                    x_star, has_xstar):
    """Run a full trace on the linear-map tracking family.

    Round-n loss: l_n(x) = (alpha/2) ||x - (M x_n + c)||^2 + <drift_n, x>.
    ``noise``, ``bias`` and ``drift`` are pre-generated (N, d) arrays; pass
    zeros when the corresponding channel is inactive.
    """
    n_rounds = etas.shape[0]
    d = x1.shape[0]
    xs = np.empty((n_rounds, d))
    brs = np.empty((n_rounds, d))
    losses = np.empty(n_rounds)
    gaps = np.empty(n_rounds)
    losses_star = np.empty(n_rounds)
    deltas = np.empty(n_rounds)

    x = x1.copy()
    target = np.empty(d)
    y = np.empty(d)
    for n in range(n_rounds):
        for i in range(d):
            s = c[i]
            for j in range(d):
                s += mat[i, j] * x[j]
            target[i] = s

        # best response: argmin over the set of the round-n loss
        for i in range(d):
            y[i] = target[i] - drift[n, i] / alpha
        if set_kind == SET_BOX:
            br = _project_box(y, lo, hi)
        else:
            br = _project_ball(y, center, radius)

        loss = 0.0
        loss_br = 0.0
        for i in range(d):
            dv = x[i] - target[i]
            loss += 0.5 * alpha * dv * dv + drift[n, i] * x[i]
            dbr = br[i] - target[i]
            loss_br += 0.5 * alpha * dbr * dbr + drift[n, i] * br[i]

        if has_xstar:
            ls = 0.0
            dd = 0.0
            for i in range(d):
                dv = x_star[i] - target[i]
                ls += 0.5 * alpha * dv * dv + drift[n, i] * x_star[i]
                dx = x[i] - x_star[i]
                dd += dx * dx
            losses_star[n] = ls
            deltas[n] = np.sqrt(dd)
        else:
            losses_star[n] = np.nan
            deltas[n] = np.nan

        for i in range(d):
            xs[n, i] = x[i]
            brs[n, i] = br[i]
        losses[n] = loss
        gaps[n] = loss - loss_br

        eta = etas[n]
        if mode == MODE_GREEDY:
            x = br.copy()
        elif mode == MODE_MANN:
            for i in range(d):
                y[i] = eta * x[i] + (1.0 - eta) * br[i]
            x = y.copy()
        elif mode == MODE_MIDPOINT:
            for i in range(d):
                y[i] = 0.5 * (x[i] + br[i])
            x = y.copy()
        elif mode == MODE_LAMBDA_TRAP:
            for i in range(d):
                y[i] = (trap_lam * x[i] + br[i]) / (1.0 + trap_lam)
            x = y.copy()
        else:  # MODE_MIRROR
            for i in range(d):
                g = alpha * (x[i] - target[i]) + drift[n, i] \
                    + noise[n, i] + bias[n, i]
                y[i] = x[i] - eta * g
            if set_kind == SET_BOX:
                x = _project_box(y, lo, hi)
            else:
                x = _project_ball(y, center, radius)
    return xs, brs, losses, gaps, losses_star, deltas


def _mdp_step_distributions(P, p0, pi, horizon):
    """Per-step state distributions d_t, t = 1..horizon (exact recursion)."""
    n_states = P.shape[0]
    n_actions = P.shape[1]
    dists = np.empty((horizon, n_states))
    for s in range(n_states):
        dists[0, s] = p0[s]
    for t in range(horizon - 1):
        for sp in range(n_states):
            acc = 0.0
            for s in range(n_states):
                for a in range(n_actions):
                    acc += dists[t, s] * pi[s, a] * P[s, a, sp]
            dists[t + 1, sp] = acc
    return dists


def _mdp_avg_state_distribution(P, p0, pi, horizon):
    dists = _mdp_step_distributions(P, p0, pi, horizon)
    n_states = P.shape[0]
    avg = np.zeros(n_states)
    for t in range(horizon):
        for s in range(n_states):
            avg[s] += dists[t, s]
    for s in range(n_states):
        avg[s] /= horizon
    return avg


def _il_loss_terms(dbar, mu, pi, expert):
    # loss = sum_s (dbar_s + mu)/2 ||pi_s - expert_s||^2 ; also squared
    # Frobenius distance to the expert.
    n_states = pi.shape[0]
    n_actions = pi.shape[1]
    loss = 0.0
    dist2 = 0.0
    for s in range(n_states):
        w = dbar[s] + mu
        row = 0.0
        for a in range(n_actions):
            dv = pi[s, a] - expert[s, a]
            row += dv * dv
        loss += 0.5 * w * row
        dist2 += row
    return loss, dist2


def _il_deterministic_trace(P, p0, expert, mu, horizon, pi1, etas):
    """Online gradient descent on the imitation loss with exact feedback."""
    n_rounds = etas.shape[0]
    n_states = P.shape[0]
    n_actions = P.shape[1]
    policies = np.empty((n_rounds, n_states * n_actions))
    losses = np.empty(n_rounds)
    deltas = np.empty(n_rounds)

    pi = pi1.copy()
    for n in range(n_rounds):
        dists = _mdp_step_distributions(P, p0, pi, horizon)
        dbar = np.zeros(n_states)
        for t in range(horizon):
            for s in range(n_states):
                dbar[s] += dists[t, s]
        for s in range(n_states):
            dbar[s] /= horizon

        loss, dist2 = _il_loss_terms(dbar, mu, pi, expert)
        losses[n] = loss
        deltas[n] = np.sqrt(dist2)
        for s in range(n_states):
            for a in range(n_actions):
                policies[n, s * n_actions + a] = pi[s, a]

        eta = etas[n]
        nxt = np.empty((n_states, n_actions))
        for s in range(n_states):
            w = dbar[s] + mu
            row = np.empty(n_actions)
            for a in range(n_actions):
                row[a] = pi[s, a] - eta * w * (pi[s, a] - expert[s, a])
            prow = _simplex_project(row)
            for a in range(n_actions):
                nxt[s, a] = prow[a]
        pi = nxt
    return policies, losses, deltas


def _il_stochastic_trace(P, p0, expert, mu, horizon, pi1, etas,
                         u_state, u_action):
    """OGD on the imitation loss with sampled feedback.

    Per round, one state is drawn from each exact per-step distribution
    d_t (t = 1..horizon) and an expert action label is drawn at each sampled
    state; the gradient estimate is unbiased for the exact gradient.
    ``u_state`` and ``u_action`` are pre-generated (N, horizon) uniforms,
    consumed by inverse-CDF sampling so both backends see the same draws.
    """
    n_rounds = etas.shape[0]
    n_states = P.shape[0]
    n_actions = P.shape[1]
    policies = np.empty((n_rounds, n_states * n_actions))
    losses = np.empty(n_rounds)
    deltas = np.empty(n_rounds)

    pi = pi1.copy()
    for n in range(n_rounds):
        dists = _mdp_step_distributions(P, p0, pi, horizon)
        dbar = np.zeros(n_states)
        for t in range(horizon):
            for s in range(n_states):
                dbar[s] += dists[t, s]
        for s in range(n_states):
            dbar[s] /= horizon

        # regret is measured against the exact loss, not the sampled one
        loss, dist2 = _il_loss_terms(dbar, mu, pi, expert)
        losses[n] = loss
        deltas[n] = np.sqrt(dist2)
        for s in range(n_states):
            for a in range(n_actions):
                policies[n, s * n_actions + a] = pi[s, a]

        ghat = np.zeros((n_states, n_actions))
        for t in range(horizon):
            u = u_state[n, t]
            st = n_states - 1
            acc = 0.0
            for s in range(n_states):
                acc += dists[t, s]
                if u < acc:
                    st = s
                    break
            ua = u_action[n, t]
            at = n_actions - 1
            acc = 0.0
            for a in range(n_actions):
                acc += expert[st, a]
                if ua < acc:
                    at = a
                    break
            for a in range(n_actions):
                ghat[st, a] += pi[st, a] / horizon
            ghat[st, at] -= 1.0 / horizon

        eta = etas[n]
        nxt = np.empty((n_states, n_actions))
        for s in range(n_states):
            row = np.empty(n_actions)
            for a in range(n_actions):
                g = ghat[s, a] + mu * (pi[s, a] - expert[s, a])
                row[a] = pi[s, a] - eta * g
            prow = _simplex_project(row)
            for a in range(n_actions):
                nxt[s, a] = prow[a]
        pi = nxt
    return policies, losses, deltas


# Rebind the underscore names so jitted callers resolve jitted callees.
# (Cross-backend equality is exercised by re-importing the module with
# COL_NUMBA=0 in a subprocess; see benchmarks/bench_kernels.py.)
_simplex_project = _jit(_simplex_project)
_project_box = _jit(_project_box)
_project_ball = _jit(_project_ball)
_tracking_trace = _jit(_tracking_trace)
_mdp_step_distributions = _jit(_mdp_step_distributions)
_mdp_avg_state_distribution = _jit(_mdp_avg_state_distribution)
_il_loss_terms = _jit(_il_loss_terms)
_il_deterministic_trace = _jit(_il_deterministic_trace)
_il_stochastic_trace = _jit(_il_stochastic_trace)

simplex_project = _simplex_project
project_box = _project_box
project_ball = _project_ball
tracking_trace = _tracking_trace
mdp_step_distributions = _mdp_step_distributions
mdp_avg_state_distribution = _mdp_avg_state_distribution
il_deterministic_trace = _il_deterministic_trace
il_stochastic_trace = _il_stochastic_trace
