"""Independent brute-force oracles used to freeze expected test values.

Everything here is deliberately dumb (enumeration, fine grids, finite
differences) and shares no code path with the library operations it checks.
"""

import itertools

import numpy as np


def simplex_grid(d: int, m: int) -> np.ndarray:
    """All points of the simplex with coordinates that are multiples of 1/m."""
    pts = []
    for comp in itertools.combinations(range(m + d - 1), d - 1):
        prev = -1
        counts = []
        for c in comp:
            counts.append(c - prev - 1)
            prev = c
        counts.append(m + d - 2 - prev)
        pts.append(np.array(counts, dtype=float) / m)
    return np.array(pts)


def simplex_projection_bruteforce(p, m: int = 2000) -> np.ndarray:
    """Nearest simplex grid point to p (grid pitch 1/m)."""
    p = np.asarray(p, dtype=float)
    grid = simplex_grid(p.shape[0], m)
    return grid[int(np.argmin(np.sum((grid - p) ** 2, axis=1)))]


def radial_ball_projection(p, center, radius) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    center = np.asarray(center, dtype=float)
    gap = p - center
    norm = float(np.linalg.norm(gap))
    if norm <= radius:
        return p
    return center + gap * (radius / norm)


def pairwise_diameter(points) -> float:
    pts = np.asarray(points, dtype=float)
    best = 0.0
    for i in range(len(pts)):
        best = max(best, float(np.max(np.linalg.norm(pts - pts[i], axis=1))))
    return best


def multiplicative_weights(x, g, eta) -> np.ndarray:
    w = np.asarray(x, dtype=float) * np.exp(-eta * np.asarray(g, dtype=float))
    return w / np.sum(w)


def grid_minimize(objective, pts) -> tuple[np.ndarray, float]:
    vals = np.array([objective(p) for p in pts])
    i = int(np.argmin(vals))
    return pts[i], float(vals[i])


def central_difference(fn, x, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return g


def mdp_hand_recursion(p, p0, pi, horizon) -> np.ndarray:
    """Average state distribution via straightforward dense recursion."""
    p = np.asarray(p, dtype=float)
    d = np.asarray(p0, dtype=float).copy()
    acc = d.copy()
    for _ in range(horizon - 1):
        nxt = np.einsum("s,sa,sat->t", d, pi, p)
        acc += nxt
        d = nxt
    return acc / horizon
