"""Decision sets, projections, diameters, and Bregman machinery.

Sets are immutable after construction and all operations are pure, so a
single set/geometry instance is safe to share across concurrent runs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .config import ENTROPY_FLOOR, TOL_EXACT


class GeometryError(ValueError):
    """Raised for dimension mismatches and set/geometry incompatibilities."""


def as_point(p, dim: int | None = None) -> np.ndarray:
    """Validate and coerce a decision vector: 1-D, float64, all finite."""
    x = np.asarray(p, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.ndim != 1:
        raise GeometryError(f"point must be a vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise GeometryError("point has non-finite entries")
    if dim is not None and x.shape[0] != dim:
        raise GeometryError(f"dimension mismatch: expected {dim}, got {x.shape[0]}")
    return x


class DecisionSet:
    """Base class for compact convex decision sets."""

    dim: int

    def project(self, p) -> np.ndarray:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def contains(self, p, tol: float = 1e-9) -> bool:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def max_norm(self) -> float:
        """max_{x in set} ||x||_2, used for certified gradient bounds."""
        raise NotImplementedError

    def center(self) -> np.ndarray:
        raise NotImplementedError

    def grid(self, points_per_dim: int) -> np.ndarray:
        """Deterministic covering grid, rows are points; d <= 3 use only."""
        raise NotImplementedError

    def sample_many(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.stack([self.sample(rng) for _ in range(n)])


@dataclass(frozen=True)
class Box(DecisionSet):
    lower: np.ndarray
    upper: np.ndarray

    def __init__(self, lower, upper):
        lo = as_point(lower)
        hi = as_point(upper, lo.shape[0])
        if np.any(lo > hi):
            raise GeometryError("box requires lower <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def project(self, p):
        return np.minimum(np.maximum(as_point(p, self.dim), self.lower), self.upper)

    def diameter(self):
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, p, tol=1e-9):
        x = as_point(p, self.dim)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def sample(self, rng):
        return rng.uniform(self.lower, self.upper)

    def max_norm(self):
        return float(np.linalg.norm(np.maximum(np.abs(self.lower), np.abs(self.upper))))

    def center(self):
        return 0.5 * (self.lower + self.upper)

    def grid(self, points_per_dim):
        axes = [np.linspace(self.lower[i], self.upper[i], points_per_dim)
                for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class Ball(DecisionSet):
    center_point: np.ndarray
    radius: float

    def __init__(self, center, radius):
        c = as_point(center)
        r = float(radius)
        if not r > 0:
            raise GeometryError("ball radius must be positive")
        object.__setattr__(self, "center_point", c)
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return self.center_point.shape[0]

    def project(self, p):
        x = as_point(p, self.dim)
        return _kernels.project_ball(x, self.center_point, self.radius)

    def diameter(self):
        return 2.0 * self.radius

    def contains(self, p, tol=1e-9):
        x = as_point(p, self.dim)
        return bool(np.linalg.norm(x - self.center_point) <= self.radius + tol)

    def sample(self, rng):
        # uniform in the ball: gaussian direction, radius ~ U^(1/d)
        v = rng.standard_normal(self.dim)
        v /= np.linalg.norm(v)
        r = self.radius * rng.uniform() ** (1.0 / self.dim)
        return self.center_point + r * v

    def max_norm(self):
        return float(np.linalg.norm(self.center_point)) + self.radius

    def center(self):
        return self.center_point.copy()

    def grid(self, points_per_dim):
        axes = [np.linspace(self.center_point[i] - self.radius,
                            self.center_point[i] + self.radius, points_per_dim)
                for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        dist = np.linalg.norm(pts - self.center_point, axis=1)
        inside = pts[dist <= self.radius]
        # project exterior mesh points onto the sphere for boundary coverage
        outer = pts[dist > self.radius]
        if outer.shape[0]:
            scaled = self.center_point + (outer - self.center_point) \
                * (self.radius / dist[dist > self.radius])[:, None]
            return np.vstack([inside, scaled])
        return inside


@dataclass(frozen=True)
class Simplex(DecisionSet):
    d: int

    def __init__(self, d):
        if int(d) < 2:
            raise GeometryError("simplex needs dimension >= 2")
        object.__setattr__(self, "d", int(d))

    @property
    def dim(self) -> int:
        return self.d

    def project(self, p):
        return _kernels.simplex_project(as_point(p, self.d))

    def diameter(self):
        # farthest vertex pair e_i, e_j
        return float(np.sqrt(2.0))

    def contains(self, p, tol=1e-9):
        x = as_point(p, self.d)
        return bool(np.all(x >= -tol) and abs(float(np.sum(x)) - 1.0) <= tol)

    def sample(self, rng):
        return rng.dirichlet(np.ones(self.d))

    def max_norm(self):
        return 1.0

    def center(self):
        return np.full(self.d, 1.0 / self.d)

    def grid(self, points_per_dim):
        m = points_per_dim - 1
        pts = []
        for comp in itertools.combinations(range(m + self.d - 1), self.d - 1):
            prev = -1
            counts = []
            for c in comp:
                counts.append(c - prev - 1)
                prev = c
            counts.append(m + self.d - 2 - prev)
            pts.append(np.array(counts, dtype=float) / m)
        return np.array(pts)


@dataclass(frozen=True)
class ProductSet(DecisionSet):
    parts: tuple

    def __init__(self, parts):
        parts = tuple(parts)
        if not parts:
            raise GeometryError("product of zero sets")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self) -> int:
        return sum(p.dim for p in self.parts)

    def blocks(self):
        """(start, stop) index ranges of the component sets."""
        out, start = [], 0
        for p in self.parts:
            out.append((start, start + p.dim))
            start += p.dim
        return out

    def project(self, p):
        x = as_point(p, self.dim)
        return np.concatenate([part.project(x[a:b])
                               for part, (a, b) in zip(self.parts, self.blocks())])

    def diameter(self):
        return float(np.sqrt(sum(p.diameter() ** 2 for p in self.parts)))

    def contains(self, p, tol=1e-9):
        x = as_point(p, self.dim)
        return all(part.contains(x[a:b], tol)
                   for part, (a, b) in zip(self.parts, self.blocks()))

    def sample(self, rng):
        return np.concatenate([p.sample(rng) for p in self.parts])

    def max_norm(self):
        return float(np.sqrt(sum(p.max_norm() ** 2 for p in self.parts)))

    def center(self):
        return np.concatenate([p.center() for p in self.parts])

    def grid(self, points_per_dim):
        grids = [p.grid(points_per_dim) for p in self.parts]
        total = 1
        for g in grids:
            total *= g.shape[0]
        if total > 2_000_000:
            raise GeometryError(f"product grid too large ({total} points)")
        rows = []
        for combo in itertools.product(*[range(g.shape[0]) for g in grids]):
            rows.append(np.concatenate([g[i] for g, i in zip(grids, combo)]))
        return np.array(rows)


def is_simplex_like(dset: DecisionSet) -> bool:
    """True for a simplex or a product whose factors are all simplexes."""
    if isinstance(dset, Simplex):
        return True
    if isinstance(dset, ProductSet):
        return all(is_simplex_like(p) for p in dset.parts)
    return False


@dataclass(frozen=True)
class BregmanGeometry:
    """Mirror map R with B_R(x'||x) = R(x') - R(x) - <grad R(x), x'-x>.

    Two variants: ``euclidean`` (R = 0.5||x||^2, 1-strongly convex and
    1-smooth in the Euclidean norm) and ``entropy`` (negative entropy on
    simplex-like sets; 1-strongly convex w.r.t. ||.||_1 per block, smoothness
    unbounded and flagged as inf).
    """

    kind: str

    def __post_init__(self):
        if self.kind not in ("euclidean", "entropy"):
            raise GeometryError(f"unknown geometry {self.kind!r}")

    @property
    def strong_convexity(self) -> float:
        return 1.0

    @property
    def smoothness(self) -> float:
        return 1.0 if self.kind == "euclidean" else float("inf")

    def compatible_with(self, dset: DecisionSet) -> bool:
        return self.kind == "euclidean" or is_simplex_like(dset)


EUCLIDEAN = BregmanGeometry("euclidean")
NEG_ENTROPY = BregmanGeometry("entropy")

_BY_NAME = {"euclidean": EUCLIDEAN, "entropy": NEG_ENTROPY,
            "negative_entropy": NEG_ENTROPY}


def geometry_by_name(name: str) -> BregmanGeometry:
    try:
        return _BY_NAME[name.lower()]
    except KeyError:
        raise GeometryError(f"unknown geometry {name!r}") from None


def project(dset: DecisionSet, p) -> np.ndarray:
    """Euclidean-nearest point of the set to p."""
    return dset.project(p)


def diameter(dset: DecisionSet) -> float:
    """max_{x, x' in set} ||x - x'||_2, closed form per variant."""
    return dset.diameter()


def bregman(geom: BregmanGeometry, x_prime, x) -> float:
    """B_R(x'||x); nonnegative, zero iff x' = x."""
    xp = as_point(x_prime)
    xx = as_point(x, xp.shape[0])
    if geom.kind == "euclidean":
        diff = xp - xx
        return 0.5 * float(np.dot(diff, diff))
    if np.any(xx <= 0.0):
        raise GeometryError("entropy geometry needs strictly positive base point")
    # blockwise KL; the -sum(x') + sum(x) correction cancels on simplexes
    xp_safe = np.maximum(xp, 0.0)
    terms = np.where(xp_safe > 0.0, xp_safe * np.log(np.maximum(xp_safe, 1e-300) / xx), 0.0)
    return float(np.sum(terms) - np.sum(xp) + np.sum(xx))


def mirror_step(geom: BregmanGeometry, dset: DecisionSet, x, g, eta: float) -> np.ndarray:
    """argmin over the set of <eta g, x'> + B_R(x'||x).

    Euclidean: project(x - eta g).  Entropy on simplex-like sets:
    multiplicative-weights update with per-block renormalization.
    """
    if eta < 0:
        raise GeometryError("step size must be nonnegative")
    xx = as_point(x, dset.dim)
    gg = as_point(g, dset.dim)
    if geom.kind == "euclidean":
        return dset.project(xx - eta * gg)
    if not is_simplex_like(dset):
        raise GeometryError("entropy geometry requires a simplex or product of simplexes")
    base = np.maximum(xx, ENTROPY_FLOOR)
    w = base * np.exp(-eta * gg)
    if isinstance(dset, Simplex):
        return w / np.sum(w)
    out = np.empty_like(w)
    for a, b in dset.blocks():
        out[a:b] = w[a:b] / np.sum(w[a:b])
    return out


def set_from_config(node: dict) -> DecisionSet:
    """Build a decision set from a config mapping (see harness schema)."""
    kind = node.get("kind")
    if kind == "box":
        return Box(node["lower"], node["upper"])
    if kind == "ball":
        return Ball(node["center"], node["radius"])
    if kind == "simplex":
        return Simplex(node["d"])
    if kind == "product":
        return ProductSet([set_from_config(sub) for sub in node["parts"]])
    raise GeometryError(f"unknown set kind {kind!r}")
