"""Finite metric-measure spaces: tubes, Hausdorff and Gromov-Hausdorff distances."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "METRIC_TOL",
    "GH_MAX_POINTS",
    "FiniteMetricSpace",
    "NeighborhoodQuery",
    "tube",
    "tube_measure",
    "hausdorff_distance",
    "gh_distance_small",
    "load_space",
]

METRIC_TOL = 1e-9
GH_MAX_POINTS = 7


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Symmetric distance table over finitely many labelled points.

    The table is validated on construction (zero diagonal, symmetry and the
    triangle inequality, all to ``METRIC_TOL``); violations raise rather than
    being repaired. ``weights`` default to the uniform probability vector.
    """

    labels: tuple
    dist: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        d = np.array(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance table must be square")
        n = d.shape[0]
        if n == 0:
            raise ValueError("metric space must have at least one point")
        labels = tuple(self.labels) if self.labels is not None else tuple(range(n))
        if len(labels) != n:
            raise ValueError(f"{len(labels)} labels for {n} points")
        if not np.all(np.isfinite(d)):
            raise ValueError("distances must be finite")
        if (d < 0).any():
            raise ValueError("distances must be non-negative")
        if np.abs(np.diag(d)).max() > METRIC_TOL:
            raise ValueError("dist(i, i) must be 0")
        if np.abs(d - d.T).max() > METRIC_TOL:
            raise ValueError("distance table is not symmetric")
        # d[i, j] <= d[i, k] + d[k, j] for all i, j, k
        excess = d[:, None, :] - (d[:, :, None] + d[None, :, :])
        if excess.max() > METRIC_TOL:
            i, k, j = np.unravel_index(np.argmax(excess), excess.shape)
            raise ValueError(
                f"triangle inequality violated: d({labels[i]},{labels[j]}) > "
                f"d({labels[i]},{labels[k]}) + d({labels[k]},{labels[j]})"
            )
        if self.weights is None:
            w = np.full(n, 1.0 / n)
        else:
            w = np.array(self.weights, dtype=float)
            if w.shape != (n,):
                raise ValueError(f"weights must have length {n}")
            if (w < 0).any():
                raise ValueError("weights must be non-negative")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
        d.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.dist.shape[0]

    @property
    def diameter(self) -> float:
        return float(self.dist.max())

    @classmethod
    def from_points(cls, coords, labels=None, weights=None) -> "FiniteMetricSpace":
        """Euclidean distances between the rows of ``coords``."""
        x = np.asarray(coords, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        d = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)
        return cls(labels if labels is not None else tuple(range(len(x))), d, weights)

    @classmethod
    def from_json(cls, doc) -> "FiniteMetricSpace":
        """Build from ``{"labels": [...], "dist": [[...]], "weights": [...]}``."""
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        if "dist" not in doc:
            raise ValueError("metric space document needs a 'dist' table")
        dist = doc["dist"]
        labels = doc.get("labels", list(range(len(dist))))
        return cls(tuple(labels), np.asarray(dist, dtype=float), doc.get("weights"))

    def to_json(self) -> dict:
        return {
            "labels": list(self.labels),
            "dist": self.dist.tolist(),
            "weights": self.weights.tolist(),
        }


def load_space(path) -> FiniteMetricSpace:
    return FiniteMetricSpace.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class NeighborhoodQuery:
    subset: tuple
    epsilon: float

    def __post_init__(self):
        idx = tuple(int(i) for i in self.subset)
        if not idx:
            raise ValueError("neighborhood query needs a non-empty subset")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        object.__setattr__(self, "subset", idx)


def _indices(space: FiniteMetricSpace, idx) -> np.ndarray:
    arr = np.unique(np.asarray(list(idx), dtype=int))
    if arr.size == 0:
        raise ValueError("index set must be non-empty")
    if arr.min() < 0 or arr.max() >= len(space):
        raise IndexError(f"index out of range for a {len(space)}-point space")
    return arr


def tube(space: FiniteMetricSpace, q: NeighborhoodQuery) -> frozenset:
    """Indices of ``{x : d(x, Y) <= eps}``."""
    ys = _indices(space, q.subset)
    dmin = space.dist[:, ys].min(axis=1)
    return frozenset(int(i) for i in np.flatnonzero(dmin <= q.epsilon))


def tube_measure(space: FiniteMetricSpace, q: NeighborhoodQuery) -> float:
    members = sorted(tube(space, q))
    return float(space.weights[members].sum())


def hausdorff_distance(space: FiniteMetricSpace, a, b) -> float:
    """Max of the two directed sup-min distances between index sets."""
    ia, ib = _indices(space, a), _indices(space, b)
    block = space.dist[np.ix_(ia, ib)]
    return float(max(block.min(axis=1).max(), block.min(axis=0).max()))


def gh_distance_small(x: FiniteMetricSpace, y: FiniteMetricSpace) -> float:
    """Exact Gromov-Hausdorff distance between two spaces of at most 7 points.

    Half the least distortion over all correspondences. The least distortion
    is one of the finitely many values ``|dX(x, x') - dY(y, y')|``; we bisect
    over those values and, for each threshold, search for a set of mutually
    compatible pairs covering every point of both spaces.
    """
    nx, ny = len(x), len(y)
    if nx > GH_MAX_POINTS or ny > GH_MAX_POINTS:
        raise ValueError(
            f"gh_distance_small enumerates correspondences exactly and is capped at "
            f"{GH_MAX_POINTS} points per space (got {nx} and {ny}); use it at desk scale only"
        )
    # cost[p, q] = |dX(xp, xq) - dY(yp, yq)| over pairs p = (xp, yp)
    dx = x.dist[:, None, :, None]
    dy = y.dist[None, :, None, :]
    cost = np.abs(dx - dy).reshape(nx * ny, nx * ny)
    candidates = np.unique(cost)
    lo, hi = 0, candidates.size - 1
    # the full product X x Y is always a correspondence, so hi is feasible
    while lo < hi:
        mid = (lo + hi) // 2
        if _has_correspondence(cost <= candidates[mid], nx, ny):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo]) / 2.0


def _has_correspondence(compat: np.ndarray, nx: int, ny: int) -> bool:
    """Is there a clique of pairs in ``compat`` covering all of X and all of Y?"""
    pairs_of_x = [[p for p in range(nx * ny) if p // ny == i] for i in range(nx)]
    pairs_of_y = [[p for p in range(nx * ny) if p % ny == j] for j in range(ny)]

    def search(chosen, allowed, cov_x, cov_y):
        if all(cov_x) and all(cov_y):
            return True
        # branch on the uncovered point with the fewest admissible pairs
        best = None
        for i in range(nx):
            if not cov_x[i]:
                opts = [p for p in pairs_of_x[i] if allowed[p]]
                if best is None or len(opts) < len(best):
                    best = opts
        for j in range(ny):
            if not cov_y[j]:
                opts = [p for p in pairs_of_y[j] if allowed[p]]
                if best is None or len(opts) < len(best):
                    best = opts
        for p in best:
            cx, cy = list(cov_x), list(cov_y)
            cx[p // ny] = True
            cy[p % ny] = True
            if search(chosen + [p], allowed & compat[p], cx, cy):
                return True
        return False

    allowed = compat.diagonal().copy()
    return search([], allowed, [False] * nx, [False] * ny)
