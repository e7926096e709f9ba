"""Spheres, rotation groups and Grassmannians with Haar samplers.

Conventions
-----------
``Sphere(n)`` is the n-dimensional unit sphere embedded in R^{n+1}.
``Grassmannian(k, n)`` is the set of k-planes through the origin of R^n,
with the sup-metric ``d(A, B) = 2 sin(theta_max / 2)`` (the Hausdorff
distance between the unit spheres of A and B, theta_max being the largest
principal angle).

Batched samplers return plain numpy arrays: ``(count, n + 1)`` points for
spheres, ``(count, n, n)`` matrices for rotations and ``(count, n, k)``
orthonormal frames for subspaces.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CHUNK_SIZE",
    "SeededSampler",
    "SpherePoint",
    "Rotation",
    "Subspace",
    "Sphere",
    "RotationGroup",
    "Grassmannian",
    "sample_sphere",
    "sample_rotation",
    "sample_grassmannian",
    "principal_angles",
    "grassmann_distance",
    "sphere_distance",
]

# Samples are drawn in fixed-size chunks, each with its own child seed, so the
# output never depends on how chunks are spread over workers.
CHUNK_SIZE = 4096

_RANK_TOL = 1e-12


@dataclass
class SeededSampler:
    """Deterministic source of random streams.

    Every chunk of every draw gets its own ``numpy`` generator built from
    ``SeedSequence(seed, spawn_key=(stream_id, *path, chunk))``. Equal
    ``(seed, stream_id, path)`` therefore reproduce equal samples bit for bit,
    independent of ``workers``.
    """

    seed: int
    stream_id: int = 0
    path: tuple = ()
    workers: int = field(default=1, compare=False)
    resampled: int = field(default=0, compare=False)

    def __post_init__(self):
        if int(self.seed) < 0 or int(self.seed) >= 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.stream_id) < 0:
            raise ValueError(f"stream_id must be non-negative, got {self.stream_id}")
        self.seed = int(self.seed)
        self.stream_id = int(self.stream_id)
        self.path = tuple(int(p) for p in self.path)

    def spawn(self, tag: int) -> "SeededSampler":
        """Independent child stream, e.g. for a second estimation stage."""
        return SeededSampler(self.seed, self.stream_id, self.path + (int(tag),), workers=self.workers)

    def generator(self, chunk: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self.path, int(chunk)))
        return np.random.Generator(np.random.PCG64(ss))

    def draw(self, count: int, fn, post=None):
        """Run ``fn(generator, size)`` per chunk and concatenate in chunk order.

        ``fn`` may return an array or ``(array, n_resampled)``. ``post`` is
        applied to each chunk before concatenation, so callers that only need
        ``f(points)`` never hold all points at once.
        """
        count = int(count)
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        jobs = [(i, min(CHUNK_SIZE, count - i * CHUNK_SIZE)) for i in range(math.ceil(count / CHUNK_SIZE))]

        def job(item):
            res = fn(self.generator(item[0]), item[1])
            if post is None:
                return res
            if isinstance(res, tuple):
                return post(res[0]), res[1]
            return post(res)

        if self.workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(job, jobs))
        else:
            results = [job(item) for item in jobs]

        arrays = []
        for res in results:
            if isinstance(res, tuple):
                arr, extra = res
                self.resampled += int(extra)
            else:
                arr = res
            arrays.append(arr)
        return np.concatenate(arrays, axis=0)


# ---------------------------------------------------------------------------
# point types


@dataclass(frozen=True)
class SpherePoint:
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1 or c.size < 2:
            raise ValueError("sphere point needs a 1-d coordinate vector of length >= 2")
        if abs(np.linalg.norm(c) - 1.0) > 1e-12:
            raise ValueError(f"sphere point has norm {np.linalg.norm(c)!r}, expected 1")
        object.__setattr__(self, "coords", c)

    @property
    def dim(self) -> int:
        return self.coords.size - 1


@dataclass(frozen=True)
class Rotation:
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("rotation must be a square matrix")
        if not np.allclose(m.T @ m, np.eye(m.shape[0]), atol=1e-10, rtol=0):
            raise ValueError("rotation columns are not orthonormal")
        if abs(np.linalg.det(m) - 1.0) > 1e-10:
            raise ValueError("rotation determinant is not +1")
        object.__setattr__(self, "entries", m)


@dataclass(frozen=True)
class Subspace:
    """A point of G(k, n), held as an n x k orthonormal frame."""

    frame: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frame, dtype=float)
        if f.ndim == 1:
            f = f[:, None]
        if f.ndim != 2:
            raise ValueError("frame must be an n x k matrix")
        n, k = f.shape
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
        if not np.allclose(f.T @ f, np.eye(k), atol=1e-10, rtol=0):
            raise ValueError("frame columns are not orthonormal")
        object.__setattr__(self, "frame", f)

    @classmethod
    def span(cls, vectors) -> "Subspace":
        """Subspace spanned by the columns of ``vectors`` (n x k)."""
        v = np.asarray(vectors, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        q, r = np.linalg.qr(v)
        d = np.abs(np.diag(r))
        if d.min() <= _RANK_TOL * max(d.max(), 1.0):
            raise ValueError("vectors are linearly dependent")
        return cls(q)

    @property
    def ambient_dim(self) -> int:
        return self.frame.shape[0]

    @property
    def dim(self) -> int:
        return self.frame.shape[1]


def _frame(a) -> np.ndarray:
    # raw arrays go through Subspace so a non-orthonormal frame raises
    return (a if isinstance(a, Subspace) else Subspace(a)).frame


def _coords(x) -> np.ndarray:
    return x.coords if isinstance(x, SpherePoint) else np.asarray(x, dtype=float)


# ---------------------------------------------------------------------------
# samplers


def sample_sphere(n: int, sampler: SeededSampler, count: int, post=None) -> np.ndarray:
    """``count`` uniform points on S^n, shape ``(count, n + 1)``."""
    if n < 1:
        raise ValueError(f"sphere dimension must be >= 1, got {n}")

    def fn(rng, size):
        g = rng.standard_normal((size, n + 1))
        norms = np.linalg.norm(g, axis=1)
        # a zero Gaussian vector has probability zero; redraw it anyway
        bad = norms == 0
        redrawn = 0
        while bad.any():
            g[bad] = rng.standard_normal((int(bad.sum()), n + 1))
            redrawn += int(bad.sum())
            norms = np.linalg.norm(g, axis=1)
            bad = norms == 0
        return g / norms[:, None], redrawn

    return sampler.draw(count, fn, post)


def sample_rotation(n: int, sampler: SeededSampler, count: int, post=None) -> np.ndarray:
    """Haar-distributed elements of SO(n), shape ``(count, n, n)``.

    QR of a Gaussian matrix with the signs of R's diagonal moved into Q gives
    Haar measure on O(n); flipping the first column of the det = -1 half maps
    it onto Haar measure on SO(n).
    """
    if n < 2:
        raise ValueError(f"SO(n) needs n >= 2, got {n}")

    def fn(rng, size):
        g = rng.standard_normal((size, n, n))
        q, r = np.linalg.qr(g)
        d = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
        d[d == 0] = 1.0
        q = q * d[:, None, :]
        neg = np.linalg.det(q) < 0
        q[neg, :, 0] *= -1.0
        return q

    return sampler.draw(count, fn, post)


def sample_grassmannian(k: int, n: int, sampler: SeededSampler, count: int, post=None) -> np.ndarray:
    """Haar-distributed k-planes in R^n as frames of shape ``(count, n, k)``.

    Each plane is the span of k independent standard Gaussian vectors.
    Numerically rank-deficient draws are redrawn and counted in
    ``sampler.resampled``.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")

    def fn(rng, size):
        g = rng.standard_normal((size, n, k))
        redrawn = 0
        while True:
            q, r = np.linalg.qr(g)
            d = np.abs(np.diagonal(r, axis1=-2, axis2=-1))
            bad = d.min(axis=1) <= _RANK_TOL * np.maximum(d.max(axis=1), 1.0)
            if not bad.any():
                return q, redrawn
            redrawn += int(bad.sum())
            g[bad] = rng.standard_normal((int(bad.sum()), n, k))

    return sampler.draw(count, fn, post)


# ---------------------------------------------------------------------------
# metrics


def principal_angles(a, b) -> np.ndarray:
    """Principal angles between two subspaces, ascending, in [0, pi/2].

    Cosines are the singular values of ``A^T B`` (clamped to [0, 1]); sines
    are the singular values of ``B - A A^T B``. Pairing them through
    ``arctan2`` keeps small angles accurate where ``arccos`` alone loses
    half the digits.
    """
    fa, fb = _frame(a), _frame(b)
    if fa.shape != fb.shape:
        raise ValueError(f"subspace shape mismatch: {fa.shape} vs {fb.shape}")
    m = fa.T @ fb
    cos = np.clip(np.linalg.svd(m, compute_uv=False), 0.0, 1.0)  # descending
    sin = np.clip(np.linalg.svd(fb - fa @ m, compute_uv=False)[::-1], 0.0, 1.0)  # ascending
    return np.arctan2(sin, cos)


def grassmann_distance(a, b) -> float:
    """Sup-metric on G(k, n): ``2 sin(theta_max / 2)``."""
    theta = principal_angles(a, b)
    return float(2.0 * math.sin(theta[-1] / 2.0))


def sphere_distance(x, y) -> float:
    """Geodesic distance on the unit sphere, in [0, pi].

    Equal to ``arccos(<x, y>)`` (clamped); evaluated as
    ``2 atan2(|x - y|, |x + y|)``, which is accurate at both ends of the range.
    """
    cx, cy = _coords(x), _coords(y)
    if cx.shape != cy.shape:
        raise ValueError(f"dimension mismatch: {cx.shape} vs {cy.shape}")
    return float(2.0 * math.atan2(np.linalg.norm(cx - cy), np.linalg.norm(cx + cy)))


# ---------------------------------------------------------------------------
# space objects used by the estimators


class Sphere:
    """S^n with its geodesic metric and uniform measure."""

    kind = "sphere"

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"sphere dimension must be >= 1, got {n}")
        self.n = int(n)

    def __repr__(self):
        return f"Sphere({self.n})"

    def descriptor(self) -> dict:
        return {"kind": self.kind, "n": self.n}

    @property
    def ambient_dim(self) -> int:
        return self.n + 1

    def north_pole(self) -> np.ndarray:
        p = np.zeros(self.n + 1)
        p[0] = 1.0
        return p

    def sample(self, sampler: SeededSampler, count: int, post=None) -> np.ndarray:
        return sample_sphere(self.n, sampler, count, post)

    def distance(self, xs, ys) -> np.ndarray:
        """Pairwise geodesic distances, shape ``(len(xs), len(ys))``."""
        g = np.atleast_2d(xs) @ np.atleast_2d(ys).T
        return np.arccos(np.clip(g, -1.0, 1.0))

    def tangent(self, xs, vs) -> np.ndarray:
        xs = np.atleast_2d(xs)
        vs = np.atleast_2d(vs)
        return vs - np.sum(vs * xs, axis=1, keepdims=True) * xs

    def exp(self, xs, vs) -> np.ndarray:
        """Exponential map; ``vs`` must be tangent at ``xs``."""
        xs = np.atleast_2d(xs)
        vs = np.atleast_2d(vs)
        t = np.linalg.norm(vs, axis=1, keepdims=True)
        safe = np.where(t > 0, t, 1.0)
        out = np.cos(t) * xs + np.sin(t) * vs / safe
        return out / np.linalg.norm(out, axis=1, keepdims=True)


class RotationGroup:
    """SO(n) with Haar measure; distance is the operator norm of R - R'."""

    kind = "rotation"

    def __init__(self, n: int):
        if n < 2:
            raise ValueError(f"SO(n) needs n >= 2, got {n}")
        self.n = int(n)

    def __repr__(self):
        return f"RotationGroup({self.n})"

    def descriptor(self) -> dict:
        return {"kind": self.kind, "n": self.n}

    def sample(self, sampler: SeededSampler, count: int, post=None) -> np.ndarray:
        return sample_rotation(self.n, sampler, count, post)

    def distance(self, xs, ys) -> np.ndarray:
        xs = np.asarray(xs)
        ys = np.asarray(ys)
        diff = xs[:, None, :, :] - ys[None, :, :, :]
        return np.linalg.norm(diff, ord=2, axis=(-2, -1))


class Grassmannian:
    """G(k, n) with the sup-metric and Haar measure."""

    kind = "grassmannian"

    def __init__(self, k: int, n: int):
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
        self.k = int(k)
        self.n = int(n)

    def __repr__(self):
        return f"Grassmannian({self.k}, {self.n})"

    def descriptor(self) -> dict:
        return {"kind": self.kind, "n": self.n, "k": self.k}

    def reference_plane(self) -> np.ndarray:
        """The coordinate plane spanned by the first k basis vectors."""
        return np.eye(self.n)[:, : self.k]

    def sample(self, sampler: SeededSampler, count: int, post=None) -> np.ndarray:
        return sample_grassmannian(self.k, self.n, sampler, count, post)

    def distance_to(self, frames, ref) -> np.ndarray:
        """Distances from a batch of frames to one reference frame."""
        frames = np.asarray(frames)
        m = np.einsum("bnk,nl->bkl", frames, _frame(ref))
        smin = np.linalg.svd(m, compute_uv=False).min(axis=-1)
        return np.sqrt(np.clip(2.0 * (1.0 - smin), 0.0, None))

    def distance(self, xs, ys, block: int = 256, precise: bool = False) -> np.ndarray:
        """Pairwise distances, shape ``(len(xs), len(ys))``.

        The fast path ``sqrt(2 (1 - sigma_min))`` loses about half the digits
        for nearly equal planes; ``precise=True`` pairs sines and cosines as in
        :func:`principal_angles` at a higher cost.
        """
        xs = np.asarray(xs)
        ys = np.asarray(ys)
        out = np.empty((xs.shape[0], ys.shape[0]))
        if precise:
            block = max(1, block // 8)
        for start in range(0, xs.shape[0], block):
            blk = xs[start : start + block]
            m = np.einsum("ank,bnl->abkl", blk, ys)
            smin = np.clip(np.linalg.svd(m, compute_uv=False).min(axis=-1), 0.0, 1.0)
            if precise:
                resid = ys[None] - np.einsum("ank,abkl->abnl", blk, m)
                smax = np.clip(np.linalg.svd(resid, compute_uv=False).max(axis=-1), 0.0, 1.0)
                out[start : start + block] = 2.0 * np.sin(np.arctan2(smax, smin) / 2.0)
            else:
                out[start : start + block] = np.sqrt(np.clip(2.0 * (1.0 - smin), 0.0, None))
        return out
