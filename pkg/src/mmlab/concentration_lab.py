"""Empirical median, concentration profile, isoperimetry and 1-waist estimators.

The three quantities are tied together by

    1 - 2 alpha(eps) <= w(eps) <= 1 - pi(eps),      pi(eps) <= 2 alpha(eps)

(isoperimetric function ``alpha``, waist ``w``, concentration profile ``pi``),
which :func:`verify_chain` checks on estimated curves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .analytic_bounds import sharp_profile_ratio
from .homogeneous_spaces import SeededSampler, Sphere

__all__ = [
    "ScalarFunction",
    "ScalarSampleSet",
    "ConcentrationProfile",
    "WaistEstimate",
    "ChainReport",
    "empirical_median",
    "sample_values",
    "estimate_profile",
    "analytic_profile",
    "estimate_isoperimetric_sphere",
    "estimate_waist",
    "finite_band_distance",
    "descent_band_distance",
    "verify_chain",
    "pushforward_profile",
]

EMPIRICAL = "empirical"
ANALYTIC = "analyticBound"
WAIST_MIN_SAMPLES = 10_000


@dataclass(frozen=True)
class ScalarFunction:
    """A real function evaluated on batches of points of some space.

    ``grad`` (optional) returns the ambient gradient for each point; the
    descent band distance needs it.
    """

    name: str
    fn: Callable = field(repr=False)
    grad: Callable | None = field(default=None, repr=False)
    lipschitz: float = 1.0
    doc: str = ""

    def __call__(self, points):
        return np.asarray(self.fn(points), dtype=float)


@dataclass
class ScalarSampleSet:
    values: np.ndarray
    points: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 2:
            raise ValueError("a sample set needs at least 2 scalar values")
        if self.points is not None and len(self.points) != self.values.size:
            raise ValueError("points and values have different lengths")

    def __len__(self):
        return self.values.size


def empirical_median(values) -> float:
    """Middle order statistic; midpoint of the two central ones for even length."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("median of an empty sample")
    s = np.sort(v)
    h = s.size // 2
    if s.size % 2:
        return float(s[h])
    return float(s[h - 1] + (s[h] - s[h - 1]) / 2.0)


def _check_grid(epsilons) -> np.ndarray:
    e = np.asarray(epsilons, dtype=float).ravel()
    if e.size == 0:
        raise ValueError("epsilon grid is empty")
    if (e <= 0).any():
        raise ValueError("epsilon grid must be positive")
    if (np.diff(e) <= 0).any():
        raise ValueError("epsilon grid must be strictly ascending")
    return e


@dataclass
class ConcentrationProfile:
    """Tail fractions ``mu(|f - m| > eps)`` on an epsilon grid.

    Empirical profiles keep the sorted deviations ``|f - m|`` so the tail can
    be evaluated off-grid; analytic profiles keep their evaluator.
    """

    epsilons: np.ndarray
    tail_fractions: np.ndarray
    kind: str
    median: float | None = None
    n_samples: int | None = None
    deviations: np.ndarray | None = field(default=None, repr=False)
    evaluator: Callable | None = field(default=None, repr=False)
    label: str = ""

    def __post_init__(self):
        self.epsilons = _check_grid(self.epsilons)
        self.tail_fractions = np.asarray(self.tail_fractions, dtype=float)
        if self.tail_fractions.shape != self.epsilons.shape:
            raise ValueError("grid and tail fractions differ in length")
        if self.kind not in (EMPIRICAL, ANALYTIC):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        t = self.tail_fractions
        if (t < 0).any() or (t > 1).any():
            raise ValueError("tail fractions must lie in [0, 1]")
        slack = 0.0 if self.kind == ANALYTIC else 2.0 / math.sqrt(self.n_samples or 1)
        if (np.diff(t) > slack).any():
            raise ValueError("tail fractions increase along the grid")

    @property
    def stderr(self) -> np.ndarray:
        if self.kind == ANALYTIC:
            return np.zeros_like(self.tail_fractions)
        p = self.tail_fractions
        return np.sqrt(p * (1.0 - p) / self.n_samples)

    def tail_at(self, eps):
        eps = np.asarray(eps, dtype=float)
        if self.deviations is not None:
            n = self.deviations.size
            out = (n - np.searchsorted(self.deviations, eps, side="right")) / n
        elif self.evaluator is not None:
            out = np.asarray(self.evaluator(eps), dtype=float)
        else:
            out = np.interp(eps, self.epsilons, self.tail_fractions)
        return float(out) if np.ndim(out) == 0 else out


@dataclass
class WaistEstimate:
    """Measure of the eps-tube around the level band ``|f - m| <= delta``."""

    epsilons: np.ndarray
    tube_measures: np.ndarray
    level_band_delta: float
    median: float
    n_samples: int
    band_size: int = 0
    strategy: str = ""

    def __post_init__(self):
        self.epsilons = _check_grid(self.epsilons)
        self.tube_measures = np.asarray(self.tube_measures, dtype=float)
        if self.tube_measures.shape != self.epsilons.shape:
            raise ValueError("grid and tube measures differ in length")
        if (np.diff(self.tube_measures) < -2.0 / math.sqrt(self.n_samples)).any():
            raise ValueError("tube measures decrease along the grid")

    @property
    def stderr(self) -> np.ndarray:
        p = self.tube_measures
        return np.sqrt(p * (1.0 - p) / self.n_samples)


def sample_values(f, space, sampler: SeededSampler, n: int, keep_points: bool = False) -> ScalarSampleSet:
    """Evaluate ``f`` on ``n`` Haar samples of ``space``."""
    meta = {"space": space.descriptor(), "seed": sampler.seed, "stream": sampler.stream_id, "count": int(n)}
    if keep_points:
        pts = space.sample(sampler, n)
        return ScalarSampleSet(f(pts), pts, meta)
    return ScalarSampleSet(space.sample(sampler, n, post=f), None, meta)


def estimate_profile(f, space, sampler: SeededSampler, epsilons, n: int) -> ConcentrationProfile:
    """Empirical concentration profile of ``f`` around its sample median."""
    if n < 100:
        raise ValueError(f"need at least 100 samples, got {n}")
    eps = _check_grid(epsilons)
    values = sample_values(f, space, sampler, n).values
    m = empirical_median(values)
    dev = np.sort(np.abs(values - m))
    tails = (dev.size - np.searchsorted(dev, eps, side="right")) / dev.size
    return ConcentrationProfile(
        eps, tails, EMPIRICAL, median=m, n_samples=int(n), deviations=dev, label=getattr(f, "name", "")
    )


def analytic_profile(curve, epsilons, label: str = "") -> ConcentrationProfile:
    """Wrap a tail curve ``eps -> value`` as an analytic-bound profile."""
    eps = _check_grid(epsilons)
    tails = np.asarray([float(curve(e)) for e in eps])
    return ConcentrationProfile(eps, tails, ANALYTIC, evaluator=curve, label=label or getattr(curve, "name", ""))


def estimate_isoperimetric_sphere(n: int, epsilons) -> np.ndarray:
    """Isoperimetric function of S^n on a grid: ``(1 - ratio(n, eps)) / 2``.

    Half-spheres are extremal among sets of measure 1/2, so ``alpha`` is the
    mass left outside the eps-tube of a hemisphere.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    eps = np.asarray(epsilons, dtype=float)
    if (eps < 0).any():
        raise ValueError("epsilons must be >= 0")
    ratio = np.array([sharp_profile_ratio(n, min(float(e), math.pi / 2)) for e in eps.ravel()])
    return (0.5 * (1.0 - ratio)).reshape(eps.shape)


# ---------------------------------------------------------------------------
# waist


def finite_band_distance(space, band_points, block: int = 2048):
    """Distance from each query point to the nearest collected band sample.

    Exact on finite spaces. On continuous spaces the finite sample only
    approximates the band, and the gap grows quickly with dimension
    (distances are overestimated), so use it in low dimension.
    """
    band_points = np.asarray(band_points)

    def dist(points):
        out = np.empty(len(points))
        for s in range(0, len(points), block):
            out[s : s + block] = space.distance(points[s : s + block], band_points).min(axis=1)
        return out

    return dist


def descent_band_distance(space, f: ScalarFunction, median: float, delta: float, max_iter: int = 200, tol: float = 1e-12):
    """Length of a steepest-descent geodesic path from each point into the band.

    From ``x`` we walk along the geodesic in the direction of ``-sign(f - m)
    grad f`` with a Newton step ``(|f - m| - delta) / |grad f|``. When a step
    overshoots the band, bisection along that geodesic segment finds the
    entry point. The accumulated length is an upper bound on the distance
    to the band; it is exact when the descent curves are minimizing
    geodesics (distance functions, linear coordinates on the sphere).
    """
    if not isinstance(space, Sphere):
        raise TypeError("descent band distance needs a space with an exponential map (Sphere)")
    if f.grad is None:
        raise ValueError(f"function {f.name!r} has no gradient")

    def dist(points):
        x = np.array(points, dtype=float)
        length = np.zeros(len(x))
        v = f(x)
        gap = np.abs(v - median) - delta
        active = gap > tol
        for _ in range(max_iter):
            if not active.any():
                break
            idx = np.flatnonzero(active)
            xa, va = x[idx], v[idx]
            side = np.sign(va - median)
            g = space.tangent(xa, f.grad(xa))
            gnorm = np.linalg.norm(g, axis=1)
            stuck = gnorm <= 1e-15
            if stuck.any():
                # critical point off the band: nudge along a fixed tangent direction
                e = np.zeros_like(xa[stuck])
                e[:, -1] = 1.0
                g[stuck] = space.tangent(xa[stuck], e)
                gnorm[stuck] = np.linalg.norm(g[stuck], axis=1)
            direction = -side[:, None] * g / gnorm[:, None]
            h = np.minimum(gap[idx] / np.maximum(gnorm, 1e-3), math.pi / 2)
            xn = space.exp(xa, direction * h[:, None])
            vn = f(xn)
            over = np.sign(vn - median) != side
            over &= np.abs(vn - median) > delta
            if over.any():
                o = np.flatnonzero(over)
                lo = np.zeros(o.size)
                hi = h[o].copy()
                for _ in range(60):
                    mid = (lo + hi) / 2.0
                    xm = space.exp(xa[o], direction[o] * mid[:, None])
                    vm = f(xm)
                    inside = (np.abs(vm - median) <= delta) | (np.sign(vm - median) != side[o])
                    hi = np.where(inside, mid, hi)
                    lo = np.where(inside, lo, mid)
                h[o] = hi
                xn[o] = space.exp(xa[o], direction[o] * hi[:, None])
                vn[o] = median + side[o] * delta
            length[idx] += h
            x[idx] = xn
            v[idx] = vn
            gap[idx] = np.abs(vn - median) - delta
            active[idx] = gap[idx] > tol
        else:
            length[active] = np.inf
        return length

    return dist


def estimate_waist(
    f,
    space,
    sampler: SeededSampler,
    epsilons,
    n: int,
    delta: float | None = None,
    band_distance: str | Callable = "auto",
) -> WaistEstimate:
    """Two-stage 1-waist estimator.

    Stage 1 draws ``n`` points, takes the median ``m`` of ``f`` and collects
    the level band ``P = {x : |f(x) - m| <= delta}`` (``delta`` defaults to
    the 1% quantile of ``|f - m|``). Stage 2 draws ``n`` fresh points from an
    independent child stream and reports, per eps, the fraction within
    distance eps of the band.

    The band is wider than the level set ``f^{-1}(m)``, so the estimate is
    biased upward by at most the mass of ``{eps < |f - m| <= eps + delta}``;
    ``level_band_delta`` is reported for that reason.

    ``band_distance`` is ``"finite"`` (nearest band sample), ``"descent"``
    (geodesic descent, spheres with a differentiable ``f``), ``"auto"``
    (descent when available) or a callable ``(points, band_points, m, delta) ->
    distances``.
    """
    if n < WAIST_MIN_SAMPLES:
        raise ValueError(f"the waist estimator needs at least {WAIST_MIN_SAMPLES} samples, got {n}")
    eps = _check_grid(epsilons)
    stage1 = space.sample(sampler, n)
    vals = f(stage1)
    m = empirical_median(vals)
    dev = np.abs(vals - m)
    if delta is None:
        delta = float(np.quantile(dev, 0.01))
    if delta < 0:
        raise ValueError("delta must be >= 0")
    band = stage1[dev <= delta]
    if len(band) == 0:
        raise ValueError(
            f"no stage-1 sample within delta={delta:g} of the median {m:g}; increase delta or the sample count"
        )
    del stage1

    if band_distance == "auto":
        band_distance = "descent" if isinstance(space, Sphere) and getattr(f, "grad", None) is not None else "finite"
    if band_distance == "finite":
        dist, strategy = finite_band_distance(space, band), "finite"
    elif band_distance == "descent":
        dist, strategy = descent_band_distance(space, f, m, delta), "descent"
    elif callable(band_distance):
        fn = band_distance

        def dist(points):
            return fn(points, band, m, delta)

        strategy = getattr(fn, "__name__", "custom")
    else:
        raise ValueError(f"unknown band distance strategy {band_distance!r}")

    d = np.sort(space.sample(sampler.spawn(1), n, post=dist))
    tubes = np.searchsorted(d, eps, side="right") / d.size
    return WaistEstimate(eps, tubes, float(delta), m, int(n), band_size=len(band), strategy=strategy)


# ---------------------------------------------------------------------------
# chain check and push-forward


@dataclass
class ChainReport:
    epsilons: np.ndarray
    tail: np.ndarray
    waist: np.ndarray
    alpha: np.ndarray
    slack: np.ndarray
    concentration_ok: np.ndarray  # pi <= 2 alpha
    lower_ok: np.ndarray  # w >= 1 - 2 alpha
    upper_ok: np.ndarray  # w <= 1 - pi
    upper_reference: np.ndarray = field(repr=False, default=None)

    @property
    def passed(self) -> bool:
        return bool(self.concentration_ok.all() and self.lower_ok.all() and self.upper_ok.all())

    def violations(self) -> list:
        out = []
        for name, ok in (("pi<=2alpha", self.concentration_ok), ("w>=1-2alpha", self.lower_ok), ("w<=1-pi", self.upper_ok)):
            out += [(name, float(e)) for e in self.epsilons[~ok]]
        return out

    def rows(self):
        for i, e in enumerate(self.epsilons):
            yield {
                "epsilon": float(e),
                "tail": float(self.tail[i]),
                "waist": float(self.waist[i]),
                "alpha": float(self.alpha[i]),
                "slack": float(self.slack[i]),
                "concentration_ok": bool(self.concentration_ok[i]),
                "lower_ok": bool(self.lower_ok[i]),
                "upper_ok": bool(self.upper_ok[i]),
            }


def verify_chain(profile: ConcentrationProfile, waist: WaistEstimate, alpha, tol: float = 0.0, n_se: float = 3.0) -> ChainReport:
    """Check ``pi <= 2 alpha``, ``w >= 1 - 2 alpha`` and ``w <= 1 - pi`` per eps.

    Each inequality is allowed ``tol + n_se * sqrt(se_1^2 + se_2^2)`` of
    slack, from the standard errors of the estimates involved. When the
    profile keeps its deviations, the upper relation is compared against
    ``1 - pi(eps + delta)``, which is what the delta-wide band proxy can be
    held to.
    """
    eps = profile.epsilons
    if waist.epsilons.shape != eps.shape or not np.allclose(waist.epsilons, eps, rtol=1e-12, atol=0):
        raise ValueError("profile and waist estimate use different epsilon grids")
    a = np.asarray(alpha(eps) if callable(alpha) else alpha, dtype=float)
    if a.shape != eps.shape:
        raise ValueError("alpha table does not match the epsilon grid")
    pi = profile.tail_fractions
    w = waist.tube_measures
    se_p, se_w = profile.stderr, waist.stderr
    slack = tol + n_se * np.sqrt(se_p**2 + se_w**2)
    if profile.deviations is not None and waist.level_band_delta > 0:
        upper_ref = 1.0 - np.asarray(profile.tail_at(eps + waist.level_band_delta))
    else:
        upper_ref = 1.0 - pi
    return ChainReport(
        epsilons=eps,
        tail=pi,
        waist=w,
        alpha=a,
        slack=slack,
        concentration_ok=pi <= 2.0 * a + tol + n_se * se_p,
        lower_ok=w >= 1.0 - 2.0 * a - tol - n_se * se_w,
        upper_ok=w <= upper_ref + slack,
        upper_reference=upper_ref,
    )


def pushforward_profile(profile: ConcentrationProfile, lipschitz: float) -> ConcentrationProfile:
    """Bound for the push-forward measure under an L-Lipschitz map: ``eps -> pi(eps / L)``."""
    if not lipschitz > 0:
        raise ValueError(f"Lipschitz constant must be > 0, got {lipschitz}")

    def evaluator(e):
        return profile.tail_at(np.asarray(e, dtype=float) / lipschitz)

    tails = np.asarray(evaluator(profile.epsilons), dtype=float)
    return ConcentrationProfile(
        profile.epsilons,
        tails,
        ANALYTIC,
        evaluator=evaluator,
        label=f"pushforward({profile.label}, L={lipschitz:g})",
    )
