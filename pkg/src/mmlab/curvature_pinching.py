"""Rescaling laws, pinching predicates and the dimension arithmetic built on them.

Curvature data here is synthetic: a :class:`CurvatureField` is a positive
function sampled on 2-planes of R^n (points of G(2, n)), standing in for the
sectional curvature at one point of a manifold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .homogeneous_spaces import Grassmannian, SeededSampler

__all__ = [
    "CurvatureField",
    "RescaledQuantities",
    "ComparisonConfig",
    "rescale",
    "normalize_to_five_sixths",
    "pointwise_pinched",
    "pinch_ratio",
    "median_interval_quarter_pinch",
    "dimension_bound_N1",
    "dimension_bound_from_tail",
    "empirical_lipschitz",
    "comparison_distance",
    "toponogov_check",
    "euler_characteristic",
    "covering_characteristic",
    "classification_verdict",
    "make_field",
    "FIELD_GENERATORS",
    "lipschitz_trend",
    "WALLACH_DIMENSION",
]

# dimension of the Wallach flag manifold F4/Spin(8), positively curved but
# neither a space form nor a rank one symmetric space
WALLACH_DIMENSION = 24

_DUPLICATE_TOL = 1e-12


# ---------------------------------------------------------------------------
# curvature fields


def _pairwise_lipschitz(planes, values) -> float:
    planes = np.asarray(planes)
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        raise ValueError("need at least 2 planes")
    k, n = planes.shape[2], planes.shape[1]
    d = Grassmannian(k, n).distance(planes, planes, precise=True)
    dv = np.abs(values[:, None] - values[None, :])
    iu = np.triu_indices(len(values), 1)
    d, dv = d[iu], dv[iu]
    dup = d <= _DUPLICATE_TOL
    scale = max(1.0, float(np.abs(values).max()))
    if (dv[dup] > _DUPLICATE_TOL * scale).any():
        raise ValueError("inconsistent field: coincident planes carry different curvature values")
    keep = ~dup
    if not keep.any():
        return 0.0
    return float((dv[keep] / d[keep]).max())


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Positive curvature values on sampled 2-planes, with frozen statistics.

    ``lipschitz`` is the largest difference quotient over sampled pairs: a
    lower bound for the true Lipschitz constant of the field.
    """

    planes: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        planes = np.array(self.planes, dtype=float)
        values = np.array(self.values, dtype=float).ravel()
        if planes.ndim != 3:
            raise ValueError("planes must be an array of n x k frames")
        if len(planes) != len(values):
            raise ValueError("planes and values differ in length")
        if values.size == 0:
            raise ValueError("empty curvature field")
        if not (values > 0).all():
            raise ValueError("curvature values must be strictly positive")
        planes.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "planes", planes)
        object.__setattr__(self, "values", values)
        stats = {
            "min": float(values.min()),
            "max": float(values.max()),
            "median": float(np.median(values)),
            "lipschitz": _pairwise_lipschitz(planes, values) if values.size >= 2 else 0.0,
        }
        object.__setattr__(self, "stats", stats)

    def __len__(self):
        return self.values.size

    @property
    def n(self) -> int:
        return self.planes.shape[1]

    def scaled(self, factor: float) -> "CurvatureField":
        return CurvatureField(self.planes, self.values * factor, dict(self.meta))


def empirical_lipschitz(field: CurvatureField) -> float:
    """``max |K(p) - K(q)| / d(p, q)`` over sampled pairs (a lower bound)."""
    if len(field) < 2:
        raise ValueError("need at least 2 planes")
    return field.stats["lipschitz"]


def make_field(kind: str, n: int, count: int, sampler: SeededSampler, **params) -> CurvatureField:
    """Synthetic curvature fields on random 2-planes of R^n.

    ``constant``: value ``c``.
    ``affine``: ``base + slope * d(p, p0)`` with p0 the first coordinate plane
    (included as the first sample when ``include_reference``).
    ``two-value``: each plane gets ``low`` or ``high`` at random.
    """
    if kind not in FIELD_GENERATORS:
        raise KeyError(f"unknown field generator {kind!r}; known: {sorted(FIELD_GENERATORS)}")
    g = Grassmannian(2, n)
    planes = g.sample(sampler, count)
    if kind == "constant":
        values = np.full(count, float(params.get("c", 1.0)))
    elif kind == "affine":
        base, slope = float(params.get("base", 1.0)), float(params.get("slope", 1.0))
        ref = g.reference_plane()
        if params.get("include_reference", False):
            planes[0] = ref
        d = g.distance(planes, ref[None], precise=True)[:, 0]
        values = base + slope * d
    else:
        low, high = float(params.get("low", 1.0)), float(params.get("high", 4.0))
        pick = sampler.spawn(7).generator(0).random(count) < 0.5
        values = np.where(pick, low, high)
        values[0], values[-1] = low, high
    meta = {"generator": kind, "n": n, "count": count, "seed": sampler.seed, "params": dict(params)}
    return CurvatureField(planes, values, meta)


FIELD_GENERATORS = {
    "constant": "constant curvature c on random 2-planes",
    "affine": "base + slope * distance to a fixed coordinate plane",
    "two-value": "values low/high assigned at random, spanning the ratio low/high",
}


def lipschitz_trend(kind: str, dims, count: int, seed: int, **params) -> list:
    """Empirical Lipschitz constant of a fixture field across dimensions.

    Reports the measured trend only; no limit is asserted.
    """
    rows = []
    for i, n in enumerate(dims):
        f = make_field(kind, int(n), count, SeededSampler(seed, stream_id=i), **params)
        rows.append({"n": int(n), "count": count, "lipschitz": f.stats["lipschitz"], "min": f.stats["min"], "max": f.stats["max"]})
    return rows


# ---------------------------------------------------------------------------
# rescaling


@dataclass(frozen=True)
class RescaledQuantities:
    lam: float
    curvature_scale: float
    diameter_scale: float
    volume_scale: float

    @classmethod
    def for_factor(cls, lam: float, n: int) -> "RescaledQuantities":
        if not lam > 0:
            raise ValueError("lambda must be > 0")
        return cls(lam, 1.0 / lam, lam**0.5, lam ** (n / 2.0))


def rescale(n: int, lam: float, k: float, d: float, vol: float):
    """Curvature, diameter and volume after ``g -> lam g``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    for name, val in (("lambda", lam), ("k", k), ("d", d), ("vol", vol)):
        if not val > 0:
            raise ValueError(f"{name} must be > 0, got {val}")
    q = RescaledQuantities.for_factor(lam, n)
    return k * q.curvature_scale, d * q.diameter_scale, vol * q.volume_scale


def normalize_to_five_sixths(k: float, d: float) -> float:
    """Factor ``lam`` with ``k / lam = (5/6) sqrt(lam) d``, i.e. ``(6k / 5d)^(2/3)``."""
    if not (k > 0 and d > 0):
        raise ValueError("k and d must be > 0")
    lam = (6.0 * k / (5.0 * d)) ** (2.0 / 3.0)
    k2, d2, _ = rescale(1, lam, k, d, 1.0)
    if not math.isclose(k2, 5.0 * d2 / 6.0, rel_tol=1e-12):
        raise ArithmeticError("normalization failed to reach k = 5d/6")
    return lam


# ---------------------------------------------------------------------------
# pinching


def pointwise_pinched(field, delta: float, strict: bool = False) -> bool:
    """``delta * max K <= min K`` (weak) or ``<`` (strict) over the sampled planes."""
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    if isinstance(field, CurvatureField):
        lo, hi = field.stats["min"], field.stats["max"]
    else:
        vals = np.asarray(field, dtype=float)
        if vals.size == 0:
            raise ValueError("empty field")
        lo, hi = float(vals.min()), float(vals.max())
    if lo < 0:
        return False
    return delta * hi < lo if strict else delta * hi <= lo


def pinch_ratio(x, eps):
    """``(x - eps) / (x + eps)``, the pinching ratio of the interval [x - eps, x + eps].

    Exact for ``Fraction`` or integer inputs.
    """
    return (x - eps) / (x + eps)


def median_interval_quarter_pinch(x, eps) -> bool:
    """Is every field with values in ``[x - eps, x + eps]`` weakly 1/4-pinched?

    True iff ``x - eps > 0`` and ``4 (x - eps) >= x + eps``, i.e. ``3x >= 5 eps``.
    For float inputs the boundary ``x = 5 eps / 3`` is accepted to within a
    relative 1e-12 so that ``x = 5d/6, eps = d/2`` lands on it.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    if not x - eps > 0:
        return False
    if isinstance(x, (int, Fraction)) and isinstance(eps, (int, Fraction)):
        return 3 * x >= 5 * eps
    return 3.0 * x >= 5.0 * eps * (1.0 - 1e-12)


def dimension_bound_N1(d: float) -> int:
    """Least integer n with ``n > 16 ln 2 / d^2 + 1``."""
    if not d > 0:
        raise ValueError("d must be > 0")
    threshold = 16.0 * math.log(2.0) / d**2 + 1.0
    return math.floor(threshold) + 1


def dimension_bound_from_tail(eps: float) -> int:
    """Least n with ``exp(-(n - 1) eps^2 / 8) < 1/2``, i.e. ``n > 8 ln 2 / eps^2 + 1``.

    At ``eps = d/2`` this is ``n > 32 ln 2 / d^2 + 1``; :func:`dimension_bound_N1`
    equals it at ``eps = d / sqrt(2)``.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    n = math.floor(8.0 * math.log(2.0) / eps**2 + 1.0) + 1
    # guard the floor against rounding right at the threshold
    while not math.exp(-(n - 1) * eps**2 / 8.0) < 0.5:
        n += 1
    while n > 2 and math.exp(-(n - 2) * eps**2 / 8.0) < 0.5:
        n -= 1
    return n


# ---------------------------------------------------------------------------
# comparison geometry


@dataclass(frozen=True)
class ComparisonConfig:
    """Five distances in a space with curvature >= kappa, plus the query d(v, w).

    ``v`` lies on a minimizing segment from x to y, ``w`` on one from x to z.
    """

    kappa: float
    d_xy: float
    d_xz: float
    d_yz: float
    d_xv: float
    d_xw: float
    d_vw: float

    def __post_init__(self):
        tol = 1e-12
        if not self.kappa > 0:
            raise ValueError("kappa must be > 0")
        a, b, c = self.d_xy, self.d_xz, self.d_yz
        if min(a, b, c, self.d_xv, self.d_xw, self.d_vw) < 0:
            raise ValueError("distances must be non-negative")
        scale = tol * max(1.0, a + b + c)
        if a > b + c + scale or b > a + c + scale or c > a + b + scale:
            raise ValueError("the three side lengths violate the triangle inequality")
        if a + b + c > 2.0 * math.pi / math.sqrt(self.kappa) + scale:
            raise ValueError("perimeter exceeds 2 pi / sqrt(kappa): no comparison triangle exists")
        if self.d_xv > a + scale or self.d_xw > b + scale:
            raise ValueError("v, w must lie on the sides xy, xz")


def _angle_at_x(a: float, b: float, c: float) -> float:
    """Angle at the vertex between sides a and b of a unit-sphere triangle with third side c.

    Half-angle formula ``tan(C/2) = sqrt(sin(s-a) sin(s-b) / (sin s sin(s-c)))``,
    which stays accurate for thin triangles where the law of cosines does not.
    """
    s = (a + b + c) / 2.0
    num = max(0.0, math.sin(s - a) * math.sin(s - b))
    den = max(0.0, math.sin(s) * math.sin(s - c))
    return 2.0 * math.atan2(math.sqrt(num), math.sqrt(den))


def comparison_distance(cfg: ComparisonConfig) -> float:
    """``d(v', w')`` in the comparison triangle on the sphere of curvature kappa."""
    r = math.sqrt(cfg.kappa)
    a, b, c = cfg.d_xy * r, cfg.d_xz * r, cfg.d_yz * r
    p, q = cfg.d_xv * r, cfg.d_xw * r
    if a == 0 or b == 0:
        gamma = 0.0  # v' or w' coincides with x'; the angle is irrelevant
    else:
        gamma = _angle_at_x(a, b, c)
    # x' at the pole, v' along the first meridian, w' along the meridian at angle gamma
    v = np.array([math.sin(p), 0.0, math.cos(p)])
    w = np.array([math.sin(q) * math.cos(gamma), math.sin(q) * math.sin(gamma), math.cos(q)])
    return 2.0 * math.atan2(np.linalg.norm(v - w), np.linalg.norm(v + w)) / r


def toponogov_check(cfg: ComparisonConfig, tol: float = 1e-9) -> bool:
    """``d(v, w) >= d(v', w')`` up to ``tol``."""
    return cfg.d_vw >= comparison_distance(cfg) - tol


# ---------------------------------------------------------------------------
# topology


def euler_characteristic(kind: str, n: int) -> int:
    """Euler characteristic of S^n, CP^n or HP^n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind == "sphere":
        return 1 + (-1) ** n
    if kind in ("complexProjective", "quaternionicProjective"):
        return n + 1
    raise ValueError(f"unknown kind {kind!r}; expected sphere, complexProjective or quaternionicProjective")


def covering_characteristic(base_chi: int, degree: int) -> int:
    """Euler characteristic of a finite ``degree``-sheeted cover."""
    if degree < 1:
        raise ValueError("covering degree must be >= 1")
    return degree * base_chi


def classification_verdict(n: int, pinched: bool, n_crit_lower: int = WALLACH_DIMENSION + 1) -> dict:
    """Verdict record for a manifold of dimension n given its pinching status."""
    if n < 2:
        raise ValueError("n must be >= 2")
    label = "space-form-or-CROSS" if pinched else "inconclusive"
    rec = {"n": int(n), "pinched": bool(pinched), "verdict": label, "notes": []}
    if n < n_crit_lower:
        rec["notes"].append(
            f"n_cric >= {n_crit_lower}: the Wallach manifold W^24 = F4/Spin(8) is positively curved "
            "but neither a spherical space form nor a rank one symmetric space"
        )
    return rec
