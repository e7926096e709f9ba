"""Closed-form concentration tails and the sharp spherical profile.

Dimension convention: ``n`` is the dimension of the sphere S^n (embedded in
R^{n+1}) or the ``n`` of SO(n) / G(k, n). Every tail is clamped to 1, where
the inequalities carry no information.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

__all__ = [
    "BoundCurve",
    "levy_milman_tail",
    "sharp_profile_ratio",
    "levy_gromov_tail",
    "so_n_ricci_constant",
    "grassmann_tail",
    "sharp_sphere_tail",
    "CURVES",
    "get_curve",
]

# log-integrand values below this (relative to the peak) are dropped
_LOG_CUTOFF = -745.0


def levy_milman_tail(n, eps):
    """``2 exp(-(n - 1) eps^2 / 2)``, clamped to 1."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    eps = np.asarray(eps, dtype=float)
    if (eps < 0).any():
        raise ValueError("eps must be >= 0")
    out = np.minimum(1.0, 2.0 * np.exp(-(n - 1) * eps**2 / 2.0))
    return float(out) if out.ndim == 0 else out


def levy_gromov_tail(R, eps):
    """Tail ``2 exp(-R eps^2 / 2)`` for a manifold with Ricci curvature >= R > 0.

    The comparison is used in the direction: the manifold concentrates at
    least as strongly as the model sphere whose Ricci curvature equals R, so
    its tail is bounded *above* by the sphere's. The reverse inequality
    between the two profiles is sometimes printed; it is a misprint, since it
    would not yield this bound.
    """
    if not R > 0:
        raise ValueError(f"Ricci lower bound R must be > 0, got {R}")
    eps = np.asarray(eps, dtype=float)
    if (eps < 0).any():
        raise ValueError("eps must be >= 0")
    out = np.minimum(1.0, 2.0 * np.exp(-R * eps**2 / 2.0))
    return float(out) if out.ndim == 0 else out


def so_n_ricci_constant(n: int) -> float:
    """Ricci lower bound ``(n - 1) / 4`` of SO(n) with its bi-invariant metric."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return (n - 1) / 4.0


def grassmann_tail(n, eps):
    """``2 exp(-(n - 1) eps^2 / 8)`` for G(k, n), clamped to 1.

    Evaluated as the SO(n) Levy-Gromov tail: G(k, n) is a 1-Lipschitz
    quotient of SO(n), so its profile is dominated by that of SO(n).
    """
    return levy_gromov_tail(so_n_ricci_constant(n), eps)


def _log_cos_power(t, p):
    # log cos t = log1p(-sin^2 t) / 2 keeps full relative accuracy for small t,
    # where p * log(cos t) would amplify the rounding of cos t by p
    if t < math.pi / 4:
        return 0.5 * p * math.log1p(-math.sin(t) ** 2)
    c = math.cos(t)
    return p * math.log(c) if c > 0 else -math.inf


def _cos_power_integral(p: float, upper: float) -> float:
    """``int_0^upper cos(t)^p dt`` relative to its peak value at t = 0 (= 1).

    The integrand is evaluated as ``exp(p log cos t - peak)`` with the peak
    log-value 0 at t = 0, and integrated adaptively over panels scaled to the
    width ``1/sqrt(p)`` of the bump. Beyond the point where the log-integrand
    falls below ``_LOG_CUTOFF`` the contribution is below double precision
    and is dropped.
    """
    if upper <= 0:
        return 0.0
    width = 1.0 / math.sqrt(p)
    # p log cos t <= -p t^2 / 2, so this t already lies past the cutoff
    t_cut = math.sqrt(2.0 * -_LOG_CUTOFF / p)
    hi = min(upper, t_cut, math.pi / 2)
    peak = 0.0

    def f(t):
        return math.exp(_log_cos_power(t, p) - peak) if t < math.pi / 2 else 0.0

    breaks = [0.0]
    step = width
    while breaks[-1] + step < hi:
        breaks.append(breaks[-1] + step)
        step *= 2.0
    breaks.append(hi)
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=200)
        total += val
    return total


def sharp_profile_ratio(n: int, eps: float) -> float:
    """``int_0^eps cos^{n-1} / int_0^{pi/2} cos^{n-1}`` for S^n.

    This is the normalized measure of the ``eps``-band around an equator of
    S^n, i.e. the sharp concentration value. Stable up to n = 10^6.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 0.0 <= eps <= math.pi / 2:
        raise ValueError(f"eps must lie in [0, pi/2], got {eps}")
    p = float(n - 1)
    den = _cos_power_integral(p, math.pi / 2)
    num = _cos_power_integral(p, eps)
    return min(1.0, num / den)


def sharp_sphere_tail(n, eps):
    """``1 - sharp_profile_ratio(n, eps)``: mass outside the eps-band of an equator."""
    eps = np.asarray(eps, dtype=float)
    vals = np.array([1.0 - sharp_profile_ratio(n, min(float(e), math.pi / 2)) for e in eps.ravel()])
    vals = vals.reshape(eps.shape)
    return float(vals) if vals.ndim == 0 else vals


@dataclass
class BoundCurve:
    """Named tail curve ``eps -> value in [0, 1]`` with fixed parameters."""

    name: str
    params: dict
    evaluator: Callable = field(repr=False)
    doc: str = ""

    def __call__(self, eps):
        return self.evaluator(eps=eps, **self.params)

    def table(self, epsilons) -> np.ndarray:
        return np.asarray([self(float(e)) for e in np.asarray(epsilons, dtype=float)])


# name -> (evaluator, required params, description)
CURVES = {
    "levy-milman": (
        levy_milman_tail,
        ("n",),
        "2 exp(-(n-1) eps^2/2): tail of a 1-Lipschitz function on S^n",
    ),
    "sharp-sphere": (
        sharp_sphere_tail,
        ("n",),
        "1 - ratio of cos^(n-1) integrals: exact tail of the equatorial band on S^n",
    ),
    "levy-gromov": (
        levy_gromov_tail,
        ("R",),
        "2 exp(-R eps^2/2): tail on a manifold with Ricci >= R > 0; "
        "applied as tail_M <= tail_model_sphere (the reverse printed inequality is a misprint)",
    ),
    "so-n": (
        lambda eps, n: levy_gromov_tail(so_n_ricci_constant(n), eps),
        ("n",),
        "Levy-Gromov tail of SO(n) with R = (n-1)/4",
    ),
    "grassmann-tail": (
        grassmann_tail,
        ("n",),
        "2 exp(-(n-1) eps^2/8): tail on G(k,n), pushed forward from SO(n)",
    ),
}


def get_curve(name: str, **params) -> BoundCurve:
    if name not in CURVES:
        raise KeyError(f"unknown bound curve {name!r}; known: {sorted(CURVES)}")
    fn, required, doc = CURVES[name]
    missing = [r for r in required if r not in params]
    if missing:
        raise ValueError(f"curve {name!r} needs parameters {missing}")
    return BoundCurve(name, {k: params[k] for k in required}, fn, doc)
