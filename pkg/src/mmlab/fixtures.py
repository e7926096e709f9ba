"""Named spaces, test functions, bound curves and curvature fields.

Everything the command line can refer to by name lives here.
"""
from __future__ import annotations

import numpy as np

from .analytic_bounds import CURVES, get_curve
from .concentration_lab import ScalarFunction
from .curvature_pinching import FIELD_GENERATORS
from .homogeneous_spaces import Grassmannian, RotationGroup, Sphere

__all__ = ["SPACES", "FUNCTIONS", "WAIST_FIXTURES", "make_space", "make_function", "default_curve", "list_fixtures"]

SPACES = {
    "sphere": "S^n in R^(n+1), geodesic metric, uniform measure (param n)",
    "grassmannian": "G(k,n), sup-metric 2 sin(theta_max/2), Haar measure (params k, n)",
    "rotation": "SO(n), operator-norm metric, Haar measure (param n)",
}

# function name -> (space kind, description)
FUNCTIONS = {
    "coordinate": ("sphere", "first ambient coordinate x_1 (1-Lipschitz)"),
    "distance-to-pole": ("sphere", "geodesic distance to the north pole e_1 (1-Lipschitz)"),
    "constant": (None, "the zero function"),
    "distance-to-plane": ("grassmannian", "sup-metric distance to the first coordinate k-plane (1-Lipschitz)"),
    "first-column-distance": (
        "rotation",
        "chordal distance from the first column R e_1 to e_1 (1-Lipschitz through the projection SO(n) -> S^(n-1))",
    ),
}

WAIST_FIXTURES = {
    "s2-distance-to-pole": (
        {"kind": "sphere", "n": 2},
        "distance-to-pole",
        "waist of the equator on S^2: band measure sin(eps)",
    ),
    "s10-distance-to-pole": (
        {"kind": "sphere", "n": 10},
        "distance-to-pole",
        "chain fixture on S^10: all three relations are equalities",
    ),
}


def make_space(desc: dict):
    kind = desc.get("kind")
    if kind == "sphere":
        return Sphere(int(desc["n"]))
    if kind == "grassmannian":
        return Grassmannian(int(desc["k"]), int(desc["n"]))
    if kind == "rotation":
        return RotationGroup(int(desc["n"]))
    raise ValueError(f"unknown space kind {kind!r}; known: {sorted(SPACES)}")


def _pole_gradient(x):
    c = np.clip(x[:, 0], -1.0, 1.0)
    s = np.sqrt(np.maximum(1.0 - c * c, 1e-300))
    g = np.zeros_like(x)
    g[:, 0] = -1.0 / s
    return g


def _distance_to_pole(x):
    # accurate near both poles: 2 atan2(|x - e1|, |x + e1|)
    e = np.zeros(x.shape[1])
    e[0] = 1.0
    return 2.0 * np.arctan2(np.linalg.norm(x - e, axis=1), np.linalg.norm(x + e, axis=1))


def make_function(name: str, space) -> ScalarFunction:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}; known: {sorted(FUNCTIONS)}")
    kind, doc = FUNCTIONS[name]
    if kind is not None and kind != space.kind:
        raise ValueError(f"function {name!r} is defined on {kind} spaces, not {space.kind}")
    if name == "constant":
        return ScalarFunction(name, lambda x: np.zeros(len(x)), np.zeros_like, doc=doc)
    if name == "coordinate":

        def grad(x):
            g = np.zeros_like(x)
            g[:, 0] = 1.0
            return g

        return ScalarFunction(name, lambda x: x[:, 0], grad, doc=doc)
    if name == "distance-to-pole":
        return ScalarFunction(name, _distance_to_pole, _pole_gradient, doc=doc)
    if name == "distance-to-plane":
        ref = space.reference_plane()
        return ScalarFunction(name, lambda frames: space.distance_to(frames, ref), doc=doc)

    def first_col(rs):
        e = np.zeros(rs.shape[1])
        e[0] = 1.0
        return np.linalg.norm(rs[:, :, 0] - e, axis=1)

    return ScalarFunction(name, first_col, doc=doc)


def default_curve(space):
    """Analytic tail bound that applies to 1-Lipschitz functions on ``space``."""
    if space.kind == "sphere":
        return get_curve("levy-milman", n=space.n) if space.n >= 2 else None
    if space.kind == "grassmannian":
        return get_curve("grassmann-tail", n=space.n)
    return get_curve("so-n", n=space.n)


def list_fixtures() -> list:
    """Catalog of every named space, function, curve, waist fixture and field generator."""
    out = [{"category": "space", "name": k, "description": v} for k, v in SPACES.items()]
    out += [
        {"category": "function", "name": k, "description": f"[{kind or 'any'}] {doc}"}
        for k, (kind, doc) in FUNCTIONS.items()
    ]
    out += [{"category": "curve", "name": k, "description": v[2]} for k, v in CURVES.items()]
    out += [{"category": "waist", "name": k, "description": v[2]} for k, v in WAIST_FIXTURES.items()]
    out += [{"category": "field", "name": k, "description": v} for k, v in FIELD_GENERATORS.items()]
    return out
