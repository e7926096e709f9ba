import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmlab.analytic_bounds import grassmann_tail
from mmlab.curvature_pinching import (
    ComparisonConfig,
    CurvatureField,
    classification_verdict,
    comparison_distance,
    covering_characteristic,
    dimension_bound_from_tail,
    dimension_bound_N1,
    empirical_lipschitz,
    euler_characteristic,
    lipschitz_trend,
    make_field,
    median_interval_quarter_pinch,
    normalize_to_five_sixths,
    pinch_ratio,
    pointwise_pinched,
    rescale,
    toponogov_check,
)
from mmlab.homogeneous_spaces import SeededSampler
from oracles import _arc, random_sphere_triangle

positive = st.floats(1e-3, 1e3)


# --- rescaling


def test_rescale_identity_and_round_sphere():
    assert rescale(5, 1.0, 2.0, 3.0, 4.0) == (2.0, 3.0, 4.0)
    for r in (0.5, 2.0, 7.0):
        k, d, _ = rescale(3, r**2, 1.0, math.pi, 1.0)
        assert math.isclose(k, r**-2, rel_tol=1e-15) and math.isclose(d, math.pi * r, rel_tol=1e-15)
    with pytest.raises(ValueError):
        rescale(3, 0.0, 1.0, 1.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 30), positive, positive)
def test_rescale_group_law_and_volume_identity(n, l1, l2):
    k, d, v = 1.7, 2.3, 0.9
    two = rescale(n, l2, *rescale(n, l1, k, d, v))
    one = rescale(n, l1 * l2, k, d, v)
    assert all(math.isclose(a, b, rel_tol=1e-12) for a, b in zip(two, one))
    k2, d2, v2 = rescale(n, l1, k, d, v)
    assert math.isclose(v2 / v, (d2 / d) ** n, rel_tol=1e-12)


def test_normalize_examples():
    assert math.isclose(normalize_to_five_sixths(5 / 6, 1.0), 1.0, rel_tol=1e-15)
    lam = normalize_to_five_sixths(1.0, 1.0)
    assert abs(lam - (6 / 5) ** (2 / 3)) < 1e-15 and abs(lam - 1.1292) < 1e-4
    k2, d2, _ = rescale(2, lam, 1.0, 1.0, 1.0)
    assert math.isclose(k2, 5 * d2 / 6, rel_tol=1e-12)
    assert math.isclose(normalize_to_five_sixths(k2, d2), 1.0, rel_tol=1e-12)
    with pytest.raises(ValueError):
        normalize_to_five_sixths(-1.0, 1.0)


# --- pinching


def test_pinching_examples():
    s = SeededSampler(0)
    assert pointwise_pinched(make_field("constant", 4, 10, s, c=2.0), 1.0)
    assert pointwise_pinched([1.0, 2.0, 4.0], 0.25)
    assert not pointwise_pinched([1.0, 2.0, 4.0], 0.25, strict=True)
    assert pointwise_pinched([1.1, 2.0, 4.0], 0.25, strict=True)
    with pytest.raises(ValueError):
        pointwise_pinched([], 0.25)
    with pytest.raises(ValueError):
        pointwise_pinched([1.0], 0.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=20), st.floats(0.01, 1.0), st.floats(1e-3, 1e3))
def test_pinching_scale_invariant(values, delta, lam):
    v = np.array(values)
    # scaling by a power of two is exact, so the comparison cannot flip by rounding
    scale = 2.0 ** round(math.log2(lam))
    assert pointwise_pinched(v, delta) == pointwise_pinched(v / scale, delta)


def test_median_interval_examples():
    d = Fraction(3, 7)
    x, eps = Fraction(5, 6) * d, d / 2
    assert median_interval_quarter_pinch(x, eps)
    assert pinch_ratio(x, eps) == Fraction(1, 4)
    assert median_interval_quarter_pinch(Fraction(5, 3), 1)
    assert not median_interval_quarter_pinch(Fraction(5, 3) - Fraction(1, 10**9), 1)
    # float inputs at the boundary
    for d in (0.3, 1.0, 2.7):
        assert median_interval_quarter_pinch(5 * d / 6, d / 2)
        assert math.isclose(pinch_ratio(5 * d / 6, d / 2), 0.25, rel_tol=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 1000), st.integers(1, 1000), st.lists(st.floats(0, 1), min_size=1, max_size=30))
def test_median_interval_implies_quarter_pinched_fields(x, eps, us):
    if not median_interval_quarter_pinch(x, eps):
        return
    lo, hi = float(x - eps), float(x + eps)
    values = np.clip(lo + (hi - lo) * np.array(us), lo, hi)
    assert pointwise_pinched(values, 0.25)


# --- dimension bounds


def test_dimension_bound_examples():
    assert dimension_bound_N1(1) == 13
    assert dimension_bound_N1(2) == 4
    for d in np.linspace(0.1, 5, 50):
        n = dimension_bound_N1(d)
        assert n > 16 * math.log(2) / d**2 + 1 >= n - 1


def test_dimension_bound_monotone_in_d():
    ds = np.linspace(0.05, 10, 400)
    ns = [dimension_bound_N1(d) for d in ds]
    assert all(a >= b for a, b in zip(ns, ns[1:]))


def test_tail_based_bound_satisfies_inequality():
    # the least n with exp(-(n-1) eps^2/8) < 1/2, i.e. the Grassmannian tail below 1 at eps
    for eps in np.linspace(0.05, 3, 60):
        n = dimension_bound_from_tail(eps)
        assert 2 * math.exp(-(n - 1) * eps**2 / 8) < 1
        assert grassmann_tail(n, eps) < 1
        assert 2 * math.exp(-(n - 2) * eps**2 / 8) >= 1 or n == 2
    # and N1 is the same bound taken at eps = d / sqrt(2)
    for d in (0.5, 1.0, 2.0, 3.3):
        assert dimension_bound_N1(d) == dimension_bound_from_tail(d / math.sqrt(2))


# --- curvature fields and Lipschitz constants


def test_field_validation():
    planes = np.repeat(np.eye(4)[None, :, :2], 2, axis=0)
    with pytest.raises(ValueError, match="positive"):
        CurvatureField(planes, [1.0, -1.0])
    with pytest.raises(ValueError):
        CurvatureField(planes, [1.0, 2.0])  # same plane, different values


def test_constant_field_lipschitz_zero():
    f = make_field("constant", 5, 40, SeededSampler(1), c=3.0)
    assert empirical_lipschitz(f) == 0.0


def test_affine_field_recovers_slope():
    c = 2.5
    f = make_field("affine", 6, 300, SeededSampler(2), base=1.0, slope=c, include_reference=True)
    est = empirical_lipschitz(f)
    assert c * (1 - 1e-9) <= est <= c * (1 + 1e-9)


def test_lipschitz_estimate_grows_with_pairs():
    f = make_field("two-value", 5, 60, SeededSampler(3))
    prev = 0.0
    for m in (2, 10, 30, 60):
        sub = CurvatureField(f.planes[:m], f.values[:m])
        assert sub.stats["lipschitz"] >= prev
        prev = sub.stats["lipschitz"]
    assert prev == empirical_lipschitz(f)


def test_two_value_field_spans_ratio():
    f = make_field("two-value", 8, 50, SeededSampler(4), low=1.0, high=4.0)
    assert f.stats["min"] == 1.0 and f.stats["max"] == 4.0
    assert pointwise_pinched(f, 0.25) and not pointwise_pinched(f, 0.25, strict=True)
    g = f.scaled(0.1)
    assert pointwise_pinched(g, 0.25) == pointwise_pinched(f, 0.25)


def test_lipschitz_trend_reports_rows():
    rows = lipschitz_trend("affine", [3, 6, 12], 50, seed=5, slope=1.0)
    assert [r["n"] for r in rows] == [3, 6, 12]
    assert all(r["lipschitz"] <= 1.0 + 1e-9 for r in rows)


# --- comparison geometry


def _cfg_from_points(x, y, z, v, w, kappa=1.0):
    s = 1 / math.sqrt(kappa)
    return ComparisonConfig(kappa, *(s * _arc(p, q) for p, q in [(x, y), (x, z), (y, z), (x, v), (x, w), (v, w)]))


def test_model_sphere_attains_equality():
    rng = np.random.default_rng(6)
    for kappa in (1.0, 4.0, 0.25):
        for _ in range(200):
            cfg = _cfg_from_points(*random_sphere_triangle(rng), kappa=kappa)
            assert abs(comparison_distance(cfg) - cfg.d_vw) < 1e-9
            assert toponogov_check(cfg)


def test_degenerate_v_at_x():
    cfg = ComparisonConfig(1.0, 1.0, 1.2, 0.9, 0.0, 0.7, 0.7)
    assert abs(comparison_distance(cfg) - 0.7) < 1e-12
    assert toponogov_check(cfg)


def test_flat_equilateral_fails():
    cfg = ComparisonConfig(1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5)
    assert comparison_distance(cfg) > 0.5
    assert not toponogov_check(cfg)


def test_comparison_config_validation():
    with pytest.raises(ValueError, match="triangle"):
        ComparisonConfig(1.0, 1.0, 1.0, 3.0, 0.1, 0.1, 0.1)
    with pytest.raises(ValueError, match="perimeter"):
        ComparisonConfig(1.0, 2.5, 2.5, 2.0, 0.1, 0.1, 0.1)
    with pytest.raises(ValueError, match="sides"):
        ComparisonConfig(1.0, 1.0, 1.0, 1.0, 1.5, 0.1, 0.1)


# --- topology and verdicts


def test_euler_examples():
    assert euler_characteristic("sphere", 4) == 2
    assert euler_characteristic("sphere", 5) == 0
    assert euler_characteristic("complexProjective", 3) == 4
    for k in range(1, 51):
        assert euler_characteristic("sphere", 2 * k) == 2
        assert euler_characteristic("complexProjective", k) == k + 1
        assert euler_characteristic("quaternionicProjective", k) == k + 1
    with pytest.raises(ValueError):
        euler_characteristic("torus", 2)


@settings(max_examples=300, deadline=None)
@given(st.integers(-1000, 1000), st.integers(1, 1000))
def test_covering_preserves_sign(chi, degree):
    c = covering_characteristic(chi, degree)
    assert np.sign(c) == np.sign(chi)
    assert covering_characteristic(chi, 1) == chi


def test_covering_examples():
    assert covering_characteristic(2, 3) == 6
    assert covering_characteristic(0, 17) == 0
    with pytest.raises(ValueError):
        covering_characteristic(2, 0)


def test_verdicts():
    assert classification_verdict(30, True)["verdict"] == "space-form-or-CROSS"
    v = classification_verdict(24, False)
    assert v["verdict"] == "inconclusive"
    assert any("n_cric" in note and "W^24" in note for note in v["notes"])
    v = classification_verdict(30, False)
    assert v["verdict"] == "inconclusive" and v["notes"] == []
