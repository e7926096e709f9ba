import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mmlab.homogeneous_spaces import (
    CHUNK_SIZE,
    Grassmannian,
    Rotation,
    SeededSampler,
    Sphere,
    SpherePoint,
    Subspace,
    grassmann_distance,
    principal_angles,
    sample_grassmannian,
    sample_rotation,
    sample_sphere,
    sphere_distance,
)
from oracles import brute_sup_min, coordinate_cdf


def random_rotation(seed, n):
    return sample_rotation(n, SeededSampler(seed, 99), 1)[0]


# --- point types


def test_point_types_validate():
    with pytest.raises(ValueError):
        SpherePoint([1.0, 1.0])
    with pytest.raises(ValueError):
        Rotation(np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        Subspace(np.ones((3, 2)))
    with pytest.raises(ValueError, match="dependent"):
        Subspace.span(np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]]))


# --- sphere sampler


def test_sphere_norms_and_second_moment():
    n = 6
    x = sample_sphere(n, SeededSampler(1), 100_000)
    assert np.abs(np.linalg.norm(x, axis=1) - 1).max() <= 1e-12
    sq = x[:, 0] ** 2
    assert abs(sq.mean() - 1 / (n + 1)) <= 3 * sq.std() / math.sqrt(len(sq))


def test_sphere_coordinate_law_ks():
    n = 10
    x = sample_sphere(n, SeededSampler(2), 100_000)
    ks = stats.kstest(x[:, 0], lambda t: coordinate_cdf(n, t)).statistic
    assert ks < 0.01


def test_sphere_rejects_dimension_zero():
    with pytest.raises(ValueError):
        sample_sphere(0, SeededSampler(0), 10)


# --- rotation sampler


def test_rotation_invariants():
    r = sample_rotation(5, SeededSampler(3), 500)
    assert np.abs(np.linalg.det(r) - 1).max() <= 1e-10
    eye = np.einsum("bji,bjk->bik", r, r)
    assert np.abs(eye - np.eye(5)).max() <= 1e-10
    with pytest.raises(ValueError):
        sample_rotation(1, SeededSampler(0), 1)


def test_rotation_first_column_uniform():
    n = 4
    r = sample_rotation(n, SeededSampler(4), 10_000)
    s = sample_sphere(n - 1, SeededSampler(5), 10_000)
    for j in range(n):
        assert stats.ks_2samp(r[:, j, 0], s[:, j]).pvalue > 1e-3


def test_rotation_left_invariance():
    n = 5
    r = sample_rotation(n, SeededSampler(6), 20_000)
    r0 = random_rotation(7, n)
    a = r[:, 0, 0]
    b = (r0 @ r)[:, 0, 0]
    se = math.sqrt(a.var() / len(a) + b.var() / len(b))
    assert abs(a.mean() - b.mean()) <= 3 * se
    assert abs((a**2).mean() - (b**2).mean()) <= 3 * math.sqrt((a**2).var() / len(a) + (b**2).var() / len(b))


# --- Grassmannian sampler


def test_grassmannian_frames_orthonormal():
    f = sample_grassmannian(3, 7, SeededSampler(8), 300)
    g = np.einsum("bji,bjk->bik", f, f)
    assert np.abs(g - np.eye(3)).max() <= 1e-10
    with pytest.raises(ValueError):
        sample_grassmannian(4, 3, SeededSampler(0), 1)


def test_grassmannian_full_dimension_is_single_point():
    g = Grassmannian(4, 4)
    d = g.distance_to(g.sample(SeededSampler(9), 50), g.reference_plane())
    assert np.abs(d).max() <= 1e-7


def test_grassmannian_rotation_invariance_ks():
    g = Grassmannian(2, 6)
    frames = g.sample(SeededSampler(10), 10_000)
    r0 = random_rotation(11, 6)
    ref = g.reference_plane()
    before = g.distance_to(frames, ref)
    after = g.distance_to(np.einsum("ij,bjk->bik", r0, frames), ref)
    assert stats.ks_2samp(before, after).statistic < 0.02


def test_resample_counter_exposed():
    s = SeededSampler(12)
    sample_grassmannian(2, 5, s, 100)
    assert s.resampled == 0


# --- principal angles and the sup-metric


def test_principal_angles_examples():
    a = np.eye(4)[:, :2]
    assert np.allclose(principal_angles(a, a), 0)
    assert np.allclose(principal_angles(a, np.eye(4)[:, 2:]), math.pi / 2)
    alpha = 0.7
    b = np.array([[1, 0], [0, math.cos(alpha)], [0, math.sin(alpha)]])
    ang = principal_angles(np.eye(3)[:, :2], b)
    assert np.allclose(ang, [0, alpha], atol=1e-14)
    with pytest.raises(ValueError):
        principal_angles(np.eye(4)[:, :2], np.eye(4)[:, :3])


def test_principal_angles_small_angles_accurate():
    t = 1e-9
    b = np.array([[1.0], [t]]) / math.hypot(1.0, t)
    assert abs(principal_angles(np.array([[1.0], [0.0]]), b)[0] - math.atan(t)) <= 1e-22


def test_grassmann_distance_examples():
    a = np.eye(5)[:, :2]
    assert grassmann_distance(a, a) == 0.0
    assert math.isclose(grassmann_distance(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])), math.sqrt(2))


def test_grassmann_distance_matches_sup_min_oracle():
    g = Grassmannian(2, 5)
    a = g.sample(SeededSampler(13), 20)
    b = g.sample(SeededSampler(14), 20)
    for x, y in zip(a, b):
        assert abs(grassmann_distance(x, y) - brute_sup_min(x, y)) <= 1e-3


def test_grassmann_triangle_inequality():
    g = Grassmannian(2, 6)
    a, b, c = (g.sample(SeededSampler(15, i), 300) for i in range(3))
    for x, y, z in zip(a, b, c):
        assert grassmann_distance(x, z) <= grassmann_distance(x, y) + grassmann_distance(y, z) + 1e-9


def test_grassmann_rotation_invariance():
    g = Grassmannian(2, 6)
    a, b = g.sample(SeededSampler(16), 100), g.sample(SeededSampler(17), 100)
    rs = sample_rotation(6, SeededSampler(18), 100)
    for x, y, r in zip(a, b, rs):
        assert abs(grassmann_distance(r @ x, r @ y) - grassmann_distance(x, y)) <= 1e-10


def test_chord_below_arc():
    g = Grassmannian(3, 7)
    a, b = g.sample(SeededSampler(19), 200), g.sample(SeededSampler(20), 200)
    for x, y in zip(a, b):
        assert grassmann_distance(x, y) <= principal_angles(x, y)[-1] + 1e-15


def test_vectorized_distance_matches_pairwise():
    g = Grassmannian(2, 6)
    a, b = g.sample(SeededSampler(21), 7), g.sample(SeededSampler(22), 5)
    table = g.distance(a, b)
    precise = g.distance(a, b, precise=True)
    direct = np.array([[grassmann_distance(x, y) for y in b] for x in a])
    assert np.allclose(table, direct, atol=1e-7)
    assert np.allclose(precise, direct, atol=1e-13)


# --- sphere metric


def test_sphere_distance_examples():
    e = np.eye(3)
    assert sphere_distance(e[0], e[0]) == 0.0
    assert sphere_distance(e[0], -e[0]) == math.pi
    assert math.isclose(sphere_distance(e[0], e[1]), math.pi / 2)
    with pytest.raises(ValueError):
        sphere_distance(e[0], np.eye(4)[0])


def test_sphere_exp_moves_by_tangent_length():
    s = Sphere(4)
    x = s.sample(SeededSampler(23), 50)
    v = s.tangent(x, np.random.default_rng(0).standard_normal(x.shape))
    v *= (0.5 / np.linalg.norm(v, axis=1))[:, None]
    y = s.exp(x, v)
    assert np.allclose([sphere_distance(p, q) for p, q in zip(x, y)], 0.5, atol=1e-12)


# --- determinism


def test_equal_seeds_identical_streams():
    a = sample_sphere(3, SeededSampler(42, 1), 3 * CHUNK_SIZE + 17)
    b = sample_sphere(3, SeededSampler(42, 1, workers=4), 3 * CHUNK_SIZE + 17)
    assert a.tobytes() == b.tobytes()
    c = sample_sphere(3, SeededSampler(42, 2), 3 * CHUNK_SIZE + 17)
    assert not np.array_equal(a, c)


def test_spawned_streams_differ_and_reproduce():
    s = SeededSampler(5)
    a = s.spawn(1).generator(0).random(4)
    assert np.array_equal(a, SeededSampler(5).spawn(1).generator(0).random(4))
    assert not np.array_equal(a, s.spawn(2).generator(0).random(4))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(0, 50), st.integers(1, 2 * CHUNK_SIZE + 3), st.integers(1, 8))
def test_worker_count_never_changes_samples(seed, stream, count, workers):
    one = sample_rotation(3, SeededSampler(seed, stream), count)
    many = sample_rotation(3, SeededSampler(seed, stream, workers=workers), count)
    assert one.tobytes() == many.tobytes()
