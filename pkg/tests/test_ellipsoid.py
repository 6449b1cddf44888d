import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bmlab.body import SymmetricBody, apply_map, cross_polytope, cube, random_map, regular_polygon
from bmlab.ellipsoid import (Ellipsoid, MeanSpec, ellipsoid_gauge, jacobi_eigh, john, loewner, loewner_body,
                             map_ellipsoid, mean_ellipsoid, mean_ellipsoid_check, polar_ellipsoid,
                             tangent_dual_point)
from bmlab.rng import stream
from bmlab.stability import random_polygon

seeds = st.integers(0, 2**32)


def random_spd(seed, n):
    g = stream(seed, 17)
    A = np.array([[g.normal() for _ in range(n)] for _ in range(n)])
    return A @ A.T + 0.3 * np.eye(n)


def test_gauge_examples():
    assert ellipsoid_gauge(Ellipsoid.ball(2), [3, 4]) == pytest.approx(5)
    assert ellipsoid_gauge(Ellipsoid(np.diag([0.25, 1])), [2, 0]) == pytest.approx(1)
    assert ellipsoid_gauge(Ellipsoid(random_spd(1, 3)), np.zeros(3)) == 0


def test_polar_examples():
    np.testing.assert_allclose(polar_ellipsoid(Ellipsoid.ball(3)).Q, np.eye(3))
    np.testing.assert_allclose(polar_ellipsoid(Ellipsoid(np.diag([0.25, 1]))).Q, np.diag([4, 1]))


@given(seeds, st.integers(2, 4))
def test_polar_is_involution(seed, n):
    E = Ellipsoid(random_spd(seed, n))
    np.testing.assert_allclose(polar_ellipsoid(polar_ellipsoid(E)).Q, E.Q, rtol=1e-10, atol=1e-10)


def test_tangent_dual_examples():
    np.testing.assert_allclose(tangent_dual_point(Ellipsoid.ball(3), [1, 0, 0]), [1, 0, 0])
    np.testing.assert_allclose(tangent_dual_point(Ellipsoid(np.diag([0.25, 1])), [2, 0]), [0.5, 0])
    with pytest.raises(ValueError):
        tangent_dual_point(Ellipsoid.ball(2), [0.5, 0])


@given(seeds, st.integers(2, 4))
def test_tangent_dual_point_properties(seed, n):
    E = Ellipsoid(random_spd(seed, n))
    g = stream(seed, 3)
    x = np.array([g.normal() for _ in range(n)])
    x /= ellipsoid_gauge(E, x)
    y = tangent_dual_point(E, x)
    assert x @ y == pytest.approx(1, abs=1e-10)
    assert ellipsoid_gauge(polar_ellipsoid(E), y) == pytest.approx(1, abs=1e-10)


def test_jacobi_matches_numpy():
    S = random_spd(5, 4)
    w, V = jacobi_eigh(S)
    np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(S), rtol=1e-12)
    np.testing.assert_allclose(V @ np.diag(w) @ V.T, S, atol=1e-11)
    np.testing.assert_allclose(V.T @ V, np.eye(4), atol=1e-12)


def test_mean_ellipsoid_examples():
    ms = MeanSpec(np.eye(2), np.array([2.0, 1.0]))
    np.testing.assert_allclose(mean_ellipsoid(ms, 0).Q, np.eye(2))
    np.testing.assert_allclose(mean_ellipsoid(ms, 1).Q, np.diag([0.25, 1]))
    np.testing.assert_allclose(mean_ellipsoid(ms, 0.5).Q, np.diag([0.5, 1]))  # semiaxes sqrt2, 1


@given(seeds, st.floats(0, 1), st.floats(0, 1))
def test_mean_ellipsoid_monotone(seed, a, b):
    lo, hi = min(a, b), max(a, b)
    g = stream(seed, 0)
    axes = np.array([1 + 2 * g.random() for _ in range(3)])
    V, _ = np.linalg.qr(random_spd(seed, 3))
    ms = MeanSpec(V, axes)
    # larger parameter means a larger ellipsoid, so a smaller Q
    gap = mean_ellipsoid(ms, lo).Q - mean_ellipsoid(ms, hi).Q
    assert np.linalg.eigvalsh(gap).min() >= -1e-12


def test_loewner_examples():
    for n in (2, 3, 4):
        np.testing.assert_allclose(loewner_body(cube(n)).Q, np.eye(n) / n, atol=1e-7)
        np.testing.assert_allclose(loewner_body(cross_polytope(n)).Q, np.eye(n), atol=1e-7)
    E = loewner([[2, 0], [-2, 0], [0, 1], [0, -1]])
    np.testing.assert_allclose(E.Q, np.diag([0.25, 1]), atol=1e-8)


@given(seeds, st.integers(0, 1000))
def test_loewner_contains_points_and_is_tight(seed, i):
    K = random_polygon(seed, i)
    eps = 1e-8
    E = loewner(K.vertices, eps)
    g = ellipsoid_gauge(E, K.vertices)
    assert g.max() <= 1 + eps
    assert g.max() > 1 / (1 + eps)


def test_john_examples():
    for n in (2, 3, 4):
        np.testing.assert_allclose(john(cube(n)).Q, np.eye(n), atol=1e-7)
    np.testing.assert_allclose(john(cross_polytope(3)).Q, 3 * np.eye(3), atol=1e-6)
    # the regular hexagon with circumradius 1 has its incircle as John ellipse
    np.testing.assert_allclose(john(regular_polygon(6)).Q, np.eye(2) * 4 / 3, atol=1e-7)


def test_john_hexagon_against_brute_force():
    H = regular_polygon(6)
    best = 0.0
    # area of axis-ratio / rotation family inscribed in H, scaled maximally
    for t in np.linspace(0, np.pi, 61):
        c, s = np.cos(t), np.sin(t)
        Rm = np.array([[c, -s], [s, c]])
        for k in np.linspace(0.6, 1.6, 101):
            D = Rm @ np.diag([k, 1 / k]) @ Rm.T  # unit-area shape
            scale = 1 / np.sqrt(np.einsum("ij,jk,ik->i", H.half_facets, D @ D.T, H.half_facets)).max()
            best = max(best, scale)
    area_john = np.pi / np.sqrt(np.linalg.det(john(H).Q))
    assert area_john == pytest.approx(np.pi * best ** 2, rel=1e-3)
    assert area_john >= np.pi * best ** 2 * (1 - 1e-9)


@given(seeds, st.integers(0, 1000))
def test_john_inside_and_equivariant(seed, i):
    K = random_polygon(seed, i)
    E = john(K)
    # inscribed: support of E in every facet direction is at most 1
    h = np.sqrt(np.einsum("ij,jk,ik->i", K.half_facets, np.linalg.inv(E.Q), K.half_facets))
    assert h.max() <= 1 + 1e-7
    T = random_map(stream(seed, i), 2)
    Et = john(apply_map(T, K))
    np.testing.assert_allclose(Et.Q, map_ellipsoid(T, E).Q, rtol=1e-5, atol=1e-6 * np.abs(Et.Q).max())


def prism_body():
    """Box-like body in R^3 whose contacts at ratio sqrt2 all lie in the x1-x2 plane."""
    F = [[1, 0, 0], [0, 1, 0], [0, 0, 1 / 1.05]] + [[0.5 * a, 0.5 * b, 0.7] for a in (1, -1) for b in (1, -1)]
    return SymmetricBody.from_halfspaces(F, "prism")


def test_mean_check_square():
    rep = mean_ellipsoid_check(cube(2), Ellipsoid.ball(2), math.sqrt(2), 0.5)
    assert rep.inclusions_hold and rep.confined
    assert rep.unit_subspace.shape == (2, 2)
    with pytest.raises(ValueError):
        mean_ellipsoid_check(cube(2), Ellipsoid.ball(2), math.sqrt(2), 0.0)


def test_mean_check_precondition_reported():
    with pytest.raises(ValueError, match="precondition"):
        mean_ellipsoid_check(cube(2), Ellipsoid(np.diag([0.25, 1])), math.sqrt(2), 0.5)


@given(st.floats(1.0005, 1.0095), st.floats(0.05, 0.95), seeds)
def test_mean_check_confines_contacts(alpha, lam, seed):
    # rotate the whole configuration so the unit subspace is not axis aligned
    Qr, _ = np.linalg.qr(random_spd(seed, 3))
    K = apply_map(Qr, prism_body())
    E1 = map_ellipsoid(Qr, Ellipsoid(np.diag([1, 1, alpha ** -2])))
    rep = mean_ellipsoid_check(K, E1, math.sqrt(2), lam)
    assert rep.inclusions_hold
    assert rep.confined and rep.max_offset <= 1e-6
    assert len(rep.outer_contacts) == 2 and len(rep.inner_contacts) == 2
    assert rep.unit_subspace.shape[1] == 2
