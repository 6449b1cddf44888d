import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bmlab.body import SymmetricBody, apply_map, cross_polytope, cube, lp_ball_polygon, random_map, regular_polygon
from bmlab.decomposition import verify_ader
from bmlab.distance import SearchOptions, bm_planar, bm_to_ball, bm_to_parallelogram, chart_map, ratio_for_map
from bmlab.rng import stream
from bmlab.stability import random_polygon

from helpers import rot

S2 = math.sqrt(2)

# Values from an independent semidefinite formulation (minimize t with the
# ellipsoid x^T Q x <= 1 through all vertices and a^T Q^-1 a <= t for all
# facets), solved with an interior-point conic solver at 1e-12 gaps.
SDP_PLANAR_SEED7 = [1.1057392953152132, 1.3909698017830687, 1.1741466102476128,
                    1.2712491176509504, 1.139824778072494, 1.187678025418608]
SDP_SPACE = [
    ([[0.03, 1.36, 1.22], [-0.51, -0.3, -0.53], [0.57, -0.06, 0.75], [-1.85, 1.57, -0.1], [0.68, -0.14, -0.38]],
     1.6710809127066446),
    ([[0.46, 0.82, -0.2], [-0.15, 0.69, -0.87], [-1.51, 0.39, -0.67], [-1.92, -0.81, -0.47], [-1.19, -1.49, 0.04]],
     1.5999786931908415),
    ([[0.9, -0.23, -0.74], [0.38, 0.72, -0.3], [0.54, 1.04, -0.21], [-0.81, 0.35, 0.25], [1.1, -1.28, -0.66]],
     1.5835500495199781),
    ([[-0.84, -1.73, 0.13, 0.53], [-0.74, 1.39, 0.82, 0.63], [0.4, 0.96, -1.33, 0.61], [0.6, -1.77, 0.35, -0.25],
      [0.78, -0.44, -0.02, 0.34], [-0.88, 0.6, -0.1, 0.49]], 1.9381386968013592),
    ([[-0.52, 1.09, 0.61, -0.18], [0.63, 1.26, 1.79, -1.57], [0.88, 0.47, -0.09, -1.01], [1.26, -1.26, 0.57, 1.3],
      [-1.6, -0.3, -1.31, 0.24], [1.51, 2.02, -1.78, -0.57]], 1.8542671944005862),
    ([[0.7, 1.58, 0.42, -0.75], [0.3, -0.02, -0.2, -0.73], [0.39, 0.31, -0.09, -0.22], [-1.28, -0.49, 1.21, -0.19],
      [-1.44, 1.33, 0.53, 2.11], [0.06, -0.46, -1.45, 1.32]], 1.8589500379399062),
]


def test_ratio_for_map_examples():
    K = random_polygon(2, 2)
    assert ratio_for_map(K, K, np.eye(2)) == pytest.approx(1)
    assert ratio_for_map(cube(2), cross_polytope(2), np.eye(2)) == pytest.approx(2)
    assert ratio_for_map(cube(2), cross_polytope(2), rot(45)) == pytest.approx(1)
    with pytest.raises(ValueError):
        ratio_for_map(K, K, np.zeros((2, 2)))


def test_ball_extremal_values():
    for K, v in ((cube(2), S2), (cube(3), math.sqrt(3)), (cross_polytope(3), math.sqrt(3))):
        res = bm_to_ball(K)
        assert res.converged
        assert res.value == pytest.approx(v, abs=1e-6)
        assert verify_ader(res.certificate, 1e-8)
    assert bm_to_ball(cube(2)).certificate.support_size == 4


def test_ball_l4_polygon():
    assert bm_to_ball(lp_ball_polygon(4, 512)).value == pytest.approx(2 ** 0.25, abs=1e-3)


@pytest.mark.parametrize("i", range(6))
def test_ball_matches_sdp_planar(i):
    res = bm_to_ball(random_polygon(7, i))
    assert res.converged
    assert res.value == pytest.approx(SDP_PLANAR_SEED7[i], abs=1e-7)


@pytest.mark.parametrize("facets,value", SDP_SPACE)
def test_ball_matches_sdp_space(facets, value):
    K = SymmetricBody.from_halfspaces(np.array(facets))
    res = bm_to_ball(K)
    assert res.converged
    assert res.value == pytest.approx(value, abs=1e-7)
    assert res.value <= math.sqrt(K.dim) + 1e-9


def test_certificate_consistency():
    for i in range(10):
        res = bm_to_ball(random_polygon(11, i))
        D = res.certificate
        assert res.converged and abs(D.R / D.r - res.value) <= 1e-9


def test_planar_examples():
    assert bm_planar(cube(2), regular_polygon(256)).value == pytest.approx(S2, abs=1e-4)
    assert bm_planar(cube(2), regular_polygon(6)).value == pytest.approx(1.5, abs=1e-4)
    K = random_polygon(4, 4)
    assert bm_planar(K, K).value == pytest.approx(1, abs=1e-9)


def test_planar_is_symmetric():
    for i in range(3):
        K, L = random_polygon(21, i), random_polygon(21, i + 100)
        assert bm_planar(K, L).value == pytest.approx(bm_planar(L, K).value, abs=2e-6)


def test_planar_never_beats_witness_and_stays_below_stromquist():
    for i in range(4):
        K, L = random_polygon(8, i), random_polygon(8, 50 + i)
        res = bm_planar(K, L)
        assert res.value == pytest.approx(ratio_for_map(K, L, res.witness.matrix), rel=1e-12)
        assert 1 <= res.value <= 1.5 + 1e-9


def test_chart_has_unit_determinant():
    for th, ls, k in ((0.1, 0.3, -2.0), (2.9, -1.2, 1.5)):
        assert np.linalg.det(chart_map(th, ls, k)) == pytest.approx(1)


def test_parallelogram_examples():
    assert bm_to_parallelogram(cube(2)).value == pytest.approx(1, abs=1e-12)
    assert bm_to_parallelogram(regular_polygon(8)).value == pytest.approx(S2, abs=1e-6)
    assert bm_to_parallelogram(regular_polygon(6)).value == pytest.approx(1.5, abs=1e-4)
    hexa = apply_map(np.array([[2.0, 0.7], [0.1, 1.0]]), regular_polygon(6))
    assert bm_to_parallelogram(hexa).value == pytest.approx(1.5, abs=1e-4)


@pytest.mark.parametrize("i", range(8))
def test_parallelogram_search_agrees_with_general_planar_search(i):
    K = random_polygon(13, i)
    a = bm_to_parallelogram(K).value
    b = bm_planar(K, cube(2)).value
    assert a == pytest.approx(b, abs=1e-5)


@settings(max_examples=20)
@given(st.integers(0, 2**32), st.integers(0, 1000))
def test_parallelogram_triangle_floor(seed, i):
    K = random_polygon(seed, i)
    db = bm_to_ball(K).value
    dp = bm_to_parallelogram(K).value
    assert db <= S2 + 1e-6
    assert dp >= S2 / db - 1e-6


@settings(max_examples=10)
@given(st.integers(0, 2**32), st.integers(0, 1000))
def test_ball_affine_invariance(seed, i):
    K = random_polygon(seed, i)
    base = bm_to_ball(K).value
    g = stream(seed, i + 7)
    for _ in range(3):
        T = random_map(g, 2)
        assert bm_to_ball(apply_map(T, K)).value == pytest.approx(base, abs=2e-6)


def test_ball_affine_invariance_in_space():
    K = SymmetricBody.from_halfspaces(np.array(SDP_SPACE[0][0]))
    g = stream(3, 3)
    for _ in range(3):
        T = random_map(g, 3)
        assert bm_to_ball(apply_map(T, K)).value == pytest.approx(SDP_SPACE[0][1], abs=2e-6)


def test_options_are_respected():
    K = random_polygon(1, 2)
    a = bm_to_ball(K, SearchOptions(seed=5, restarts=3))
    b = bm_to_ball(K, SearchOptions(seed=5, restarts=3))
    assert a.value == b.value
    c = bm_planar(K, cube(2), SearchOptions(starts=[np.eye(2)]))
    assert c.details["candidates"] == 1
