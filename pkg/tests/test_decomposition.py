import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bmlab.body import SymmetricBody, apply_map, cube, in_circum, regular_polygon
from bmlab.decomposition import (AderDecomposition, JohnDecomposition, SeparationCertificate, body_ratio,
                                 find_ader, find_john_decomposition, improve_position, reduce_support,
                                 sqrtn_diagnostics, subspace_restriction_check, verify_ader, verify_john)
from bmlab.distance import bm_to_ball
from bmlab.ellipsoid import Ellipsoid
from bmlab.stability import random_polygon

S2, S3 = math.sqrt(2), math.sqrt(3)


def sides(D):
    return (D.outer.T * D.lam) @ D.outer, (D.inner.T * D.mu) @ D.inner


# ---------------------------------------------------------------- John

def test_john_decomposition_examples():
    D = find_john_decomposition(np.eye(2))
    np.testing.assert_allclose(D.weights, [1, 1])
    D = find_john_decomposition(np.array([[1, 1], [1, -1]]) / S2)
    np.testing.assert_allclose(D.weights, [1, 1])
    assert find_john_decomposition([[1, 0]], 2) is None


def test_verify_john_examples():
    D = JohnDecomposition(np.eye(3), np.ones(3))
    assert verify_john(D)
    half = JohnDecomposition(np.eye(3), np.full(3, 0.5))
    assert not verify_john(half)
    assert half.residual() == pytest.approx(np.linalg.norm(np.eye(3) / 2))


def test_n_contact_points_are_orthonormal():
    rng = np.random.default_rng(0)
    Qm, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    D = find_john_decomposition(Qm.T)
    assert D is not None and verify_john(D)
    np.testing.assert_allclose(D.contacts @ D.contacts.T, np.eye(3), atol=1e-12)
    # a non-orthogonal triple in R^3 admits no John decomposition
    bad = np.array([[1, 0, 0], [0, 1, 0], [1, 1, 1]]) / np.array([[1], [1], [S3]])
    assert find_john_decomposition(bad) is None


# ---------------------------------------------------------------- Ader

def test_square_certificate():
    D = find_ader(cube(2), 1.0, S2)
    assert isinstance(D, AderDecomposition)
    assert verify_ader(D, 1e-8, cube(2))
    # weights are normalized to trace one, i.e. half of the identity resolution
    Sy, Sz = sides(D)
    np.testing.assert_allclose(2 * Sy, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(2 * Sz, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(np.sort(2 * D.lam), [0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(np.sort(2 * D.mu), [1, 1], atol=1e-12)
    assert 2 * D.R ** 2 * D.lam.sum() == pytest.approx(2) == 2 * D.r ** 2 * D.mu.sum()
    assert {tuple(np.abs(y)) for y in D.outer} == {(1.0, 1.0)}


def test_near_ball_polygon_decomposes():
    B = regular_polygon(64)
    r, R = in_circum(B)
    D = find_ader(B, r, R)
    assert isinstance(D, AderDecomposition) and verify_ader(D, 1e-8, B)
    assert len(D.lam) == len(D.mu)


def test_sheared_square_gives_separation():
    S = apply_map(np.array([[1, 0.4], [0, 1]]), cube(2))
    r, R = in_circum(S)
    C = find_ader(S, r, R)
    assert isinstance(C, SeparationCertificate)
    assert C.margin > 0 and C.check()
    assert np.linalg.norm(C.A) == pytest.approx(1)


def test_verify_ader_detects_tampering():
    D = find_ader(cube(2), 1.0, S2)
    bumped = AderDecomposition(D.r, D.R, D.outer, D.lam + np.array([1e-3, 0]), D.inner, D.mu)
    assert not verify_ader(bumped, 1e-8)
    assert bumped.matrix_residual() == pytest.approx(2e-3, rel=1e-9)  # |y|^2 = 2
    swapped = AderDecomposition(D.R, D.r, D.outer, D.lam, D.inner, D.mu)
    assert swapped.trace_defect() > 0.1
    assert not verify_ader(swapped, 1e-8)


def test_reduce_support_keeps_small_supports():
    D = find_ader(cube(2), 1.0, S2)
    assert reduce_support(D).support_size == D.support_size == 4


def test_reduce_support_on_redundant_octagon():
    O = regular_polygon(8)
    r, R = in_circum(O)
    H = O.half_facets
    feet = H / np.sum(H * H, axis=1)[:, None]
    # all four vertex and facet directions with equal weights balance by symmetry
    lam = np.full(4, 1.0 / (4 * R * R))
    mu = np.full(4, 1.0 / (4 * r * r))
    D = AderDecomposition(r, R, O.half_vertices, lam, feet, mu)
    assert verify_ader(D, 1e-10, O)
    red = reduce_support(D)
    assert red.support_size <= 4
    assert verify_ader(red, 1e-9, O)


def test_reduce_support_on_split_weights():
    D = find_ader(cube(2), 1.0, S2)
    # three copies of each outer point, weights split unevenly
    split = np.array([0.2, 0.3, 0.5])
    outer = np.repeat(D.outer, 3, axis=0)
    lam = np.concatenate([w * split for w in D.lam])
    D6 = AderDecomposition(D.r, D.R, outer, lam, D.inner, D.mu)
    assert D6.support_size == 8 and verify_ader(D6, 1e-10)
    red = reduce_support(D6)
    assert red.support_size <= 4 and verify_ader(red, 1e-9)


def test_cube3_certificate_support_and_diagnostics():
    D = find_ader(cube(3), 1.0, S3)
    assert D.support_size == 7
    d = sqrtn_diagnostics(D)
    assert d.frobenius_sq == pytest.approx(1 / 3, abs=1e-12)
    assert d.ratio_bound == pytest.approx(S3, abs=1e-9)
    assert d.identity_defect <= 1e-8 and d.pairing_defect <= 1e-8 and d.equality


def test_square_diagnostics():
    d = sqrtn_diagnostics(find_ader(cube(2), 1.0, S2))
    assert d.frobenius_sq == pytest.approx(0.5, abs=1e-12)
    assert d.ratio_bound == pytest.approx(S2)
    assert d.identity_defect <= 1e-12 and d.pairing_defect <= 1e-12


def test_hexagon_diagnostics_show_no_equality():
    H = regular_polygon(6)
    d = sqrtn_diagnostics(find_ader(H, *in_circum(H)))
    assert d.frobenius_sq > 0.5 + 1e-3
    assert d.ratio_bound < S2
    assert d.ratio <= d.ratio_bound + 1e-12
    assert not d.equality


def iterate_improvement(K, E, steps=80):
    hist = [body_ratio(apply_map(E.to_ball_map(), K))]
    for _ in range(steps):
        Kp = apply_map(E.to_ball_map(), K)
        out = find_ader(Kp, *in_circum(Kp))
        if isinstance(out, AderDecomposition):
            return hist, out
        E = improve_position(E, out, K)
        hist.append(body_ratio(apply_map(E.to_ball_map(), K)))
    return hist, None


def test_improve_position_converges_for_sheared_square():
    S = apply_map(np.array([[1, 0.4], [0, 1]]), cube(2))
    hist, D = iterate_improvement(S, Ellipsoid.ball(2))
    assert all(b < a for a, b in zip(hist, hist[1:]))
    assert D is not None
    assert hist[-1] == pytest.approx(S2, abs=1e-6)


def test_improve_position_on_stretched_hexagon():
    H = apply_map(np.diag([1.3, 1.0]), regular_polygon(6))
    hist, _ = iterate_improvement(H, Ellipsoid.ball(2), steps=3)
    assert hist[1] < hist[0]


def test_improve_position_refuses_optimal_position():
    Kp = cube(2)
    out = find_ader(Kp, 1.0, S2)
    assert isinstance(out, AderDecomposition)  # so there is no certificate to act on


def prism():
    F = [[1, 0, 0], [0, 1, 0], [0, 0, 1 / 1.05]] + [[0.5 * a, 0.5 * b, 0.7] for a in (1, -1) for b in (1, -1)]
    return SymmetricBody.from_halfspaces(F)


def test_subspace_restriction_trivial():
    rep = subspace_restriction_check(cube(2), 1.0, S2, np.eye(2))
    assert rep.outer_in_U and rep.inner_in_U and rep.propagation_holds
    assert rep.restricted_ratio == pytest.approx(S2)


def test_subspace_restriction_prism():
    K = prism()
    rep = subspace_restriction_check(K, 1.0, S2, np.eye(3)[:, :2])
    assert rep.outer_in_U and rep.inner_in_U and rep.propagation_holds
    assert rep.restricted_ratio == pytest.approx(rep.ratio, abs=1e-12)
    # the same value from the planar search on the slice
    sl = SymmetricBody.from_vertices(K.half_vertices[np.abs(K.half_vertices[:, 2]) < 1e-12][:, :2])
    assert bm_to_ball(sl).value == pytest.approx(S2, abs=1e-9)
    assert bm_to_ball(K).value == pytest.approx(S2, abs=1e-6)
    assert rep.inner_rank >= rep.rank_bound == 2


def test_subspace_restriction_rejects_bad_subspace():
    with pytest.raises(ValueError, match="witness"):
        subspace_restriction_check(cube(3), 1.0, S3, np.eye(3)[:, :2])


@settings(max_examples=25)
@given(st.integers(0, 2**32), st.integers(0, 1000))
def test_certificates_bound_ratio_by_sqrt_n(seed, i):
    K = random_polygon(seed, i)
    res = bm_to_ball(K)
    assert res.converged
    D = res.certificate
    assert verify_ader(D, 1e-8)
    assert D.support_size <= 4
    d = sqrtn_diagnostics(D)
    assert D.R / D.r <= d.ratio_bound + 1e-9 <= S2 + 1e-6


@settings(max_examples=25)
@given(st.integers(0, 2**32), st.integers(0, 1000))
def test_find_ader_returns_exactly_one_kind(seed, i):
    K = random_polygon(seed, i)
    r, R = in_circum(K)
    out = find_ader(K, r, R)
    assert isinstance(out, (AderDecomposition, SeparationCertificate))
    if isinstance(out, SeparationCertificate):
        assert out.margin > 0 and out.check()
    else:
        assert verify_ader(out, 1e-8, K)
