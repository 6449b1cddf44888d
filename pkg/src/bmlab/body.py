"""Origin-symmetric polytopes with paired vertex/facet representations.

A body is stored as one representative per antipodal pair of vertices and
of facet functionals; the canonical representative has its first nonzero
coordinate positive.  A facet functional ``a`` stands for the slab
``|<a, x>| <= 1``, so the gauge is ``max_i |<a_i, x>|``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tolerance:
    geometric: float = 1e-9
    optimizer: float = 1e-6
    contact_band: float = 1e-7

    def __post_init__(self):
        if not (0 < self.geometric <= self.contact_band <= self.optimizer):
            raise ValueError("tolerances must satisfy 0 < geometric <= contact_band <= optimizer")


DEFAULT_TOL = Tolerance()


class LinearMap:
    """Invertible linear map of R^n."""

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        M = np.array(matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("linear map must be a square matrix")
        if abs(np.linalg.det(M)) < 1e-300 or np.linalg.cond(M) > 1e14:
            raise ValueError("linear map is singular")
        M.setflags(write=False)
        self.matrix = M

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def inverse(self) -> "LinearMap":
        return LinearMap(np.linalg.inv(self.matrix))

    def compose(self, other: "LinearMap") -> "LinearMap":
        """``self`` after ``other``."""
        return LinearMap(self.matrix @ other.matrix)

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.matrix.T

    def condition(self) -> float:
        return float(np.linalg.cond(self.matrix))


def canonical_sign(points: np.ndarray, tol: float = 1e-13) -> np.ndarray:
    """Flip rows so that the first coordinate above ``tol`` (relative) is positive."""
    P = np.array(points, dtype=float, ndmin=2)
    scale = np.abs(P).max(axis=1, keepdims=True)
    scale[scale == 0] = 1.0
    big = np.abs(P) > tol * scale
    first = np.argmax(big, axis=1)
    s = np.sign(P[np.arange(P.shape[0]), first])
    s[s == 0] = 1.0
    return P * s[:, None]


def unique_pairs(points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """One canonical representative per antipodal pair, duplicates removed."""
    P = canonical_sign(points)
    if P.shape[0] == 0:
        return P
    scale = max(1.0, float(np.abs(P).max()))
    keep = []
    for i in range(P.shape[0]):
        if keep and np.min(np.abs(P[keep] - P[i]).max(axis=1)) <= tol * scale:
            continue
        keep.append(i)
    return P[keep]


def symmetric_closure(half: np.ndarray) -> np.ndarray:
    return np.vstack([half, -half])


# ---------------------------------------------------------------- 2D helpers

def hull2d(points, tol: float = 1e-12) -> np.ndarray:
    """Counter-clockwise convex hull vertices (collinear points dropped)."""
    P = np.unique(np.round(np.asarray(points, dtype=float), 15), axis=0)
    if len(P) < 3:
        return P
    order = np.lexsort((P[:, 1], P[:, 0]))
    P = P[order]
    scale = max(1.0, float(np.abs(P).max())) ** 2

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in P:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= tol * scale:
            lower.pop()
        lower.append(p)
    for p in P[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= tol * scale:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def facets_from_ccw(vertices: np.ndarray) -> np.ndarray:
    """Facet functionals of a CCW polygon containing the origin in its interior."""
    V = np.asarray(vertices, dtype=float)
    nxt = np.roll(V, -1, axis=0)
    det = V[:, 0] * nxt[:, 1] - V[:, 1] * nxt[:, 0]
    if np.any(det <= 0):
        raise ValueError("origin is not interior to the polygon")
    # solve [p; q] a = (1, 1)
    a0 = (nxt[:, 1] - V[:, 1]) / det
    a1 = (V[:, 0] - nxt[:, 0]) / det
    return np.column_stack([a0, a1])


def vertices_from_facets2d(facets: np.ndarray) -> np.ndarray:
    """Vertices of the polygon ``max |<a_i, x>| <= 1`` (bounded case)."""
    F = symmetric_closure(unique_pairs(facets))
    ang = np.arctan2(F[:, 1], F[:, 0])
    F = F[np.argsort(ang)]
    # polygon of the polar, then its facets are our vertices
    polar_ccw = hull2d(F)
    if len(polar_ccw) < 4:
        raise ValueError("facet set does not describe a bounded polygon")
    return facets_from_ccw(polar_ccw)


def vertices_from_halfspaces(facets: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Brute-force vertex enumeration of ``max |<a_i, x>| <= 1`` in small dimension.

    Tries every choice of ``dim`` facet hyperplanes with signs; intended for
    building fixtures and slices, not for large inputs.
    """
    F = unique_pairs(facets)
    n = F.shape[1]
    found = []
    for idx in itertools.combinations(range(len(F)), n):
        M = F[list(idx)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        Minv = np.linalg.inv(M)
        for signs in itertools.product((1.0, -1.0), repeat=n - 1):
            rhs = np.concatenate([[1.0], signs])
            x = Minv @ rhs
            if np.abs(F @ x).max() <= 1 + tol:
                found.append(x)
    if not found:
        raise ValueError("no vertices found")
    return unique_pairs(np.array(found), tol=1e-7)


# ---------------------------------------------------------------- body

class SymmetricBody:
    """Origin-symmetric convex polytope with both representations.

    ``half_vertices`` and ``half_facets`` hold one canonical representative
    per antipodal pair; ``vertices`` and ``facets`` give the full sets.
    """

    __slots__ = ("dim", "half_vertices", "half_facets", "label")

    def __init__(self, half_vertices, half_facets, label: str = "", *, _checked: bool = False):
        V = np.array(half_vertices, dtype=float, ndmin=2)
        F = np.array(half_facets, dtype=float, ndmin=2)
        if not _checked:
            V = unique_pairs(V)
            F = unique_pairs(F)
        V.setflags(write=False)
        F.setflags(write=False)
        self.dim = V.shape[1]
        self.half_vertices = V
        self.half_facets = F
        self.label = label

    # construction -----------------------------------------------------
    @classmethod
    def from_vertices(cls, vertices, label: str = "", tol: float = 1e-9) -> "SymmetricBody":
        V = np.array(vertices, dtype=float, ndmin=2)
        if V.shape[1] != 2:
            raise ValueError("vertex-only input is supported in dimension 2; supply facets too")
        _check_full_rank(V, tol)
        ccw = hull2d(symmetric_closure(V))
        F = facets_from_ccw(ccw)
        return cls(unique_pairs(ccw), unique_pairs(F), label, _checked=True)

    @classmethod
    def from_facets(cls, facets, label: str = "", tol: float = 1e-9) -> "SymmetricBody":
        F = np.array(facets, dtype=float, ndmin=2)
        if F.shape[1] != 2:
            raise ValueError("facet-only input is supported in dimension 2; supply vertices too")
        _check_full_rank(F, tol)
        V = vertices_from_facets2d(F)
        return cls.from_vertices(V, label, tol)

    @classmethod
    def from_reps(cls, vertices=None, facets=None, label: str = "", tol: float = 1e-9) -> "SymmetricBody":
        """Validated construction from either or both representations."""
        if vertices is None and facets is None:
            raise ValueError("need vertices or facets")
        if vertices is not None and facets is not None:
            V = unique_pairs(np.array(vertices, dtype=float, ndmin=2))
            F = unique_pairs(np.array(facets, dtype=float, ndmin=2))
            if V.shape[1] != F.shape[1]:
                raise ValueError("vertex and facet dimensions differ")
            if V.shape[1] == 2:
                body = cls.from_vertices(V, label, tol)
                _check_consistent(body.half_vertices, F, tol)
                _check_consistent(V, body.half_facets, tol)
                return body
            _check_full_rank(V, tol)
            _check_full_rank(F, tol)
            _check_consistent(V, F, tol)
            return cls(V, F, label, _checked=True)
        if vertices is not None:
            return cls.from_vertices(vertices, label, tol)
        return cls.from_facets(facets, label, tol)

    @classmethod
    def from_halfspaces(cls, facets, label: str = "") -> "SymmetricBody":
        """Body ``max |<a_i, x>| <= 1`` in small dimension; redundant slabs are dropped.

        Vertices come from brute-force enumeration, so keep inputs small.
        """
        F = unique_pairs(np.array(facets, dtype=float, ndmin=2))
        _check_full_rank(F, 1e-9)
        V = vertices_from_halfspaces(F)
        tight = np.abs(np.abs(V @ F.T) - 1) <= 1e-9
        keep = [j for j in range(len(F)) if np.linalg.matrix_rank(V[tight[:, j]], tol=1e-9) >= F.shape[1]]
        return cls.from_reps(V, F[keep], label)

    # views --------------------------------------------------------------
    @property
    def vertices(self) -> np.ndarray:
        return symmetric_closure(self.half_vertices)

    @property
    def facets(self) -> np.ndarray:
        return symmetric_closure(self.half_facets)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "vertices": self.vertices.tolist(),
            "facets": self.facets.tolist(),
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, d: dict, tol: float = 1e-9) -> "SymmetricBody":
        body = cls.from_reps(d.get("vertices"), d.get("facets"), d.get("label", ""), tol)
        if "dim" in d and int(d["dim"]) != body.dim:
            raise ValueError("declared dim does not match the data")
        return body

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SymmetricBody":
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return (f"SymmetricBody(dim={self.dim}, pairs={len(self.half_vertices)}, "
                f"facet_pairs={len(self.half_facets)}, label={self.label!r})")

    def ccw_vertices(self) -> np.ndarray:
        if self.dim != 2:
            raise ValueError("planar bodies only")
        return hull2d(self.vertices)


def _check_full_rank(P: np.ndarray, tol: float) -> None:
    if P.shape[0] == 0 or np.linalg.matrix_rank(P, tol=max(tol, 1e-12) * max(1.0, np.abs(P).max())) < P.shape[1]:
        raise ValueError("degenerate input: points do not span the space")


def _check_consistent(V: np.ndarray, F: np.ndarray, tol: float) -> None:
    n = V.shape[1]
    vals = V @ F.T
    scale = 1.0
    if np.abs(vals).max() > 1 + tol * 10 * scale:
        raise ValueError("vertex and facet representations disagree (vertex outside)")
    tight = np.abs(np.abs(vals) - 1) <= 1e-7
    for j in range(F.shape[0]):
        rows = V[tight[:, j]]
        if rows.shape[0] == 0 or np.linalg.matrix_rank(
                np.vstack([rows * np.sign(rows @ F[j])[:, None]]), tol=1e-9) < n:
            raise ValueError("vertex and facet representations disagree (facet not supported)")
    for i in range(V.shape[0]):
        cols = F[tight[i, :]]
        if cols.shape[0] == 0 or np.linalg.matrix_rank(cols, tol=1e-9) < n:
            raise ValueError("vertex and facet representations disagree (not a vertex)")


# ---------------------------------------------------------------- operations

def gauge(K: SymmetricBody, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    vals = np.abs(x @ K.half_facets.T).max(axis=-1)
    return float(vals) if x.ndim == 1 else vals


def support(K: SymmetricBody, u) -> np.ndarray | float:
    u = np.asarray(u, dtype=float)
    vals = np.abs(u @ K.half_vertices.T).max(axis=-1)
    return float(vals) if u.ndim == 1 else vals


def polar(K: SymmetricBody) -> SymmetricBody:
    return SymmetricBody(K.half_facets, K.half_vertices, f"polar({K.label})" if K.label else "", _checked=True)


def apply_map(T, K: SymmetricBody, label: str | None = None) -> SymmetricBody:
    """Image ``T(K)``: vertices map by ``T``, facets by ``T^{-T}``."""
    M = T.matrix if isinstance(T, LinearMap) else np.asarray(T, dtype=float)
    if M.shape != (K.dim, K.dim):
        raise ValueError("map dimension does not match body")
    Minv = np.linalg.inv(M)
    V = canonical_sign(K.half_vertices @ M.T)
    F = canonical_sign(K.half_facets @ Minv)
    return SymmetricBody(V, F, K.label if label is None else label, _checked=True)


def in_circum(K: SymmetricBody) -> tuple[float, float]:
    """Largest centered inscribed and smallest centered circumscribed radii."""
    r = 1.0 / float(np.linalg.norm(K.half_facets, axis=1).max())
    R = float(np.linalg.norm(K.half_vertices, axis=1).max())
    return r, R


def outer_contacts(K: SymmetricBody, R: float, tol: float = DEFAULT_TOL.contact_band) -> np.ndarray:
    norms = np.linalg.norm(K.half_vertices, axis=1)
    return K.half_vertices[np.abs(norms - R) <= tol * R]


def inner_contacts(K: SymmetricBody, r: float, tol: float = DEFAULT_TOL.contact_band) -> np.ndarray:
    norms = np.linalg.norm(K.half_facets, axis=1)
    sel = np.abs(1.0 / norms - r) <= tol * r
    F = K.half_facets[sel]
    return F / (norms[sel] ** 2)[:, None]


def contact_points(K: SymmetricBody, rho: float, tol: float = DEFAULT_TOL.contact_band) -> np.ndarray:
    """Boundary points of K at Euclidean norm ``rho`` (band ``tol * rho``).

    Vertices at norm ``rho`` and facet feet at distance ``rho`` are returned,
    one per antipodal pair.
    """
    pts = np.vstack([outer_contacts(K, rho, tol), inner_contacts(K, rho, tol)])
    return canonical_sign(pts) if len(pts) else pts.reshape(0, K.dim)


# ---------------------------------------------------------------- constructors

def cube(n: int, label: str | None = None) -> SymmetricBody:
    V = np.array(list(itertools.product((1.0, -1.0), repeat=n)))
    return SymmetricBody(unique_pairs(V), np.eye(n), label or f"cube{n}", _checked=True)


def cross_polytope(n: int, label: str | None = None) -> SymmetricBody:
    signs = unique_pairs(np.array(list(itertools.product((1.0, -1.0), repeat=n))))
    return SymmetricBody(np.eye(n), signs, label or f"cross{n}", _checked=True)


def regular_polygon(m: int, label: str | None = None, phase: float = 0.0) -> SymmetricBody:
    """Regular polygon with ``m`` (even) vertices on the unit circle."""
    if m % 2 or m < 4:
        raise ValueError("need an even vertex count >= 4")
    t = phase + 2 * np.pi * np.arange(m // 2) / m
    V = np.column_stack([np.cos(t), np.sin(t)])
    return SymmetricBody.from_vertices(V, label or f"{m}-gon")


def lp_ball_polygon(p: float, m: int, label: str | None = None) -> SymmetricBody:
    """Polygon with ``m`` vertices on the unit sphere of the planar l_p norm."""
    t = 2 * np.pi * np.arange(m // 2) / m
    c, s = np.cos(t), np.sin(t)
    nrm = (np.abs(c) ** p + np.abs(s) ** p) ** (1.0 / p)
    V = np.column_stack([c / nrm, s / nrm])
    return SymmetricBody.from_vertices(V, label or f"l{p:g}-{m}gon")


def random_map(rng, n: int, cond_max: float = 50.0) -> np.ndarray:
    """Random invertible matrix with bounded condition number."""
    while True:
        M = np.array([[rng.normal() for _ in range(n)] for _ in range(n)])
        if np.linalg.cond(M) <= cond_max:
            return M


def polygon_from_angles(angles, radii, label: str = "") -> SymmetricBody:
    a = np.asarray(angles, dtype=float)
    r = np.asarray(radii, dtype=float)
    return SymmetricBody.from_vertices(np.column_stack([r * np.cos(a), r * np.sin(a)]), label)
