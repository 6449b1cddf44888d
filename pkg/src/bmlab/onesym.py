"""Planar 1-symmetric bodies: construction, the 45 degree polar calculus and
the equality test for distance sqrt(2) to the square.

A planar body is 1-symmetric when it is invariant under coordinate sign
changes and the coordinate swap.  Such a body is determined by its boundary
in the sector between the positive x-axis and the diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .body import SymmetricBody, apply_map, gauge, hull2d, polar
from .distance import BMResult, SearchOptions, bm_planar, bm_to_parallelogram

SQRT2 = math.sqrt(2.0)
QUARTER = math.pi / 4

# order-8 group generated by sign flips and the swap
GROUP = tuple(np.array(M, dtype=float) for M in (
    [[1, 0], [0, 1]], [[-1, 0], [0, 1]], [[1, 0], [0, -1]], [[-1, 0], [0, -1]],
    [[0, 1], [1, 0]], [[0, -1], [1, 0]], [[0, 1], [-1, 0]], [[0, -1], [-1, 0]],
))

# reflection across the line through the origin at 22.5 degrees
MIRROR = np.array([[1.0, 1.0], [1.0, -1.0]]) / SQRT2


def rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class SectorProfile:
    """Boundary points with polar angles in [0, pi/4], sorted by angle."""

    points: np.ndarray

    def __post_init__(self):
        P = np.array(self.points, dtype=float, ndmin=2)
        if P.shape[1] != 2 or len(P) == 0:
            raise ValueError("profile needs planar points")
        ang = np.arctan2(P[:, 1], P[:, 0])
        if np.any(ang < -1e-12) or np.any(ang > QUARTER + 1e-12) or np.any(np.hypot(*P.T) == 0):
            raise ValueError("profile points must lie in the sector between 0 and 45 degrees")
        P = P[np.argsort(ang, kind="stable")]
        P.setflags(write=False)
        object.__setattr__(self, "points", P)

    @property
    def angles(self) -> np.ndarray:
        return np.arctan2(self.points[:, 1], self.points[:, 0])


def orbit(points) -> np.ndarray:
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    return np.vstack([P @ g.T for g in GROUP])


def expand_profile(p: SectorProfile, label: str = "", tol: float = 1e-9) -> SymmetricBody:
    """1-symmetric body whose sector boundary passes through the profile."""
    ccw = hull2d(orbit(p.points))
    if len(ccw) < 4:
        raise ValueError("profile does not span a planar body")
    K = SymmetricBody.from_vertices(ccw, label)
    g = gauge(K, p.points)
    if np.any(g < 1 - tol):
        raise ValueError("profile points are not in convex position")
    return K


def is_one_symmetric(K: SymmetricBody, tol: float = 1e-9) -> bool:
    if K.dim != 2:
        return False
    return all(gauge(K, K.half_vertices @ g.T).max() <= 1 + tol for g in GROUP[1:])


def is_rotation_invariant(K: SymmetricBody, angle: float = QUARTER, tol: float = 1e-9) -> bool:
    return bool(gauge(K, K.half_vertices @ rotation(angle).T).max() <= 1 + tol)


def sector_profile(K: SymmetricBody) -> SectorProfile:
    """Boundary points of K in the sector: ray hits plus interior vertices."""
    e = np.array([1.0, 0.0])
    d = np.array([1.0, 1.0]) / SQRT2
    V = K.ccw_vertices()
    ang = np.arctan2(V[:, 1], V[:, 0])
    inner = V[(ang > 1e-12) & (ang < QUARTER - 1e-12)]
    pts = np.vstack([e / gauge(K, e), inner, d / gauge(K, d)])
    return SectorProfile(pts)


def rotate45_polar(K: SymmetricBody, direction: int = 1, tol: float = 1e-9) -> SymmetricBody:
    """phi(K polar) with phi the rotation by +-45 degrees."""
    if not is_one_symmetric(K, tol):
        raise ValueError("body is not 1-symmetric")
    lab = f"rot45polar({K.label})" if K.label else ""
    return apply_map(rotation(direction * QUARTER), polar(K), lab)


# ---------------------------------------------------------------- equality condition

@dataclass
class OneSymReport:
    body: SymmetricBody
    is_one_symmetric: bool
    condition_holds: bool
    worst_margin: float
    distance_to_square: float | None
    witness: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"label": self.body.label, "is_one_symmetric": self.is_one_symmetric,
                "condition_holds": self.condition_holds, "worst_margin": self.worst_margin,
                "distance_to_square": self.distance_to_square, "witness": self.witness}


def _edge_margin(p, q, W, N, extra):
    """Minimum of h(x) - <x, x> over the segment [p, q].

    h is the support function of conv(W); it is linear between the points
    where x becomes parallel to an outer normal in N, and the margin is
    concave on each such piece, so the minimum sits at a breakpoint.
    """
    d = q - p
    cross_p = p[0] * N[:, 1] - p[1] * N[:, 0]
    cross_d = d[0] * N[:, 1] - d[1] * N[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -cross_p / cross_d
    t = t[np.isfinite(t) & (t > 0) & (t < 1)]
    ts = np.concatenate([[0.0, 1.0], t, extra])
    X = p[None, :] + ts[:, None] * d[None, :]
    m = (X @ W.T).max(axis=1) - np.einsum("ij,ij->i", X, X)
    k = int(np.argmin(m))
    return float(m[k]), X[k]


def equality_condition_check(K: SymmetricBody, samples: int = 512, tol: float = 1e-9,
                             with_distance: bool = True) -> OneSymReport:
    """Test h_{phi(K)}(x) >= <x, x> on the boundary of K inside the sector.

    Each edge is checked exactly at its breakpoints; ``samples`` extra
    points spread along the sector boundary act as an independent check.
    """
    sym = is_one_symmetric(K, tol)
    R = rotation(QUARTER)
    W = K.vertices @ R.T
    N = np.vstack([K.facets @ R.T])  # outer normals of phi(K)
    chain = sector_profile(K).points
    worst, wit = math.inf, None
    nseg = len(chain) - 1
    per = max(0, samples // max(nseg, 1))
    extra = np.arange(1, per + 1) / (per + 1)
    for p, q in zip(chain[:-1], chain[1:]):
        m, x = _edge_margin(p, q, W, N, extra)
        if m < worst:
            worst, wit = m, x
    dist = bm_to_parallelogram(K).value if with_distance else None
    return OneSymReport(K, sym, bool(worst >= -tol), worst, dist, [float(v) for v in wit])


# ---------------------------------------------------------------- constructed example

A_PT = np.array([1.0, 0.0])
B_PT = np.array([1.0, 1.0]) / SQRT2
# corner of the sector triangle: where the supporting lines at A and B meet
T_CORNER = np.array([1.0, SQRT2 - 1.0])


def _in_triangle(x, tri, strict: bool, tol: float = 1e-12) -> bool:
    s = []
    for i in range(3):
        o, a = tri[i], tri[(i + 1) % 3]
        s.append((a[0] - o[0]) * (x[1] - o[1]) - (a[1] - o[1]) * (x[0] - o[0]))
    s = np.array(s) * np.sign(sum(s))
    return bool(np.all(s > tol)) if strict else bool(np.all(s >= -tol))


def _in_disc(x, centre, radius=0.5, tol=1e-12) -> bool:
    return bool(np.linalg.norm(np.asarray(x) - centre) <= radius + tol)


def _bezier(p0, c, p1, k):
    t = np.linspace(0.0, 1.0, k + 1)[:, None]
    return (1 - t) ** 2 * p0 + 2 * t * (1 - t) * c + t ** 2 * p1


@dataclass
class MirroredArcCurve:
    points: np.ndarray  # sector chain from A to B
    first: np.ndarray   # near A, inside the disc on [0, A]
    middle: np.ndarray  # mirror-symmetric part
    last: np.ndarray    # near B, inside the disc on [0, B]
    bulge: float


def _convex_chain(P: np.ndarray, tol: float = 1e-14) -> bool:
    # extend across the x-axis at A and across the diagonal at B
    flip_x = np.array([1.0, -1.0])
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    Q = np.vstack([P[1] * flip_x, P, P[-2] @ swap.T])
    d1 = Q[1:-1] - Q[:-2]
    d2 = Q[2:] - Q[1:-1]
    cr = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    return bool(np.all(cr > -tol))


def mirrored_arc_curve(v=(0.9, 0.28), arc_samples: int = 64, bulge: float = 0.5,
                   symmetric: bool = False) -> MirroredArcCurve:
    v = np.asarray(v, dtype=float)
    tri = np.array([A_PT, B_PT, T_CORNER])
    axis = np.array([math.cos(math.pi / 8), math.sin(math.pi / 8)])
    # on the mirror line the only admissible point is the midpoint of [A, B]
    on_axis = abs(v[0] * axis[1] - v[1] * axis[0]) <= 1e-12
    if not _in_triangle(v, tri, strict=not on_axis):
        raise ValueError("v must lie in the interior of the sector triangle")
    if not _in_disc(v, A_PT / 2):
        raise ValueError("v must lie in the disc with diameter [0, a]")
    w = MIRROR @ v
    k = max(2, int(arc_samples))
    h = float(bulge)
    for _ in range(60):
        chord = v - A_PT
        out = np.array([chord[1], -chord[0]])  # right of a->v, away from the origin
        first = _bezier(A_PT, (A_PT + v) / 2 + h * out, v, k)
        if np.allclose(v, w):
            middle = v[None, :]
        else:
            mid = (v + w) / 2
            middle = _bezier(v, mid + h * np.linalg.norm(w - v) * axis, w, k)
        last = (first @ MIRROR.T)[::-1] if symmetric else np.vstack([w, B_PT])
        P = np.vstack([first, middle[1:], last[1:]])
        P = P[np.concatenate([[True], np.linalg.norm(np.diff(P, axis=0), axis=1) > 1e-14])]
        ok = (all(_in_disc(x, A_PT / 2) for x in first)
              and all(_in_disc(x, B_PT / 2) for x in last)
              and all(_in_triangle(x, tri, strict=False) for x in P)
              and np.allclose(middle @ MIRROR.T, middle[::-1], atol=1e-12)
              and _convex_chain(P))
        if ok:
            return MirroredArcCurve(P, first, middle, last, h)
        h *= 0.5
    raise ValueError("no admissible curve through v")


def mirrored_arc_body(v=(0.9, 0.28), arc_samples: int = 64, bulge: float = 0.5,
                  symmetric: bool = False) -> SymmetricBody:
    """1-symmetric body whose sector boundary runs A -> v -> mirror(v) -> B.

    The arc A -> v stays in the disc with diameter [0, A], the arc through
    v is mirror-symmetric about the 22.5 degree line, and the final piece
    is straight (or the mirror image of the first arc when ``symmetric``).
    """
    curve = mirrored_arc_curve(v, arc_samples, bulge, symmetric)
    return expand_profile(SectorProfile(curve.points), "mirrored-arc")


# ---------------------------------------------------------------- pair distance

def _standard_turn(K: SymmetricBody) -> np.ndarray:
    """Rotation (identity or 45 degrees) after which ||e1|| <= ||(1,1)|| / sqrt(2)."""
    e = np.array([1.0, 0.0])
    d = np.array([1.0, 1.0])
    if gauge(K, e) <= gauge(K, d) / SQRT2:
        return np.eye(2)
    return rotation(QUARTER)


def one_sym_pair_distance(K: SymmetricBody, L: SymmetricBody,
                          opts: SearchOptions | None = None, tol: float = 1e-9) -> BMResult:
    """Distance between two 1-symmetric polygons, searched from the aligned
    positions where both have their axis points outermost."""
    if not (is_one_symmetric(K, tol) and is_one_symmetric(L, tol)):
        raise ValueError("both bodies must be 1-symmetric")
    opts = opts or SearchOptions()
    RK, RL = _standard_turn(K), _standard_turn(L)
    base = RK.T @ RL
    starts = [base, base @ rotation(QUARTER), rotation(QUARTER) @ base, np.eye(2)]
    sub = SearchOptions(restarts=0, seed=opts.seed, tol=opts.tol, nm_maxiter=opts.nm_maxiter,
                        starts=starts)
    res = bm_planar(K, L, sub)
    res.details["bound"] = SQRT2
    res.details["within_bound"] = bool(res.value <= SQRT2 + 1e-5)
    if not res.details["within_bound"]:
        raise RuntimeError(f"distance {res.value} exceeds sqrt(2)")
    return res


# ---------------------------------------------------------------- random families

def _normalize_axis(K: SymmetricBody) -> SymmetricBody:
    return apply_map(np.eye(2) * gauge(K, np.array([1.0, 0.0])), K)


def random_one_symmetric(rng, max_points: int = 8) -> SymmetricBody:
    """Random 1-symmetric polygon with (1, 0) on its boundary."""
    m = int(rng.integers(1, max_points))
    ang = np.array([rng.uniform(0.0, QUARTER) for _ in range(m)])
    rad = np.array([math.exp(rng.uniform(math.log(0.6), math.log(1.4))) for _ in range(m)])
    pts = np.vstack([np.column_stack([rad * np.cos(ang), rad * np.sin(ang)]),
                     [[1.0, 0.0]], [B_PT * math.exp(rng.uniform(math.log(0.75), math.log(1.35)))]])
    K = SymmetricBody.from_vertices(hull2d(orbit(pts)), "random-1sym")
    return _normalize_axis(K)


def random_rot45_invariant(rng, max_points: int = 6) -> SymmetricBody:
    """Random 1-symmetric polygon that is also invariant under 45 degree rotation."""
    m = int(rng.integers(1, max_points))
    ang = np.array([rng.uniform(0.0, math.pi / 8) for _ in range(m)])
    rad = np.array([math.exp(rng.uniform(math.log(0.7), math.log(1.3))) for _ in range(m)])
    pts = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    pts = np.vstack([pts, pts @ MIRROR.T, [[1.0, 0.0]], [B_PT]])
    K = SymmetricBody.from_vertices(hull2d(orbit(pts)), "random-rot45")
    return _normalize_axis(K)
