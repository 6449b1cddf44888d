"""Quantitative side of the planar stability estimate for the square.

Exact polynomial verification over Q[sqrt 2], the scalar functions behind the
constructive bound, the two technical inequalities, the per-body pipeline
comparing distances to the disc and to the square, and the two-ball cover
sweep.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .body import SymmetricBody, apply_map, gauge, polygon_from_angles
from .distance import SearchOptions, bm_to_ball, bm_to_parallelogram
from .ellipsoid import john, position_body
from .exact import ExactNumber, ExactPolynomial, poly
from .rng import stream

SQRT2 = math.sqrt(2.0)
C_STAB = 5.0 * SQRT2
COVER_D = 11.0 * SQRT2 / (10.0 + SQRT2)
R_MIN = 0.95

R = ExactPolynomial.variable()
F_POLY = poly(250, -30, -29, -28, -128, 12, -190, 18, 68, 8, 9, 0, 50)
G_POLY = poly(5, 0, 0, 0, -2, 0, -4, 0, 1, 0, 0, 0, 1)


class InconclusiveError(RuntimeError):
    """Bisection reached its depth limit without deciding positivity."""


# ---------------------------------------------------------------- scalar functions

def _xy(r: float) -> tuple[float, float]:
    D = r ** 6 + r ** 2 - 1
    return SQRT2 * (2 * r ** 6 - 1) / (r * D), SQRT2 * r * (1 - r ** 4) / D


def s_of(x: float, y: float) -> float:
    """x-intercept of the tangent from (x, y) to the unit circle."""
    n2 = x * x + y * y
    return n2 / (x + y * math.sqrt(n2 - 1.0))


def stability_scalars(r: float) -> tuple[float, float, float, float, float]:
    """(x, y, s, lhs, rhs) for r in [0.95, 1)."""
    if not (R_MIN <= r < 1.0):
        raise ValueError("r must lie in [0.95, 1)")
    x, y = _xy(r)
    s = s_of(x, y)
    return x, y, s, SQRT2 / r / s, 1.0 + 10.0 * (1.0 - r)


def lhs_rewritten(r: float) -> float:
    """Left-hand side as a single fraction of polynomials and one root."""
    X, Y, D = 2 * r ** 6 - 1, 1 - r ** 4, r ** 6 + r ** 2 - 1
    rad = 2 * X ** 2 + 2 * r ** 4 * Y ** 2 - r ** 2 * D ** 2
    return (X * D + r * Y * math.sqrt(rad)) / (X ** 2 + r ** 4 * Y ** 2)


def lhs_as_printed(r: float) -> float:
    """Same rewrite with the last radicand term unsquared."""
    X, Y, D = 2 * r ** 6 - 1, 1 - r ** 4, r ** 6 + r ** 2 - 1
    rad = 2 * X ** 2 + 2 * r ** 4 * Y ** 2 - r ** 2 * D
    if rad < 0:
        return math.nan
    return (X * D + r * Y * math.sqrt(rad)) / (X ** 2 + r ** 4 * Y ** 2)


# ---------------------------------------------------------------- exact identities

@dataclass
class FactorizationReport:
    difference: ExactPolynomial
    identity_holds: bool
    norm_identity: bool
    radicand_identity: bool
    degree: int

    def to_dict(self) -> dict:
        return {"identity_holds": self.identity_holds, "norm_identity": self.norm_identity,
                "radicand_identity": self.radicand_identity, "degree": self.degree,
                "difference": [str(c) for c in self.difference.coeffs]}


def squared_difference() -> ExactPolynomial:
    """(rhs*N - X*D)^2 - r^2 Y^2 * radicand, with N = X^2 + r^4 Y^2."""
    X = 2 * R ** 6 - 1
    Y = 1 - R ** 4
    D = R ** 6 + R ** 2 - 1
    rhs = 1 + 10 * (1 - R)
    N = X ** 2 + R ** 4 * Y ** 2
    rad = 2 * X ** 2 + 2 * R ** 4 * Y ** 2 - R ** 2 * D ** 2
    return (rhs * N - X * D) ** 2 - R ** 2 * Y ** 2 * rad


def verify_factorization() -> FactorizationReport:
    """Exact check of the factorization 2 (r-1)^2 f g, plus the two
    identities over Q[sqrt 2] that turn the scalar inequality into it."""
    diff = squared_difference() - 2 * (R - 1) ** 2 * F_POLY * G_POLY
    s2 = ExactNumber.sqrt2()
    X = 2 * R ** 6 - 1
    Y = 1 - R ** 4
    D = R ** 6 + R ** 2 - 1
    # x * r * D and y * r * D as polynomials with sqrt 2 coefficients
    xr = s2 * X
    yr = s2 * R ** 2 * Y
    norm_ok = xr ** 2 + yr ** 2 == 2 * (X ** 2 + R ** 4 * Y ** 2)
    rad_ok = xr ** 2 + yr ** 2 - (R * D) ** 2 == 2 * X ** 2 + 2 * R ** 4 * Y ** 2 - R ** 2 * D ** 2
    return FactorizationReport(diff, diff.is_zero(), norm_ok, rad_ok, squared_difference().degree)


# ---------------------------------------------------------------- certified positivity

@dataclass
class PositivityLeaf:
    lo: Fraction
    hi: Fraction
    reason: str  # "bound" | "increasing" | "decreasing"


def positivity_certificate(p: ExactPolynomial, lo, hi, max_depth: int = 64) -> list[PositivityLeaf] | None:
    """Certificate tree (as its leaves) that p > 0 on [lo, hi], or None if a
    nonpositive value was found.  Each leaf is certified either by the
    coefficient lower bound or by monotonicity plus the relevant endpoint."""
    lo, hi = Fraction(lo), Fraction(hi)
    if not lo < hi:
        raise ValueError("need lo < hi")
    if lo < 0:
        raise ValueError("interval must be nonnegative")
    dp = p.derivative()
    leaves: list[PositivityLeaf] = []
    stack = [(lo, hi, 0)]
    while stack:
        a, b, depth = stack.pop()
        pa, pb = p(a), p(b)
        if pa.sign() <= 0 or pb.sign() <= 0:
            return None
        if p.lower_bound(a, b).sign() > 0:
            leaves.append(PositivityLeaf(a, b, "bound"))
            continue
        if dp.lower_bound(a, b).sign() >= 0:
            leaves.append(PositivityLeaf(a, b, "increasing"))
            continue
        if dp.upper_bound(a, b).sign() <= 0:
            leaves.append(PositivityLeaf(a, b, "decreasing"))
            continue
        if depth >= max_depth:
            raise InconclusiveError(f"undecided on [{a}, {b}]")
        m = (a + b) / 2
        stack.append((m, b, depth + 1))
        stack.append((a, m, depth + 1))
    leaves.sort(key=lambda leaf: leaf.lo)
    return leaves


def poly_positive_on(p: ExactPolynomial, lo, hi, max_depth: int = 64) -> bool:
    return positivity_certificate(p, lo, hi, max_depth) is not None


def spot_values() -> dict:
    """Exact endpoint facts used by the hand argument for f and g."""
    q95, q96 = Fraction(95, 100), Fraction(96, 100)
    df = F_POLY.derivative()
    d2f = df.derivative()
    dg_inner = poly(15, 0, 0, 0, -4, 0, -6, 0, 1)  # g'(r) = 4 r^3 * this
    return {
        "g(0.95)>0.2": G_POLY(q95) > Fraction(1, 5),
        "f(0.96)>1": F_POLY(q96) > 1,
        "f'(0.96)>0": df(q96) > 0,
        "max|f'|<36": max(abs(df(q95)), abs(df(q96))) < 36,
        "g'_factor": 4 * R ** 3 * dg_inner == G_POLY.derivative(),
        "g'>0": dg_inner.lower_bound(q95, 1) > Fraction(9, 10),
        "f''>400": d2f.lower_bound(q95, 1) > 400,
        "mean_value": max(abs(df(q95)), abs(df(q96))) / 100 < 1,
    }


# ---------------------------------------------------------------- planar inequality on the sector

@dataclass
class SectorInequalityReport:
    x: float
    y: float
    lhs: float
    rhs: float
    holds: bool
    equality: bool


def _sector_admissible(x, y, tol=1e-15):
    ub = y * (SQRT2 - 1) / (1 - y * (2 - SQRT2))
    return ((0.5 - tol <= x) & (x <= 1 / SQRT2 + tol) & (1 / SQRT2 - tol <= y) & (y <= 1 + tol)
            & (x <= ub + tol))


def _sector_sides(x, y):
    lhs = SQRT2 * y * (2 * x - 1) * (1 - x) / (x + y - 2 * x * y)
    rhs = SQRT2 * x + y - SQRT2
    return lhs, rhs


def sector_inequality_check(x: float, y: float, eq_tol: float = 1e-12) -> SectorInequalityReport:
    if not _sector_admissible(x, y):
        raise ValueError("(x, y) outside the admissible region")
    lhs, rhs = _sector_sides(x, y)
    return SectorInequalityReport(x, y, float(lhs), float(rhs), bool(lhs <= rhs + eq_tol),
                         bool(abs(lhs - rhs) <= eq_tol))


def sector_inequality_exact_equalities() -> bool:
    """Both sides agree exactly at (1/2, 1/sqrt 2) and (1/sqrt 2, 1)."""
    s2 = ExactNumber.sqrt2()
    half = ExactNumber(Fraction(1, 2))
    ok = True
    for x, y in ((half, s2 / 2), (s2 / 2, ExactNumber(1))):
        lhs = s2 * y * (2 * x - 1) * (1 - x) / (x + y - 2 * x * y)
        rhs = s2 * x + y - s2
        ok &= lhs == rhs
    return bool(ok)


@dataclass
class SectorInequalitySweep:
    points: int
    violations: int
    min_slack: float
    equality_points: list


def sector_inequality_sweep(n: int = 1_000_000, seed: int = 0, grid: int = 300, eq_tol: float = 1e-12) -> SectorInequalitySweep:
    """Random and grid sweep of the admissible region."""
    g = stream(seed, 0x5EC7)
    u = np.array([g.random() for _ in range(2 * n)]).reshape(2, n)
    y = 1 / SQRT2 + (1 - 1 / SQRT2) * u[0]
    xmax = np.minimum(1 / SQRT2, y * (SQRT2 - 1) / (1 - y * (2 - SQRT2)))
    x = 0.5 + (xmax - 0.5) * u[1]
    gy = np.linspace(1 / SQRT2, 1.0, grid)
    gt = np.linspace(0.0, 1.0, grid)
    YY, TT = np.meshgrid(gy, gt)
    GX = 0.5 + (np.minimum(1 / SQRT2, YY * (SQRT2 - 1) / (1 - YY * (2 - SQRT2))) - 0.5) * TT
    x = np.concatenate([x, GX.ravel()])
    y = np.concatenate([y, YY.ravel()])
    x = np.clip(x, 0.5, None)
    keep = _sector_admissible(x, y)
    x, y = x[keep], y[keep]
    lhs, rhs = _sector_sides(x, y)
    slack = rhs - lhs
    eq = np.abs(slack) <= eq_tol
    pts = sorted({(round(float(a), 9), round(float(b), 9)) for a, b in zip(x[eq], y[eq])})
    return SectorInequalitySweep(int(len(x)), int(np.sum(slack < -eq_tol)), float(slack.min()), pts)


# ---------------------------------------------------------------- orthogonal frame bound

@dataclass
class OrthReport:
    bound: float
    max_abs: tuple[float, float]
    holds: bool
    frame: list


def frame_for(v) -> np.ndarray:
    """Rows e1, e2: orthonormal with <v, e_i> = |v| / sqrt 2."""
    v = np.asarray(v, dtype=float)
    u = v / np.linalg.norm(v)
    c = 1 / SQRT2
    rot = lambda s: np.array([[c, -s * c], [s * c, c]])
    return np.vstack([rot(-1) @ u, rot(1) @ u])


def orth_frame_check(K: SymmetricBody, v, tol: float = 1e-7, john_tol: float = 1e-6) -> OrthReport:
    if K.dim != 2:
        raise ValueError("planar bodies only")
    Q = john(K, 1e-9).Q
    if np.abs(Q - np.eye(2)).max() > john_tol:
        raise ValueError("body is not in John position")
    v = np.asarray(v, dtype=float)
    nv = float(np.linalg.norm(v))
    if nv == 0 or gauge(K, v) > 1 + tol:
        raise ValueError("v must be a nonzero point of K")
    E = frame_for(v)
    vals = np.abs(K.half_vertices @ E.T).max(axis=0)
    bound = SQRT2 / nv
    return OrthReport(bound, (float(vals[0]), float(vals[1])), bool(vals.max() <= bound + tol), E.tolist())


def john_position(K: SymmetricBody) -> SymmetricBody:
    return position_body(K, john(K, 1e-10))[0]


# ---------------------------------------------------------------- per-body pipeline

@dataclass
class StabilityRecord:
    id: int | str
    epsilon: float
    dist_ball: float
    dist_pgram: float
    bound: float
    passed: bool
    slack: float
    floor_ok: bool
    converged: bool
    replay: dict | None = None

    def csv_row(self) -> list[str]:
        return [str(self.id), f"{self.epsilon:.12g}", f"{self.dist_ball:.12g}",
                f"{self.dist_pgram:.12g}", f"{self.bound:.12g}", f"{self.slack:.12g}"]


CSV_HEADER = ["id", "epsilon", "dist_ball", "dist_pgram", "bound", "slack"]


def replay_construction(K: SymmetricBody, dist_ball: float, tol: float = 1e-6) -> dict:
    """Constructive upper bound for the distance to the square when the
    distance to the disc is at least 0.95 * sqrt 2."""
    r = dist_ball / SQRT2
    J = john_position(K)
    V = J.half_vertices
    norms = np.linalg.norm(V, axis=1)
    far = V[int(np.argmax(norms))]
    v = far * (r * SQRT2 / norms.max())
    # rotate v onto the positive y-axis; the frame vectors become (1, +-1)/sqrt 2
    ang = math.pi / 2 - math.atan2(v[1], v[0])
    c, s = math.cos(ang), math.sin(ang)
    Kr = apply_map(np.array([[c, -s], [s, c]]), J)
    W = Kr.half_vertices
    x, y, sr, lhs, rhs = stability_scalars(min(max(r, R_MIN), np.nextafter(1.0, 0.0)))
    l1 = float(np.abs(W).sum(axis=1).max())
    wmax = float(np.abs(W[:, 0]).max())
    s_in = gauge(Kr, np.array([sr, 0.0]))
    alpha = r ** 2 * math.sqrt((2 * r ** 2 - 1) / (2 * r ** 6 - 1))
    beta = r ** 2
    D = r ** 6 + r ** 2 - 1
    hex_v = SQRT2 / r * np.array([(2 * r ** 6 - 1) / D, (r ** 2 - r ** 6) / D])
    return {
        "r": r, "x": x, "y": y, "s": sr,
        "v_in_K": bool(gauge(Kr, np.array([0.0, r * SQRT2])) <= 1 + tol),
        "outer_cross_ok": bool(l1 <= SQRT2 / r + tol),
        "far_point_ok": bool(wmax >= x - tol),
        "inner_cross_ok": bool(s_in <= 1 + tol),
        "ratio": lhs,
        "scalar_bound_ok": bool(lhs < rhs),
        "hexagon_image_norm": float(np.hypot(alpha * hex_v[0], beta * hex_v[1])),
    }


def stability_pipeline(K: SymmetricBody, opts: SearchOptions | None = None, body_id=0,
                       tol: float = 1e-4, replay: bool = True) -> StabilityRecord:
    if K.dim != 2:
        raise ValueError("planar bodies only")
    ball = bm_to_ball(K, opts)
    pg = bm_to_parallelogram(K, opts)
    db, dp = ball.value, pg.value
    eps = SQRT2 - db
    bound = 1.0 + C_STAB * eps
    rep = None
    if replay and eps <= SQRT2 / 20 and db / SQRT2 < 1.0:
        rep = replay_construction(K, db)
    return StabilityRecord(body_id, eps, db, dp, bound, bool(dp < bound + tol), bound - dp,
                           bool(dp >= SQRT2 / db - tol), ball.converged, rep)


# ---------------------------------------------------------------- random corpus and sweeps

def random_polygon(seed: int, index: int) -> SymmetricBody:
    """Random symmetric polygon: 4..64 antipodal pairs, uniform directions,
    log-uniform radii in [1/3, 3]."""
    g = stream(seed, index)
    m = g.integers(4, 64)
    ang = np.array([g.uniform(0.0, math.pi) for _ in range(m)])
    rad = np.exp(np.array([g.uniform(math.log(1 / 3), math.log(3.0)) for _ in range(m)]))
    return polygon_from_angles(ang, rad, f"random-{seed}-{index}")


def worker_count() -> int:
    try:
        n = int(os.environ.get("BM_LAB_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


def _fan_out(fn, items, workers: int | None):
    workers = worker_count() if workers is None else max(1, workers)
    if workers == 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=16))


def _scan_one(args):
    seed, index = args
    return stability_pipeline(random_polygon(seed, index), body_id=index)


def stability_scan(trials: int, seed: int = 0, workers: int | None = None) -> list[StabilityRecord]:
    return _fan_out(_scan_one, [(seed, i) for i in range(trials)], workers)


@dataclass
class CoverReport:
    trials: int
    max_min: float
    argmax: int
    all_below: bool
    threshold: float = COVER_D
    values: list = field(default_factory=list)

    def to_dict(self, with_values: bool = False) -> dict:
        d = asdict(self)
        if not with_values:
            d.pop("values")
        return d


def _cover_one(args):
    seed, index = args
    K = random_polygon(seed, index)
    db = bm_to_ball(K).value
    dp = bm_to_parallelogram(K).value
    return index, db, dp


def cover_experiment(trials: int, seed: int = 0, workers: int | None = None) -> CoverReport:
    if trials <= 0:
        raise ValueError("trials must be positive")
    rows = _fan_out(_cover_one, [(seed, i) for i in range(trials)], workers)
    mins = [min(db, dp) for _, db, dp in rows]
    k = int(np.argmax(mins))
    return CoverReport(trials, float(mins[k]), k, bool(max(mins) < COVER_D), COVER_D, rows)
