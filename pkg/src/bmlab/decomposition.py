"""Contact-point decompositions certifying optimal ball positions.

For a body with r*B inside K inside R*B, outer contacts y (vertices at norm R)
and inner contacts z (facet feet at distance r) admit nonnegative weights with

    sum_i lam_i y_i y_i^T = sum_j mu_j z_j z_j^T,    R^2 sum lam = r^2 sum mu,

exactly when the two sets of normalized rank-one matrices have intersecting
convex hulls in the trace-one slice.  Otherwise a symmetric matrix A
separates them, and moving K by I + eps*A shrinks R/r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .body import (DEFAULT_TOL, SymmetricBody, Tolerance, apply_map, in_circum,
                   inner_contacts, outer_contacts)
from .ellipsoid import Ellipsoid

PRUNE = 1e-12
SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------- symmetric-matrix coordinates

def _sym_index(n: int):
    return [(i, j) for i in range(n) for j in range(i, n)]


def vec_sym(S: np.ndarray) -> np.ndarray:
    """Coordinates of a symmetric matrix that preserve the Frobenius product."""
    n = S.shape[-1]
    out = []
    for i, j in _sym_index(n):
        out.append(S[..., i, j] if i == j else SQRT2 * S[..., i, j])
    return np.stack(out, axis=-1)


def unvec_sym(v: np.ndarray, n: int) -> np.ndarray:
    S = np.zeros((n, n))
    for k, (i, j) in enumerate(_sym_index(n)):
        if i == j:
            S[i, i] = v[k]
        else:
            S[i, j] = S[j, i] = v[k] / SQRT2
    return S


def outer_products(P: np.ndarray) -> np.ndarray:
    """vec_sym(p p^T) for each row p."""
    return vec_sym(np.einsum("ki,kj->kij", P, P))


# ---------------------------------------------------------------- John

@dataclass
class JohnDecomposition:
    contacts: np.ndarray
    weights: np.ndarray

    def residual(self) -> float:
        n = self.contacts.shape[1]
        S = (self.contacts.T * self.weights) @ self.contacts
        return float(np.linalg.norm(S - np.eye(n)))


def find_john_decomposition(contacts, n: int | None = None, fit_tol: float = 1e-6) -> JohnDecomposition | None:
    """Weights with sum lam_i u_i u_i^T = I over unit contact vectors, or None."""
    U = np.array(contacts, dtype=float, ndmin=2)
    if U.size == 0:
        return None
    n = U.shape[1] if n is None else n
    U = U / np.linalg.norm(U, axis=1)[:, None]
    if len(U) < n:
        return None
    A = outer_products(U).T
    b = vec_sym(np.eye(n))
    res = lp.simplex(np.zeros(len(U)), A, b)
    if res.status == "optimal":
        w = res.x
    else:
        # contacts from a numerical ellipsoid sit slightly off the exact
        # configuration; accept the best L1 fit if it is close
        k, N = A.shape
        Aw = np.hstack([A, np.eye(k), -np.eye(k)])
        c = np.concatenate([np.zeros(N), np.ones(2 * k)])
        res = lp.simplex(c, Aw, b)
        if res.status != "optimal" or res.objective > fit_tol:
            return None
        w = res.x[:N]
    keep = w > PRUNE
    return JohnDecomposition(U[keep], w[keep])


def verify_john(D: JohnDecomposition, tol: float = 1e-9) -> bool:
    n = D.contacts.shape[1]
    norms_ok = np.all(np.abs(np.linalg.norm(D.contacts, axis=1) - 1.0) <= tol)
    return bool(norms_ok and np.all(D.weights >= 0) and D.residual() <= tol
                and abs(D.weights.sum() - n) <= tol * n)


def john_residual(K: SymmetricBody, E: Ellipsoid, band: float = 1e-6) -> tuple[float, JohnDecomposition | None]:
    """Residual of the John identity for K positioned so that E is the ball."""
    M = E.to_ball_map()
    Kp = apply_map(M, K)
    r, _ = in_circum(Kp)
    z = inner_contacts(Kp, r, band)
    D = find_john_decomposition(z / r, K.dim)
    return (D.residual() if D is not None else math.inf), D


# ---------------------------------------------------------------- Ader

@dataclass
class AderDecomposition:
    r: float
    R: float
    outer: np.ndarray
    lam: np.ndarray
    inner: np.ndarray
    mu: np.ndarray

    @property
    def dim(self) -> int:
        return self.outer.shape[1]

    @property
    def support_size(self) -> int:
        return len(self.lam) + len(self.mu)

    def matrix_residual(self) -> float:
        Sy = (self.outer.T * self.lam) @ self.outer
        Sz = (self.inner.T * self.mu) @ self.inner
        return float(np.linalg.norm(Sy - Sz))

    def trace_defect(self) -> float:
        return float(abs(self.R ** 2 * self.lam.sum() - self.r ** 2 * self.mu.sum()))

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "R": self.R,
            "outer": [{"y": y.tolist(), "lambda": float(w)} for y, w in zip(self.outer, self.lam)],
            "inner": [{"z": z.tolist(), "mu": float(w)} for z, w in zip(self.inner, self.mu)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AderDecomposition":
        return cls(float(d["r"]), float(d["R"]),
                   np.array([o["y"] for o in d["outer"]], dtype=float),
                   np.array([o["lambda"] for o in d["outer"]], dtype=float),
                   np.array([o["z"] for o in d["inner"]], dtype=float),
                   np.array([o["mu"] for o in d["inner"]], dtype=float))


@dataclass
class SeparationCertificate:
    r: float
    R: float
    A: np.ndarray
    margin: float
    outer: np.ndarray
    inner: np.ndarray

    def to_dict(self) -> dict:
        return {"r": self.r, "R": self.R, "A": self.A.tolist(), "margin": self.margin,
                "outer": self.outer.tolist(), "inner": self.inner.tolist()}

    def check(self, tol: float = 1e-9) -> bool:
        """Separation holds for the stored contact sets at the stored radii."""
        ya = np.einsum("ki,ij,kj->k", self.outer / self.R, self.A, self.outer / self.R)
        za = np.einsum("ki,ij,kj->k", self.inner / self.r, self.A, self.inner / self.r)
        return bool(ya.max() <= za.min() - self.margin + tol
                    and abs(np.linalg.norm(self.A) - 1.0) <= 1e-9
                    and abs(np.trace(self.A)) <= 1e-9)


def _contact_sets(K: SymmetricBody, r: float, R: float, tol: Tolerance):
    r_K, R_K = in_circum(K)
    slack = max(tol.contact_band, 10 * tol.geometric)
    if r > r_K * (1 + slack) or R < R_K * (1 - slack):
        raise ValueError("radii inconsistent with the body: need r*B inside K inside R*B")
    Y = outer_contacts(K, R, tol.contact_band)
    Z = inner_contacts(K, r, tol.contact_band)
    if len(Y) == 0 or len(Z) == 0:
        raise ValueError("radii inconsistent with the body: no contact points on one of the spheres")
    return Y, Z


def _margin_lp(Yv: np.ndarray, Zv: np.ndarray, n: int):
    """Maximize m with <A,Y_i> + m <= c <= <A,Z_j>, tr A = 0, entries of A in [-1,1]."""
    k = Yv.shape[1]
    nv = k + 2  # a, c, m
    free = np.zeros(nv, dtype=bool)
    free[:k + 1] = True
    rows, rhs = [], []
    for y in Yv:
        rows.append(np.concatenate([y, [-1.0, 1.0]]))
        rhs.append(0.0)
    for z in Zv:
        rows.append(np.concatenate([-z, [1.0, 0.0]]))
        rhs.append(0.0)
    for l in range(k):
        e = np.zeros(nv)
        e[l] = 1.0
        rows.append(e)
        rhs.append(1.0)
        rows.append(-e)
        rhs.append(1.0)
    e = np.zeros(nv)
    e[-1] = 1.0
    rows.append(e)
    rhs.append(4.0)
    tr = np.zeros(nv)
    tr[:k] = vec_sym(np.eye(n))
    c = np.zeros(nv)
    c[-1] = -1.0
    res = lp.linprog(c, np.array(rows), np.array(rhs), tr[None, :], [0.0], free=free)
    if res.status != "optimal":
        raise RuntimeError("margin LP failed")
    return unvec_sym(res.x[:k], n), float(res.x[-1])


def find_ader(K: SymmetricBody, r: float, R: float,
              tol: Tolerance = DEFAULT_TOL) -> AderDecomposition | SeparationCertificate:
    """Decomposition for the contact sets of K at radii (r, R), or a separating matrix."""
    n = K.dim
    Y, Z = _contact_sets(K, r, R, tol)
    Yu = Y / np.linalg.norm(Y, axis=1)[:, None]
    Zu = Z / np.linalg.norm(Z, axis=1)[:, None]
    Yv = outer_products(Yu)
    Zv = outer_products(Zu)
    N, M = len(Y), len(Z)
    A_eq = np.zeros((Yv.shape[1] + 2, N + M))
    A_eq[:-2, :N] = Yv.T
    A_eq[:-2, N:] = -Zv.T
    A_eq[-2, :N] = 1.0
    A_eq[-1, N:] = 1.0
    b_eq = np.zeros(A_eq.shape[0])
    b_eq[-2:] = 1.0
    res = lp.simplex(np.zeros(N + M), A_eq, b_eq, feas_tol=1e-10)
    w = res.x if res.status == "optimal" else None
    if w is None:
        A, m = _margin_lp(Yv, Zv, n)
        nrm = np.linalg.norm(A)
        if m > 1e-12 and nrm > 0:
            return SeparationCertificate(r, R, A / nrm, m / nrm, Y, Z)
        # the two hulls touch: the position is optimal but the exact system is
        # off by rounding, so take the best L1 fit of the matrix rows
        w = _touching_fit(A_eq, b_eq)
        if w is None:
            raise ValueError("decomposition LP is degenerate at this tolerance")
    lt, mt = w[:N], w[N:]
    ky, kz = lt > PRUNE, mt > PRUNE
    D = AderDecomposition(r, R, Y[ky], lt[ky] / R ** 2, Z[kz], mt[kz] / r ** 2)
    return reduce_support(D, n)


def _touching_fit(A_eq: np.ndarray, b_eq: np.ndarray, fit_tol: float = 1e-9) -> np.ndarray | None:
    k = A_eq.shape[0] - 2  # matrix rows; the last two rows stay exact
    NM = A_eq.shape[1]
    S = np.zeros((A_eq.shape[0], 2 * k))
    S[:k, :k] = np.eye(k)
    S[:k, k:] = -np.eye(k)
    c = np.concatenate([np.zeros(NM), np.ones(2 * k)])
    res = lp.simplex(c, np.hstack([A_eq, S]), b_eq)
    if res.status != "optimal" or res.objective > fit_tol:
        return None
    return res.x[:NM]


def _columns(D: AderDecomposition) -> tuple[np.ndarray, np.ndarray]:
    Yv = outer_products(D.outer)
    Zv = outer_products(D.inner)
    N, M = len(D.lam), len(D.mu)
    C = np.zeros((Yv.shape[1] + 2, N + M))
    C[:-2, :N] = Yv.T
    C[:-2, N:] = -Zv.T
    C[-2, :N] = D.R ** 2
    C[-1, N:] = D.r ** 2
    return C, np.concatenate([D.lam, D.mu])


def _min_sv(C: np.ndarray) -> float:
    Cn = C / np.maximum(np.linalg.norm(C, axis=0), 1e-300)
    return float(np.linalg.svd(Cn, compute_uv=False).min())


def reduce_support(D: AderDecomposition, n: int | None = None) -> AderDecomposition:
    """Caratheodory reduction to at most n(n+1)/2 + 1 support points.

    Moves along null vectors of the weighted column system until a weight
    vanishes; among the removals available at a step, keeps the active set
    whose normalized columns have the largest minimum singular value.
    """
    n = D.dim if n is None else n
    N = len(D.lam)
    C, w = _columns(D)
    active = np.arange(len(w))
    w = w.copy()
    while True:
        Ca = C[:, active]
        s, Vt = np.linalg.svd(Ca)[1:]
        rank = int(np.sum(s > 1e-10 * max(1.0, s.max())))
        if rank >= len(active):
            break
        null = Vt[-1]
        best = None
        for sgn in (1.0, -1.0):
            delta = sgn * null
            pos = delta > 1e-14
            if not pos.any():
                continue
            ratios = np.full(len(active), np.inf)
            ratios[pos] = w[active][pos] / delta[pos]
            t = ratios.min()
            cand = np.where(ratios <= t * (1 + 1e-9) + 1e-300)[0]
            w_new = w[active] - t * delta
            for ci in cand:
                keep = np.ones(len(active), dtype=bool)
                keep[ci] = False
                if not (np.any(active[keep] < N) and np.any(active[keep] >= N)):
                    continue
                score = _min_sv(C[:, active[keep]])
                if best is None or score > best[0] + 1e-12:
                    best = (score, keep, w_new)
        if best is None:
            break
        _, keep, w_new = best
        w[active] = np.maximum(w_new, 0.0)
        active = active[keep]
        tiny = w[active] <= PRUNE * w[active].max()
        if tiny.any() and np.any(active[~tiny] < N) and np.any(active[~tiny] >= N):
            active = active[~tiny]
    ia = active[active < N]
    ja = active[active >= N] - N
    return AderDecomposition(D.r, D.R, D.outer[ia], w[ia], D.inner[ja], w[ja + N])


def verify_ader(D: AderDecomposition, tol: float = 1e-8, K: SymmetricBody | None = None) -> bool:
    """Check weights, sphere membership, the matrix identity and the trace identity.

    With ``K`` given, also checks that outer points are vertices of K at norm R
    and inner points lie on the boundary of K at norm r.
    """
    if np.any(D.lam < 0) or np.any(D.mu < 0) or len(D.lam) == 0 or len(D.mu) == 0:
        return False
    if np.any(np.abs(np.linalg.norm(D.outer, axis=1) - D.R) > tol * D.R):
        return False
    if np.any(np.abs(np.linalg.norm(D.inner, axis=1) - D.r) > tol * D.r):
        return False
    scale = max(1.0, D.R ** 2 * D.lam.sum())
    if D.matrix_residual() > tol * scale or D.trace_defect() > tol * scale:
        return False
    if K is not None:
        from .body import gauge
        g_out = gauge(K, D.outer)
        g_in = gauge(K, D.inner)
        if np.any(np.abs(g_out - 1) > tol) or np.any(np.abs(g_in - 1) > tol):
            return False
    return True


# ---------------------------------------------------------------- diagnostics

@dataclass
class SqrtNDiagnostics:
    n: int
    frobenius_sq: float  # <A, A>_F with tr A = 1
    ratio_bound: float  # 1 / sqrt(<A, A>_F), an upper bound for R/r
    ratio: float
    identity_defect: float  # ||A - I/n||_F
    pairing_defect: float  # max | |<z, y>| - r^2 |
    equality: bool
    extra: dict = field(default_factory=dict)


def sqrtn_diagnostics(D: AderDecomposition, n: int | None = None, tol: float = 1e-8) -> SqrtNDiagnostics:
    n = D.dim if n is None else n
    A = (D.outer.T * D.lam) @ D.outer
    t = np.trace(A)
    A = A / t
    ff = float(np.sum(A * A))
    idd = float(np.linalg.norm(A - np.eye(n) / n))
    pair = np.abs(np.abs(D.inner @ D.outer.T) - D.r ** 2)
    pd = float(pair.max())
    eq = idd <= tol and pd <= tol * max(1.0, D.r ** 2)
    return SqrtNDiagnostics(n, ff, 1.0 / math.sqrt(ff), D.R / D.r, idd, pd, eq)


def contact_rank(P: np.ndarray, tol: float = 1e-9) -> int:
    if len(P) == 0:
        return 0
    s = np.linalg.svd(P, compute_uv=False)
    return int(np.sum(s > tol * s.max()))


# ---------------------------------------------------------------- improvement

def body_ratio(K: SymmetricBody) -> float:
    r, R = in_circum(K)
    return R / r


def improve_position(E: Ellipsoid, C: SeparationCertificate, K: SymmetricBody,
                     max_halvings: int = 60) -> Ellipsoid:
    """Ellipsoid with a strictly smaller ratio, from a separation certificate.

    ``C`` must have been computed for K positioned so that E is the unit ball.
    The step I + eps*A is line-searched over eps in (0, 1/||A||).
    """
    M = E.to_ball_map()
    Kp = apply_map(M, K)
    base = body_ratio(Kp)
    n = K.dim
    eps = 0.5 / np.linalg.norm(C.A, 2)
    best = None
    for _ in range(max_halvings):
        T = np.eye(n) + eps * C.A
        val = body_ratio(apply_map(T, Kp))
        if val < base * (1 - 1e-15):
            if best is None or val < best[0]:
                best = (val, T)
            elif best is not None:
                break
        eps *= 0.5
    if best is None:
        raise ValueError("no improving step along the certificate direction")
    Mn = best[1] @ M
    return Ellipsoid(Mn.T @ Mn)


# ---------------------------------------------------------------- subspaces

def _slice_radii(K: SymmetricBody, B: np.ndarray) -> tuple[float, float]:
    """In- and circumradius of K intersected with the column span of B."""
    from .body import vertices_from_facets2d, vertices_from_halfspaces
    k = B.shape[1]
    F = K.half_facets @ B
    nz = np.linalg.norm(F, axis=1) > 1e-12
    F = F[nz]
    r = 1.0 / np.linalg.norm(F, axis=1).max()
    if k == 1:
        R = 1.0 / np.abs(F[:, 0]).max()
    elif k == 2:
        V = vertices_from_facets2d(F)
        R = float(np.linalg.norm(V, axis=1).max())
    else:
        V = vertices_from_halfspaces(F)
        R = float(np.linalg.norm(V, axis=1).max())
    return float(r), float(R)


@dataclass
class SubspaceReport:
    outer_in_U: bool
    inner_in_U: bool
    propagation_holds: bool
    restricted_ratio: float
    ratio: float
    inner_rank: int
    outer_rank: int
    rank_bound: int
    decomposition: AderDecomposition | None


def subspace_restriction_check(K: SymmetricBody, r: float, R: float, U,
                               tol: Tolerance = DEFAULT_TOL) -> SubspaceReport:
    """If all outer (or all inner) contacts lie in U, the other family does too,
    and the restriction of K to U has the same ratio R/r."""
    B, _ = np.linalg.qr(np.array(U, dtype=float, ndmin=2).reshape(K.dim, -1))
    P = B @ B.T
    Y, Z = _contact_sets(K, r, R, tol)

    def inside(X):
        return bool(np.all(np.linalg.norm(X - X @ P, axis=1) <= 1e-7 * np.linalg.norm(X, axis=1)))

    y_in, z_in = inside(Y), inside(Z)
    if not (y_in or z_in):
        Xall = np.vstack([Y, Z])
        bad = Xall[np.argmax(np.linalg.norm(Xall - Xall @ P, axis=1))]
        raise ValueError(f"neither contact family lies in U; witness {bad.tolist()}")
    D = find_ader(K, r, R, tol)
    dec = D if isinstance(D, AderDecomposition) else None
    if dec is not None:
        prop = inside(dec.outer) and inside(dec.inner)
    else:
        prop = False
    rU, RU = _slice_radii(K, B)
    d = R / r
    return SubspaceReport(y_in, z_in, prop, RU / rU, d,
                          contact_rank(Z), contact_rank(Y), math.ceil(d * d - 1e-9), dec)
