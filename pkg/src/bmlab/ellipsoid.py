"""Centered ellipsoids {x : x^T Q x <= 1} and the Loewner/John constructions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .body import SymmetricBody, apply_map


class Ellipsoid:
    __slots__ = ("Q",)

    def __init__(self, Q):
        Q = np.array(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be square")
        Q = 0.5 * (Q + Q.T)
        if np.linalg.eigvalsh(Q).min() <= 0:
            raise ValueError("Q must be positive definite")
        Q.setflags(write=False)
        self.Q = Q

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    @classmethod
    def ball(cls, n: int, radius: float = 1.0) -> "Ellipsoid":
        return cls(np.eye(n) / radius ** 2)

    def scaled(self, s: float) -> "Ellipsoid":
        """The ellipsoid ``s * E``."""
        return Ellipsoid(self.Q / s ** 2)

    def to_ball_map(self) -> np.ndarray:
        """Matrix M with M(E) = unit ball, i.e. Q = M^T M."""
        L = np.linalg.cholesky(self.Q)
        return L.T

    def to_dict(self) -> dict:
        return {"dim": self.dim, "Q": self.Q.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Ellipsoid":
        E = cls(d["Q"])
        if "dim" in d and int(d["dim"]) != E.dim:
            raise ValueError("declared dim does not match Q")
        return E

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def __repr__(self):
        return f"Ellipsoid(Q={self.Q.tolist()})"


# ---------------------------------------------------------------- eigen

def jacobi_eigh(S, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi eigendecomposition of a small symmetric matrix.

    Returns ascending eigenvalues and the matching orthonormal eigenvectors
    as columns.
    """
    A = np.array(S, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(1.0, float(np.abs(A).max()))
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(A, 1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                V = V @ J
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    w = np.diag(A).copy()
    order = np.argsort(w)
    return w[order], V[:, order]


# ---------------------------------------------------------------- basic ops

def ellipsoid_gauge(E: Ellipsoid, x):
    x = np.asarray(x, dtype=float)
    vals = np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", x, E.Q, x), 0.0))
    return float(vals) if x.ndim == 1 else vals


def polar_ellipsoid(E: Ellipsoid) -> Ellipsoid:
    return Ellipsoid(np.linalg.inv(E.Q))


def tangent_dual_point(E: Ellipsoid, x, tol: float = 1e-9) -> np.ndarray:
    """The point y of the polar boundary with <x, y> = 1 for x on the boundary of E."""
    x = np.asarray(x, dtype=float)
    if abs(ellipsoid_gauge(E, x) - 1.0) > tol:
        raise ValueError("point is not on the ellipsoid boundary")
    return E.Q @ x


def map_ellipsoid(T, E: Ellipsoid) -> Ellipsoid:
    """Image T(E)."""
    Ti = np.linalg.inv(np.asarray(T, dtype=float))
    return Ellipsoid(Ti.T @ E.Q @ Ti)


# ---------------------------------------------------------------- mean ellipsoids

@dataclass
class MeanSpec:
    """Principal frame of an ellipsoid: Q = sum_i axes_i^-2 v_i v_i^T."""

    axes_dirs: np.ndarray  # columns are unit directions
    semiaxes: np.ndarray

    @classmethod
    def from_ellipsoid(cls, E: Ellipsoid) -> "MeanSpec":
        w, V = jacobi_eigh(E.Q)
        return cls(V, 1.0 / np.sqrt(w))

    def unit_subspace(self, tol: float = 1e-8) -> np.ndarray:
        """Orthonormal basis (columns) of the span of unit semi-axis directions."""
        sel = np.abs(self.semiaxes - 1.0) <= tol
        return self.axes_dirs[:, sel]


def mean_ellipsoid(ms: MeanSpec, lam: float) -> Ellipsoid:
    if not 0.0 <= lam <= 1.0:
        raise ValueError("interpolation parameter must lie in [0, 1]")
    w = ms.semiaxes ** (-2.0 * lam)
    V = ms.axes_dirs
    return Ellipsoid((V * w) @ V.T)


def _body_inside_ellipsoid_scale(K: SymmetricBody, E: Ellipsoid) -> float:
    """Smallest s with K inside s*E."""
    return float(ellipsoid_gauge(E, K.half_vertices).max())


def _ellipsoid_inside_body_scale(K: SymmetricBody, E: Ellipsoid) -> float:
    """Largest s with s*E inside K."""
    Qi = np.linalg.inv(E.Q)
    h = np.sqrt(np.einsum("ij,jk,ik->i", K.half_facets, Qi, K.half_facets))
    return float(1.0 / h.max())


@dataclass
class MeanCheckReport:
    inclusions_hold: bool
    inner_contacts: np.ndarray
    outer_contacts: np.ndarray
    unit_subspace: np.ndarray
    max_offset: float
    confined: bool
    details: dict = field(default_factory=dict)


def mean_ellipsoid_check(K: SymmetricBody, E1: Ellipsoid, d: float, lam: float,
                         tol: float = 1e-7) -> MeanCheckReport:
    """Check that the interpolated ellipsoid between the ball and E1 is again a
    distance-d pair for K and that its contact points lie in the span of the
    unit semi-axes of E1."""
    if not 0.0 < lam < 1.0:
        raise ValueError("interpolation parameter must lie strictly between 0 and 1")
    n = K.dim
    ball = Ellipsoid.ball(n)
    for E, name in ((ball, "ball"), (E1, "E1")):
        if _ellipsoid_inside_body_scale(K, E) < 1 - tol or _body_inside_ellipsoid_scale(K, E) > d * (1 + tol):
            raise ValueError(f"precondition fails: {name} and {name} scaled by d do not sandwich K")
    ms = MeanSpec.from_ellipsoid(E1)
    El = mean_ellipsoid(ms, lam)
    s_in = _ellipsoid_inside_body_scale(K, El)
    s_out = _body_inside_ellipsoid_scale(K, El)
    ok = s_in >= 1 - tol and s_out <= d * (1 + tol)

    # outer contacts: vertices on the boundary of d*E_lam
    g = ellipsoid_gauge(El, K.half_vertices)
    outer = K.half_vertices[np.abs(g - d) <= tol * d]
    # inner contacts: tangency points of facets with E_lam
    Qi = np.linalg.inv(El.Q)
    h = np.sqrt(np.einsum("ij,jk,ik->i", K.half_facets, Qi, K.half_facets))
    sel = np.abs(h - 1.0) <= tol
    inner = (K.half_facets[sel] @ Qi) / h[sel][:, None]

    U = ms.unit_subspace()
    P = U @ U.T
    pts = np.vstack([outer, inner]) if len(outer) + len(inner) else np.zeros((0, n))
    off = 0.0
    if len(pts):
        scale = np.maximum(np.linalg.norm(pts, axis=1), 1e-300)
        off = float((np.linalg.norm(pts - pts @ P, axis=1) / scale).max())
    return MeanCheckReport(ok, inner, outer, U, off, off <= 1e-6,
                           {"inner_scale": s_in, "outer_scale": s_out, "semiaxes": ms.semiaxes.tolist()})


# ---------------------------------------------------------------- Loewner / John

def _sym_basis(n: int) -> list[np.ndarray]:
    out = []
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            if i == j:
                E[i, i] = 1.0
            else:
                E[i, j] = E[j, i] = 1.0 / np.sqrt(2.0)
            out.append(E)
    return out


def _barrier_polish(P: np.ndarray, Q0: np.ndarray, gap: float = 1e-13) -> np.ndarray:
    """Newton barrier method for  min -log det Q  s.t.  p_i^T Q p_i <= 1.

    Starts from a strictly feasible Q0 and follows the central path until the
    duality gap bound m/t drops below ``gap``.
    """
    m, n = P.shape
    basis = _sym_basis(n)
    k = len(basis)
    A = np.array([[p @ B @ p for B in basis] for p in P])  # rows: coordinates of p p^T
    q = np.array([np.sum(Q0 * B) for B in basis])

    def mat(q):
        return sum(c * B for c, B in zip(q, basis))

    t = 1.0
    stalled = False
    while not stalled:
        for _ in range(100):
            Q = mat(q)
            Qi = np.linalg.inv(Q)
            s = 1.0 - A @ q
            g = -t * np.array([np.sum(Qi * B) for B in basis]) + A.T @ (1.0 / s)
            QB = [Qi @ B for B in basis]
            H = t * np.array([[np.sum(QB[a] * QB[b].T) for b in range(k)] for a in range(k)])
            H += (A.T / s ** 2) @ A
            try:
                step = -np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                # slacks at rounding level: the current point is as good as it gets
                stalled = True
                break
            dec = -g @ step
            if not np.isfinite(dec):
                stalled = True
                break
            lam = np.sqrt(max(dec, 0.0))
            if lam < 1e-8:
                break
            # damped Newton step; the barrier objective is self-concordant
            h = 1.0 if lam < 0.25 else 1.0 / (1.0 + lam)
            while h > 1e-12:
                qn = q + h * step
                if np.all(1.0 - A @ qn > 0) and np.all(np.linalg.eigvalsh(mat(qn)) > 0):
                    break
                h *= 0.5
            if h <= 1e-12:
                stalled = True
                break
            q = qn
        else:
            stalled = True
        if m / t < gap:
            break
        t *= 20.0
    return mat(q)


def _kkt_refine(P: np.ndarray, Q: np.ndarray, band: float = 1e-6, iters: int = 20) -> np.ndarray:
    """Newton on the optimality system restricted to the near-active points.

    Solves Q^-1 = sum lam_i p_i p_i^T with p_i^T Q p_i = 1.  The barrier
    result is only accurate to about the square root of its duality gap; this
    step recovers full precision.  Returns Q unchanged if the refined point is
    not feasible or has negative multipliers.
    """
    n = Q.shape[0]
    basis = _sym_basis(n)
    coords = lambda X: np.array([np.sum(X * B) for B in basis])
    g = np.einsum("ij,jk,ik->i", P, Q, P)
    S = P[g >= (1 - band) * g.max()]
    AS = np.array([coords(np.outer(p, p)) for p in S])  # rows
    k, m = len(basis), len(S)
    lam = np.linalg.lstsq(AS.T, coords(np.linalg.inv(Q)), rcond=None)[0]
    x = np.concatenate([coords(Q), lam])

    def mat(q):
        return sum(c * B for c, B in zip(q, basis))

    def resid(x):
        Qx = mat(x[:k])
        return np.concatenate([coords(np.linalg.inv(Qx)) - AS.T @ x[k:], AS @ x[:k] - 1.0])

    r = resid(x)
    for _ in range(iters):
        Qi = np.linalg.inv(mat(x[:k]))
        J = np.zeros((k + m, k + m))
        for a, B in enumerate(basis):
            J[:k, a] = -coords(Qi @ B @ Qi)
        J[:k, k:] = -AS.T
        J[k:, :k] = AS
        x = x - np.linalg.lstsq(J, r, rcond=None)[0]
        if np.linalg.eigvalsh(mat(x[:k])).min() <= 0:
            return Q
        rn = resid(x)
        done = np.abs(rn).max() < 1e-15 or np.abs(rn).max() >= 0.5 * np.abs(r).max()
        r = rn
        if done:
            break
    Qn = mat(x[:k])
    Qn = 0.5 * (Qn + Qn.T)
    if x[k:].min() < -1e-12 or np.einsum("ij,jk,ik->i", P, Qn, P).max() > 1 + 1e-12:
        return Q
    if np.abs(r).max() > 1e-10:
        return Q
    return Qn


def loewner(points, eps: float = 1e-8, max_iter: int = 1_000_000) -> Ellipsoid:
    """Minimum-volume centered ellipsoid containing ``±points``.

    A Frank-Wolfe iteration on the design weights (Khachiyan's update plus
    the Todd-Yildirim drop step) runs to a coarse tolerance; a barrier Newton
    polish then converges to the optimum.  The result contains every point
    with gauge at most 1 + eps, and at least one point has gauge above
    1 / (1 + eps).
    """
    P = np.array(points, dtype=float, ndmin=2)
    m, n = P.shape
    if np.linalg.matrix_rank(P) < n:
        raise ValueError("points do not span the space")
    coarse = max(eps, 1e-4)
    u = np.full(m, 1.0 / m)
    hi = n * (1.0 + coarse) ** 2
    lo = n * (1.0 - coarse) ** 2
    for _ in range(max_iter):
        X = (P.T * u) @ P
        Xi = np.linalg.inv(X)
        g = np.einsum("ij,jk,ik->i", P, Xi, P)
        j = int(np.argmax(g))
        active = u > 0
        ga = np.where(active, g, np.inf)
        k = int(np.argmin(ga))
        if g[j] <= hi and g[k] >= lo:
            break
        if g[j] / n - 1.0 >= 1.0 - g[k] / n:
            a = (g[j] / n - 1.0) / (g[j] - 1.0)
            u *= 1.0 - a
            u[j] += a
        else:
            a = (1.0 - g[k] / n) / (g[k] - 1.0) if g[k] > 1.0 else np.inf
            a = min(a, u[k] / (1.0 - u[k]))
            u *= 1.0 + a
            u[k] -= a
            if u[k] < 1e-16:
                u[k] = 0.0
            u /= u.sum()
    else:
        raise RuntimeError("Loewner iteration cap reached before the stopping rule held")
    Q = Xi / n
    if g.max() > n * (1.0 + eps) ** 2 or g[u > 0].min() < n * (1.0 - eps) ** 2:
        Q0 = Q / (g.max() / n * (1.0 + 1e-6))
        # polish in the frame where the start is the unit ball; keeps Newton well scaled
        C = np.linalg.cholesky(Q0)
        Qw = _barrier_polish(P @ C, np.eye(n))
        Q = C @ Qw @ C.T
        Q = 0.5 * (Q + Q.T)
        Q = C @ _kkt_refine(P @ C, Qw) @ C.T
        Q = 0.5 * (Q + Q.T)
    # touch the farthest point exactly
    Q = Q / np.einsum("ij,jk,ik->i", P, Q, P).max()
    return Ellipsoid(Q)


def john(K: SymmetricBody, eps: float = 1e-8) -> Ellipsoid:
    """Maximal-volume centered ellipsoid inside K (polar of the Loewner
    ellipsoid of the polar body)."""
    return polar_ellipsoid(loewner(K.half_facets, eps))


def loewner_body(K: SymmetricBody, eps: float = 1e-8) -> Ellipsoid:
    return loewner(K.half_vertices, eps)


def position_body(K: SymmetricBody, E: Ellipsoid) -> tuple[SymmetricBody, np.ndarray]:
    """Image of K under the map taking E to the unit ball, and that map."""
    M = E.to_ball_map()
    return apply_map(M, K), M

