"""Banach-Mazur distance searches.

``bm_to_ball`` minimizes circumradius/inradius over linear images of K.  The
problem is quasi-convex in the Gram matrix Q of the map, so any certified
local optimum is global; certification is the contact-point decomposition
from :mod:`bmlab.decomposition`.

``bm_planar`` and ``bm_to_parallelogram`` are non-convex; they use seeded
multi-start direct search followed by a smooth polish in which every
constraint is linear in the entries of the map.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .body import (DEFAULT_TOL, LinearMap, SymmetricBody, Tolerance, apply_map,
                   cross_polytope, in_circum)
from .decomposition import (AderDecomposition, find_ader,
                            improve_position, verify_ader)
from .ellipsoid import Ellipsoid, john, loewner_body
from .rng import SplitMix64


PGRAM_POINTS = 256


@dataclass
class SearchOptions:
    restarts: int = 8
    seed: int = 0
    tol: Tolerance = DEFAULT_TOL
    max_rounds: int = 12
    nm_maxiter: int = 300
    samples_per_edge: int | None = None  # None: enough for about PGRAM_POINTS boundary points
    starts: list | None = None  # explicit start matrices (Q for the ball search, T otherwise)


@dataclass
class BMResult:
    value: float
    witness: object
    certificate: AderDecomposition | None
    converged: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        w = self.witness
        if isinstance(w, Ellipsoid):
            wd = {"ellipsoid": w.to_dict()}
        elif isinstance(w, LinearMap):
            wd = {"map": w.matrix.tolist()}
        else:
            wd = w
        out = {"value": self.value, "witness": wd, "converged": self.converged}
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_dict()
        return out


# ---------------------------------------------------------------- ratio for a map

def ratio_for_map(K: SymmetricBody, L: SymmetricBody, T) -> float:
    """Smallest rho with K inside s*T(L) inside rho*s*K for some scale s."""
    M = T.matrix if isinstance(T, LinearMap) else np.asarray(T, dtype=float)
    Mi = np.linalg.inv(M)
    k_in_tl = np.abs(L.half_facets @ Mi @ K.half_vertices.T).max()
    tl_in_k = np.abs(K.half_facets @ M @ L.half_vertices.T).max()
    return float(k_in_tl * tl_in_k)


# ---------------------------------------------------------------- ball

@lru_cache(maxsize=None)
def _tril(n):
    return np.tril_indices(n)


def _chol_from_params(theta: np.ndarray, n: int) -> np.ndarray:
    L = np.zeros((n, n))
    L[_tril(n)] = theta
    d = np.arange(n)
    L[d, d] = np.exp(np.clip(L[d, d], -30.0, 30.0))
    return L


def _params_from_Q(Q: np.ndarray) -> np.ndarray:
    L = np.linalg.cholesky(Q)
    n = len(Q)
    L = L.copy()
    d = np.arange(n)
    L[d, d] = np.log(L[d, d])
    return L[_tril(n)]


def _ball_ratio_Q(K: SymmetricBody, Q: np.ndarray) -> float:
    out = np.einsum("ij,jk,ik->i", K.half_vertices, Q, K.half_vertices).max()
    Qi = np.linalg.inv(Q)
    inn = np.einsum("ij,jk,ik->i", K.half_facets, Qi, K.half_facets).max()
    return float(math.sqrt(out * inn))


def _ball_direct_search(K: SymmetricBody, Q0: np.ndarray, maxiter: int) -> np.ndarray:
    n = K.dim
    th0 = _params_from_Q(Q0 / np.linalg.det(Q0) ** (1.0 / n))

    def f(th):
        L = _chol_from_params(th, n)
        try:
            return math.log(_ball_ratio_Q(K, L @ L.T))
        except (np.linalg.LinAlgError, ValueError, OverflowError):
            return math.inf

    res = minimize(f, th0, method="Nelder-Mead",
                   options={"maxiter": maxiter, "xatol": 1e-10, "fatol": 1e-13})
    L = _chol_from_params(res.x, n)
    return L @ L.T


def _ball_polish(K: SymmetricBody, Q0: np.ndarray, delta: float = 0.05) -> np.ndarray:
    """Local refinement of the ellipsoid Gram matrix Q0.

    In the frame where Q0 is the identity, minimize s subject to
    |L^T v|^2 <= 1 and |L^-1 a|^2 <= s with Q = L L^T.  Only nearly active
    vertices and facets are kept as constraints; the set is enlarged and the
    solve repeated if the solution activates new ones.
    """
    n = K.dim
    M0 = np.linalg.cholesky(Q0).T
    Kp = apply_map(M0, K)
    V, F = Kp.half_vertices, Kp.half_facets
    rows, cols = _tril(n)
    diag = rows == cols
    R2 = float(np.sum(V ** 2, axis=1).max())
    th0 = np.zeros(len(rows))
    th0[diag] = -0.5 * math.log(R2)
    x0 = np.concatenate([th0, [float(np.sum(F ** 2, axis=1).max()) * R2]])

    def sets(x, d):
        L = _chol_from_params(x[:-1], n)
        vo = np.sum((V @ L) ** 2, axis=1)
        fi = np.sum(np.linalg.solve(L, F.T) ** 2, axis=0)
        return np.where(vo >= (1 - d) * vo.max())[0], np.where(fi >= (1 - d) * fi.max())[0]

    iv, jf = sets(x0, delta)
    x = x0
    obj_grad = np.zeros(len(x0))
    obj_grad[-1] = 1.0
    for _ in range(6):
        Vw, Fw = V[iv], F[jf]

        def cons(x):
            L = _chol_from_params(x[:-1], n)
            W = Vw @ L
            P = np.linalg.solve(L, Fw.T).T
            return np.concatenate([1.0 - np.sum(W ** 2, axis=1), x[-1] - np.sum(P ** 2, axis=1)])

        def jac(x):
            L = _chol_from_params(x[:-1], n)
            W = Vw @ L
            P = np.linalg.solve(L, Fw.T).T
            G = np.linalg.solve(L.T, P.T).T  # rows L^{-T} p
            gv = -2.0 * Vw[:, rows] * W[:, cols]
            gf = 2.0 * G[:, rows] * P[:, cols]
            dscale = np.diag(L)[rows[diag]]
            gv[:, diag] *= dscale
            gf[:, diag] *= dscale
            J = np.zeros((len(Vw) + len(Fw), len(x)))
            J[:len(Vw), :-1] = gv
            J[len(Vw):, :-1] = gf
            J[len(Vw):, -1] = 1.0
            return J

        try:
            with np.errstate(all="ignore"):
                res = minimize(lambda x: x[-1], x, jac=lambda x: obj_grad, method="SLSQP",
                               constraints=[{"type": "ineq", "fun": cons, "jac": jac}],
                               options={"maxiter": 500, "ftol": 1e-13})
        except (np.linalg.LinAlgError, ValueError):
            break
        if not np.all(np.isfinite(res.x)):
            break
        x = res.x
        iv2, jf2 = sets(x, delta)
        if np.all(np.isin(iv2, iv)) and np.all(np.isin(jf2, jf)):
            break
        iv = np.union1d(iv, iv2)
        jf = np.union1d(jf, jf2)
    L = _chol_from_params(x[:-1], n)
    Q = M0.T @ (L @ L.T) @ M0
    if not np.all(np.isfinite(Q)) or _ball_ratio_Q(K, Q) > _ball_ratio_Q(K, Q0):
        return Q0
    return Q


def _normalize_Q(Q):
    return Q / np.linalg.det(Q) ** (1.0 / len(Q))


def _certify_ball(K, Q, tol):
    E = Ellipsoid(Q)
    Kp = apply_map(E.to_ball_map(), K)
    r, R = in_circum(Kp)
    return E, Kp, r, R, find_ader(Kp, r, R, tol)


def _ball_from_start(K, Q0, opts: SearchOptions, direct: bool):
    tol = opts.tol
    Q = Q0
    if direct:
        Q = _ball_direct_search(K, Q, opts.nm_maxiter)
    best_Q, best_val = Q, _ball_ratio_Q(K, Q)
    for rnd in range(opts.max_rounds):
        Q = _ball_polish(K, Q)
        val = _ball_ratio_Q(K, Q)
        if val <= best_val:
            best_Q, best_val = Q, val
        E, Kp, r, R, out = _certify_ball(K, Q, tol)
        if isinstance(out, AderDecomposition) and verify_ader(out, tol.optimizer, Kp):
            return Q, R / r, out, rnd
        try:
            Q = improve_position(E, out, K).Q
        except ValueError:
            break
    return best_Q, best_val, None, opts.max_rounds


def _ball_starts(K: SymmetricBody, opts: SearchOptions) -> list[tuple[np.ndarray, bool]]:
    if opts.starts is not None:
        return [(np.asarray(Q, dtype=float), False) for Q in opts.starts]
    n = K.dim
    starts = [(john(K, 1e-4).Q, False), (loewner_body(K, 1e-4).Q, False)]
    rng = SplitMix64(opts.seed, 0xBA11)
    for _ in range(max(0, opts.restarts - 2)):
        G = np.array([[rng.normal() for _ in range(n)] for _ in range(n)])
        S = starts[0][0]
        W = np.eye(n) + 0.5 * (G + G.T) / math.sqrt(2 * n)
        W = W @ W.T
        starts.append((W.T @ S @ W, True))
    return starts


def bm_to_ball(K: SymmetricBody, opts: SearchOptions | None = None) -> BMResult:
    """Distance from K to the Euclidean ball with an optimality certificate.

    The witness is the inner distance ellipsoid E (E inside K inside value*E).
    The certificate lives in the frame where E is the unit ball scaled by r.
    """
    opts = opts or SearchOptions()
    best = None
    tried = 0
    for Q0, direct in _ball_starts(K, opts):
        tried += 1
        Q, val, cert, rounds = _ball_from_start(K, Q0, opts, direct)
        if best is None or val < best[1] - 1e-15 or (cert is not None and best[2] is None
                                                      and val <= best[1] + opts.tol.optimizer):
            best = (Q, val, cert, rounds)
        if cert is not None and opts.starts is None:
            break
    Q, val, cert, rounds = best
    E = Ellipsoid(Q)
    r, _ = in_circum(apply_map(E.to_ball_map(), K))
    inner = E.scaled(r)  # largest multiple of E inside K
    return BMResult(val, inner, cert, cert is not None,
                    {"Q_normalized": _normalize_Q(Q).tolist(), "starts_tried": tried, "rounds": rounds})


# ---------------------------------------------------------------- planar maps

def chart_map(theta: float, log_s: float, k: float) -> np.ndarray:
    """Rotation * diag(s, 1/s) * shear(k)."""
    c, s_ = math.cos(theta), math.sin(theta)
    s = math.exp(log_s)
    Rm = np.array([[c, -s_], [s_, c]])
    return Rm @ np.diag([s, 1.0 / s]) @ np.array([[1.0, k], [0.0, 1.0]])


def _planar_ratio_parts(FK, VK, FL, VL, T):
    Ti = np.linalg.inv(T)
    return np.abs(FL @ Ti @ VK.T).max() * np.abs(FK @ T @ VL.T).max()


def _planar_polish(K: SymmetricBody, L: SymmetricBody, T0: np.ndarray, delta: float = 0.1) -> np.ndarray:
    """Local minimization of q / det(T) subject to T(L) inside K and
    |<b, adj(T) v>| <= q for facets b of L and vertices v of K.

    All constraints are linear in (T, q), so the solve is well conditioned.
    """
    FK, VK, FL, VL = K.half_facets, K.half_vertices, L.half_facets, L.half_vertices
    sigma = 1.0 if np.linalg.det(T0) > 0 else -1.0
    T0 = T0 / np.abs(FK @ T0 @ VL.T).max()

    def adj(T):
        return np.array([[T[1, 1], -T[0, 1]], [-T[1, 0], T[0, 0]]])

    def select(T, q, d):
        inner = FK @ T @ VL.T  # (|FK|, |VL|)
        outer = FL @ adj(T) @ VK.T  # (|FL|, |VK|)
        ii = np.argwhere(np.abs(inner) >= (1 - d) * np.abs(inner).max())
        oo = np.argwhere(np.abs(outer) >= (1 - d) * np.abs(outer).max())
        si = np.sign(inner[ii[:, 0], ii[:, 1]])
        so = np.sign(outer[oo[:, 0], oo[:, 1]])
        return ii, si, oo, so

    q0 = float(np.abs(FL @ adj(T0) @ VK.T).max())
    x = np.concatenate([T0.ravel(), [q0]])
    ii, si, oo, so = select(T0, q0, delta)

    def build(ii, si, oo, so):
        a = FK[ii[:, 0]]
        w = VL[ii[:, 1]]
        # <a, T w> = sum a_i T_ij w_j
        Gi = np.einsum("ki,kj->kij", a, w).reshape(len(ii), 4) * si[:, None]
        b = FL[oo[:, 0]]
        v = VK[oo[:, 1]]
        # <b, adj(T) v> with adj(T) = [[t11, -t01], [-t10, t00]]
        Go = np.column_stack([b[:, 1] * v[:, 1], -b[:, 0] * v[:, 1], -b[:, 1] * v[:, 0], b[:, 0] * v[:, 0]]) * so[:, None]
        A = np.zeros((len(ii) + len(oo), 5))
        A[:len(ii), :4] = -Gi
        A[len(ii):, :4] = -Go
        A[len(ii):, 4] = 1.0
        c = np.zeros(len(A))
        c[:len(ii)] = 1.0
        return A, c

    def obj(x):
        T = x[:4].reshape(2, 2)
        det = sigma * (T[0, 0] * T[1, 1] - T[0, 1] * T[1, 0])
        return x[4] / det if det > 0 else 1e30

    def grad(x):
        T = x[:4].reshape(2, 2)
        det = sigma * (T[0, 0] * T[1, 1] - T[0, 1] * T[1, 0])
        cof = sigma * np.array([T[1, 1], -T[1, 0], -T[0, 1], T[0, 0]])
        g = np.zeros(5)
        g[:4] = -x[4] / det ** 2 * cof
        g[4] = 1.0 / det
        return g

    for _ in range(6):
        A, c = build(ii, si, oo, so)
        res = minimize(obj, x, jac=grad, method="SLSQP",
                       constraints=[{"type": "ineq", "fun": lambda x, A=A, c=c: A @ x + c,
                                     "jac": lambda x, A=A: A}],
                       options={"maxiter": 300, "ftol": 1e-16})
        xn = res.x
        T = xn[:4].reshape(2, 2)
        if sigma * np.linalg.det(T) <= 0 or not np.all(np.isfinite(xn)):
            break
        x = xn
        ii2, si2, oo2, so2 = select(T, xn[4], delta)
        key = lambda arr: {tuple(r) for r in arr}
        if key(ii2) <= key(ii) and key(oo2) <= key(oo):
            break
        ii = np.vstack([ii, ii2])
        si = np.concatenate([si, si2])
        oo = np.vstack([oo, oo2])
        so = np.concatenate([so, so2])
    T = x[:4].reshape(2, 2)
    if _planar_ratio_parts(FK, VK, FL, VL, T) <= _planar_ratio_parts(FK, VK, FL, VL, T0):
        return T
    return T0


def _planar_direct(K, L, T_start: np.ndarray, maxiter: int) -> np.ndarray:
    FK, VK, FL, VL = K.half_facets, K.half_vertices, L.half_facets, L.half_vertices
    refl = np.linalg.det(T_start) < 0
    B = np.diag([1.0, -1.0]) if refl else np.eye(2)
    T1 = T_start @ B
    T1 = T1 / math.sqrt(abs(np.linalg.det(T1)))
    # chart coordinates of T1 by QR-like decomposition: T1 = R(theta) diag(s,1/s) shear(k)
    theta = math.atan2(T1[1, 0], T1[0, 0])
    c, s_ = math.cos(theta), math.sin(theta)
    U = np.array([[c, s_], [-s_, c]]) @ T1  # upper triangular diag(s, 1/s) shear(k)
    s = U[0, 0]
    k = U[0, 1] / s
    p0 = np.array([theta, math.log(max(s, 1e-12)), k])

    def f(p):
        T = chart_map(*p) @ B
        try:
            return math.log(_planar_ratio_parts(FK, VK, FL, VL, T))
        except np.linalg.LinAlgError:
            return math.inf

    res = minimize(f, p0, method="Nelder-Mead",
                   options={"maxiter": maxiter, "xatol": 1e-10, "fatol": 1e-13})
    return chart_map(*res.x) @ B


def _john_align(K: SymmetricBody, L: SymmetricBody):
    MK = john(K, 1e-4).to_ball_map()
    ML = john(L, 1e-4).to_ball_map()
    return np.linalg.inv(MK), ML


def _pick(cands: list[tuple[float, np.ndarray]], tol: float):
    """Smallest ratio; near-ties go to the smallest condition number."""
    vmin = min(v for v, _ in cands)
    near = [(np.linalg.cond(T), v, T) for v, T in cands if v <= vmin + tol]
    near.sort(key=lambda t: (t[0], t[1]))
    return near[0][1], near[0][2]


def bm_planar(K: SymmetricBody, L: SymmetricBody, opts: SearchOptions | None = None) -> BMResult:
    """Banach-Mazur distance between two planar symmetric polygons."""
    if K.dim != 2 or L.dim != 2:
        raise ValueError("planar bodies only")
    opts = opts or SearchOptions()
    FK, VK, FL, VL = K.half_facets, K.half_vertices, L.half_facets, L.half_vertices
    rng = SplitMix64(opts.seed, 0x91A4)
    starts = []
    if opts.starts is not None:
        starts = [np.asarray(T, dtype=float) for T in opts.starts]
    else:
        MKi, ML = _john_align(K, L)
        for refl in (1.0, -1.0):
            for j in range(24):
                th = math.pi * j / 24
                starts.append(MKi @ chart_map(th, 0.0, 0.0) @ np.diag([1.0, refl]) @ ML)
        for _ in range(opts.restarts):
            T = chart_map(rng.uniform(0, math.pi), rng.uniform(math.log(0.25), math.log(4.0)), rng.uniform(-3, 3))
            if rng.random() < 0.5:
                T = T @ np.diag([1.0, -1.0])
            starts.append(T)
    if opts.starts is not None:
        chosen = starts
    else:
        # direct search from the best structured starts and from every random start
        structured = sorted(starts[:48], key=lambda T: _planar_ratio_parts(FK, VK, FL, VL, T))
        chosen = structured[:12] + starts[48:]
    cands = []
    for T in chosen:
        T1 = _planar_direct(K, L, T, opts.nm_maxiter)
        T2 = _planar_polish(K, L, T1)
        cands.append((_planar_ratio_parts(FK, VK, FL, VL, T2), T2))
    val, T = _pick(cands, opts.tol.optimizer * 1e-2)
    T = T / math.sqrt(abs(np.linalg.det(T)))
    return BMResult(float(val), LinearMap(T), None, True,
                    {"candidates": len(cands), "spread": float(max(v for v, _ in cands) - val)})


# ---------------------------------------------------------------- parallelograms

def _pgram_table(H: np.ndarray, X: np.ndarray, chunk: int = 64) -> np.ndarray:
    """ratio[i, j] = max_v ||[x_i x_j]^{-1} v||_1 over vertices v in H."""
    m = len(X)
    C = X[:, 0:1] * H[None, :, 1] - X[:, 1:2] * H[None, :, 0]  # cross(x_i, v)
    D = X[:, 0:1] * X[None, :, 1] - X[:, 1:2] * X[None, :, 0]  # cross(x_i, x_j)
    out = np.full((m, m), np.inf)
    absC = np.abs(C)
    for s in range(0, m, chunk):
        S = (absC[s:s + chunk, None, :] + absC[None, :, :]).max(axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            R = S / np.abs(D[s:s + chunk])
        R[~np.isfinite(R)] = np.inf
        out[s:s + chunk] = R
    return out


def bm_to_parallelogram(K: SymmetricBody, opts: SearchOptions | None = None) -> BMResult:
    """Distance from a planar polygon to the square.

    Searches parallelograms conv{±x, ±p} with x, p on the boundary of K
    (vertices plus optional edge samples), then polishes the best few.
    """
    if K.dim != 2:
        raise ValueError("planar bodies only")
    opts = opts or SearchOptions()
    ccw = K.ccw_vertices()
    H = K.half_vertices
    pts = [ccw]
    m = opts.samples_per_edge
    if m is None:
        m = max(0, math.ceil(PGRAM_POINTS / len(ccw)) - 1)
    if m > 0:
        nxt = np.roll(ccw, -1, axis=0)
        for t in np.arange(1, m + 1) / (m + 1):
            pts.append((1 - t) * ccw + t * nxt)
    X = np.vstack(pts)
    # one point per antipodal pair suffices
    ang = np.arctan2(X[:, 1], X[:, 0])
    X = X[(ang >= -1e-12) & (ang < math.pi - 1e-12)]
    table = _pgram_table(H, X)
    flat = np.argsort(table, axis=None)
    Cr = cross_polytope(2)
    cands = []
    for idx in flat[:8]:
        i, j = np.unravel_index(idx, table.shape)
        if not np.isfinite(table[i, j]):
            break
        M0 = np.column_stack([X[i], X[j]])
        T = _planar_polish(K, Cr, M0)
        cands.append((ratio_for_map(K, Cr, T), T))
    val, T = _pick(cands, opts.tol.optimizer * 1e-2)
    # rescale so that the parallelogram sits inside K with touching vertices
    T = T / np.abs(K.half_facets @ T @ Cr.half_vertices.T).max()
    return BMResult(float(val), LinearMap(T), None, True,
                    {"parallelogram": [T[:, 0].tolist(), T[:, 1].tolist()], "table_min": float(table.min())})
