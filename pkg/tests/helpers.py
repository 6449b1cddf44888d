import numpy as np

from bmlab.body import canonical_sign


def same_points(P, Q, tol=1e-9) -> bool:
    """Equality of antipodal point sets given by half-representatives."""
    P = canonical_sign(np.asarray(P, float))
    Q = canonical_sign(np.asarray(Q, float))
    if P.shape != Q.shape:
        return False
    return all(np.abs(Q - p).max(axis=1).min() <= tol for p in P)


def rot(deg):
    t = np.deg2rad(deg)
    return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])


def random_body(seed: int, index: int, n: int, pairs: int | None = None):
    """Random symmetric polytope in R^n cut out by unit-ish slabs."""
    from bmlab.body import SymmetricBody
    from bmlab.rng import stream

    g = stream(seed, index)
    k = pairs or 2 * n + 1
    F = np.array([[g.normal() for _ in range(n)] for _ in range(k)])
    F /= np.array([[np.linalg.norm(f) * np.exp(g.uniform(-0.4, 0.4))] for f in F])
    return SymmetricBody.from_halfspaces(F, f"random{n}d-{seed}-{index}")


# acceptance lines, echoed again in the terminal summary
ACCEPTANCE_LINES: list[str] = []
