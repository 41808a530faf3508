"""
Reference computations that share no code with the package.

Each oracle solves its problem by a different route than the library
(dense linear algebra, brute-force search, enumeration), so agreement is
meaningful evidence.
"""

import itertools

import numpy as np


def pf_linear_solve(A):
    """Left PF vector from the dense system ``q^T (A - I) = 0, sum(q) = 1``, rescaled to unit norm."""
    A = np.asarray(A, dtype=float)
    N = A.shape[0]
    M = np.vstack([A.T - np.eye(N), np.ones((1, N))])
    rhs = np.zeros(N + 1)
    rhs[-1] = 1.0
    q, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return q / np.linalg.norm(q)


def kron_mix(A, x, n):
    return np.kron(np.asarray(A, dtype=float), np.eye(n)) @ np.asarray(x, dtype=float)


def grid_argmin_1d(cost, lo, hi, tol=1e-9, points=2001):
    """
    Minimize a convex scalar function on ``[lo, hi]`` by repeated grid refinement.

    The first grid has spacing at most ``(hi - lo) / (points - 1)``; each
    round zooms into the two cells around the best point.
    """
    a, b = float(lo), float(hi)
    while True:
        grid = np.linspace(a, b, points)
        vals = cost(grid)
        k = int(np.argmin(vals))
        h = grid[1] - grid[0]
        if h < tol:
            return grid[k]
        a, b = max(lo, grid[k] - 2 * h), min(hi, grid[k] + 2 * h)


def prox_1d(f, z, lam, weight=1.0, lo=-1e3, hi=1e3):
    """``argmin_y lam f(y) + (weight / 2)(y - z)^2`` over ``[lo, hi]`` by grid search."""
    return grid_argmin_1d(lambda y: lam * f(y) + 0.5 * weight * (y - z) ** 2, lo, hi)


def lasso_enumeration(B, y, tau):
    """
    Exact LASSO minimizer for small ``n`` by enumerating sign patterns.

    For every pattern ``s`` in ``{-1, 0, 1}^n`` the stationarity equations
    on the support are solved; sign-consistent candidates are compared by
    objective value.
    """
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float)
    n = B.shape[1]
    best, best_val = np.zeros(n), float(y @ y)
    for s in itertools.product((-1, 0, 1), repeat=n):
        s = np.array(s, dtype=float)
        S = s != 0
        if not S.any():
            continue
        BS = B[:, S]
        try:
            xs = np.linalg.solve(2 * BS.T @ BS, 2 * BS.T @ y - tau * s[S])
        except np.linalg.LinAlgError:
            continue
        if np.any(np.sign(xs) != s[S]):
            continue
        x = np.zeros(n)
        x[S] = xs
        r = B @ x - y
        val = float(r @ r + tau * np.abs(x).sum())
        if val < best_val:
            best, best_val = x, val
    return best


def fj_equilibrium(A, mu, x0):
    """
    Interior FJ equilibrium from the linear system ``x = (1 - mu) x0 + mu A x``.

    The box ``[0, 1]`` is never active because the right-hand side is a
    convex combination of points in the box.
    """
    A = np.asarray(A, dtype=float)
    x0 = np.asarray(x0, dtype=float).reshape(A.shape[0], -1)
    mu = np.asarray(mu, dtype=float)
    M = np.eye(A.shape[0]) - mu[:, None] * A
    return np.linalg.solve(M, (1 - mu)[:, None] * x0).ravel()


def symmetric_part_min_eig(K):
    K = np.asarray(K, dtype=float)
    return float(np.linalg.eigvalsh((K + K.T) / 2)[0])


def gerschgorin_discs(M):
    """Centers and radii of the row discs of a square matrix."""
    M = np.asarray(M, dtype=float)
    c = np.diag(M)
    r = np.abs(M).sum(axis=1) - np.abs(c)
    return c, r


def async_trace_identity(A, x0, agents, delay):
    """
    Hand-rolled asynchronous trace for zero-cost agents on the whole space.

    Every active agent reads its neighbors at the same fixed `delay`
    (clamped to the start) and its own state fresh, and replaces its own
    entry by the weighted average.
    """
    A = np.asarray(A, dtype=float)
    hist = [np.asarray(x0, dtype=float).copy()]
    for i in agents:
        cur = hist[-1]
        past = hist[max(0, len(hist) - 1 - delay)]
        view = past.copy()
        view[i] = cur[i]
        new = cur.copy()
        new[i] = A[i] @ view
        hist.append(new)
    return hist
