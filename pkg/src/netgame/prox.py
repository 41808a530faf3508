r"""
Proximal operators of local agent objectives.

Every map represents an extended-value convex function
:math:`\bar f = f + \iota_\Omega` with :math:`\Omega` a box, together with
a penalty weight :math:`w` on the proximal coupling term. Evaluating a map
at :math:`z` with scaling :math:`\lambda` returns

.. math:: \operatorname{argmin}_y \; \lambda \bar f(y) + \tfrac{w}{2}\|y - z\|^2,

i.e. the ordinary proximal operator of :math:`(\lambda / w) \bar f`. The
Friedkin-Johnsen builder uses ``w = 2`` so that its cost with coefficient
one on :math:`\|y - z\|^2` is reproduced literally; every other map uses
``w = 1``.
"""

from __future__ import annotations

import numpy as np

from netgame.errors import (
    DimensionError,
    IterationLimitError,
    ParameterError,
    UnsupportedKindError,
)

_BOUND_RTOL = 1e-12


def _vec(v, n, name):
    v = np.broadcast_to(np.asarray(v, dtype=float), (n,)).copy()
    v.setflags(write=False)
    return v


def soft_threshold(z, t):
    """Componentwise shrinkage ``sign(z) * max(|z| - t, 0)``."""
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


class ProximalMap:
    """
    Base class for the proximal map of one agent.

    Parameters
    ----------
    state_dim : int
        Dimension ``n`` of the agent state.
    lo, hi : array_like or float, optional
        Box bounds of the local constraint set. Missing bounds are
        infinite.
    weight : float, optional
        Penalty weight ``w`` on the proximal term.
    """

    kind = "custom"

    def __init__(self, state_dim, lo=None, hi=None, weight=1.0):
        self.state_dim = int(state_dim)
        if self.state_dim < 1:
            raise DimensionError("state_dim must be positive")
        self.lo = _vec(-np.inf if lo is None else lo, self.state_dim, "lo")
        self.hi = _vec(np.inf if hi is None else hi, self.state_dim, "hi")
        if np.any(self.lo > self.hi):
            raise ParameterError("box bounds need lo <= hi componentwise")
        if not weight > 0:
            raise ParameterError("penalty weight must be positive")
        self.weight = float(weight)

    # -- interface -----------------------------------------------------

    def eval(self, z, lam=1.0, x_init=None):
        raise NotImplementedError

    def smooth_grad(self, p):
        """Gradient of the differentiable part of ``f`` (excluding the l1 term)."""
        raise UnsupportedKindError(f"{self.kind} maps have no computable subdifferential")

    l1_weight = 0.0

    def f(self, y):
        """Value of ``f + indicator(box)`` at `y`."""
        raise UnsupportedKindError(f"{self.kind} maps do not expose f")

    # -- shared helpers ------------------------------------------------

    def contains(self, p, atol=0.0) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lo - atol) and np.all(p <= self.hi + atol))

    def project(self, z):
        return np.clip(z, self.lo, self.hi)

    def _check(self, z, lam):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.state_dim,):
            raise DimensionError(f"expected a vector of length {self.state_dim}, got shape {z.shape}")
        if not lam > 0:
            raise ParameterError(f"lambda must be positive, got {lam!r}")
        return z, lam / self.weight

    def residual(self, p, z, lam=1.0):
        r"""
        Distance from zero to :math:`\lambda' \partial \bar f(p) + (p - z)`, with :math:`\lambda' = \lambda / w`.

        Works for every separable-nonsmooth kind, i.e. a smooth part plus an
        l1 term plus the box indicator.
        """
        z, lam_eff = self._check(z, lam)
        p = np.asarray(p, dtype=float)
        scale = np.maximum(1.0, np.abs(np.where(np.isfinite(self.lo), self.lo, 0.0)))
        tol_lo = _BOUND_RTOL * scale
        scale = np.maximum(1.0, np.abs(np.where(np.isfinite(self.hi), self.hi, 0.0)))
        tol_hi = _BOUND_RTOL * scale
        if np.any(p < self.lo - tol_lo) or np.any(p > self.hi + tol_hi):
            return np.inf

        v = z - p - lam_eff * self.smooth_grad(p)
        t = lam_eff * self.l1_weight
        lower = np.where(p > 0, t, -t)
        upper = np.where(p < 0, -t, t)
        lower = np.where(p <= self.lo + tol_lo, -np.inf, lower)
        upper = np.where(p >= self.hi - tol_hi, np.inf, upper)
        gap = np.maximum.reduce([lower - v, np.zeros_like(v), v - upper])
        return float(np.linalg.norm(gap))

    def __repr__(self):
        return f"{type(self).__name__}(state_dim={self.state_dim})"


class BoxIndicator(ProximalMap):
    """Indicator of a box; the proximal map is the projection (clamping)."""

    kind = "box_indicator"

    def eval(self, z, lam=1.0, x_init=None):
        z, _ = self._check(z, lam)
        return self.project(z)

    def smooth_grad(self, p):
        return np.zeros(self.state_dim)

    def f(self, y):
        return 0.0 if self.contains(y) else np.inf


class FJQuadratic(ProximalMap):
    r"""
    Friedkin-Johnsen anchoring cost :math:`\frac{1-\mu}{\mu}\|y - x_0\|^2` on a box.

    With the default penalty weight ``w = 2`` and ``lam = 1`` the proximal
    map is the classic update ``proj((1 - mu) x0 + mu z)``.

    Parameters
    ----------
    anchor : array_like
        Initial opinion ``x0``.
    stubbornness : float
        ``mu`` in ``(0, 1]``; ``mu = 1`` removes the anchor term.
    """

    kind = "fj_quadratic"

    def __init__(self, anchor, stubbornness, lo=0.0, hi=1.0, weight=2.0):
        anchor = np.atleast_1d(np.asarray(anchor, dtype=float))
        super().__init__(anchor.size, lo, hi, weight)
        mu = float(stubbornness)
        if not 0 < mu <= 1:
            raise ParameterError(f"stubbornness must lie in (0, 1], got {mu!r}")
        self.anchor = _vec(anchor, self.state_dim, "anchor")
        self.stubbornness = mu
        self.anchor_weight = (1.0 - mu) / mu

    def eval(self, z, lam=1.0, x_init=None):
        z, lam_eff = self._check(z, lam)
        c = 2.0 * lam_eff * self.anchor_weight
        return self.project((z + c * self.anchor) / (1.0 + c))

    def smooth_grad(self, p):
        return 2.0 * self.anchor_weight * (np.asarray(p, dtype=float) - self.anchor)

    def f(self, y):
        if not self.contains(y):
            return np.inf
        d = np.asarray(y, dtype=float) - self.anchor
        return float(self.anchor_weight * d @ d)


class L1Norm(ProximalMap):
    """Weighted l1 norm ``tau * ||y||_1``, optionally restricted to a box."""

    kind = "l1"

    def __init__(self, state_dim, tau, lo=None, hi=None, weight=1.0):
        super().__init__(state_dim, lo, hi, weight)
        if not tau >= 0:
            raise ParameterError("tau must be nonnegative")
        self.tau = float(tau)

    @property
    def l1_weight(self):
        return self.tau

    def eval(self, z, lam=1.0, x_init=None):
        z, lam_eff = self._check(z, lam)
        return self.project(soft_threshold(z, lam_eff * self.tau))

    def smooth_grad(self, p):
        return np.zeros(self.state_dim)

    def f(self, y):
        return float(self.tau * np.abs(y).sum()) if self.contains(y) else np.inf


class LeastSquaresL1(ProximalMap):
    r"""
    LASSO-type local cost :math:`\|B y - b\|^2 + \tau\|y\|_1` on a box.

    No closed form exists, so each evaluation runs proximal gradient on
    the scaled problem with the fixed step :math:`1/(\lambda' L + 1)`,
    :math:`L = \lambda_{\max}(2B^\top B)`. The loop stops once the explicit
    subgradient element produced by the last step has norm at most
    `inner_tol`, which certifies ``residual(p) <= inner_tol``.

    Parameters
    ----------
    B : array_like, shape (d, n)
        Local data matrix.
    b : array_like, shape (d,)
        Local observations.
    tau : float
        l1 weight.
    inner_tol : float, optional
    inner_max_iter : int, optional
    """

    kind = "least_squares_l1"

    def __init__(self, B, b, tau=1.0, lo=None, hi=None, weight=1.0, inner_tol=1e-10, inner_max_iter=100_000):
        B = np.atleast_2d(np.asarray(B, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        if B.shape[0] != b.size:
            raise DimensionError(f"B has {B.shape[0]} rows but b has {b.size} entries")
        super().__init__(B.shape[1], lo, hi, weight)
        if not tau >= 0:
            raise ParameterError("tau must be nonnegative")
        if not inner_tol > 0:
            raise ParameterError("inner_tol must be positive")
        self.B = B
        self.b = b
        self.tau = float(tau)
        self.inner_tol = float(inner_tol)
        self.inner_max_iter = int(inner_max_iter)
        self._BtB2 = 2.0 * B.T @ B
        self._Btb2 = 2.0 * B.T @ b
        self.lipschitz = float(np.linalg.eigvalsh(self._BtB2)[-1]) if B.size else 0.0

    @property
    def l1_weight(self):
        return self.tau

    def smooth_grad(self, p):
        return self._BtB2 @ np.asarray(p, dtype=float) - self._Btb2

    def f(self, y):
        if not self.contains(y):
            return np.inf
        r = self.B @ y - self.b
        return float(r @ r + self.tau * np.abs(y).sum())

    def eval(self, z, lam=1.0, x_init=None):
        z, lam_eff = self._check(z, lam)
        step = 1.0 / (lam_eff * self.lipschitz + 1.0)
        thresh = step * lam_eff * self.tau
        H = lam_eff * self._BtB2
        h = lam_eff * self._Btb2 + z
        lo, hi = self.lo, self.hi

        p = np.clip(z if x_init is None else np.asarray(x_init, dtype=float), lo, hi)
        g = H @ p + p - h
        res = np.inf
        for it in range(self.inner_max_iter):
            u = p - step * g
            p_new = np.clip(np.sign(u) * np.maximum(np.abs(u) - thresh, 0.0), lo, hi)
            g_new = H @ p_new + p_new - h
            res = np.linalg.norm(g_new - g + (p - p_new) / step)
            p, g = p_new, g_new
            if res <= self.inner_tol:
                return p
            if it % 5 == 0:
                q = self._polish(p, H, h, lam_eff)
                if q is not None and self.residual(q, z, lam) <= self.inner_tol:
                    return q
        raise IterationLimitError(
            f"least-squares l1 prox did not reach {self.inner_tol:g}", last_iterate=p, residual=float(res)
        )

    def _polish(self, p, H, h, lam_eff):
        # exact solve on the current support and sign pattern (interior of the box only)
        if np.any(p <= self.lo) or np.any(p >= self.hi):
            return None
        s = np.sign(p)
        S = s != 0
        q = np.zeros_like(p)
        if np.any(S):
            K = H[np.ix_(S, S)] + np.eye(int(S.sum()))
            q[S] = np.linalg.solve(K, h[S] - lam_eff * self.tau * s[S])
            if np.any(np.sign(q[S]) != s[S]):
                return None
        return q


class CustomProx(ProximalMap):
    """
    User-supplied proximal map.

    Parameters
    ----------
    fn : callable
        ``fn(z, lam_eff) -> p`` evaluating the proximal operator of
        ``lam_eff * f``.
    state_dim : int
    residual_fn : callable, optional
        ``residual_fn(p, z, lam_eff) -> float``; without it
        `subgradient_residual` raises UnsupportedKindError.
    """

    kind = "custom"

    def __init__(self, fn, state_dim, lo=None, hi=None, weight=1.0, residual_fn=None):
        super().__init__(state_dim, lo, hi, weight)
        self.fn = fn
        self.residual_fn = residual_fn

    def eval(self, z, lam=1.0, x_init=None):
        z, lam_eff = self._check(z, lam)
        return np.asarray(self.fn(z, lam_eff), dtype=float)

    def residual(self, p, z, lam=1.0):
        if self.residual_fn is None:
            raise UnsupportedKindError("custom map without a residual function")
        z, lam_eff = self._check(z, lam)
        return float(self.residual_fn(np.asarray(p, dtype=float), z, lam_eff))


def identity_map(state_dim) -> BoxIndicator:
    """Prox of the zero function on the whole space (the identity)."""
    return BoxIndicator(state_dim)


# %% FUNCTIONAL INTERFACE


def prox_eval(pmap: ProximalMap, z, lam=1.0, x_init=None):
    """Evaluate `pmap` at `z` with scaling `lam` (see module docstring)."""
    return pmap.eval(z, lam, x_init=x_init)


def subgradient_residual(pmap: ProximalMap, p, z, lam=1.0) -> float:
    """Optimality certificate of `p` for ``prox_eval(pmap, z, lam)``; zero iff optimal."""
    return pmap.residual(p, z, lam)


def block_prox(maps, z, lambdas=None, x_init=None):
    """
    Apply one proximal map per agent to the blocks of a stacked vector.

    Parameters
    ----------
    maps : sequence of ProximalMap
        All maps must share the same state dimension ``n``.
    z : array_like, shape (N * n,)
    lambdas : array_like of N floats, optional
        Per-agent scalings (default all ones).
    x_init : array_like, shape (N * n,), optional
        Warm starts for iterative kinds.
    """
    n_agents = len(maps)
    n = maps[0].state_dim
    z = np.asarray(z, dtype=float)
    if z.shape != (n_agents * n,) or any(m.state_dim != n for m in maps):
        raise DimensionError("inconsistent block dimensions in block_prox")
    lambdas = np.ones(n_agents) if lambdas is None else np.broadcast_to(np.asarray(lambdas, dtype=float), (n_agents,))
    out = np.empty_like(z)
    for i, m in enumerate(maps):
        sl = slice(i * n, (i + 1) * n)
        out[sl] = m.eval(z[sl], lambdas[i], x_init=None if x_init is None else x_init[sl])
    return out
