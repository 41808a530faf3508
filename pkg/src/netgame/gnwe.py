r"""
Generalized network equilibria under affine coupling constraints.

The collective strategy must satisfy :math:`Cx \le c` on top of the local
boxes. The Prox-GNWE iteration lets a coordinator broadcast a multiplier
:math:`\sigma \ge 0` and runs a preconditioned proximal-point scheme with
a non-symmetric preconditioner

.. math:: \Phi = \begin{bmatrix} \delta^{-1} + A & -\Lambda C^\top \\ C & \beta I \end{bmatrix},

where :math:`\delta^{-1}`, :math:`A` and :math:`\Lambda = \mathrm{diag}(\alpha)`
are Kronecker-expanded over the state dimension. Parameters are chosen so
that every Gerschgorin disc of the symmetric part of :math:`\Phi` lies in
:math:`(0, 1/\gamma]`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from netgame.dynamics import GameSpec
from netgame.errors import DimensionError, IterationLimitError, ParameterError
from netgame.graph import RowStochasticMatrix, mix
from netgame.prox import block_prox
from netgame.trajectory import TrajectoryRecord

GAMMA_SAFETY = 0.95


def _as_matrix(matrix) -> RowStochasticMatrix:
    return matrix if isinstance(matrix, RowStochasticMatrix) else RowStochasticMatrix(matrix)


# %% DATA TYPES


@dataclass(frozen=True, eq=False)
class CouplingConstraints:
    """
    Affine coupling constraints ``C x <= c`` on the stacked strategy.

    Parameters
    ----------
    C : array_like, shape (M, N * n)
        Agent blocks ``C_i`` are the column slices of width ``n``.
    c : array_like, shape (M,)
    n_agents : int
        Number of agents (fixes the block width ``n``).
    """

    C: np.ndarray
    c: np.ndarray
    n_agents: int

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        c = np.asarray(self.c, dtype=float).ravel()
        if C.shape[0] != c.size:
            raise DimensionError(f"C has {C.shape[0]} rows but c has {c.size} entries")
        if self.n_agents < 1 or C.shape[1] % self.n_agents:
            raise DimensionError(f"{C.shape[1]} columns cannot be split into {self.n_agents} agent blocks")
        C.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "c", c)

    @classmethod
    def equality(cls, C, c, n_agents):
        """Encode ``C x = c`` as the inequality pair ``[C; -C] x <= [c; -c]``."""
        C = np.atleast_2d(np.asarray(C, dtype=float))
        c = np.asarray(c, dtype=float).ravel()
        return cls(np.vstack([C, -C]), np.concatenate([c, -c]), n_agents)

    @classmethod
    def none(cls, n_agents, state_dim=1):
        """No constraint at all (``M = 1`` zero row, always satisfied)."""
        return cls(np.zeros((1, n_agents * state_dim)), np.zeros(1), n_agents)

    @property
    def n_constraints(self) -> int:
        return self.C.shape[0]

    @property
    def state_dim(self) -> int:
        return self.C.shape[1] // self.n_agents

    def block(self, i) -> np.ndarray:
        n = self.state_dim
        return self.C[:, i * n : (i + 1) * n]

    def block_norms(self) -> np.ndarray:
        r"""``||C_i^T||_inf`` per agent: the largest absolute column sum of ``C_i``."""
        absC = np.abs(self.C).sum(axis=0).reshape(self.n_agents, self.state_dim)
        return absC.max(axis=1)

    def violation(self, x) -> float:
        """``||max(0, C x - c)||_inf``."""
        return float(np.max(np.maximum(0.0, self.C @ x - self.c), initial=0.0))

    def check_game(self, game: GameSpec):
        if self.C.shape[1] != game.size or self.n_agents != game.n_agents:
            raise DimensionError("constraint blocks do not match the game dimensions")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for row, rhs in zip(self.C, self.c):
                w.writerow([f"{v:.17g}" for v in row] + [f"{rhs:.17g}"])

    @classmethod
    def from_csv(cls, path, n_agents):
        """Read rows ``C[m, :], c[m]`` (the right-hand side is the last column)."""
        data = np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))
        return cls(data[:, :-1], data[:, -1], n_agents)


@dataclass(frozen=True)
class GnweParams:
    """Weights ``alpha``, inverse-inertia ``delta``, dual scaling ``beta`` and step ``gamma``."""

    alpha: np.ndarray
    delta: np.ndarray
    beta: float
    gamma: float

    def to_dict(self) -> dict:
        return {
            "alpha": np.asarray(self.alpha).tolist(),
            "delta": np.asarray(self.delta).tolist(),
            "beta": float(self.beta),
            "gamma": float(self.gamma),
        }


@dataclass
class GnweState:
    """Iterate ``(x, sigma)`` plus the intermediate ``(tilde_x, tilde_sigma)`` of the last step."""

    x: np.ndarray
    sigma: np.ndarray
    tilde_x: np.ndarray | None = None
    tilde_sigma: np.ndarray | None = None

    def distance(self, other: "GnweState") -> float:
        dx = np.max(np.abs(self.x - other.x), initial=0.0)
        ds = np.max(np.abs(self.sigma - other.sigma), initial=0.0)
        return float(max(dx, ds))


@dataclass
class GnweReport:
    fixed_point_residual: float
    feasibility_violation: float
    complementarity: float
    tol: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = max(self.fixed_point_residual, self.feasibility_violation, self.complementarity) <= self.tol

    def to_dict(self) -> dict:
        return {
            "kind": "gnwe",
            "fixed_point_residual": self.fixed_point_residual,
            "feasibility_violation": self.feasibility_violation,
            "complementarity": self.complementarity,
            "tol": self.tol,
            "passed": self.passed,
        }


# %% PARAMETER SELECTION


def default_alpha(matrix) -> np.ndarray:
    """PF weights rescaled to sum to one."""
    q = _as_matrix(matrix).pf_vector
    return q / q.sum()


def radii(matrix, constraints: CouplingConstraints, alpha):
    r"""
    Gerschgorin radii of the preconditioner rows.

    Returns
    -------
    r : ndarray, shape (N,)
        :math:`\tfrac12\sum_{j\ne i}(a_{ij} + a_{ji}) + (1 + \alpha_i)\|C_i^\top\|_\infty`.
    p : float
        Radius bound for the multiplier rows: the larger of
        :math:`\max_j (1 + \alpha_j)\|C_j^\top\|_\infty` and the exact
        Gerschgorin radius :math:`\max_m \sum_{i,k} \tfrac{|1-\alpha_i|}{2} |C_{m,ik}|`
        of those rows, so that the discs are always covered.
    """
    A = _as_matrix(matrix).weights
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (A.shape[0],):
        raise DimensionError("alpha must have one entry per agent")
    off = A - np.diag(np.diag(A))
    cn = constraints.block_norms()
    r = 0.5 * (off.sum(axis=1) + off.sum(axis=0)) + (1 + alpha) * cn
    n = constraints.state_dim
    w = np.repeat(np.abs(1 - alpha) / 2, n)
    exact = float(np.max(np.abs(constraints.C) @ w, initial=0.0))
    p = max(float(np.max((1 + alpha) * cn)), exact)
    return r, p


def _delta_interval(r, a_diag, gamma):
    return np.maximum(0.0, r - a_diag), 1.0 / gamma - r - a_diag


def feasible_params(matrix, constraints: CouplingConstraints, alpha=None, gamma=None) -> GnweParams:
    """
    Pick ``delta``, ``beta`` and ``gamma`` satisfying the convergence inequalities.

    Parameters
    ----------
    matrix : RowStochasticMatrix or array_like
    constraints : CouplingConstraints
    alpha : array_like, optional
        Multiplier weights (default `default_alpha`).
    gamma : float, optional
        Step size. Without it the largest admissible step (times 0.95) is
        used: ``1/gamma > max_i max(r_i + a_ii, 2 r_i)`` and ``1/gamma > 2 p``.

    Returns
    -------
    GnweParams
        ``1/delta_i`` and ``beta`` at the midpoints of their intervals
        ``(max(0, r_i - a_ii), 1/gamma - r_i - a_ii]`` and ``(p, 1/gamma - p]``.

    Raises
    ------
    ParameterError
        If an interval is empty for the given `gamma`.
    """
    matrix = _as_matrix(matrix)
    alpha = default_alpha(matrix) if alpha is None else np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise ParameterError("alpha must be positive")
    r, p = radii(matrix, constraints, alpha)
    a_diag = np.diag(matrix.weights)
    if gamma is None:
        bound = max(float(np.max(np.maximum(r + a_diag, 2 * r))), 2 * p)
        gamma = GAMMA_SAFETY / bound
    elif not gamma > 0:
        raise ParameterError("gamma must be positive")

    lo, hi = _delta_interval(r, a_diag, gamma)
    bad = np.flatnonzero(hi <= lo)
    if bad.size:
        i = int(bad[0])
        raise ParameterError(
            f"empty interval for 1/delta_{i}: need max(0, r_i - a_ii) = {lo[i]:.6g} "
            f"< 1/gamma - r_i - a_ii = {hi[i]:.6g}"
        )
    if 1.0 / gamma - p <= p:
        raise ParameterError(f"empty interval for beta: need p = {p:.6g} < 1/gamma - p = {1.0 / gamma - p:.6g}")
    dinv = (lo + hi) / 2
    beta = (p + 1.0 / gamma - p) / 2
    return GnweParams(alpha=alpha, delta=1.0 / dinv, beta=float(beta), gamma=float(gamma))


def preconditioner(matrix, constraints: CouplingConstraints, alpha, params: GnweParams):
    """
    Assemble ``Phi`` with its symmetric part ``U`` and skew part ``S`` (diagnostics only).

    Raises
    ------
    ParameterError
        If ``U`` is not positive definite.
    """
    A = _as_matrix(matrix).weights
    n = constraints.state_dim
    In = np.eye(n)
    C = constraints.C
    M = C.shape[0]
    Lam = np.kron(np.diag(np.asarray(alpha, dtype=float)), In)
    top = np.hstack([np.kron(np.diag(1.0 / np.asarray(params.delta)) + A, In), -Lam @ C.T])
    bottom = np.hstack([C, params.beta * np.eye(M)])
    Phi = np.vstack([top, bottom])
    U = (Phi + Phi.T) / 2
    S = (Phi - Phi.T) / 2
    lmin = float(np.linalg.eigvalsh(U)[0])
    if not lmin > 0:
        raise ParameterError(f"preconditioner is not positive definite (smallest eigenvalue {lmin:.3g})")
    return Phi, U, S


# %% ITERATION


def _alpha_blocks(alpha, n):
    return np.repeat(np.asarray(alpha, dtype=float), n)


def step_prox_gnwe(game: GameSpec, constraints: CouplingConstraints, params: GnweParams, state: GnweState) -> GnweState:
    """
    One Prox-GNWE step.

    In order: a proximal reply for every agent, a projected multiplier
    update, and the two inertial corrections that need one more round of
    neighbor communication. The corrections are ``gamma Phi`` applied to
    the change ``(tilde_x - x, tilde_sigma - sigma)``, so agent ``i`` weighs
    its own change by ``1/delta_i``, the diagonal of ``Phi``. Iterative
    proximal maps are warm-started at the previous intermediate point.
    """
    n = game.state_dim
    x, sigma = state.x, state.sigma
    C, c = constraints.C, constraints.c
    delta = np.asarray(params.delta, dtype=float)
    lam = delta / (delta + 1)
    al = _alpha_blocks(params.alpha, n)
    dk = np.repeat(delta, n)

    z = x / dk + mix(game.matrix, x, n) - al * (C.T @ sigma)
    tx = block_prox(game.maps, np.repeat(lam, n) * z, lam, x_init=state.tilde_x)
    ts = np.maximum(0.0, sigma + (C @ x - c) / params.beta)

    dx = tx - x
    ds = ts - sigma
    g = params.gamma
    x_new = x + g * (dx / dk + mix(game.matrix, dx, n) - al * (C.T @ ds))
    s_new = sigma + g * (params.beta * ds + C @ dx)
    return GnweState(x_new, s_new, tx, ts)


def verify_gnwe(game: GameSpec, constraints: CouplingConstraints, alpha, x, sigma, tol=1e-6) -> GnweReport:
    """
    Check that ``(x, sigma)`` is a fixed point of the proximal/affine splitting.

    ``fixed_point_residual`` is ``||(x, sigma) - R(G(x, sigma))||_inf`` with
    ``G(x, sigma) = (A x - Lambda C^T sigma, sigma + C x - c)`` and ``R``
    the block proximal map paired with projection onto ``sigma >= 0``.
    """
    n = game.state_dim
    x = np.asarray(x, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    C, c = constraints.C, constraints.c
    gx = mix(game.matrix, x, n) - _alpha_blocks(alpha, n) * (C.T @ sigma)
    rx = block_prox(game.maps, gx)
    rs = np.maximum(0.0, sigma + C @ x - c)
    fp = float(max(np.max(np.abs(x - rx)), np.max(np.abs(sigma - rs), initial=0.0)))
    slack = C @ x - c
    return GnweReport(
        fixed_point_residual=fp,
        feasibility_violation=float(np.max(np.maximum(0.0, slack), initial=0.0)),
        complementarity=float(abs(sigma @ slack)),
        tol=tol,
    )


def run_prox_gnwe(
    game: GameSpec,
    constraints: CouplingConstraints,
    params: GnweParams | None = None,
    x0=None,
    sigma0=None,
    tol=1e-9,
    max_iter=100_000,
    store_every=1,
    cert_tol=None,
):
    """
    Run Prox-GNWE until the joint update ``||state+ - state||_inf`` is at most `tol`.

    Parameters
    ----------
    game : GameSpec
    constraints : CouplingConstraints
    params : GnweParams, optional
        Default `feasible_params` with PF weights.
    x0 : array_like, optional
        Default: the zero vector projected onto the local boxes.
    sigma0 : array_like, optional
        Default zero.
    tol : float, optional
    max_iter, store_every : int, optional
    cert_tol : float, optional
        Tolerance of the GNWE certificate (default ``max(tol, 1e-6)``).

    Returns
    -------
    TrajectoryRecord
        ``series["sigma"]`` holds the multiplier at every stored iterate and
        ``series["violation"]`` the constraint violation after every step.
    """
    constraints.check_game(game)
    if params is None:
        params = feasible_params(game.matrix, constraints)
    x = game.project(np.zeros(game.size)) if x0 is None else game.check_state(x0).copy()
    sigma = np.zeros(constraints.n_constraints) if sigma0 is None else np.asarray(sigma0, dtype=float).copy()
    if sigma.shape != (constraints.n_constraints,):
        raise DimensionError("sigma0 must have one entry per constraint")
    state = GnweState(x, sigma)

    rec = TrajectoryRecord(game.n_agents, game.state_dim, tol, info={"mode": "gnwe", "params": params.to_dict()})
    sigmas = rec.series.setdefault("sigma", [])
    violation = rec.series.setdefault("violation", [])

    def keep(k, st, force=False):
        if force or store_every <= 1 or k % store_every == 0:
            if rec.iterate_indices and rec.iterate_indices[-1] == k:
                return
            rec.iterates.append(st.x.copy())
            rec.iterate_indices.append(k)
            sigmas.append(st.sigma.copy())

    keep(0, state)
    for k in range(max_iter):
        try:
            new = step_prox_gnwe(game, constraints, params, state)
        except IterationLimitError as exc:
            rec.info["error"] = str(exc)
            break
        d = new.distance(state)
        state = new
        rec.residuals.append(d)
        violation.append(constraints.violation(state.x))
        rec.iterations = k + 1
        keep(k + 1, state)
        if d <= tol:
            rec.converged = True
            break
    keep(rec.iterations, state, force=True)

    cert_tol = max(tol, 1e-6) if cert_tol is None else cert_tol
    report = verify_gnwe(game, constraints, params.alpha, state.x, state.sigma, cert_tol)
    rec.certificate = report.to_dict()
    rec.info["final_sigma"] = state.sigma.tolist()
    return rec


# %% DIAGNOSTICS


def affine_operator(matrix, constraints: CouplingConstraints, alpha) -> np.ndarray:
    """Linear part of ``G``: ``[[A, -Lambda C^T], [C, I]]`` (Kronecker-expanded)."""
    A = _as_matrix(matrix).weights
    n = constraints.state_dim
    C = constraints.C
    Lam = np.kron(np.diag(np.asarray(alpha, dtype=float)), np.eye(n))
    top = np.hstack([np.kron(A, np.eye(n)), -Lam @ C.T])
    bottom = np.hstack([C, np.eye(C.shape[0])])
    return np.vstack([top, bottom])


def monotonicity_check_G(matrix, constraints: CouplingConstraints, alpha, Qbar=None, samples=1000, rng=None, tol=1e-10):
    """
    Test whether ``Id - G`` is monotone in the ``Qbar``-weighted inner product.

    Parameters
    ----------
    Qbar : array_like, optional
        Diagonal weights (vector or diagonal matrix) of length
        ``N n + M``. Default: PF weights on the strategy blocks and ones on
        the multipliers.
    samples : int or None, optional
        Number of random directions. ``None`` checks the smallest
        eigenvalue of the symmetric part instead.
    rng : int or numpy.random.Generator, optional
    tol : float, optional
        Allowed negative slack (relative to ``||d||^2``).
    """
    matrix = _as_matrix(matrix)
    G = affine_operator(matrix, constraints, alpha)
    size = G.shape[0]
    if Qbar is None:
        qbar = np.concatenate([np.repeat(matrix.pf_vector, constraints.state_dim), np.ones(constraints.n_constraints)])
    else:
        Qbar = np.asarray(Qbar, dtype=float)
        qbar = np.diag(Qbar) if Qbar.ndim == 2 else Qbar
    if qbar.shape != (size,):
        raise DimensionError(f"Qbar must have {size} diagonal entries")
    K = qbar[:, None] * (np.eye(size) - G)
    if samples is None:
        return bool(np.linalg.eigvalsh((K + K.T) / 2)[0] >= -tol)
    rng = np.random.default_rng(rng)
    D = rng.standard_normal((int(samples), size))
    D /= np.linalg.norm(D, axis=1, keepdims=True)
    vals = np.einsum("ij,jk,ik->i", D, K, D)
    return bool(vals.min() >= -tol)


def myopic_step(game: GameSpec, constraints: CouplingConstraints, x, inner_tol=1e-12, inner_max_iter=100_000):
    """
    Parallel constrained best responses, each agent holding the others fixed.

    Agent ``i`` solves ``min f_i(y) + 1/2 ||y - sum_j a_ij x_j||^2`` over its
    box subject to ``C_i y <= c - sum_{j != i} C_j x_j``; the local problem is
    solved by projected gradient ascent on its dual, each dual iterate
    requiring one proximal evaluation.
    """
    constraints.check_game(game)
    n = game.state_dim
    x = game.check_state(x)
    z = mix(game.matrix, x, n)
    Cx = constraints.C @ x
    out = np.empty_like(x)
    for i, pmap in enumerate(game.maps):
        sl = slice(i * n, (i + 1) * n)
        Ci = constraints.block(i)
        b = constraints.c - (Cx - Ci @ x[sl])
        L = float(np.linalg.norm(Ci, 2) ** 2)
        if L == 0:
            out[sl] = pmap.eval(z[sl])
            continue
        mu = np.zeros(Ci.shape[0])
        y = pmap.eval(z[sl] - Ci.T @ mu)
        for _ in range(inner_max_iter):
            mu_new = np.maximum(0.0, mu + (Ci @ y - b) / L)
            y = pmap.eval(z[sl] - Ci.T @ mu_new)
            done = np.max(np.abs(mu_new - mu)) <= inner_tol
            mu = mu_new
            if done:
                break
        out[sl] = y
    return out
