"""
Communication matrices.

Construction, validation and spectral analysis of the row-stochastic
weight matrices that describe who listens to whom in a network game.
Agent ``i`` assigns weight ``a_ij`` to the state of agent ``j``; the
induced digraph has an edge ``j -> i`` whenever ``a_ij > 0``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.sparse.csgraph import connected_components

from netgame.errors import (
    DimensionError,
    IterationLimitError,
    ParameterError,
    PreconditionError,
)

ROW_SUM_TOL = 1e-12
LEFT_EIG_TOL = 1e-10


def as_weights(matrix) -> np.ndarray:
    """Return the dense weight array of `matrix` (array-like or RowStochasticMatrix)."""
    if isinstance(matrix, RowStochasticMatrix):
        return matrix.weights
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


# %% VALIDATION


@dataclass(frozen=True)
class ClauseResult:
    passed: bool
    offending: tuple = ()


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of checking the standing assumption on a weight matrix.

    Clauses are ``nonnegative``, ``row_sums``, ``strongly_connected`` and
    ``self_loops`` (strictly positive diagonal). Offending entries are
    ``(i, j)`` pairs for ``nonnegative`` and agent indices otherwise.
    """

    clauses: dict
    min_self_loop: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses.values())

    @property
    def failed(self) -> list:
        return [name for name, c in self.clauses.items() if not c.passed]

    def __str__(self):
        if self.passed:
            return f"pass (min self-loop {self.min_self_loop:.17g})"
        parts = [f"{name} at {self.clauses[name].offending}" for name in self.failed]
        return "fail: " + "; ".join(parts)


def strongly_connected(weights) -> bool:
    """True iff the digraph with an edge wherever ``a_ij > 0`` is strongly connected."""
    a = as_weights(weights)
    if a.shape[0] == 1:
        return True
    n_comp, _ = connected_components(a > 0, directed=True, connection="strong")
    return n_comp == 1


def validate_standing_assumption(weights, tol=ROW_SUM_TOL) -> ValidationReport:
    """Check nonnegativity, unit row sums, strong connectivity and self-loops.

    Parameters
    ----------
    weights : array_like, shape (N, N)
        Candidate communication matrix.
    tol : float, optional
        Tolerance on each row sum.

    Returns
    -------
    ValidationReport
        Per-clause pass/fail with offending indices.
    """
    a = as_weights(weights)
    n = a.shape[0]
    if n < 1:
        raise DimensionError("matrix must have at least one row")

    neg = tuple(map(tuple, np.argwhere(a < 0).tolist()))
    bad_rows = tuple(np.flatnonzero(np.abs(a.sum(axis=1) - 1.0) > tol).tolist())
    if n == 1:
        outside = ()
    else:
        _, labels = connected_components(a > 0, directed=True, connection="strong")
        outside = tuple(np.flatnonzero(labels != labels[0]).tolist())
    diag = np.diag(a)
    no_loop = tuple(np.flatnonzero(diag <= 0).tolist())

    clauses = {
        "nonnegative": ClauseResult(not neg, neg),
        "row_sums": ClauseResult(not bad_rows, bad_rows),
        "strongly_connected": ClauseResult(not outside, outside),
        "self_loops": ClauseResult(not no_loop, no_loop),
    }
    return ValidationReport(clauses, float(diag.min()))


def renormalize_rows(weights) -> np.ndarray:
    """Rescale each row to sum to one (absorbs rounding in user-supplied weights)."""
    a = np.array(as_weights(weights), dtype=float)
    s = a.sum(axis=1, keepdims=True)
    if np.any(s <= 0):
        raise ParameterError("cannot renormalize a row with nonpositive sum")
    return a / s


# %% MATRIX TYPE


@dataclass(frozen=True, eq=False)
class RowStochasticMatrix:
    """
    Validated row-stochastic communication matrix.

    The weights must be nonnegative with unit row sums and induce a
    strongly connected digraph. Self-loops are not required here (the
    convergence theory needs them, the no-self-loop counterexamples do
    not), but `min_self_loop` exposes the smallest diagonal entry.

    Parameters
    ----------
    weights : array_like, shape (N, N)
        The matrix entries ``a_ij``.
    """

    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(as_weights(self.weights), dtype=float)
        report = validate_standing_assumption(a)
        broken = [c for c in ("nonnegative", "row_sums", "strongly_connected") if c in report.failed]
        if broken:
            raise PreconditionError(f"not a strongly connected row-stochastic matrix: {report}")
        a.setflags(write=False)
        object.__setattr__(self, "weights", a)

    @property
    def n_agents(self) -> int:
        return self.weights.shape[0]

    @property
    def min_self_loop(self) -> float:
        return float(np.diag(self.weights).min())

    @cached_property
    def pf_vector(self) -> np.ndarray:
        """Unit-norm left Perron-Frobenius eigenvector (computed on first access)."""
        q = left_pf_eigenvector(self)
        q.setflags(write=False)
        return q

    @property
    def pf_diag(self) -> np.ndarray:
        return np.diag(self.pf_vector)

    def is_doubly_stochastic(self, tol=ROW_SUM_TOL) -> bool:
        return bool(np.all(np.abs(self.weights.sum(axis=0) - 1.0) <= tol))

    def __array__(self, dtype=None, copy=None):
        return self.weights if dtype is None else self.weights.astype(dtype)

    def __repr__(self):
        return f"RowStochasticMatrix(n_agents={self.n_agents}, min_self_loop={self.min_self_loop:.4g})"


# %% SPECTRAL TOOLS


def left_pf_eigenvector(matrix, tol=1e-12, max_iter=100_000) -> np.ndarray:
    r"""
    Left Perron-Frobenius eigenvector of a row-stochastic matrix.

    Computes the positive vector :math:`q` with :math:`q^\top A = q^\top`
    and :math:`\|q\|_2 = 1` by power iteration on :math:`A^\top`, started
    from the uniform vector. When some diagonal entry is zero the matrix
    may be periodic, so the lazy matrix :math:`(I + A^\top)/2` (same
    eigenvector, always primitive) is iterated instead.

    Parameters
    ----------
    matrix : array_like or RowStochasticMatrix
        Strongly connected row-stochastic matrix.
    tol : float, optional
        Stop when successive iterates differ by at most ``tol * ||q||_inf``.
    max_iter : int, optional
        Iteration cap.

    Returns
    -------
    q : ndarray, shape (N,)
        Positive unit-norm left eigenvector for eigenvalue one.

    Raises
    ------
    PreconditionError
        If the matrix is not row stochastic, nonnegative and irreducible.
    IterationLimitError
        If the tolerance is not met within `max_iter` iterations.
    """
    a = as_weights(matrix)
    if not isinstance(matrix, RowStochasticMatrix):
        report = validate_standing_assumption(a)
        broken = [c for c in report.failed if c != "self_loops"]
        if broken:
            raise PreconditionError(f"PF eigenvector needs an irreducible stochastic matrix: {report}")

    n = a.shape[0]
    at = a.T
    lazy = np.diag(a).min() <= 0
    q = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(max_iter):
        q_new = at @ q
        if lazy:
            q_new = 0.5 * (q_new + q)
        q_new /= np.linalg.norm(q_new)
        if np.max(np.abs(q_new - q)) <= tol * np.max(np.abs(q_new)):
            q = q_new
            break
        q = q_new
    else:
        raise IterationLimitError(
            "power iteration did not converge",
            last_iterate=q,
            residual=float(np.max(np.abs(q @ a - q))),
        )
    # a few extra sweeps push the eigen-residual down to rounding level
    best, best_res = q, np.max(np.abs(q @ a - q))
    for _ in range(200):
        q = at @ q
        if lazy:
            q = 0.5 * (q + best)
        q /= np.linalg.norm(q)
        res = np.max(np.abs(q @ a - q))
        if res >= best_res:
            break
        best, best_res = q, res
    q = best
    if np.any(q <= 0):
        raise PreconditionError("power iteration produced a nonpositive component")
    return q


def mix(matrix, x, n) -> np.ndarray:
    r"""
    Apply :math:`(A \otimes I_n)` to a stacked vector without forming the Kronecker product.

    Block ``i`` of the result is :math:`\sum_j a_{ij} x_j`.
    """
    a = as_weights(matrix)
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != a.shape[0] * n:
        raise DimensionError(f"expected a vector of length {a.shape[0] * n}, got shape {x.shape}")
    return (a @ x.reshape(a.shape[0], n)).ravel()


def doubly_stochastic_transform(matrix, w, mu=1.0) -> np.ndarray:
    r"""
    Build the doubly stochastic matrix :math:`I + \mu\,\mathrm{diag}(w)(A - I)`.

    Parameters
    ----------
    matrix : array_like or RowStochasticMatrix
        Row-stochastic matrix :math:`A`.
    w : array_like, shape (N,)
        Positive left eigenvector, :math:`w^\top A = w^\top`.
    mu : float, optional
        Scaling, ``0 <= mu <= 1 / max_i (1 - a_ii) w_i``. Strict inequality
        gives a strictly positive diagonal.

    Returns
    -------
    ndarray, shape (N, N)
    """
    a = as_weights(matrix)
    w = np.asarray(w, dtype=float)
    if w.shape != (a.shape[0],):
        raise DimensionError(f"w must have shape ({a.shape[0]},), got {w.shape}")
    if np.any(w <= 0):
        raise PreconditionError("w must be strictly positive")
    if np.max(np.abs(w @ a - w)) > LEFT_EIG_TOL * max(1.0, np.max(w)):
        raise PreconditionError("w is not a left eigenvector of A for eigenvalue one")
    mu_max = mu_upper_bound(a, w)
    if not (0.0 <= mu <= mu_max * (1 + 1e-12)):
        raise ParameterError(f"mu must lie in [0, {mu_max:.17g}], got {mu!r}")
    n = a.shape[0]
    return np.eye(n) + mu * (w[:, None] * (a - np.eye(n)))


def mu_upper_bound(matrix, w) -> float:
    """Largest admissible scaling for `doubly_stochastic_transform` (inf when A = I)."""
    a = as_weights(matrix)
    m = np.max((1.0 - np.diag(a)) * np.asarray(w, dtype=float))
    return np.inf if m <= 0 else 1.0 / m


class AveragednessResult(NamedTuple):
    holds: bool
    min_slack: float


def averagedness_check(matrix, Q, eta, samples=1000, rng_seed=None, slack_tol=1e-10):
    r"""
    Sample the :math:`\eta`-averagedness inequality of a linear map in :math:`\mathcal H_Q`.

    For random pairs :math:`(x, y)` with :math:`d = x - y` evaluates

    .. math:: \|d\|_Q^2 - \tfrac{1-\eta}{\eta}\|(I-A)d\|_Q^2 - \|Ad\|_Q^2 ,

    which must be nonnegative for an :math:`\eta`-averaged operator.

    Parameters
    ----------
    matrix : array_like or RowStochasticMatrix
    Q : array_like
        Diagonal weights, either the vector ``q`` or ``diag(q)``.
    eta : float
        Averagedness constant in ``(0, 1]``.
    samples : int, optional
        Number of random pairs.
    rng_seed : int or numpy.random.Generator, optional
    slack_tol : float, optional
        Negative slack tolerated as rounding.

    Returns
    -------
    AveragednessResult
        ``holds`` is True iff every sampled slack is at least ``-slack_tol``.
    """
    a = as_weights(matrix)
    q = _diag_weights(Q, a.shape[0])
    if not 0 < eta <= 1:
        raise ParameterError(f"eta must lie in (0, 1], got {eta!r}")
    rng = np.random.default_rng(rng_seed)
    d = rng.standard_normal((samples, a.shape[0])) - rng.standard_normal((samples, a.shape[0]))
    ad = d @ a.T
    lhs = (q * ad**2).sum(axis=1)
    rhs = (q * d**2).sum(axis=1) - (1 - eta) / eta * (q * (d - ad) ** 2).sum(axis=1)
    slack = rhs - lhs
    m = float(slack.min())
    return AveragednessResult(m >= -slack_tol, m)


def _diag_weights(Q, n) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    q = np.diag(Q) if Q.ndim == 2 else Q
    if q.shape != (n,):
        raise DimensionError(f"Q must describe {n} diagonal weights")
    if np.any(q <= 0):
        raise PreconditionError("Q must be positive definite")
    return q


# %% CONSTRUCTION AND I/O


def random_row_stochastic(n_agents, rng=None, min_self_loop=0.05, max_self_loop=None, density=0.4):
    """
    Draw a random strongly connected row-stochastic matrix.

    A directed ring guarantees strong connectivity; every other off-diagonal
    edge is added with probability `density`. Diagonal entries are drawn
    uniformly in ``[min_self_loop, max_self_loop]`` and the remaining row
    mass is spread over the neighbors with random positive weights.

    Returns
    -------
    RowStochasticMatrix
    """
    rng = np.random.default_rng(rng)
    n = int(n_agents)
    if max_self_loop is None:
        max_self_loop = max(min_self_loop, 0.5)
    if not 0 <= min_self_loop <= max_self_loop <= 1:
        raise ParameterError("need 0 <= min_self_loop <= max_self_loop <= 1")
    if n == 1:
        return RowStochasticMatrix(np.ones((1, 1)))

    mask = rng.random((n, n)) < density
    mask[np.arange(n), (np.arange(n) + 1) % n] = True
    np.fill_diagonal(mask, False)
    off = np.where(mask, rng.uniform(0.1, 1.0, (n, n)), 0.0)
    off /= off.sum(axis=1, keepdims=True)
    diag = rng.uniform(min_self_loop, max_self_loop, n)
    a = off * (1 - diag)[:, None] + np.diag(diag)
    return RowStochasticMatrix(renormalize_rows(a))


def read_matrix_csv(path) -> np.ndarray:
    """Read N rows of N comma-separated reals."""
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    return np.array(rows, dtype=float)


def write_matrix_csv(path, matrix):
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in a:
            writer.writerow([f"{v:.17g}" for v in row])
