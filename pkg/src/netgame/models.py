"""
Builders for the standard example games.

* Friedkin-Johnsen opinion dynamics with stubborn agents;
* time-varying DeGroot dynamics with bounded confidence (extremists and
  neutralists);
* distributed LASSO, where consensus among local estimates is imposed as
  a coupling constraint, plus a centralized reference solver.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from netgame.dynamics import GameSpec
from netgame.errors import DimensionError, IterationLimitError, ParameterError
from netgame.gnwe import CouplingConstraints
from netgame.graph import RowStochasticMatrix, doubly_stochastic_transform, random_row_stochastic
from netgame.prox import BoxIndicator, FJQuadratic, LeastSquaresL1, soft_threshold

LASSO_BOX = 1e6
SIGMA_GRID = (1.13, 2.8, 5.6, 11.3)


def example_oscillator(box_radius=1e6) -> GameSpec:
    """Two agents copying each other through ``[[0, 1], [1, 0]]`` with zero cost on a large box."""
    maps = [BoxIndicator(1, -box_radius, box_radius) for _ in range(2)]
    return GameSpec(maps, np.array([[0.0, 1.0], [1.0, 0.0]]))


# %% FRIEDKIN-JOHNSEN


@dataclass(frozen=True, eq=False)
class FjProfile:
    """
    Initial opinions and stubbornness of a Friedkin-Johnsen population.

    Parameters
    ----------
    initial_opinions : array_like, shape (N, n) or (N * n,)
        Values in ``[0, 1]``.
    stubbornness : array_like, shape (N,)
        ``mu_i`` in ``(0, 1]``; the weight on the neighbors' average.
    n_topics : int, optional
        Needed only when `initial_opinions` is flat.
    """

    initial_opinions: np.ndarray
    stubbornness: np.ndarray
    n_topics: int | None = None

    def __post_init__(self):
        mu = np.asarray(self.stubbornness, dtype=float).ravel()
        x0 = np.asarray(self.initial_opinions, dtype=float)
        n = self.n_topics if self.n_topics is not None else (x0.shape[1] if x0.ndim == 2 else x0.size // mu.size)
        if x0.size != mu.size * n:
            raise DimensionError(f"{x0.size} opinions do not split into {mu.size} agents x {n} topics")
        x0 = x0.reshape(mu.size, n)
        if np.any(x0 < 0) or np.any(x0 > 1):
            raise ParameterError("opinions must lie in [0, 1]")
        if np.any(mu <= 0) or np.any(mu > 1):
            raise ParameterError("stubbornness must lie in (0, 1]; mu = 0 makes the anchor weight diverge")
        object.__setattr__(self, "initial_opinions", x0)
        object.__setattr__(self, "stubbornness", mu)
        object.__setattr__(self, "n_topics", int(n))

    @property
    def n_agents(self) -> int:
        return self.stubbornness.size

    @property
    def x0(self) -> np.ndarray:
        return self.initial_opinions.ravel().copy()


def build_friedkin_johnsen(profile: FjProfile, matrix) -> GameSpec:
    """
    Game whose synchronous step is ``proj((1 - mu_i) x_i(0) + mu_i sum_j a_ij x_j)`` on ``[0, 1]^n``.
    """
    maps = [FJQuadratic(profile.initial_opinions[i], profile.stubbornness[i]) for i in range(profile.n_agents)]
    return GameSpec(maps, matrix)


def random_fj_instance(n_agents=10, n_topics=3, rng=None, mu_values=(0.5, 0.1), min_self_loop=0.05, max_self_loop=None):
    """
    Random population: half the agents use ``mu_values[0]``, the rest ``mu_values[1]``.

    Returns
    -------
    profile : FjProfile
    matrix : RowStochasticMatrix
    """
    rng = np.random.default_rng(rng)
    matrix = random_row_stochastic(n_agents, rng, min_self_loop=min_self_loop, max_self_loop=max_self_loop)
    mu = np.where(np.arange(n_agents) < n_agents // 2, mu_values[0], mu_values[1])
    x0 = rng.random((n_agents, n_topics))
    return FjProfile(x0, mu), matrix


# %% BOUNDED-CONFIDENCE DEGROOT


def extremist_boxes(n_negative=2, n_neutral=4, n_positive=2, low=0.25, high=0.75):
    """Boxes ``[0, low]``, ``[0, 1]`` and ``[high, 1]`` for the three agent classes, in that order."""
    return [(0.0, low)] * n_negative + [(0.0, 1.0)] * n_neutral + [(high, 1.0)] * n_positive


def build_degroot_bounded(boxes, matrix_set):
    """
    Zero-cost agents restricted to their confidence intervals.

    Parameters
    ----------
    boxes : sequence of (lo, hi)
        One scalar interval per agent.
    matrix_set : sequence of array_like
        Communication matrices the network switches between.

    Returns
    -------
    maps : list of BoxIndicator
    matrices : list of RowStochasticMatrix
    """
    maps = []
    for i, (lo, hi) in enumerate(boxes):
        if not lo <= hi:
            raise ParameterError(f"empty confidence interval for agent {i}: [{lo}, {hi}]")
        maps.append(BoxIndicator(1, lo, hi))
    matrices = [m if isinstance(m, RowStochasticMatrix) else RowStochasticMatrix(m) for m in matrix_set]
    if any(m.n_agents != len(maps) for m in matrices):
        raise DimensionError("matrix size does not match the number of agents")
    return maps, matrices


def bounded_confidence_instance(rng=None, n_negative=2, n_neutral=4, n_positive=2, n_matrices=3, density=0.3):
    """
    Switching DeGroot instance whose matrices share a common equilibrium.

    A target is fixed first: negative extremists at 0.25, positive ones at
    0.75, neutralists uniformly in ``(0.3, 0.7)``. Each random matrix is
    then corrected row by row: a neutral agent mixes in just enough of an
    extremist on the opposite side so that its weighted average of the
    target equals its own target value. Extremist rows need no correction,
    since every average of the target lies between 0.25 and 0.75 and the
    projection pins them to the boundary.

    Returns
    -------
    maps : list of BoxIndicator
    matrices : list of RowStochasticMatrix
    target : ndarray
        A common equilibrium of all matrices.
    """
    rng = np.random.default_rng(rng)
    boxes = extremist_boxes(n_negative, n_neutral, n_positive)
    N = len(boxes)
    neg = np.arange(n_negative)
    pos = np.arange(N - n_positive, N)
    target = np.concatenate([np.full(n_negative, 0.25), rng.uniform(0.3, 0.7, n_neutral), np.full(n_positive, 0.75)])
    mats = []
    for _ in range(n_matrices):
        a = random_row_stochastic(N, rng, min_self_loop=0.1, max_self_loop=0.6, density=density).weights.copy()
        for i in range(n_negative, N - n_positive):
            m = a[i] @ target
            if abs(m - target[i]) < 1e-15:
                continue
            j = int(rng.choice(neg if m > target[i] else pos))
            t = (m - target[i]) / (m - target[j])
            a[i] *= 1 - t
            a[i, j] += t
        a /= a.sum(axis=1, keepdims=True)
        mats.append(a)
    maps, matrices = build_degroot_bounded(boxes, mats)
    return maps, matrices, target


# %% DISTRIBUTED LASSO


def ring_adjacency(n_agents) -> np.ndarray:
    """Symmetric 0/1 adjacency of the undirected ring (a path for two agents)."""
    adj = np.zeros((n_agents, n_agents))
    if n_agents > 1:
        idx = np.arange(n_agents)
        adj[idx, (idx + 1) % n_agents] = 1
        adj[(idx + 1) % n_agents, idx] = 1
    np.fill_diagonal(adj, 0)
    return adj


def laplacian(adjacency) -> np.ndarray:
    """Graph Laplacian ``D - W`` of a symmetric weighted adjacency (diagonal ignored)."""
    w = np.array(adjacency, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DimensionError("adjacency must be square")
    np.fill_diagonal(w, 0)
    return np.diag(w.sum(axis=1)) - w


def lasso_weight_matrix(adjacency, noise, eps=1e-3, self_loop_floor=0.1, balanced=True) -> RowStochasticMatrix:
    """
    Weights inversely proportional to the neighbors' noise levels.

    Row ``i`` puts weight proportional to ``1 / (noise_j + eps)`` on every
    neighbor ``j`` and on itself, is normalized, and then keeps at least
    `self_loop_floor` on the diagonal.

    Such a matrix concentrates its PF vector on the least noisy agents.
    With ``balanced=True`` (default) it is mapped to the doubly stochastic
    ``I + mu diag(q) (A - I)``, whose off-diagonal weights are proportional
    to ``1 / ((noise_i + eps)(noise_j + eps))``; ``mu`` is the largest value
    keeping every self-loop at least `self_loop_floor`.
    """
    adj = np.asarray(adjacency, dtype=float) != 0
    np.fill_diagonal(adj, True)
    w = adj * (1.0 / (np.asarray(noise, dtype=float) + eps))[None, :]
    w /= w.sum(axis=1, keepdims=True)
    d = np.diag(w).copy()
    low = d < self_loop_floor
    if np.any(low):
        off = w - np.diag(d)
        scale = np.where(low, (1 - self_loop_floor) / (1 - d), 1.0)
        w = off * scale[:, None] + np.diag(np.where(low, self_loop_floor, d))
    a = RowStochasticMatrix(w / w.sum(axis=1, keepdims=True))
    if not balanced or a.n_agents == 1:
        return a
    q = a.pf_vector
    mu = (1 - self_loop_floor) / np.max(q * (1 - np.diag(a.weights)))
    return RowStochasticMatrix(doubly_stochastic_transform(a, q, mu))


@dataclass(frozen=True, eq=False)
class LassoInstance:
    """
    Data of a distributed LASSO problem.

    Parameters
    ----------
    B_blocks : list of ndarray, each (d_i, n)
    y_blocks : list of ndarray, each (d_i,)
        Noisy local observations.
    tau : float
        l1 weight.
    adjacency : ndarray, shape (N, N)
        Undirected communication graph; its Laplacian defines consensus.
    x_true, y_true, noise : ndarray, optional
        Ground truth and per-agent noise levels, when known.
    """

    B_blocks: list
    y_blocks: list
    tau: float = 1.0
    adjacency: np.ndarray | None = None
    x_true: np.ndarray | None = None
    y_true: np.ndarray | None = None
    noise: np.ndarray | None = None

    def __post_init__(self):
        B = [np.atleast_2d(np.asarray(b, dtype=float)) for b in self.B_blocks]
        y = [np.asarray(v, dtype=float).ravel() for v in self.y_blocks]
        if len(B) != len(y) or not B:
            raise DimensionError("need one observation vector per data block")
        if len({b.shape[1] for b in B}) != 1:
            raise DimensionError("all data blocks must have the same number of columns")
        for b, v in zip(B, y):
            if b.shape[0] != v.size:
                raise DimensionError("data block rows must match observation length")
        if self.tau < 0:
            raise ParameterError("tau must be nonnegative")
        adj = ring_adjacency(len(B)) if self.adjacency is None else np.asarray(self.adjacency, dtype=float)
        if adj.shape != (len(B), len(B)) or not np.allclose(adj, adj.T):
            raise DimensionError("adjacency must be a symmetric N x N matrix")
        object.__setattr__(self, "B_blocks", B)
        object.__setattr__(self, "y_blocks", y)
        object.__setattr__(self, "adjacency", adj)

    @property
    def n_agents(self) -> int:
        return len(self.B_blocks)

    @property
    def n_features(self) -> int:
        return self.B_blocks[0].shape[1]

    @property
    def B(self) -> np.ndarray:
        return np.vstack(self.B_blocks)

    @property
    def y(self) -> np.ndarray:
        return np.concatenate(self.y_blocks)

    @property
    def laplacian(self) -> np.ndarray:
        return laplacian(self.adjacency)


def synthetic_lasso(
    n_agents=5, n_features=6, n_rows=100, sigma_max=1.13, tau=1.0, rng=None, y_peak=226.0, sparsity=0.5
) -> LassoInstance:
    """
    Seeded synthetic instance with agent-specific noise.

    Rows are split evenly (``d_i = n_rows / N``) and the covariates are
    standard normal divided by ``sqrt(d_i)``, so every local Gram matrix
    ``B_i^T B_i`` is close to the identity. The true parameters have
    a random support of about ``sparsity * n`` entries and are scaled so
    that ``max |y| = y_peak``. Agent ``i`` observes with Gaussian noise of
    standard deviation ``sigma_i = sigma_max * u_i``, ``u_i ~ U[0, 1]``.
    Everything except `sigma_max` is drawn from the seed first, so the same
    seed gives the same data and noise pattern for every `sigma_max`.
    """
    if n_rows % n_agents:
        raise ParameterError(f"{n_rows} rows cannot be split evenly among {n_agents} agents")
    rng = np.random.default_rng(rng)
    d = n_rows // n_agents
    B = rng.standard_normal((n_rows, n_features)) / np.sqrt(d)
    x = rng.uniform(-1, 1, n_features) * (rng.random(n_features) < max(sparsity, 1.0 / n_features))
    if not np.any(x):
        x[0] = 1.0
    y = B @ x
    scale = y_peak / np.max(np.abs(y))
    x, y = x * scale, y * scale
    u = rng.random(n_agents)
    xi = rng.standard_normal(n_rows)
    noise = sigma_max * u
    y_obs = y + np.repeat(noise, d) * xi
    return LassoInstance(
        [B[i * d : (i + 1) * d] for i in range(n_agents)],
        [y_obs[i * d : (i + 1) * d] for i in range(n_agents)],
        tau=tau,
        adjacency=ring_adjacency(n_agents),
        x_true=x,
        y_true=y,
        noise=noise,
    )


def build_distributed_lasso(instance: LassoInstance, matrix=None, box=LASSO_BOX, inner_tol=1e-10):
    """
    LASSO game with consensus imposed through the Laplacian.

    Parameters
    ----------
    instance : LassoInstance
    matrix : array_like, optional
        Communication weights (default `lasso_weight_matrix` on the
        instance graph and noise levels).
    box : float, optional
        Half-width of the (large) local boxes.

    Returns
    -------
    game : GameSpec
    constraints : CouplingConstraints
        ``[L (x) I; -L (x) I] x <= 0``.
    """
    if matrix is None:
        noise = instance.noise if instance.noise is not None else np.ones(instance.n_agents)
        matrix = lasso_weight_matrix(instance.adjacency, noise)
    n = instance.n_features
    maps = [
        LeastSquaresL1(B, y, instance.tau, lo=-box, hi=box, inner_tol=inner_tol)
        for B, y in zip(instance.B_blocks, instance.y_blocks)
    ]
    game = GameSpec(maps, matrix)
    L = np.kron(instance.laplacian, np.eye(n))
    constraints = CouplingConstraints.equality(L, np.zeros(L.shape[0]), instance.n_agents)
    return game, constraints


def lasso_objective(B, y, tau, x) -> float:
    r = B @ x - y
    return float(r @ r + tau * np.abs(x).sum())


def centralized_lasso_oracle(B, y, tau=1.0, tol=1e-10, max_iter=1_000_000, x_init=None) -> np.ndarray:
    """
    Minimize ``||B x - y||^2 + tau ||x||_1`` by proximal gradient.

    Stops once the subgradient element certified by the last step has
    norm at most `tol`.

    Raises
    ------
    IterationLimitError
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    H = 2 * B.T @ B
    h = 2 * B.T @ y
    L = float(np.linalg.eigvalsh(H)[-1]) if B.size else 0.0
    if L == 0:
        return np.zeros(B.shape[1])
    step = 1.0 / L
    x = np.zeros(B.shape[1]) if x_init is None else np.asarray(x_init, dtype=float).copy()
    g = H @ x - h
    res = np.inf
    for _ in range(max_iter):
        x_new = soft_threshold(x - step * g, step * tau)
        g_new = H @ x_new - h
        res = float(np.linalg.norm(g_new - g + (x - x_new) / step))
        x, g = x_new, g_new
        if res <= tol:
            return x
    raise IterationLimitError("centralized LASSO did not converge", last_iterate=x, residual=res)


def mse_curve(trajectory, B, y_true, normalized=False) -> np.ndarray:
    """
    Average squared prediction error of the local estimates at every stored iterate.

    ``(1/N) sum_i ||B x_i(k) - y_true||^2``; with ``normalized=True`` the
    series is divided by its first value.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    y_true = np.asarray(y_true, dtype=float)
    N = trajectory.n_agents
    X = np.asarray(trajectory.iterates).reshape(len(trajectory.iterates), N, -1)
    err = np.einsum("dn,kin->kid", B, X) - y_true[None, None, :]
    mse = np.mean(np.sum(err * err, axis=2), axis=1)
    if normalized and mse.size:
        mse = mse / mse[0] if mse[0] > 0 else mse
    return mse


def write_lasso_csv(path, instance: LassoInstance):
    """Rows ``agent, row, b_0..b_{n-1}, y`` (17 significant digits)."""
    n = instance.n_features
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["agent", "row", *[f"b_{k}" for k in range(n)], "y"])
        for i, (B, y) in enumerate(zip(instance.B_blocks, instance.y_blocks)):
            for r in range(B.shape[0]):
                w.writerow([i, r, *(f"{v:.17g}" for v in B[r]), f"{y[r]:.17g}"])


def read_lasso_csv(path, tau=1.0, adjacency=None) -> LassoInstance:
    blocks = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n = len(header) - 3
        for row in reader:
            i = int(row[0])
            blocks.setdefault(i, []).append([float(v) for v in row[2:]])
    agents = sorted(blocks)
    data = [np.array(blocks[i]) for i in agents]
    return LassoInstance([d[:, :n] for d in data], [d[:, n] for d in data], tau=tau, adjacency=adjacency)
