r"""
Synchronous, relaxed and time-varying proximal dynamics.

Every agent replies to the weighted average of its neighbors through its
own proximal map, :math:`x_i^+ = \mathrm{prox}_{\bar f_i}(\sum_j a_{ij} x_j)`,
which in stacked form reads :math:`x^+ = \mathrm{prox}_f(A x)`. Fixed
points are network equilibria (NWE).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from netgame.errors import DimensionError, ParameterError
from netgame.graph import RowStochasticMatrix, doubly_stochastic_transform, mix
from netgame.prox import ProximalMap, block_prox
from netgame.trajectory import TrajectoryRecord


@dataclass(frozen=True, eq=False)
class GameSpec:
    """
    A network game: one proximal map per agent and a communication matrix.

    Parameters
    ----------
    maps : sequence of ProximalMap
        Local objectives, all with the same state dimension.
    matrix : RowStochasticMatrix or array_like
        Communication weights (validated on construction).
    """

    maps: tuple
    matrix: RowStochasticMatrix

    def __post_init__(self):
        maps = tuple(self.maps)
        if not maps or not all(isinstance(m, ProximalMap) for m in maps):
            raise DimensionError("a game needs at least one ProximalMap")
        if len({m.state_dim for m in maps}) != 1:
            raise DimensionError("all agents must share the same state dimension")
        matrix = self.matrix if isinstance(self.matrix, RowStochasticMatrix) else RowStochasticMatrix(self.matrix)
        if matrix.n_agents != len(maps):
            raise DimensionError(f"{len(maps)} maps but a {matrix.n_agents}-agent matrix")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "matrix", matrix)

    @property
    def n_agents(self) -> int:
        return len(self.maps)

    @property
    def state_dim(self) -> int:
        return self.maps[0].state_dim

    @property
    def size(self) -> int:
        return self.n_agents * self.state_dim

    def with_matrix(self, matrix) -> "GameSpec":
        return GameSpec(self.maps, matrix)

    def project(self, x) -> np.ndarray:
        """Blockwise projection onto the local constraint boxes."""
        x = np.asarray(x, dtype=float).reshape(self.n_agents, self.state_dim)
        return np.concatenate([m.project(x[i]) for i, m in enumerate(self.maps)])

    def check_state(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.size,):
            raise DimensionError(f"expected a stacked state of length {self.size}, got shape {x.shape}")
        return x


def weighted_norm(v, q, n) -> float:
    r""":math:`\|v\|_{Q \otimes I_n}` for a stacked vector `v` and diagonal weights `q`."""
    v = np.asarray(v, dtype=float).reshape(len(q), n)
    return float(np.sqrt(np.sum(np.asarray(q)[:, None] * v * v)))


def _q_vector(game: GameSpec, Q):
    if Q is None:
        return game.matrix.pf_vector
    Q = np.asarray(Q, dtype=float)
    return np.diag(Q) if Q.ndim == 2 else np.broadcast_to(Q, (game.n_agents,))


# %% SYNCHRONOUS DYNAMICS


def step_sync(game: GameSpec, x) -> np.ndarray:
    """One synchronous proximal best-response step ``prox_f(A x)``."""
    x = game.check_state(x)
    return block_prox(game.maps, mix(game.matrix, x, game.state_dim))


def step_krasnoselskii(game: GameSpec, x, alpha) -> np.ndarray:
    """Relaxed step ``(1 - alpha) x + alpha prox_f(A x)`` with ``alpha`` in ``(0, 1)``."""
    if not 0 < alpha < 1:
        raise ParameterError(f"relaxation alpha must lie in (0, 1), got {alpha!r}")
    x = game.check_state(x)
    return (1 - alpha) * x + alpha * step_sync(game, x)


def residual(game: GameSpec, x, Q=None) -> float:
    """Fixed-point gap ``||x - prox_f(A x)||`` in the ``Q (x) I_n`` norm (``Q`` defaults to PF weights)."""
    x = game.check_state(x)
    return weighted_norm(x - step_sync(game, x), _q_vector(game, Q), game.state_dim)


def nwe_gap(game: GameSpec, x) -> float:
    """Sup-norm fixed-point gap."""
    x = game.check_state(x)
    return float(np.max(np.abs(x - step_sync(game, x))))


def verify_nwe(game: GameSpec, x, tol=1e-9) -> bool:
    """True iff `x` is a network equilibrium up to `tol` in the sup norm."""
    return nwe_gap(game, x) <= tol


def run_sync(game: GameSpec, x0, tol=1e-9, max_iter=100_000, relaxation=None, Q=None, store_every=1, cert_tol=None):
    """
    Iterate the synchronous (optionally Krasnoselskii-relaxed) dynamics.

    Parameters
    ----------
    game : GameSpec
    x0 : array_like
        Initial collective state.
    tol : float, optional
        Stop once the Q-weighted fixed-point gap is at most `tol`.
    max_iter : int, optional
    relaxation : float, optional
        Krasnoselskii parameter in ``(0, 1)``; plain dynamics if omitted.
    Q : array_like, optional
        Diagonal weights of the residual norm (default PF vector).
    store_every : int, optional
        Keep every m-th iterate; residuals are always kept.
    cert_tol : float, optional
        Tolerance of the final NWE certificate (default
        ``tol / sqrt(min q)``, which the stopping rule implies).

    Returns
    -------
    TrajectoryRecord
        Non-convergence is reported through ``converged = False``.
    """
    x = game.check_state(x0).copy()
    if relaxation is not None and not 0 < relaxation < 1:
        raise ParameterError(f"relaxation alpha must lie in (0, 1), got {relaxation!r}")
    q = _q_vector(game, Q)
    n = game.state_dim
    rec = TrajectoryRecord(game.n_agents, n, tol, info={"mode": "sync", "relaxation": relaxation})
    rec.store(0, x, store_every)

    for k in range(max_iter):
        tx = step_sync(game, x)
        r = weighted_norm(x - tx, q, n)
        rec.residuals.append(r)
        x = tx if relaxation is None else (1 - relaxation) * x + relaxation * tx
        rec.iterations = k + 1
        rec.store(k + 1, x, store_every)
        if r <= tol:
            rec.converged = True
            break

    rec.close(rec.iterations, x)
    if cert_tol is None:
        cert_tol = tol / np.sqrt(np.min(q))
    gap = nwe_gap(game, x)
    rec.certificate = {"kind": "nwe", "gap": gap, "tol": cert_tol, "passed": gap <= cert_tol}
    return rec


# %% TIME-VARYING DYNAMICS


def _as_maps(game_or_maps):
    return game_or_maps.maps if isinstance(game_or_maps, GameSpec) else tuple(game_or_maps)


def modified_mixing_matrix(matrix, q=None) -> np.ndarray:
    """
    Doubly stochastic ``I + diag(q)(A - I)`` with ``q`` the unit-norm PF vector of `matrix`.

    When `q` is supplied it only has to be a positive left eigenvector, so
    reducible matrices such as the identity are accepted as well.
    """
    if q is None:
        matrix = matrix if isinstance(matrix, RowStochasticMatrix) else RowStochasticMatrix(matrix)
        q = matrix.pf_vector
    return doubly_stochastic_transform(matrix, q, 1.0)


def step_tv_modified(game_or_maps, matrix_k, q_k, x) -> np.ndarray:
    """One step of the modified time-varying dynamics ``prox_f([I + Q_k (A_k - I)] x)``."""
    maps = _as_maps(game_or_maps)
    m = modified_mixing_matrix(matrix_k, q_k)
    return block_prox(maps, mix(m, x, maps[0].state_dim))


def _pnwe_gaps(maps, matrices, x):
    n = maps[0].state_dim
    return [float(np.max(np.abs(x - block_prox(maps, mix(a, x, n))))) for a in matrices]


def verify_pnwe(game_or_maps, matrix_set, x, tol=1e-9) -> bool:
    """True iff `x` is fixed by ``prox_f o A`` for every matrix in the set (vacuous when empty)."""
    maps = _as_maps(game_or_maps)
    x = np.asarray(x, dtype=float)
    return all(g <= tol for g in _pnwe_gaps(maps, list(matrix_set), x))


def run_tv(
    game_maps,
    matrices,
    x0,
    signal=None,
    rng=None,
    tol=1e-9,
    max_iter=100_000,
    window=20,
    store_every=1,
    cert_tol=None,
):
    """
    Run the modified time-varying dynamics over a finite set of matrices.

    Parameters
    ----------
    game_maps : GameSpec or sequence of ProximalMap
    matrices : sequence of RowStochasticMatrix or array_like
        The finite set the network switches between. PF vectors are
        computed once per matrix.
    x0 : array_like
    signal : sequence of int, optional
        Indices into `matrices`; cycled periodically when shorter than the
        run. Without a signal the active matrix is drawn uniformly at
        random from `rng` at every step.
    rng : int or numpy.random.Generator, optional
    tol : float, optional
        Stop once ``||x(k+1) - x(k)||`` has stayed at most `tol` for
        `window` consecutive steps.
    max_iter, window, store_every : int, optional
    cert_tol : float, optional
        Tolerance of the p-NWE certificate (default ``tol / min q``: a
        modified step moves agent ``i`` by ``q_i`` times its gap under
        the original dynamics).

    Returns
    -------
    TrajectoryRecord
        ``series["matrix_index"]`` holds the active matrix per step.
    """
    maps = _as_maps(game_maps)
    mats = [m if isinstance(m, RowStochasticMatrix) else RowStochasticMatrix(m) for m in matrices]
    if not mats:
        raise ParameterError("run_tv needs at least one matrix")
    n = maps[0].state_dim
    if any(m.n_agents != len(maps) for m in mats):
        raise DimensionError("matrix size does not match the number of agents")
    mixing = [modified_mixing_matrix(m) for m in mats]
    rng = np.random.default_rng(rng)
    if signal is not None:
        signal = [int(s) for s in signal]
        if not signal or min(signal) < 0 or max(signal) >= len(mats):
            raise ParameterError("switching signal must index into the matrix set")

    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (len(maps) * n,):
        raise DimensionError("initial state has the wrong length")
    rec = TrajectoryRecord(len(maps), n, tol, info={"mode": "timevarying", "n_matrices": len(mats)})
    rec.store(0, x, store_every)
    active = rec.series.setdefault("matrix_index", [])
    calm = 0
    for k in range(max_iter):
        idx = signal[k % len(signal)] if signal is not None else int(rng.integers(len(mats)))
        x_new = block_prox(maps, mix(mixing[idx], x, n))
        r = float(np.linalg.norm(x_new - x))
        rec.residuals.append(r)
        active.append(idx)
        x = x_new
        rec.iterations = k + 1
        rec.store(k + 1, x, store_every)
        calm = calm + 1 if r <= tol else 0
        if calm >= window:
            rec.converged = True
            break

    rec.close(rec.iterations, x)
    if cert_tol is None:
        cert_tol = tol / min(float(np.min(m.pf_vector)) for m in mats)
    gaps = _pnwe_gaps(maps, mats, x)
    rec.certificate = {"kind": "pnwe", "gaps": gaps, "tol": cert_tol, "passed": all(g <= cert_tol for g in gaps)}
    return rec
