r"""
Asynchronous proximal dynamics with bounded read delays.

At every step a single agent :math:`i_k`, drawn with probability
:math:`p_i`, recomputes its proximal reply from possibly outdated copies
of its neighbors' states,

.. math:: x_{i_k}^+ = x_{i_k} + \psi_k\big(\mathrm{prox}_{\bar f_{i_k}}(\textstyle\sum_j a_{i_k j}\hat x_j) - x_{i_k}\big),

while every other agent keeps its state. An agent always reads its own
state without delay. The simulation is sequential, so every read sees a
consistent snapshot of some past collective state.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from netgame.dynamics import GameSpec, _q_vector, nwe_gap, weighted_norm, step_sync
from netgame.errors import ParameterError, PreconditionError
from netgame.trajectory import TrajectoryRecord

DELAY_MODELS = ("uniform_random", "fixed", "adversarial_max")


# %% ADMISSIBILITY BOUNDS


def _check_bound_args(n_agents, p_min, a_floor):
    if not n_agents >= 1:
        raise ParameterError("n_agents must be positive")
    if not 0 < p_min <= 1:
        raise ParameterError(f"p_min must lie in (0, 1], got {p_min!r}")
    if not 0 < a_floor <= 1:
        raise ParameterError(f"a_floor must lie in (0, 1], got {a_floor!r}")


def delay_bound(n_agents, p_min, a_floor) -> float:
    r"""
    Largest tolerated maximum delay (exclusive) for unscaled asynchronous updates.

    Returns :math:`\frac{N\sqrt{p_{\min}}}{2(1-\underline a)} - \frac{1}{2\sqrt{p_{\min}}}`;
    integer delays strictly below it are admissible. Returns ``inf`` for
    ``a_floor = 1`` (the identity matrix).
    """
    _check_bound_args(n_agents, p_min, a_floor)
    if a_floor == 1:
        return math.inf
    s = math.sqrt(p_min)
    return n_agents * s / (2 * (1 - a_floor)) - 1 / (2 * s)


def psi_bound(n_agents, p_min, a_floor, max_delay) -> float:
    r"""Upper bound (exclusive) on the step scaling, :math:`\frac{N p_{\min}}{(2\bar\varphi\sqrt{p_{\min}} + 1)(1 - \underline a)}`."""
    _check_bound_args(n_agents, p_min, a_floor)
    if max_delay < 0:
        raise ParameterError("max_delay must be nonnegative")
    if a_floor == 1:
        return math.inf
    return n_agents * p_min / ((2 * max_delay * math.sqrt(p_min) + 1) * (1 - a_floor))


def max_admissible_delay(n_agents, p_min, a_floor):
    """Largest integer delay strictly below `delay_bound`, or None if even zero is excluded."""
    b = delay_bound(n_agents, p_min, a_floor)
    if math.isinf(b):
        return math.inf
    d = math.ceil(b) - 1
    return d if d >= 0 else None


# %% CONFIGURATION AND STATE


@dataclass(frozen=True, eq=False)
class AsyncConfig:
    """
    Parameters of an asynchronous run.

    Parameters
    ----------
    activation_probs : array_like, shape (N,)
        Positive activation probabilities summing to one.
    max_delay : int, optional
        Uniform bound on read delays.
    psi : float or callable, optional
        Step scaling, a constant or ``psi(k)``.
    rng_seed : int, optional
    delay_model : {"uniform_random", "fixed", "adversarial_max"}, optional
        ``uniform_random`` draws each neighbor delay i.i.d. on
        ``{0, ..., max_delay}`` at every step; ``fixed`` holds one delay
        per link for the whole run (`fixed_delays`, or drawn once from the
        seed); ``adversarial_max`` always reads at ``max_delay``.
    fixed_delays : int or array_like, optional
        Link delays for the ``fixed`` model (scalar or ``(N, N)``).
    """

    activation_probs: np.ndarray
    max_delay: int = 0
    psi: float | Callable = 1.0
    rng_seed: int | None = None
    delay_model: str = "uniform_random"
    fixed_delays: object = None

    def __post_init__(self):
        p = np.asarray(self.activation_probs, dtype=float).ravel()
        if np.any(p <= 0) or abs(p.sum() - 1) > 1e-12:
            raise ParameterError("activation probabilities must be positive and sum to one")
        p.setflags(write=False)
        object.__setattr__(self, "activation_probs", p)
        if int(self.max_delay) != self.max_delay or self.max_delay < 0:
            raise ParameterError("max_delay must be a nonnegative integer")
        object.__setattr__(self, "max_delay", int(self.max_delay))
        if self.delay_model not in DELAY_MODELS:
            raise ParameterError(f"delay_model must be one of {DELAY_MODELS}")
        if not callable(self.psi) and not self.psi > 0:
            raise ParameterError("psi must be positive")

    @classmethod
    def uniform(cls, n_agents, **kwargs):
        return cls(np.full(n_agents, 1.0 / n_agents), **kwargs)

    @property
    def n_agents(self) -> int:
        return self.activation_probs.size

    @property
    def p_min(self) -> float:
        return float(self.activation_probs.min())

    def psi_at(self, k) -> float:
        v = float(self.psi(k)) if callable(self.psi) else float(self.psi)
        if not v > 0:
            raise ParameterError(f"psi_{k} must be positive")
        return v

    def to_dict(self) -> dict:
        return {
            "activation_probs": self.activation_probs.tolist(),
            "max_delay": self.max_delay,
            "psi": None if callable(self.psi) else float(self.psi),
            "rng_seed": self.rng_seed,
            "delay_model": self.delay_model,
        }


class DelayBuffer:
    """
    The last ``max_delay + 1`` collective states, newest first.

    ``read(0)`` is the current state, ``read(d)`` the state ``d`` steps ago.
    """

    def __init__(self, max_delay):
        self.max_delay = int(max_delay)
        self._states = deque(maxlen=self.max_delay + 1)
        self.link_delays = None

    @classmethod
    def seeded(cls, x0, max_delay):
        buf = cls(max_delay)
        buf.seed(x0)
        return buf

    def seed(self, x0):
        x0 = np.array(x0, dtype=float)
        self._states.clear()
        for _ in range(self.max_delay + 1):
            self._states.appendleft(x0)

    @property
    def is_seeded(self) -> bool:
        return len(self._states) == self.max_delay + 1

    def push(self, x):
        self._states.appendleft(np.asarray(x, dtype=float))

    def read(self, delay=0) -> np.ndarray:
        if not 0 <= delay <= self.max_delay:
            raise ParameterError(f"delay {delay} outside [0, {self.max_delay}]")
        return self._states[delay]

    @property
    def current(self) -> np.ndarray:
        return self._states[0]


class AsyncStep(NamedTuple):
    x: np.ndarray
    buffer: DelayBuffer
    agent: int
    delays: np.ndarray


# %% DYNAMICS


def delayed_view(buffer: DelayBuffer, agent, delays, n) -> np.ndarray:
    """Assemble the possibly outdated state seen by `agent` (own block always fresh)."""
    x = buffer.current
    xh = x.copy().reshape(-1, n)
    for j, d in enumerate(delays):
        if j != agent and d:
            xh[j] = buffer.read(int(d))[j * n : (j + 1) * n]
    return xh.ravel()


def async_update(game: GameSpec, buffer: DelayBuffer, agent, delays, psi=1.0) -> np.ndarray:
    """Deterministic core of one asynchronous step for a given agent and delay draw."""
    n = game.state_dim
    x = buffer.current
    xh = delayed_view(buffer, agent, delays, n)
    z = game.matrix.weights[agent] @ xh.reshape(game.n_agents, n)
    sl = slice(agent * n, (agent + 1) * n)
    reply = game.maps[agent].eval(z)
    x_new = x.copy()
    x_new[sl] = x[sl] + psi * (reply - xh[sl])
    return x_new


def draw_delays(config: AsyncConfig, buffer: DelayBuffer, agent, rng) -> np.ndarray:
    n_agents = config.n_agents
    dmax = config.max_delay
    if dmax == 0:
        delays = np.zeros(n_agents, dtype=int)
    elif config.delay_model == "uniform_random":
        delays = rng.integers(0, dmax + 1, size=n_agents)
    elif config.delay_model == "adversarial_max":
        delays = np.full(n_agents, dmax, dtype=int)
    else:
        if buffer.link_delays is None:
            if config.fixed_delays is None:
                buffer.link_delays = rng.integers(0, dmax + 1, size=(n_agents, n_agents))
            else:
                buffer.link_delays = np.broadcast_to(np.asarray(config.fixed_delays, dtype=int), (n_agents, n_agents))
            if buffer.link_delays.min() < 0 or buffer.link_delays.max() > dmax:
                raise ParameterError("fixed delays must lie in [0, max_delay]")
        delays = np.array(buffer.link_delays[agent], dtype=int)
    delays[agent] = 0
    return delays


def step_async(game: GameSpec, buffer: DelayBuffer, config: AsyncConfig, rng, k=0) -> AsyncStep:
    """
    Draw an active agent and its read delays, update it, and push the new state.

    Parameters
    ----------
    game : GameSpec
    buffer : DelayBuffer
        Seeded history; updated in place.
    config : AsyncConfig
    rng : numpy.random.Generator
        Random state, advanced by the draws.
    k : int, optional
        Step counter (used by scheduled ``psi``).

    Returns
    -------
    AsyncStep
        New state, the buffer, the active agent and the delays used.
    """
    if not buffer.is_seeded or buffer.max_delay != config.max_delay:
        raise PreconditionError("delay buffer must be seeded with max_delay + 1 copies of x0")
    if config.n_agents != game.n_agents:
        raise PreconditionError("activation vector does not match the number of agents")
    agent = int(rng.choice(config.n_agents, p=config.activation_probs))
    delays = draw_delays(config, buffer, agent, rng)
    x_new = async_update(game, buffer, agent, delays, config.psi_at(k))
    buffer.push(x_new)
    return AsyncStep(x_new, buffer, agent, delays)


def run_async(
    game: GameSpec,
    x0,
    config: AsyncConfig,
    tol=1e-9,
    max_iter=1_000_000,
    window=20,
    Q=None,
    check_every=None,
    store_every=1,
    cert_tol=None,
):
    """
    Simulate the asynchronous dynamics until the synchronous residual settles.

    The residual of the full synchronous map is sampled every
    `check_every` steps (default N); the run stops once `window`
    consecutive samples are at most `tol`. Residuals are therefore stored
    per sample, with the sampled step numbers in
    ``series["residual_step"]``; ``series["active_agent"]`` records the
    agent activated at every step.

    Returns
    -------
    TrajectoryRecord
    """
    rng = np.random.default_rng(config.rng_seed)
    x = game.check_state(x0).copy()
    buffer = DelayBuffer.seeded(x, config.max_delay)
    q = _q_vector(game, Q)
    n = game.state_dim
    check_every = game.n_agents if check_every is None else int(check_every)
    rec = TrajectoryRecord(game.n_agents, n, tol, info={"mode": "async", "config": config.to_dict()})
    rec.store(0, x, store_every)
    agents = rec.series.setdefault("active_agent", [])
    sampled = rec.series.setdefault("residual_step", [])
    calm = 0
    for k in range(max_iter):
        step = step_async(game, buffer, config, rng, k)
        x = step.x
        agents.append(step.agent)
        rec.iterations = k + 1
        rec.store(k + 1, x, store_every)
        if (k + 1) % check_every == 0:
            r = weighted_norm(x - step_sync(game, x), q, n)
            rec.residuals.append(r)
            sampled.append(k + 1)
            calm = calm + 1 if r <= tol else 0
            if calm >= window:
                rec.converged = True
                break

    rec.close(rec.iterations, x)
    if cert_tol is None:
        cert_tol = tol / np.sqrt(np.min(q))
    gap = nwe_gap(game, x)
    rec.certificate = {"kind": "nwe", "gap": gap, "tol": cert_tol, "passed": gap <= cert_tol}
    return rec


def skewed_probabilities(n_agents, p_min, rng=None, concentration=0.3) -> np.ndarray:
    """
    Random activation distribution with smallest entry exactly `p_min`.

    A sparse Dirichlet draw is mixed with the uniform distribution just
    enough to lift its smallest entry to `p_min`.
    """
    if not 0 < p_min <= 1 / n_agents:
        raise ParameterError("p_min must lie in (0, 1/N]")
    rng = np.random.default_rng(rng)
    d = rng.dirichlet(np.full(n_agents, concentration))
    u = 1.0 / n_agents
    if d.min() >= p_min:
        t = (d.min() - p_min) / (d.min() - u) if d.min() != u else 0.0
    else:
        t = (p_min - d.min()) / (u - d.min())
    p = (1 - t) * d + t * u
    return p / p.sum()
