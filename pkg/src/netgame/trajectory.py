"""
Run records and their on-disk formats.

Trajectories are written in long format with columns
``iteration, agent, component, value``; multiplier rows of constrained
runs use ``agent = "sigma"``. Numbers are written with 17 significant
digits so files round-trip exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np


def fmt(v) -> str:
    return f"{float(v):.17g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    return obj


@dataclass
class TrajectoryRecord:
    """
    Iterates, residuals and certificate of one run.

    Attributes
    ----------
    iterates : list of ndarray
        Stored collective states (decimated by `store_every`, the final
        state is always kept).
    iterate_indices : list of int
        Iteration number of each stored state.
    residuals : list of float
        One fixed-point residual per performed iteration.
    converged : bool
    iterations : int
    n_agents, state_dim : int
    tol : float
    certificate : dict, optional
        Equilibrium verification at the final state.
    series : dict
        Extra per-iteration series (``sigma`` iterates, constraint
        violation, active agent, ...).
    info : dict
        Run metadata (parameters, seed).
    """

    n_agents: int
    state_dim: int
    tol: float
    iterates: list = field(default_factory=list)
    iterate_indices: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    certificate: dict | None = None
    series: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def final_residual(self) -> float:
        return self.residuals[-1] if self.residuals else float("nan")

    def store(self, k, x, every=1):
        if every <= 1 or k % every == 0:
            self.iterates.append(np.array(x, dtype=float))
            self.iterate_indices.append(int(k))

    def close(self, k, x):
        """Make sure the final state `x` at iteration `k` is stored."""
        if not self.iterate_indices or self.iterate_indices[-1] != k:
            self.iterates.append(np.array(x, dtype=float))
            self.iterate_indices.append(int(k))

    def summary(self) -> dict:
        return _jsonable(
            {
                "converged": self.converged,
                "iterations": self.iterations,
                "final_residual": self.final_residual,
                "tol": self.tol,
                "certificate": self.certificate,
                "info": self.info,
            }
        )

    # -- export ----------------------------------------------------------

    def to_csv(self, path):
        n = self.state_dim
        sigmas = self.series.get("sigma")
        sigma_idx = self.series.get("sigma_indices", self.iterate_indices) if sigmas is not None else None
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "agent", "component", "value"])
            for j, (k, x) in enumerate(zip(self.iterate_indices, self.iterates)):
                xb = np.asarray(x).reshape(self.n_agents, n)
                for i in range(self.n_agents):
                    for c in range(n):
                        w.writerow([k, i, c, fmt(xb[i, c])])
                if sigmas is not None and j < len(sigmas):
                    for m, s in enumerate(np.asarray(sigmas[j]).ravel()):
                        w.writerow([sigma_idx[j], "sigma", m, fmt(s)])

    def to_json(self, path, extra=None):
        data = self.summary()
        if extra:
            data.update(_jsonable(extra))
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)

    def series_to_csv(self, path, names):
        """Write per-iteration scalar series side by side (``iteration`` plus `names`)."""
        cols = [self.residuals if name == "residual" else self.series[name] for name in names]
        length = max(len(c) for c in cols)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", *names])
            for k in range(length):
                w.writerow([k, *(fmt(c[k]) if k < len(c) else "" for c in cols)])


def read_trajectory_csv(path):
    """Read a long-format trajectory file into ``{iteration: {agent: {component: value}}}``."""
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            k = int(row["iteration"])
            agent = row["agent"] if row["agent"] == "sigma" else int(row["agent"])
            out.setdefault(k, {}).setdefault(agent, {})[int(row["component"])] = float(row["value"])
    return out
