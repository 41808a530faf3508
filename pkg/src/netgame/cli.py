"""
Command-line experiment runner.

A run is described by a TOML or JSON file (chosen by extension)::

    mode = "async"
    seeds = [0, 1, 2]
    tol = 1e-9
    max_iter = 200000

    [graph]
    random = { n_agents = 10, min_self_loop = 0.6, max_self_loop = 0.8 }

    [game]
    kind = "fj"
    n_topics = 3
    stubbornness = [0.5, 0.5, 0.5, 0.5, 0.5, 0.1, 0.1, 0.1, 0.1, 0.1]

    [async]
    activation = "uniform"
    max_delay = 2

Random instances are drawn from ``instance_seed`` (default 0) so every seed
in ``seeds`` sees the same game; the seeds drive the stochastic parts of a
run (activations, delays, switching signals, synthetic data in the LASSO
demo). Each seed writes its own CSV files and a shared ``summary.json``
collects the outcomes.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from netgame import async_sim, dynamics, gnwe, graph, models
from netgame.errors import ConfigError, NetgameError
from netgame.prox import BoxIndicator, L1Norm
from netgame.trajectory import _jsonable, fmt

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("netgame")

MODES = ("sync", "async", "timevarying", "gnwe", "demo-fj", "demo-degroot", "demo-lasso", "validate-graph")
STOCHASTIC_MODES = ("async", "timevarying", "demo-fj", "demo-degroot", "demo-lasso")
SECTIONS = ("graph", "game", "sync", "async", "timevarying", "gnwe", "demo")


@dataclass
class ExperimentConfig:
    """
    Validated experiment description.

    Attributes
    ----------
    mode : str
    seeds : list of int
    tol : float
    max_iter : int
    out_dir : str
    instance_seed : int
    sections : dict
        Mode-specific tables (``graph``, ``game``, ``async``, ...), kept
        as plain data so that the config round-trips through a file.
    warnings : list of str
        Cross-field checks that did not block the run.
    """

    mode: str
    seeds: list = field(default_factory=lambda: [0])
    tol: float = 1e-9
    max_iter: int = 100_000
    out_dir: str = "results"
    instance_seed: int = 0
    sections: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list, compare=False)

    def section(self, name) -> dict:
        return self.sections.get(name, {})

    def to_dict(self) -> dict:
        d = {
            "mode": self.mode,
            "seeds": list(self.seeds),
            "tol": self.tol,
            "max_iter": self.max_iter,
            "out_dir": self.out_dir,
            "instance_seed": self.instance_seed,
        }
        d.update(self.sections)
        return d


# %% PARSING


def _check_type(value, types, name, expected):
    if isinstance(value, bool) and bool not in np.atleast_1d(types).tolist():
        raise ConfigError(name, expected, value)
    if not isinstance(value, types):
        raise ConfigError(name, expected, value)
    return value


def _number(table, key, path, default=None, required=False, positive=False):
    name = f"{path}{key}"
    if key not in table:
        if required:
            raise ConfigError(name, "a number")
        return default
    v = _check_type(table[key], (int, float), name, "a number")
    if positive and not v > 0:
        raise ConfigError(name, "a positive number", v)
    return float(v)


def _integer(table, key, path, default=None, required=False, minimum=None):
    name = f"{path}{key}"
    if key not in table:
        if required:
            raise ConfigError(name, "an integer")
        return default
    v = _check_type(table[key], int, name, "an integer")
    if minimum is not None and v < minimum:
        raise ConfigError(name, f"an integer >= {minimum}", v)
    return int(v)


def _matrix_value(value, name):
    try:
        a = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(name, "a list of numeric rows", value) from None
    if a.ndim != 2:
        raise ConfigError(name, "a list of numeric rows", value)
    return a


def _vector_value(value, name):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(name, "a number or a list of numbers", value) from None
    if v.ndim > 1:
        raise ConfigError(name, "a number or a list of numbers", value)
    return v


def _load(path):
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", "valid JSON", str(exc)) from None
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", "valid TOML", str(exc)) from None


def config_from_dict(data) -> ExperimentConfig:
    """Validate a parsed mapping (see module docstring for the schema)."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "a table")
    if "mode" not in data:
        raise ConfigError("mode", f"one of {', '.join(MODES)}")
    mode = _check_type(data["mode"], str, "mode", "a string")
    if mode not in MODES:
        raise ConfigError("mode", f"one of {', '.join(MODES)}", mode)

    seeds = data.get("seeds", [0])
    if isinstance(seeds, int) and not isinstance(seeds, bool):
        seeds = [seeds]
    if not isinstance(seeds, list) or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
        raise ConfigError("seeds", "a list of integers", seeds)
    if mode in STOCHASTIC_MODES and not seeds:
        raise ConfigError("seeds", "a nonempty list of integers for a stochastic mode", seeds)

    cfg = ExperimentConfig(
        mode=mode,
        seeds=list(seeds),
        tol=_number(data, "tol", "", 1e-9, positive=True),
        max_iter=_integer(data, "max_iter", "", 100_000, minimum=1),
        out_dir=str(_check_type(data.get("out_dir", "results"), str, "out_dir", "a string")),
        instance_seed=_integer(data, "instance_seed", "", 0),
    )
    known = {"mode", "seeds", "tol", "max_iter", "out_dir", "instance_seed", *SECTIONS}
    for key in data:
        if key not in known:
            cfg.warnings.append(f"unknown key '{key}' ignored")
    for name in SECTIONS:
        if name in data:
            cfg.sections[name] = _check_type(data[name], dict, name, "a table")
    _validate_sections(cfg)
    return cfg


def parse_config(path) -> ExperimentConfig:
    """
    Read and validate an experiment file (``.json`` as JSON, anything else as TOML).

    Raises
    ------
    ConfigError
        Naming the missing or ill-typed field.
    """
    cfg = config_from_dict(_load(path))
    for w in cfg.warnings:
        log.warning(w)
    return cfg


def dump_config(cfg: ExperimentConfig, path):
    """Write `cfg` as JSON so that `parse_config` reproduces it."""
    with open(path, "w") as fh:
        json.dump(_jsonable(cfg.to_dict()), fh, indent=2, sort_keys=True)


def _validate_graph(table, path="graph."):
    if "matrix" in table:
        a = _matrix_value(table["matrix"], path + "matrix")
        if a.shape[0] != a.shape[1]:
            raise ConfigError(path + "matrix", "a square matrix", a.shape)
    elif "matrix_csv" in table:
        _check_type(table["matrix_csv"], str, path + "matrix_csv", "a file path")
    elif "random" in table:
        r = _check_type(table["random"], dict, path + "random", "a table")
        _integer(r, "n_agents", path + "random.", required=True, minimum=1)
        for k in ("min_self_loop", "max_self_loop", "density"):
            _number(r, k, path + "random.")
    else:
        raise ConfigError(path + "matrix", "an inline matrix, 'matrix_csv' or a 'random' table")


def _validate_sections(cfg: ExperimentConfig):
    mode = cfg.mode
    s = cfg.sections
    if mode in ("sync", "async", "gnwe", "validate-graph"):
        if "graph" not in s:
            raise ConfigError("graph", "a table describing the communication matrix")
        _validate_graph(s["graph"])
    if mode in ("sync", "async", "gnwe"):
        game = s.get("game", {})
        kind = _check_type(game.get("kind", "box"), str, "game.kind", "a string")
        if kind not in ("fj", "box", "l1"):
            raise ConfigError("game.kind", "one of fj, box, l1", kind)
        if kind == "fj" and "stubbornness" not in game:
            raise ConfigError("game.stubbornness", "a number or a list of numbers in (0, 1]")
        for key in ("stubbornness", "lo", "hi", "x0", "initial_opinions"):
            if key in game:
                _vector_value(game[key], f"game.{key}")
        _integer(game, "state_dim", "game.", minimum=1)
        _integer(game, "n_topics", "game.", minimum=1)
        _number(game, "tau", "game.")
    if mode == "sync":
        rel = _number(s.get("sync", {}), "relaxation", "sync.")
        if rel is not None and not 0 < rel < 1:
            raise ConfigError("sync.relaxation", "a number in (0, 1)", rel)
    if mode == "async":
        _validate_async(cfg)
    if mode == "timevarying":
        tv = s.get("timevarying", {})
        if "matrices" in tv:
            mats = _check_type(tv["matrices"], list, "timevarying.matrices", "a list of matrices")
            for k, m in enumerate(mats):
                _matrix_value(m, f"timevarying.matrices[{k}]")
            if "boxes" not in tv:
                raise ConfigError("timevarying.boxes", "a list of [lo, hi] pairs")
        if "signal" in tv:
            _check_type(tv["signal"], list, "timevarying.signal", "a list of matrix indices")
        _integer(tv, "window", "timevarying.", minimum=1)
    if mode == "gnwe":
        g = s.get("gnwe", {})
        if "C" not in g and "C_csv" not in g:
            raise ConfigError("gnwe.C", "an inline constraint matrix or 'C_csv'")
        if "C" in g:
            _matrix_value(g["C"], "gnwe.C")
            if "c" not in g:
                raise ConfigError("gnwe.c", "a list of numbers")
            _vector_value(g["c"], "gnwe.c")
        _number(g, "gamma", "gnwe.", positive=True)
        if "equality" in g:
            _check_type(g["equality"], bool, "gnwe.equality", "a boolean")
    if mode.startswith("demo"):
        d = s.get("demo", {})
        for k in ("n_agents", "n_topics", "n_rows", "n_features", "n_matrices"):
            _integer(d, k, "demo.", minimum=1)
        if "sigma_grid" in d:
            _vector_value(d["sigma_grid"], "demo.sigma_grid")


def _validate_async(cfg):
    a = cfg.section("async")
    path = "async."
    dmax = _integer(a, "max_delay", path, 0, minimum=0)
    act = a.get("activation", "uniform")
    if isinstance(act, str):
        if act != "uniform":
            raise ConfigError(path + "activation", "'uniform', a list of probabilities or {skewed = p_min}", act)
    elif isinstance(act, dict):
        _number(act, "skewed", path + "activation.", required=True, positive=True)
    else:
        p = _vector_value(act, path + "activation")
        if np.ndim(p) == 0 or np.any(np.asarray(p) <= 0) or abs(np.sum(p) - 1) > 1e-12:
            raise ConfigError(path + "activation", "positive probabilities summing to one", act)
    _number(a, "psi", path, positive=True)
    model = a.get("delay_model", "uniform_random")
    if model not in async_sim.DELAY_MODELS:
        raise ConfigError(path + "delay_model", f"one of {', '.join(async_sim.DELAY_MODELS)}", model)
    _integer(a, "window", path, minimum=1)

    # admissibility is only checkable when the matrix is known now
    g = cfg.section("graph")
    if "matrix" in g:
        w = np.asarray(g["matrix"], dtype=float)
        n_agents = w.shape[0]
        a_floor = float(np.min(np.diag(w)))
        if isinstance(act, dict):
            p_min = float(act["skewed"])
        elif isinstance(act, str):
            p_min = 1.0 / n_agents
        else:
            p_min = float(np.min(act))
        if 0 < a_floor <= 1 and 0 < p_min <= 1:
            bound = async_sim.delay_bound(n_agents, p_min, a_floor)
            if not dmax < bound:
                cfg.warnings.append(
                    f"max_delay = {dmax} is not below the admissible delay bound {bound:.6g}; convergence is not guaranteed"
                )
            psi = _number(a, "psi", path, 1.0)
            pb = async_sim.psi_bound(n_agents, p_min, a_floor, dmax)
            if not psi < pb:
                cfg.warnings.append(f"psi = {psi:g} is not below the admissible bound {pb:.6g}")
        elif a_floor <= 0:
            cfg.warnings.append("matrix has a zero self-loop; the delay bound does not apply")


# %% INSTANCE CONSTRUCTION


def _build_matrix(table, rng) -> graph.RowStochasticMatrix:
    if "matrix" in table:
        return graph.RowStochasticMatrix(np.asarray(table["matrix"], dtype=float))
    if "matrix_csv" in table:
        return graph.RowStochasticMatrix(graph.read_matrix_csv(table["matrix_csv"]))
    r = table["random"]
    kwargs = {k: float(r[k]) for k in ("min_self_loop", "max_self_loop", "density") if k in r}
    return graph.random_row_stochastic(int(r["n_agents"]), rng, **kwargs)


def _per_agent(value, n_agents, name):
    v = np.asarray(value, dtype=float)
    if v.ndim == 0:
        return np.full(n_agents, float(v))
    if v.size != n_agents:
        raise ConfigError(name, f"a number or a list of {n_agents} numbers", value)
    return v


def build_game(cfg: ExperimentConfig, rng):
    """Communication matrix, game and initial state described by `cfg`."""
    matrix = _build_matrix(cfg.section("graph"), rng)
    N = matrix.n_agents
    t = cfg.section("game")
    kind = t.get("kind", "box")
    if kind == "fj":
        mu = _per_agent(t["stubbornness"], N, "game.stubbornness")
        n = int(t.get("n_topics", 1))
        if "initial_opinions" in t:
            x0 = np.asarray(t["initial_opinions"], dtype=float)
        else:
            x0 = rng.random(N * n)
        profile = models.FjProfile(x0, mu, n_topics=n if x0.ndim == 1 else None)
        game = models.build_friedkin_johnsen(profile, matrix)
        start = profile.x0
    else:
        n = int(t.get("state_dim", 1))
        lo = t.get("lo", -math.inf)
        hi = t.get("hi", math.inf)
        if kind == "l1":
            maps = [L1Norm(n, float(t.get("tau", 1.0)), lo, hi) for _ in range(N)]
        else:
            maps = [BoxIndicator(n, lo, hi) for _ in range(N)]
        game = dynamics.GameSpec(maps, matrix)
        lo_v = np.tile(maps[0].lo, N)
        hi_v = np.tile(maps[0].hi, N)
        finite = np.isfinite(lo_v) & np.isfinite(hi_v)
        start = np.where(finite, lo_v + (hi_v - lo_v) * rng.random(N * n), 0.0)
        start = game.project(start)
    if "x0" in t:
        start = np.asarray(t["x0"], dtype=float)
    return game, game.check_state(start)


def async_config(table, n_agents, seed, rng) -> async_sim.AsyncConfig:
    act = table.get("activation", "uniform")
    if isinstance(act, dict):
        p = async_sim.skewed_probabilities(n_agents, float(act["skewed"]), rng)
    elif isinstance(act, str):
        p = np.full(n_agents, 1.0 / n_agents)
    else:
        p = np.asarray(act, dtype=float)
    return async_sim.AsyncConfig(
        p,
        max_delay=int(table.get("max_delay", 0)),
        psi=float(table.get("psi", 1.0)),
        rng_seed=seed,
        delay_model=table.get("delay_model", "uniform_random"),
    )


# %% MODES


def _job_sync(cfg, seed, out):
    game, x0 = build_game(cfg, np.random.default_rng(cfg.instance_seed))
    rec = dynamics.run_sync(game, x0, cfg.tol, cfg.max_iter, relaxation=cfg.section("sync").get("relaxation"))
    rec.to_csv(out / f"sync_seed{seed}.csv")
    rec.series_to_csv(out / f"sync_residual_seed{seed}.csv", ["residual"])
    return rec.summary()


def _job_async(cfg, seed, out):
    rng = np.random.default_rng(cfg.instance_seed)
    game, x0 = build_game(cfg, rng)
    table = cfg.section("async")
    conf = async_config(table, game.n_agents, seed, rng)
    rec = async_sim.run_async(game, x0, conf, cfg.tol, cfg.max_iter, window=int(table.get("window", 20)))
    rec.to_csv(out / f"async_seed{seed}.csv")
    write_async_events(out / f"async_events_seed{seed}.csv", rec)
    s = rec.summary()
    s["delay_bound"] = async_sim.delay_bound(game.n_agents, conf.p_min, game.matrix.min_self_loop) if game.matrix.min_self_loop > 0 else None
    return s


def write_async_events(path, rec):
    """Per-step ``step, active_agent, residual`` (residual only on sampled steps)."""
    sampled = dict(zip(rec.series["residual_step"], rec.residuals))
    with open(path, "w") as fh:
        fh.write("step,active_agent,residual\n")
        for k, agent in enumerate(rec.series["active_agent"], start=1):
            r = fmt(sampled[k]) if k in sampled else ""
            fh.write(f"{k},{agent},{r}\n")


def _tv_instance(cfg):
    tv = cfg.section("timevarying") or cfg.section("demo")
    rng = np.random.default_rng(cfg.instance_seed)
    if "matrices" in tv:
        maps, mats = models.build_degroot_bounded([tuple(b) for b in tv["boxes"]], tv["matrices"])
        return maps, mats, None
    return models.bounded_confidence_instance(rng, n_matrices=int(tv.get("n_matrices", 3)))


def _job_tv(cfg, seed, out, prefix="timevarying"):
    maps, mats, target = _tv_instance(cfg)
    tv = cfg.section("timevarying")
    rng = np.random.default_rng(seed)
    signal = tv.get("signal")
    if signal is None:
        signal = rng.integers(len(mats), size=cfg.max_iter).tolist()
    x0 = tv.get("x0")
    x0 = rng.random(len(maps)) if x0 is None else np.asarray(x0, dtype=float)
    x0 = np.concatenate([m.project(x0[i : i + 1]) for i, m in enumerate(maps)])
    rec = dynamics.run_tv(maps, mats, x0, signal=signal, tol=cfg.tol, max_iter=cfg.max_iter, window=int(tv.get("window", 20)))
    rec.to_csv(out / f"{prefix}_seed{seed}.csv")
    s = rec.summary()
    if target is not None:
        s["target"] = target.tolist()
        s["distance_to_target"] = float(np.max(np.abs(rec.final - target)))
    s["final"] = rec.final.tolist()
    return s


def _gnwe_constraints(cfg, game):
    g = cfg.section("gnwe")
    if "C_csv" in g:
        cons = gnwe.CouplingConstraints.from_csv(g["C_csv"], game.n_agents)
        C, c = cons.C, cons.c
    else:
        C, c = np.asarray(g["C"], dtype=float), np.asarray(g["c"], dtype=float).ravel()
    if g.get("equality", False):
        return gnwe.CouplingConstraints.equality(C, c, game.n_agents)
    return gnwe.CouplingConstraints(C, c, game.n_agents)


def _job_gnwe(cfg, seed, out):
    game, x0 = build_game(cfg, np.random.default_rng(cfg.instance_seed))
    cons = _gnwe_constraints(cfg, game)
    g = cfg.section("gnwe")
    alpha = np.asarray(g["alpha"], dtype=float) if "alpha" in g else None
    params = gnwe.feasible_params(game.matrix, cons, alpha, g.get("gamma"))
    rec = gnwe.run_prox_gnwe(game, cons, params, x0=x0, tol=cfg.tol, max_iter=cfg.max_iter)
    rec.to_csv(out / f"gnwe_seed{seed}.csv")
    rec.series_to_csv(out / f"gnwe_series_seed{seed}.csv", ["residual", "violation"])
    s = rec.summary()
    s["params"] = params.to_dict()
    return s


def _job_demo_fj(cfg, seed, out):
    d = cfg.section("demo")
    N = int(d.get("n_agents", 10))
    n = int(d.get("n_topics", 3))
    skew = float(d.get("p_min", 0.0191))
    rng = np.random.default_rng(cfg.instance_seed)
    profile, matrix = models.random_fj_instance(N, n, rng, min_self_loop=0.6, max_self_loop=0.8)
    game = models.build_friedkin_johnsen(profile, matrix)
    x0 = profile.x0
    sync = dynamics.run_sync(game, x0, cfg.tol, cfg.max_iter)
    a_floor = matrix.min_self_loop
    bound_delay = async_sim.max_admissible_delay(N, 1.0 / N, a_floor)
    scenarios = {
        "A1": dict(activation_probs=np.full(N, 1.0 / N), max_delay=0),
        "A2": dict(activation_probs=async_sim.skewed_probabilities(N, skew, rng), max_delay=0),
        "A3": dict(activation_probs=np.full(N, 1.0 / N), max_delay=int(min(bound_delay or 0, 2))),
        "A4": dict(activation_probs=np.full(N, 1.0 / N), max_delay=int(d.get("large_delay", 50))),
    }
    curves = {"sync": sync.residuals}
    outcome = {"sync": sync.summary()}
    for name, kw in scenarios.items():
        conf = async_sim.AsyncConfig(rng_seed=seed, **kw)
        rec = async_sim.run_async(game, x0, conf, cfg.tol, 50 * cfg.max_iter, check_every=N)
        curves[name] = rec.residuals
        outcome[name] = rec.summary()
        outcome[name]["max_delay"] = conf.max_delay
        outcome[name]["distance_to_sync"] = float(np.max(np.abs(rec.final - sync.final)))
    # one synchronous step is compared with N asynchronous steps
    length = max(len(c) for c in curves.values())
    with open(out / f"demo_fj_seed{seed}.csv", "w") as fh:
        fh.write("round," + ",".join(curves) + "\n")
        for k in range(length):
            fh.write(f"{k}," + ",".join(fmt(c[k]) if k < len(c) else "" for c in curves.values()) + "\n")
    return {"scenarios": outcome, "a_floor": a_floor, "delay_bound": async_sim.delay_bound(N, 1.0 / N, a_floor)}


def _job_demo_degroot(cfg, seed, out):
    return _job_tv(cfg, seed, out, prefix="demo_degroot")


def lasso_run(instance, tol=1e-9, max_iter=200_000, store_every=1):
    """Prox-GNWE on a distributed LASSO instance; returns the record and the MSE series."""
    game, cons = models.build_distributed_lasso(instance)
    params = gnwe.feasible_params(game.matrix, cons)
    rec = gnwe.run_prox_gnwe(game, cons, params, tol=tol, max_iter=max_iter, store_every=store_every)
    rec.info["params"] = params.to_dict()
    return rec, models.mse_curve(rec, instance.B, instance.y_true, normalized=True)


def _job_demo_lasso(cfg, seed, out):
    d = cfg.section("demo")
    grid = np.atleast_1d(np.asarray(d.get("sigma_grid", models.SIGMA_GRID), dtype=float))
    outcome = {}
    with open(out / f"demo_lasso_seed{seed}.csv", "w") as fh:
        fh.write("sigma_max,iteration,violation,normalized_mse,relative_change\n")
        for sm in grid:
            inst = models.synthetic_lasso(
                int(d.get("n_agents", 5)), int(d.get("n_features", 6)), int(d.get("n_rows", 100)), float(sm), rng=seed
            )
            rec, nmse = lasso_run(inst, cfg.tol, cfg.max_iter)
            X = np.asarray(rec.iterates)
            rel = np.linalg.norm(np.diff(X, axis=0), axis=1) / np.maximum(np.linalg.norm(X[1:], axis=1), 1e-300)
            viol = rec.series["violation"]
            for k in range(len(viol)):
                fh.write(f"{fmt(sm)},{k + 1},{fmt(viol[k])},{fmt(nmse[k + 1])},{fmt(rel[k])}\n")
            s = rec.summary()
            s["final_violation"] = viol[-1] if viol else None
            s["final_normalized_mse"] = float(nmse[-1])
            s["estimate_spread"] = float(np.ptp(rec.final.reshape(inst.n_agents, -1), axis=0).max())
            outcome[repr(float(sm))] = s
    return {"sigma_runs": outcome}


def _job_validate(cfg, seed, out):
    table = cfg.section("graph")
    if "random" in table:
        w = _build_matrix(table, np.random.default_rng(cfg.instance_seed)).weights
    elif "matrix" in table:
        w = np.asarray(table["matrix"], dtype=float)
    else:
        w = graph.read_matrix_csv(table["matrix_csv"])
    report = graph.validate_standing_assumption(w)
    text = str(report)
    (out / "validate_graph.txt").write_text(text + "\n")
    s = {"passed": report.passed, "failed": report.failed, "min_self_loop": report.min_self_loop, "report": text}
    if report.clauses["row_sums"].passed and report.clauses["strongly_connected"].passed and report.clauses["nonnegative"].passed:
        s["pf_vector"] = graph.left_pf_eigenvector(w).tolist()
    return s


JOBS = {
    "sync": _job_sync,
    "async": _job_async,
    "timevarying": _job_tv,
    "gnwe": _job_gnwe,
    "demo-fj": _job_demo_fj,
    "demo-degroot": _job_demo_degroot,
    "demo-lasso": _job_demo_lasso,
    "validate-graph": _job_validate,
}


def _thread_cap():
    v = os.environ.get("NETGAME_THREADS")
    if v is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(v))
    except ValueError:
        log.warning("ignoring non-integer NETGAME_THREADS=%r", v)
        return 1


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> int:
    """
    Run every seed of `cfg` and write CSVs plus ``summary.json`` to `out_dir`.

    Returns
    -------
    int
        0 on completion (also when a run did not converge), 1 on a runtime
        or I/O failure.
    """
    out = Path(out_dir or cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create output directory %s: %s", out, exc)
        return 1
    seeds = cfg.seeds if cfg.mode != "validate-graph" else cfg.seeds[:1] or [0]
    job = JOBS[cfg.mode]

    def one(seed):
        t0 = time.perf_counter()
        result = job(cfg, seed, out)
        result["seed"] = seed
        result["wall_time"] = time.perf_counter() - t0
        return result

    t0 = time.perf_counter()
    try:
        with ThreadPoolExecutor(max_workers=min(len(seeds), _thread_cap())) as pool:
            results = list(pool.map(one, seeds))
    except (OSError, NetgameError, ValueError) as exc:
        log.error("%s run failed: %s", cfg.mode, exc)
        return 1
    summary = {
        "mode": cfg.mode,
        "config": cfg.to_dict(),
        "warnings": cfg.warnings,
        "runs": results,
        "wall_time": time.perf_counter() - t0,
    }
    try:
        with open(out / "summary.json", "w") as fh:
            json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
    except OSError as exc:
        log.error("cannot write summary: %s", exc)
        return 1
    for r in results:
        if cfg.mode == "validate-graph":
            log.info("%s", r["report"])
        elif "converged" in r:
            log.info("seed %s: converged=%s iterations=%s", r["seed"], r["converged"], r["iterations"])
        else:
            log.info("seed %s done in %.2fs", r["seed"], r["wall_time"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netgame", description="Run proximal network-game experiments.")
    p.add_argument("--config", required=True, metavar="PATH", help="TOML or JSON experiment file")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides out_dir)")
    p.add_argument("--seed", type=int, metavar="N", help="run only this seed")
    p.add_argument("--mode", choices=MODES, help="override the configured mode")
    p.add_argument("--quiet", action="store_true", help="only report errors")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(levelname)s: %(message)s")
    try:
        data = _load(args.config)
        if args.mode:
            data["mode"] = args.mode
        if args.seed is not None:
            data["seeds"] = [args.seed]
        cfg = config_from_dict(data)
    except FileNotFoundError:
        log.error("config file not found: %s", args.config)
        return 2
    except ConfigError as exc:
        log.error("%s", exc)
        return 2
    for w in cfg.warnings:
        log.warning(w)
    return run_experiment(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
