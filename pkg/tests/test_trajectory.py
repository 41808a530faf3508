import json

import numpy as np

from netgame.trajectory import TrajectoryRecord, fmt, read_trajectory_csv


def _record():
    rec = TrajectoryRecord(n_agents=2, state_dim=2, tol=1e-9)
    rng = np.random.default_rng(0)
    for k in range(5):
        rec.store(k, rng.standard_normal(4), every=2)
        rec.residuals.append(1.0 / (k + 1))
    rec.close(4, rec.iterates[-1])
    rec.iterations = 4
    return rec


def test_store_keeps_every_nth_and_final():
    rec = TrajectoryRecord(n_agents=1, state_dim=1, tol=0.0)
    for k in range(7):
        rec.store(k, [float(k)], every=3)
    rec.close(6, [6.0])
    rec.close(7, [7.0])
    assert rec.iterate_indices == [0, 3, 6, 7]
    np.testing.assert_array_equal(rec.final, [7.0])


def test_csv_round_trip_is_exact(tmp_path):
    rec = _record()
    rec.to_csv(tmp_path / "t.csv")
    back = read_trajectory_csv(tmp_path / "t.csv")
    assert sorted(back) == rec.iterate_indices
    for k, x in zip(rec.iterate_indices, rec.iterates):
        got = np.array([[back[k][i][c] for c in range(2)] for i in range(2)]).ravel()
        np.testing.assert_array_equal(got, x)


def test_sigma_rows(tmp_path):
    rec = _record()
    rec.series["sigma"] = [np.array([0.5 * j, 1.0]) for j in range(len(rec.iterates))]
    rec.to_csv(tmp_path / "t.csv")
    back = read_trajectory_csv(tmp_path / "t.csv")
    assert back[2]["sigma"] == {0: 0.5, 1: 1.0}
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iteration,agent,component,value"
    assert sum(",sigma," in ln for ln in lines) == 2 * len(rec.iterates)


def test_summary_and_json(tmp_path):
    rec = _record()
    rec.certificate = {"passed": np.bool_(True), "gap": np.float64(np.inf)}
    rec.to_json(tmp_path / "s.json", extra={"seed": np.int64(3)})
    data = json.loads((tmp_path / "s.json").read_text())
    assert data["iterations"] == 4 and data["seed"] == 3
    assert data["certificate"] == {"passed": True, "gap": "inf"}
    assert data["final_residual"] == 0.2


def test_series_csv(tmp_path):
    rec = _record()
    rec.series["violation"] = [0.0, 1.0]
    rec.series_to_csv(tmp_path / "s.csv", ["residual", "violation"])
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "iteration,residual,violation"
    assert lines[1] == "0,1,0" and lines[3] == f"2,{fmt(1 / 3)},"


def test_fmt_round_trips():
    for v in (0.1, 1 / 3, 1e-300, -2.5e17):
        assert float(fmt(v)) == v
