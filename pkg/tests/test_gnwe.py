import numpy as np
import pytest

from netgame.dynamics import GameSpec, run_sync, verify_nwe
from netgame.errors import DimensionError, ParameterError
from netgame.gnwe import (
    CouplingConstraints,
    GnweParams,
    GnweState,
    default_alpha,
    feasible_params,
    monotonicity_check_G,
    myopic_step,
    preconditioner,
    radii,
    run_prox_gnwe,
    step_prox_gnwe,
    verify_gnwe,
)
from netgame.graph import random_row_stochastic
from netgame.models import build_friedkin_johnsen, random_fj_instance
from netgame.prox import BoxIndicator
from oracles import gerschgorin_discs, symmetric_part_min_eig

HALF = np.full((2, 2), 0.5)
SUM_ROW = CouplingConstraints(np.array([[1.0, 1.0]]), np.array([0.0]), 2)
ALPHA = np.array([0.5, 0.5])


def sum_zero_game(box=10.0):
    return GameSpec([BoxIndicator(1, -box, box)] * 2, HALF)


def random_instance(rng):
    N = int(rng.integers(2, 9))
    n = int(rng.integers(1, 4))
    M = int(rng.integers(1, 5))
    m = random_row_stochastic(N, rng)
    C = rng.standard_normal((M, N * n)) * rng.uniform(0.1, 2.0)
    return m, CouplingConstraints(C, rng.standard_normal(M), N)


# -- constraints container ---------------------------------------------------


def test_constraint_blocks_and_errors(tmp_path):
    cons = CouplingConstraints(np.arange(12.0).reshape(2, 6), [1.0, 2.0], 3)
    assert cons.state_dim == 2 and cons.n_constraints == 2
    np.testing.assert_array_equal(cons.block(1), [[2, 3], [8, 9]])
    np.testing.assert_array_equal(cons.block_norms(), [8, 12, 16])
    with pytest.raises(DimensionError):
        CouplingConstraints(np.ones((2, 5)), [0, 0], 3)
    with pytest.raises(DimensionError):
        CouplingConstraints(np.ones((2, 6)), [0], 3)
    path = tmp_path / "C.csv"
    cons.to_csv(path)
    back = CouplingConstraints.from_csv(path, 3)
    np.testing.assert_array_equal(back.C, cons.C)
    np.testing.assert_array_equal(back.c, cons.c)


def test_equality_encoding():
    eq = CouplingConstraints.equality([[1.0, 1.0]], [0.5], 2)
    np.testing.assert_array_equal(eq.C, [[1, 1], [-1, -1]])
    np.testing.assert_array_equal(eq.c, [0.5, -0.5])
    assert eq.violation(np.array([0.25, 0.25])) == 0.0
    assert eq.violation(np.array([1.0, 0.0])) == pytest.approx(0.5)


# -- radii and parameters -----------------------------------------------------


def test_radii_worked_example():
    r, p = radii(HALF, SUM_ROW, ALPHA)
    np.testing.assert_allclose(r, [2.0, 2.0])
    assert p == pytest.approx(1.5)


def test_radii_without_constraints():
    rng = np.random.default_rng(0)
    m = random_row_stochastic(6, rng)
    a = m.weights
    r, p = radii(m, CouplingConstraints.none(6), default_alpha(m))
    off = a - np.diag(np.diag(a))
    np.testing.assert_allclose(r, 0.5 * (off.sum(1) + off.sum(0)))
    assert p == 0.0
    ds = np.array([[0.6, 0.3, 0.1], [0.1, 0.6, 0.3], [0.3, 0.1, 0.6]])
    r, _ = radii(ds, CouplingConstraints.none(3), np.full(3, 1 / 3))
    np.testing.assert_allclose(r, 1 - np.diag(ds))


def test_feasible_params_worked_example():
    params = feasible_params(HALF, SUM_ROW, ALPHA, gamma=0.2)
    np.testing.assert_allclose(1 / params.delta, [2.0, 2.0])
    assert params.beta == pytest.approx(2.5)
    with pytest.raises(ParameterError, match="1/delta"):
        feasible_params(HALF, SUM_ROW, ALPHA, gamma=0.5)


def test_feasible_params_automatic_step():
    params = feasible_params(HALF, SUM_ROW, ALPHA)
    r, p = radii(HALF, SUM_ROW, ALPHA)
    assert params.gamma == pytest.approx(0.95 / max(2 * r.max(), r.max() + 0.5, 2 * p))
    dinv = 1 / params.delta
    assert np.all(r - 0.5 < dinv) and np.all(dinv <= 1 / params.gamma - r - 0.5)
    assert p < params.beta <= 1 / params.gamma - p


def test_beta_interval_error_is_named():
    # one constraint touching all 8 agents: the multiplier-row radius
    # exceeds every agent radius, so the beta interval empties first
    N = 8
    a = np.full((N, N), 1.0 / N)
    cons = CouplingConstraints(np.ones((1, N)), [1.0], N)
    alpha = np.full(N, 1.0 / N)
    r, p = radii(a, cons, alpha)
    # sum over agents of (1 - alpha_i) / 2 = 8 * 7/16
    assert p == pytest.approx(3.5)
    need = float(np.max(np.maximum(r + 1 / N, 2 * r)))
    inv_gamma = (need + 2 * p) / 2
    assert need < inv_gamma < 2 * p
    with pytest.raises(ParameterError, match="beta"):
        feasible_params(a, cons, alpha, gamma=1 / inv_gamma)


def test_identity_blocks_admit_parameters():
    params = feasible_params(np.array([[0.9, 0.1], [0.1, 0.9]]), CouplingConstraints.none(2), ALPHA, gamma=0.5)
    assert np.all(params.delta > 0)


# -- preconditioner -----------------------------------------------------------


def test_preconditioner_worked_example():
    params = feasible_params(HALF, SUM_ROW, ALPHA, gamma=0.2)
    Phi, U, S = preconditioner(HALF, SUM_ROW, ALPHA, params)
    expected = np.array([[2.5, 0.5, -0.5], [0.5, 2.5, -0.5], [1.0, 1.0, 2.5]])
    np.testing.assert_allclose(Phi, expected)
    eig = np.linalg.eigvalsh(U)
    assert eig[0] > 0 and eig[-1] <= 1 / 0.2 + 1e-10
    np.testing.assert_allclose(U + S, Phi)


def test_preconditioner_symmetric_without_constraints():
    ds = np.array([[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6]])
    cons = CouplingConstraints(np.zeros((1, 3)), [0.0], 3)
    params = feasible_params(ds, cons, np.full(3, 1 / 3))
    _, _, S = preconditioner(ds, cons, params.alpha, params)
    assert np.all(S == 0)


def test_preconditioner_discs_on_random_instances():
    rng = np.random.default_rng(42)
    for _ in range(100):
        m, cons = random_instance(rng)
        params = feasible_params(m, cons)
        _, U, _ = preconditioner(m, cons, params.alpha, params)
        eig = np.linalg.eigvalsh(U)
        assert eig[0] > 0 and eig[-1] <= 1 / params.gamma + 1e-10
        centers, rad = gerschgorin_discs(U)
        assert np.all(centers - rad > 0)
        assert np.all(centers + rad <= 1 / params.gamma + 1e-10)


def test_preconditioner_rejects_bad_params():
    bad = GnweParams(ALPHA, np.array([10.0, 10.0]), 0.01, 1.0)
    with pytest.raises(ParameterError):
        preconditioner(HALF, SUM_ROW, ALPHA, bad)


# -- iteration ------------------------------------------------------------------


def test_fixed_point_is_stationary():
    game = sum_zero_game()
    params = feasible_params(HALF, SUM_ROW, ALPHA, gamma=0.2)
    state = GnweState(np.zeros(2), np.zeros(1))
    assert verify_gnwe(game, SUM_ROW, ALPHA, state.x, state.sigma, 1e-14).passed
    new = step_prox_gnwe(game, SUM_ROW, params, state)
    np.testing.assert_array_equal(new.x, state.x)
    np.testing.assert_array_equal(new.sigma, state.sigma)


def test_step_is_preconditioned_update():
    rng = np.random.default_rng(3)
    for _ in range(10):
        m, cons = random_instance(rng)
        n = cons.state_dim
        game = GameSpec([BoxIndicator(n, -1, 1)] * m.n_agents, m)
        params = feasible_params(m, cons)
        Phi, _, _ = preconditioner(m, cons, params.alpha, params)
        state = GnweState(rng.uniform(-1, 1, game.size), np.abs(rng.standard_normal(cons.n_constraints)))
        new = step_prox_gnwe(game, cons, params, state)
        w = np.concatenate([state.x, state.sigma])
        tw = np.concatenate([new.tilde_x, new.tilde_sigma])
        np.testing.assert_allclose(np.concatenate([new.x, new.sigma]), w + params.gamma * Phi @ (tw - w), atol=1e-12)


def test_multiplier_projection_is_nonnegative():
    rng = np.random.default_rng(1)
    m, cons = random_instance(rng)
    n = cons.state_dim
    game = GameSpec([BoxIndicator(n, -1, 1)] * m.n_agents, m)
    params = feasible_params(m, cons)
    state = GnweState(rng.uniform(-1, 1, game.size), np.zeros(cons.n_constraints))
    for _ in range(200):
        state = step_prox_gnwe(game, cons, params, state)
        assert np.all(state.tilde_sigma >= 0)


def test_unconstrained_reduction_matches_sync():
    profile, matrix = random_fj_instance(6, 2, rng=3)
    game = build_friedkin_johnsen(profile, matrix)
    cons = CouplingConstraints.none(6, 2)
    rec = run_prox_gnwe(game, cons, x0=profile.x0, tol=1e-12)
    assert rec.converged and rec.certificate["passed"]
    assert np.all(np.asarray(rec.series["sigma"]) == 0)
    assert verify_nwe(game, rec.final, 1e-9)
    np.testing.assert_allclose(rec.final, run_sync(game, profile.x0, tol=1e-13).final, atol=1e-6)


def test_myopic_responses_oscillate_but_prox_gnwe_converges():
    game = sum_zero_game()
    cons = CouplingConstraints.equality([[1.0, 1.0]], [0.0], 2)
    x = np.array([1.0, 1.0])
    seen = [x]
    for _ in range(4):
        x = myopic_step(game, cons, x)
        seen.append(x)
    np.testing.assert_allclose(seen[1], [-1.0, -1.0], atol=1e-9)
    np.testing.assert_allclose(seen[2], [1.0, 1.0], atol=1e-9)
    np.testing.assert_allclose(seen[4], seen[0], atol=1e-9)

    rec = run_prox_gnwe(game, cons, x0=np.array([1.0, 1.0]), tol=1e-10)
    assert rec.converged and rec.certificate["passed"]
    assert abs(rec.final.sum()) < 1e-8
    assert rec.series["violation"][-1] < 1e-8


def test_run_records_sigma_and_violation():
    rng = np.random.default_rng(7)
    m = random_row_stochastic(4, rng)
    game = GameSpec([BoxIndicator(1, 0, 1)] * 4, m)
    cons = CouplingConstraints(np.ones((1, 4)), [1.0], 4)
    rec = run_prox_gnwe(game, cons, x0=np.ones(4), tol=1e-10, store_every=10)
    assert rec.converged and rec.certificate["passed"]
    assert len(rec.series["sigma"]) == len(rec.iterates)
    assert len(rec.series["violation"]) == rec.iterations == len(rec.residuals)
    assert rec.final.sum() <= 1 + 1e-6 and rec.info["final_sigma"][0] >= 0


# -- certificates ---------------------------------------------------------------


def test_verify_gnwe_examples():
    game = sum_zero_game()
    infeasible = verify_gnwe(game, SUM_ROW, ALPHA, np.array([1.0, 1.0]), np.zeros(1))
    assert infeasible.feasibility_violation == pytest.approx(2.0) and not infeasible.passed
    # constraint inactive (sum = -1 < 0) but a positive multiplier
    slack = verify_gnwe(game, SUM_ROW, ALPHA, np.array([-0.5, -0.5]), np.array([0.3]))
    assert slack.complementarity == pytest.approx(0.3) and not slack.passed
    assert slack.to_dict()["kind"] == "gnwe"


# -- monotonicity of the affine part -------------------------------------------


def test_monotonicity_consensus_matrix_identity_weights():
    ds = np.array([[0.6, 0.3, 0.1], [0.1, 0.6, 0.3], [0.3, 0.1, 0.6]])
    cons = CouplingConstraints(np.zeros((1, 3)), [0.0], 3)
    assert monotonicity_check_G(ds, cons, np.full(3, 1 / 3), Qbar=np.ones(4), rng=0)
    assert monotonicity_check_G(ds, cons, np.full(3, 1 / 3), Qbar=np.ones(4), samples=None)
    assert symmetric_part_min_eig(np.eye(3) - ds) >= -1e-12


def test_monotonicity_worked_example_depends_on_multiplier_weight():
    # q = (1, 1)/sqrt(2) and alpha = (1/2, 1/2): the cross terms cancel only
    # when the multiplier block of Qbar equals q_i alpha_i
    q = np.full(2, 1 / np.sqrt(2))
    plain = np.concatenate([q, [1.0]])
    scaled = np.concatenate([q, [q[0] * ALPHA[0]]])
    assert not monotonicity_check_G(HALF, SUM_ROW, ALPHA, Qbar=plain, samples=None)
    assert monotonicity_check_G(HALF, SUM_ROW, ALPHA, Qbar=scaled, samples=None)
    K = plain[:, None] * np.array([[0.5, -0.5, 0.5], [-0.5, 0.5, 0.5], [-1.0, -1.0, 0.0]])
    assert symmetric_part_min_eig(K) < -1e-3


def test_monotonicity_with_inverse_pf_weights():
    rng = np.random.default_rng(9)
    for _ in range(20):
        m, cons = random_instance(rng)
        q = m.pf_vector
        alpha = (1 / q) / (1 / q).sum()
        kappa = q[0] * alpha[0]
        qbar = np.concatenate([np.repeat(q, cons.state_dim), np.full(cons.n_constraints, kappa)])
        assert monotonicity_check_G(m, cons, alpha, Qbar=qbar, samples=None)
        assert monotonicity_check_G(m, cons, alpha, Qbar=qbar, rng=1)
