import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netgame.errors import DimensionError, IterationLimitError, ParameterError, UnsupportedKindError
from netgame.prox import (
    BoxIndicator,
    CustomProx,
    FJQuadratic,
    L1Norm,
    LeastSquaresL1,
    block_prox,
    identity_map,
    prox_eval,
    soft_threshold,
    subgradient_residual,
)
from oracles import prox_1d

finite = st.floats(-5, 5, allow_nan=False)


# -- examples ---------------------------------------------------------------


def test_box_projection_example():
    np.testing.assert_array_equal(prox_eval(BoxIndicator(2, 0, 1), np.array([1.5, -0.2])), [1.0, 0.0])


def test_fj_example_and_grid_oracle():
    m = FJQuadratic([0.0], 0.5)
    p = prox_eval(m, np.array([1.0]))
    assert p[0] == pytest.approx(0.5, abs=1e-15)
    # cost anchor_weight * y^2 on [0, 1] with coefficient one on (y - z)^2
    ref = prox_1d(lambda y: 1.0 * y**2, 1.0, 1.0, weight=2.0, lo=0.0, hi=1.0)
    assert abs(p[0] - ref) < 1e-6


def test_fj_reproduces_classic_update():
    rng = np.random.default_rng(0)
    for _ in range(20):
        x0 = rng.random(3)
        mu = rng.uniform(0.05, 1.0)
        z = rng.uniform(-0.5, 1.5, 3)
        expected = np.clip((1 - mu) * x0 + mu * z, 0, 1)
        np.testing.assert_allclose(prox_eval(FJQuadratic(x0, mu), z), expected, atol=1e-15)


def test_fj_rejects_zero_stubbornness():
    with pytest.raises(ParameterError):
        FJQuadratic([0.2], 0.0)


def test_l1_example():
    p = prox_eval(L1Norm(3, 1.0), np.array([2.0, -0.5, 0.0]))
    np.testing.assert_array_equal(p, [1.0, 0.0, 0.0])
    assert subgradient_residual(L1Norm(3, 1.0), p, np.array([2.0, -0.5, 0.0])) <= 1e-12


def test_block_prox_examples():
    maps = [BoxIndicator(1, 0, 1), BoxIndicator(1, 0, 1)]
    np.testing.assert_array_equal(block_prox(maps, np.array([2.0, -1.0]), [1.0, 1.0]), [1.0, 0.0])
    z = np.array([3.0, -4.0, 0.5])
    np.testing.assert_array_equal(block_prox([identity_map(3)], z), z)
    mixed = [FJQuadratic([0.0], 0.5), BoxIndicator(1, 0, 1)]
    np.testing.assert_allclose(block_prox(mixed, np.array([1.0, 1.5])), [0.5, 1.0])


def test_block_prox_dimension_mismatch():
    with pytest.raises(DimensionError):
        block_prox([BoxIndicator(2), BoxIndicator(1)], np.zeros(3))
    with pytest.raises(DimensionError):
        BoxIndicator(2).eval(np.zeros(3))


def test_invalid_parameters():
    with pytest.raises(ParameterError):
        BoxIndicator(2, 1.0, 0.0)
    with pytest.raises(ParameterError):
        L1Norm(2, -1.0)
    with pytest.raises(ParameterError):
        BoxIndicator(1).eval(np.zeros(1), lam=0.0)
    with pytest.raises(ParameterError):
        LeastSquaresL1(np.eye(2), np.ones(2), inner_tol=0.0)


# -- certificates -------------------------------------------------------------


def test_residual_of_projection_is_zero():
    m = BoxIndicator(3, -1, 1)
    z = np.array([2.0, 0.3, -7.0])
    assert subgradient_residual(m, m.eval(z), z) == 0.0


def test_residual_detects_unthresholded_point():
    m = L1Norm(2, 1.0)
    z = np.array([0.3, -0.2])
    assert subgradient_residual(m, z, z) > 0
    assert subgradient_residual(m, m.eval(z), z) <= 1e-12


def test_residual_outside_box_is_infinite():
    assert subgradient_residual(BoxIndicator(1, 0, 1), np.array([2.0]), np.array([2.0])) == np.inf


def test_custom_without_residual_is_unsupported():
    m = CustomProx(lambda z, lam: z / (1 + lam), 2)
    np.testing.assert_allclose(m.eval(np.array([2.0, 4.0]), 1.0), [1.0, 2.0])
    with pytest.raises(UnsupportedKindError):
        subgradient_residual(m, np.zeros(2), np.zeros(2))


def test_custom_with_residual():
    def res(p, z, lam):
        return float(np.linalg.norm(lam * p + p - z))

    m = CustomProx(lambda z, lam: z / (1 + lam), 1, residual_fn=res)
    z = np.array([3.0])
    assert subgradient_residual(m, m.eval(z, 2.0), z, 2.0) < 1e-15


# -- closed forms versus the grid oracle -------------------------------------


@settings(max_examples=40, deadline=None)
@given(z=finite, lam=st.floats(0.05, 5), mu=st.floats(0.05, 1.0), x0=st.floats(0, 1))
def test_fj_matches_grid(z, lam, mu, x0):
    m = FJQuadratic([x0], mu)
    a = (1 - mu) / mu
    ref = prox_1d(lambda y: a * (y - x0) ** 2, z, lam, weight=2.0, lo=0.0, hi=1.0)
    assert abs(m.eval(np.array([z]), lam)[0] - ref) < 1e-6


@settings(max_examples=40, deadline=None)
@given(z=finite, lam=st.floats(0.05, 5), tau=st.floats(0, 3))
def test_l1_matches_grid(z, lam, tau):
    m = L1Norm(1, tau, lo=-2.0, hi=2.5)
    ref = prox_1d(lambda y: tau * np.abs(y), z, lam, lo=-2.0, hi=2.5)
    assert abs(m.eval(np.array([z]), lam)[0] - ref) < 1e-6


@settings(max_examples=40, deadline=None)
@given(z=finite, lo=st.floats(-3, 0), width=st.floats(0, 3))
def test_box_matches_grid(z, lo, width):
    m = BoxIndicator(1, lo, lo + width)
    ref = prox_1d(lambda y: np.zeros_like(y), z, 1.0, lo=lo, hi=lo + width)
    assert abs(m.eval(np.array([z]))[0] - ref) < 1e-6


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(0.05, 5))
def test_least_squares_scalar_matches_grid(seed, lam):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((4, 1))
    b = rng.standard_normal(4)
    tau = float(rng.uniform(0, 2))
    z = float(rng.uniform(-3, 3))
    m = LeastSquaresL1(B, b, tau, lo=-10, hi=10)

    def cost(y):
        r = B[:, 0][None, :] * np.asarray(y)[..., None] - b
        return (r**2).sum(axis=-1) + tau * np.abs(y)

    ref = prox_1d(cost, z, lam, lo=-10, hi=10)
    assert abs(m.eval(np.array([z]), lam)[0] - ref) < 1e-6


def test_least_squares_certificate_and_warm_start():
    rng = np.random.default_rng(5)
    B = rng.standard_normal((20, 6))
    b = rng.standard_normal(20)
    m = LeastSquaresL1(B, b, 0.7, lo=-1, hi=1, inner_tol=1e-11)
    z = rng.standard_normal(6)
    p = m.eval(z, 0.8)
    assert subgradient_residual(m, p, z, 0.8) <= 1e-10
    assert m.contains(p)
    q = m.eval(z, 0.8, x_init=p + 0.1)
    np.testing.assert_allclose(q, p, atol=1e-9)


def test_least_squares_iteration_limit():
    rng = np.random.default_rng(1)
    m = LeastSquaresL1(rng.standard_normal((10, 3)) * 30, rng.standard_normal(10), 0.1, inner_max_iter=2)
    with pytest.raises(IterationLimitError) as exc:
        m.eval(rng.standard_normal(3) * 100, 5.0)
    assert exc.value.last_iterate is not None and exc.value.residual > 0


# -- structural properties ------------------------------------------------------


def _maps(rng):
    B = rng.standard_normal((5, 3))
    return [
        BoxIndicator(3, -0.5, 0.7),
        FJQuadratic(rng.random(3), 0.3),
        L1Norm(3, 0.8, lo=-1, hi=1),
        L1Norm(3, 0.4),
        LeastSquaresL1(B, rng.standard_normal(5), 0.5, lo=-2, hi=2),
    ]


def test_firm_nonexpansiveness_and_range():
    rng = np.random.default_rng(2)
    for m in _maps(rng):
        n_pairs = 1000 if m.kind != "least_squares_l1" else 200
        for _ in range(n_pairs):
            z1, z2 = rng.standard_normal(3) * 2, rng.standard_normal(3) * 2
            lam = float(rng.uniform(0.1, 3))
            p1, p2 = m.eval(z1, lam), m.eval(z2, lam)
            d = p1 - p2
            assert d @ d <= d @ (z1 - z2) + 1e-10
            assert m.contains(p1, atol=1e-12)


def test_soft_threshold_shrinks_toward_zero():
    z = np.array([-3.0, -0.1, 0.0, 0.2, 4.0])
    np.testing.assert_allclose(soft_threshold(z, 0.5), [-2.5, 0.0, 0.0, 0.0, 3.5])
