import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from admmcert.errors import IllConditionedError, ParameterError, UnsupportedProblemError
from admmcert.functions import Quadratic, ScaledL1
from admmcert.library import get_instance
from admmcert.problems import ProblemSpec, build_basis_pursuit, build_generalized_lasso
from admmcert.prox import (
    FactorizationCache,
    huber_prox,
    indicator_x_update,
    l1_y_update,
    proximal_x_update_general,
    quadratic_x_update,
    soft_threshold,
    x_update,
    y_update,
)

finite_vec = arrays(np.float64, st.integers(1, 8),
                    elements=st.floats(-1e6, 1e6, allow_nan=False))


class TestSoftThreshold:
    def test_basic_values(self):
        np.testing.assert_allclose(soft_threshold(np.array([3.0, -3.0, 0.5]), 1.0),
                                   [2.0, -2.0, 0.0])

    def test_tie_maps_to_zero(self):
        assert soft_threshold(np.array([1.0]), 1.0)[0] == 0.0

    def test_negative_threshold_rejected(self):
        with pytest.raises(ParameterError):
            soft_threshold(np.array([1.0]), -0.1)

    @given(finite_vec, st.floats(0.0, 100.0))
    def test_nonexpansive(self, v, t):
        u = v + 0.5
        lhs = np.linalg.norm(soft_threshold(u, t) - soft_threshold(v, t))
        assert lhs <= np.linalg.norm(u - v) + 1e-9

    @given(finite_vec, st.floats(0.0, 100.0))
    def test_prox_optimality(self, v, t):
        # p = prox minimizes t*|z| + (1/2)(z - v)^2, so t*sign-subgradient holds
        p = soft_threshold(v, t)
        res = np.where(p != 0.0, p - v + t * np.sign(p), np.maximum(np.abs(v) - t, 0.0))
        assert np.max(np.abs(res)) <= 1e-9 * (1.0 + np.max(np.abs(v)))


class TestHuberProx:
    def test_matches_soft_threshold_outside(self):
        v = np.array([5.0, -4.0])
        np.testing.assert_allclose(huber_prox(v, 1.0, 1.0, 1e-3),
                                   soft_threshold(v, 1.0))

    def test_linear_shrink_inside(self):
        # |v| <= delta + t*w: scaled by delta/(delta + t*w)
        out = huber_prox(np.array([0.5]), 1.0, 1.0, 1.0)
        assert out[0] == pytest.approx(0.25)

    def test_prox_stationarity(self):
        from admmcert.functions import HuberSmoothedL1
        g = HuberSmoothedL1(0.7, 0.01)
        rng = np.random.default_rng(5)
        v = rng.standard_normal(20) * 2
        t = 1.3
        p = huber_prox(v, t, g.w, g.delta)
        # stationarity: t * g'(p) + p - v = 0
        res = t * g.grad(p) + p - v
        assert np.max(np.abs(res)) < 1e-12


class TestXUpdates:
    def test_quadratic_solves_stationarity(self):
        spec = get_instance("lasso_8x6")
        rng = np.random.default_rng(1)
        y, lam, s = rng.standard_normal(spec.d2), rng.standard_normal(spec.m), 0.7
        x = quadratic_x_update(spec, y, lam, s)
        grad = s * spec.f.grad(x) + spec.F.T @ (spec.F @ x + spec.G @ y - spec.h + s * lam)
        assert np.linalg.norm(grad) < 1e-9

    def test_indicator_stays_feasible_and_stationary(self):
        spec = get_instance("basis_pursuit_10x30")
        rng = np.random.default_rng(2)
        y, lam, s = rng.standard_normal(spec.d2), rng.standard_normal(spec.m), 1.0
        x = indicator_x_update(spec, y, lam, s)
        assert np.linalg.norm(spec.f.A @ x - spec.f.b) < 1e-9
        # residual of the subproblem gradient must lie in range(A^T)
        target = -spec.F.T @ (spec.F @ x + spec.G @ y - spec.h + s * lam)
        assert spec.f.subgrad_distance(target, x) < 1e-8

    def test_singular_system_rejected_with_hint(self):
        spec = get_instance("rank_deficient_lasso")
        with pytest.raises(IllConditionedError, match="r-proximal"):
            x_update(spec, np.zeros(spec.d2), np.zeros(spec.m), 1.0)

    def test_general_update_handles_singular_system(self):
        spec = get_instance("rank_deficient_lasso")
        x = proximal_x_update_general(spec, np.zeros(spec.d1), np.zeros(spec.d2),
                                      np.zeros(spec.m), 1.0, 2.0 * spec.FtF_norm)
        assert np.all(np.isfinite(x))

    def test_general_update_requires_r_above_spectrum(self):
        spec = get_instance("scalar_lasso")
        with pytest.raises(ParameterError, match="greater than the maximum eigenvalue"):
            proximal_x_update_general(spec, np.zeros(1), np.zeros(1), np.zeros(1), 1.0, 0.5)

    def test_general_reduces_to_standard_at_fixed_point(self):
        # when x_k already solves the standard subproblem, both updates agree
        spec = get_instance("lasso_8x6")
        rng = np.random.default_rng(3)
        y, lam, s = rng.standard_normal(spec.d2), rng.standard_normal(spec.m), 1.0
        x_std = quadratic_x_update(spec, y, lam, s)
        x_gen = proximal_x_update_general(spec, x_std, y, lam, s, 2.0 * spec.FtF_norm)
        np.testing.assert_allclose(x_gen, x_std, atol=1e-10)


class TestYUpdates:
    def test_l1_update_is_shrink(self):
        spec = get_instance("scalar_lasso")
        # u = G_sign*(h - F x - s lam) = -(0 - x - lam) with s=1
        y = l1_y_update(spec, np.array([3.0]), np.array([0.0]), 1.0)
        assert y[0] == pytest.approx(2.0)

    def test_general_g_rejected(self):
        spec = ProblemSpec(Quadratic([[1.0]], [1.0]), ScaledL1(1.0),
                           [[1.0]], [[2.0]], [0.0])
        with pytest.raises(UnsupportedProblemError, match="need G = \\+I or -I"):
            y_update(spec, np.zeros(1), np.zeros(1), 1.0)

    def test_huber_update_stationarity(self):
        spec = get_instance("lasso_8x6").smoothed(1e-3)
        rng = np.random.default_rng(4)
        x, lam, s = rng.standard_normal(spec.d1), rng.standard_normal(spec.m), 0.8
        y = y_update(spec, x, lam, s)
        grad = s * spec.g.grad(y) + spec.G.T @ (spec.F @ x + spec.G @ y - spec.h + s * lam)
        assert np.linalg.norm(grad) < 1e-10


class TestFactorizationCache:
    def test_reuse_and_keying(self):
        spec = get_instance("lasso_8x6")
        cache = FactorizationCache()
        y, lam = np.zeros(spec.d2), np.zeros(spec.m)
        quadratic_x_update(spec, y, lam, 1.0, cache)
        assert len(cache) == 1
        quadratic_x_update(spec, y, lam, 1.0, cache)
        assert len(cache) == 1  # same s reuses the factorization
        quadratic_x_update(spec, y, lam, 0.5, cache)
        assert len(cache) == 2  # new s gets its own entry

    def test_distinct_problems_do_not_collide(self):
        a = build_generalized_lasso([[1.0]], [1.0], [[1.0]], 1.0)
        b = build_generalized_lasso([[2.0]], [1.0], [[1.0]], 1.0)
        cache = FactorizationCache()
        xa = quadratic_x_update(a, np.zeros(1), np.zeros(1), 1.0, cache)
        xb = quadratic_x_update(b, np.zeros(1), np.zeros(1), 1.0, cache)
        assert len(cache) == 2
        assert not np.allclose(xa, xb)
