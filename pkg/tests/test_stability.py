import numpy as np
import pytest

from oracles import quadratic_roots
from tdrc.mdp import ExpectationModel, td_fixed_point
from tdrc.stability import (SingularCovarianceError, analyze, build_G, covariance_rank,
                            det_G_closed_form, fixed_point_residual, is_hurwitz, reduce_model,
                            singular_c_bounds, spectrum, tdrc_fixed_points, theorem1_bounds)


def direct_model(A, C, b):
    A, C = np.asarray(A, dtype=float), np.asarray(C, dtype=float)
    return ExpectationModel(A=A, b=np.asarray(b, dtype=float), C=C, d_b=np.ones(1),
                            cross=C - A.T)


class TestG:
    @pytest.mark.parametrize("a,c,eta,beta", [(0.5, 1.0, 1.0, 1.0), (-0.3, 2.0, 4.0, 0.5),
                                              (1.2, 0.7, 0.1, 0.0), (-1.0, 1.0, 2.0, 3.0)])
    def test_scalar_spectrum(self, a, c, eta, beta):
        m = direct_model([[a]], [[c]], [1.0])
        got = np.sort_complex(spectrum(m, eta, beta))
        np.testing.assert_allclose(got, np.sort_complex(quadratic_roots(a, c, eta, beta)), atol=1e-12)

    def test_blocks_and_offset(self, models):
        m = models["randomwalk-dependent"][4]
        G, g = build_G(m, 2.0, 0.5)
        n = 3
        np.testing.assert_allclose(G[:n, :n], -2.0 * (m.C + 0.5 * np.eye(n)))
        np.testing.assert_allclose(G[n:, :n], m.A.T - m.C)
        np.testing.assert_allclose(g, np.concatenate([2 * m.b, m.b]))

    def test_stationary_point_is_td_solution(self, models):
        m = models["randomwalk-inverted"][4]
        G, g = build_G(m, 1.5, 1.0)
        sol = np.linalg.solve(G, -g)
        np.testing.assert_allclose(sol[:5], 0.0, atol=1e-10)
        np.testing.assert_allclose(sol[5:], td_fixed_point(m), atol=1e-10)

    @pytest.mark.parametrize("name", ["boyan", "randomwalk-tabular", "randomwalk-inverted",
                                      "randomwalk-dependent"])
    @pytest.mark.parametrize("eta,beta", [(1.0, 1.0), (0.5, 2.0), (3.0, 0.1)])
    def test_det_identity(self, models, name, eta, beta):
        m = models[name][4]
        got = np.linalg.det(build_G(m, eta, beta)[0])
        want = det_G_closed_form(m, eta, beta)
        assert abs(got - want) <= 1e-8 * abs(want)

    def test_det_identity_random(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = rng.integers(1, 6)
            X = rng.normal(size=(n, n))
            m = direct_model(rng.normal(size=(n, n)), X @ X.T + np.eye(n), rng.normal(size=n))
            eta, beta = rng.uniform(0.1, 3, 2)
            got = np.linalg.det(build_G(m, eta, beta)[0])
            want = det_G_closed_form(m, eta, beta)
            assert abs(got - want) <= 1e-8 * abs(want)


class TestBounds:
    def test_positive_definite_case(self, models):
        r = theorem1_bounds(models["randomwalk-tabular"][4])
        assert r.A_positive_definite and r.condition == "i" and r.admits(0.01, 100.0)

    def test_baird(self, models):
        m = models["baird"][4]
        r = theorem1_bounds(m)
        assert not r.A_positive_definite and r.condition == "ii"
        assert r.reduced_rank == 7 and r.n_features == 8
        assert 0 < r.beta_max < np.inf and 0 < r.eta_min < np.inf
        assert r.beta_max == pytest.approx(0.005199, rel=1e-3)
        assert r.eta_min == pytest.approx(0.80465, rel=1e-4)
        assert r.beta_max_literal < 0

    def test_singular_without_reduction_raises(self, models):
        with pytest.raises(SingularCovarianceError):
            theorem1_bounds(models["baird"][4], reduce=False)

    def test_baird_sampled_region_hurwitz(self, models):
        m = models["baird"][4]
        r = theorem1_bounds(m)
        red, _ = reduce_model(m)
        rng = np.random.default_rng(0)
        for _ in range(100):
            beta = rng.uniform(0, r.beta_max)
            eta = r.eta_min + rng.exponential(5.0) + 1e-6
            assert r.admits(eta, beta)
            assert is_hurwitz(spectrum(red, eta, beta))

    def test_analyze_hurwitz_at_default(self, models):
        rep = analyze(models["baird"][4], 1.0, 1.0, w=np.zeros(8))
        assert rep.hurwitz and max(z.real for z in rep.G_spectrum) < 0
        assert rep.fixed_point_residual == 0.0
        d = rep.to_dict()
        assert len(d["G_spectrum"]) == 14 and d["eta"] == 1.0

    def test_non_pd_scalar_condition(self):
        # A = -0.5, C = 1: H < 0, so eta must exceed 0.5 and beta must stay below a²/|a| = 0.5
        r = theorem1_bounds(direct_model([[-0.5]], [[1.0]], [1.0]))
        assert r.eta_min == pytest.approx(0.5) and r.beta_max == pytest.approx(0.5)

    def test_covariance_rank(self, models):
        assert covariance_rank(models["baird"][4])[0] == 7
        assert covariance_rank(models["randomwalk-dependent"][4])[0] == 3


class TestSingularBounds:
    def test_pd_is_unconstrained(self):
        m = direct_model(np.diag([1.0, 2.0]), np.diag([1.0, 0.0]), [0, 0])
        est = singular_c_bounds(m, 1.0, n_samples=2000)
        assert est.eta_lower == 0.0 and est.beta_upper == np.inf and not est.certificate

    def test_symmetric_closed_form(self):
        m = direct_model(np.diag([-1.0, 2.0]), np.diag([1.0, 0.0]), [0, 0])
        est = singular_c_bounds(m, 0.5, n_samples=20000, n_restarts=10)
        assert est.eta_lower == pytest.approx(2.0, rel=1e-4)
        assert est.beta_upper == pytest.approx(1.0, rel=1e-4)

    def test_baird_small_beta_finite(self, models):
        est = singular_c_bounds(models["baird"][4], 1e-3, n_samples=20000, n_restarts=5)
        assert 0 < est.eta_lower < np.inf and 0 < est.beta_upper < 0.01

    def test_rejects_nonpositive_beta(self, models):
        with pytest.raises(ValueError):
            singular_c_bounds(models["baird"][4], 0.0)


class TestFixedPoints:
    @pytest.mark.parametrize("name", ["boyan", "randomwalk-tabular", "randomwalk-inverted",
                                      "randomwalk-dependent"])
    def test_td_solution_is_tdrc_fixed_point(self, models, name):
        m = models[name][4]
        assert fixed_point_residual(td_fixed_point(m), m, 1.0) <= 1e-10
        assert fixed_point_residual(np.zeros(m.n_features) + 1.0, m, 1.0) > 1e-3

    def test_full_rank_equivalent(self, models):
        rep = tdrc_fixed_points(models["randomwalk-tabular"][4], 1.0)
        assert rep.equivalent_to_td and rep.extra_fixed_point is None

    def test_rank_drop_yields_extra_fixed_point(self):
        # -beta is an eigenvalue of A: A + 0.5 I loses rank
        m = direct_model(np.diag([-0.5, 1.0]), np.eye(2), [1.0, 1.0])
        rep = tdrc_fixed_points(m, 0.5)
        assert rep.rank_A_beta == 1 and not rep.equivalent_to_td
        w = rep.extra_fixed_point
        assert not np.allclose(w, td_fixed_point(m))
        # expected TDRC updates vanish at (w, h_beta)
        h = np.linalg.solve(m.C_beta(0.5), m.b - m.A @ w)
        np.testing.assert_allclose(m.b - m.A @ w - m.cross @ h, 0.0, atol=1e-12)
        np.testing.assert_allclose(m.b - m.A @ w - m.C_beta(0.5) @ h, 0.0, atol=1e-12)
        assert fixed_point_residual(w, m, 0.5) < 1e-12
