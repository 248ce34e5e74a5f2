import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import finite_difference_gradient
from tdrc.agents import (NO_SECONDARY, PREDICTION_UPDATES, AgentState, Hypers, PolicyParams,
                         Transition, actor_critic_update, q_update, td_error)
from tdrc.harness.config import ExperimentConfig
from tdrc.harness.control import _QAgent, greedy
from tdrc.harness.streams import TransitionTable


def random_transition(rng, n, batch=(), rho=None):
    return Transition(rng.normal(size=batch + (n,)), rng.normal(size=batch),
                      rng.normal(size=batch + (n,)),
                      rng.uniform(0, 3, size=batch) if rho is None else rho,
                      rng.uniform(0, 1, size=batch))


def random_state(rng, n, hypers, batch=()):
    return AgentState(rng.normal(size=batch + (n,)), rng.normal(size=batch + (n,)), hypers)


class TestReductions:
    rng = np.random.default_rng(0)

    @pytest.mark.parametrize("seed", range(5))
    def test_tdrc_beta_zero_is_tdc(self, seed):
        rng = np.random.default_rng(seed)
        s = random_state(rng, 6, Hypers(beta=0.0))
        t = random_transition(rng, 6)
        for a, b in zip(PREDICTION_UPDATES["tdrc"](s, t), PREDICTION_UPDATES["tdc"](s, t)):
            np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("seed", range(5))
    def test_tdcpp_beta_zero_is_tdc(self, seed):
        rng = np.random.default_rng(seed)
        s = random_state(rng, 6, Hypers(beta=0.0))
        t = random_transition(rng, 6)
        for a, b in zip(PREDICTION_UPDATES["tdcpp"](s, t), PREDICTION_UPDATES["tdc"](s, t)):
            np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("alg", ["htd", "vtrace"])
    def test_on_policy_primary_is_td(self, alg):
        rng = np.random.default_rng(3)
        s = random_state(rng, 5, Hypers())
        t = random_transition(rng, 5, batch=(7,), rho=np.ones(7))
        np.testing.assert_array_equal(PREDICTION_UPDATES[alg](s, t)[0],
                                      PREDICTION_UPDATES["td"](s, t)[0])

    def test_vtrace_clips_ratio(self):
        rng = np.random.default_rng(4)
        s = random_state(rng, 4, Hypers(clip=1.0))
        t = random_transition(rng, 4, rho=np.array(5.0))
        t1 = Transition(t.x, t.reward, t.x_next, 1.0, t.gamma)
        np.testing.assert_array_equal(PREDICTION_UPDATES["vtrace"](s, t)[0],
                                      PREDICTION_UPDATES["td"](s, t1)[0])

    def test_secondary_free_algorithms_leave_h(self):
        rng = np.random.default_rng(5)
        s = random_state(rng, 4, Hypers())
        t = random_transition(rng, 4)
        for alg in NO_SECONDARY:
            np.testing.assert_array_equal(PREDICTION_UPDATES[alg](s, t)[1], 0.0)


class TestBroadcasting:
    @pytest.mark.parametrize("alg", sorted(PREDICTION_UPDATES))
    def test_batch_rows_match_serial(self, alg):
        rng = np.random.default_rng(7)
        K, n = 4, 5
        betas = rng.uniform(0, 2, K)
        state = random_state(rng, n, Hypers(beta=betas[:, None]), batch=(K,))
        t = random_transition(rng, n, batch=(K,))
        dw, dh = PREDICTION_UPDATES[alg](state, t)
        for k in range(K):
            sk = AgentState(state.w[k], state.h[k], Hypers(beta=betas[k]))
            tk = Transition(t.x[k], t.reward[k], t.x_next[k], t.rho[k], t.gamma[k])
            ek, fk = PREDICTION_UPDATES[alg](sk, tk)
            np.testing.assert_array_equal(dw[k], ek)
            np.testing.assert_array_equal(dh[k], fk)

    def test_td_error_scalar(self):
        w = np.array([1.0, 2.0])
        t = Transition(np.array([1.0, 0.0]), 0.5, np.array([0.0, 1.0]), 1.0, 0.9)
        assert td_error(w, t)[0] == pytest.approx(0.5 + 0.9 * 2 - 1)


class TestExpectedUpdates:
    """Exact expectation over all transitions against the matrix closed forms."""

    @staticmethod
    def expected(alg, name, models, w, h, beta):
        mdp, phi, b, pi, model = models[name]
        table = TransitionTable.build(mdp, phi, b, pi)
        prob = (model.d_b[:, None, None] * b.probs[:, :, None] * mdp.transition).reshape(-1)
        keep = prob > 0
        t = Transition(table.x[keep], table.reward[keep], table.x_next[keep], table.rho[keep],
                       table.gamma[keep])
        n = phi.n_features
        s = AgentState(np.broadcast_to(w, (keep.sum(), n)), np.broadcast_to(h, (keep.sum(), n)),
                       Hypers(beta=beta))
        dw, dh = PREDICTION_UPDATES[alg](s, t)
        p = prob[keep][:, None]
        return (p * dw).sum(0), (p * dh).sum(0), model

    @pytest.mark.parametrize("name", ["baird", "randomwalk-tabular", "randomwalk-inverted",
                                      "randomwalk-dependent", "boyan"])
    def test_closed_forms(self, name, models):
        rng = np.random.default_rng(11)
        n = models[name][1].n_features
        w, h, beta = rng.normal(size=n), rng.normal(size=n), 0.7
        for alg in ("td", "tdc", "tdrc", "gtd2", "tdcpp"):
            dw, dh, m = self.expected(alg, name, models, w, h, beta)
            res = m.b - m.A @ w
            want = {
                "td": (res, np.zeros(n)),
                "tdc": (res - m.cross @ h, res - m.C @ h),
                "tdrc": (res - m.cross @ h, res - m.C_beta(beta) @ h),
                "tdcpp": (res - m.cross @ h - beta * h, res - m.C_beta(beta) @ h),
                "gtd2": (m.A.T @ h, res - m.C @ h),
            }[alg]
            np.testing.assert_allclose(dw, want[0], atol=1e-12)
            np.testing.assert_allclose(dh, want[1], atol=1e-12)


class TestControl:
    def test_qrc_beta_zero_is_qc(self):
        rng = np.random.default_rng(2)
        w, h = rng.normal(size=(3, 6)), rng.normal(size=(3, 6))
        t = Transition(rng.normal(size=6), -1.0, rng.normal(size=6), 1.0, 0.99, action=1)
        a = q_update(AgentState(w, h, Hypers(beta=0.0)), t, "qrc")
        b = q_update(AgentState(w, h, Hypers(beta=0.0)), t, "qc")
        for u, v in zip(a, b):
            np.testing.assert_array_equal(u, v)

    def test_qlearning_ignores_h(self):
        rng = np.random.default_rng(3)
        w = rng.normal(size=(3, 4))
        t = Transition(rng.normal(size=4), 1.0, rng.normal(size=4), 1.0, 0.5, action=2)
        dw1, _ = q_update(AgentState(w, np.zeros_like(w)), t, "qlearning")
        dw2, _ = q_update(AgentState(w, rng.normal(size=w.shape)), t, "qlearning")
        np.testing.assert_array_equal(dw1, dw2)
        assert np.count_nonzero(dw1[:2]) == 0

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            q_update(AgentState.zeros(2), Transition(np.ones(2), 0, np.ones(2), action=0), "sarsa")

    @pytest.mark.parametrize("variant", ["qlearning", "qc", "qrc"])
    def test_sparse_path_matches_dense(self, variant):
        cfg = ExperimentConfig(environment="mountaincar", algorithm=variant, protocol="control",
                               alphas=[0.25], n_runs=1, n_tilings=4, tiles_per_dim=[3, 3])
        agent = _QAgent(cfg)
        ctx = agent.init(1)
        rng = np.random.default_rng(4)
        ctx["w"][:] = rng.normal(size=ctx["w"].shape)
        if ctx["h"] is not None:
            ctx["h"][:] = rng.normal(size=ctx["h"].shape)
        n = agent.n_feat
        for step in range(20):
            idx = np.sort(rng.choice(n, 4, replace=False))[None]
            nidx = np.sort(rng.choice(n, 4, replace=False))[None]
            a = rng.integers(0, 3, 1)
            u = rng.random((1, 5))
            x, xn = np.zeros(n), np.zeros(n)
            x[idx[0]], xn[nidx[0]] = 1.0, 1.0
            w0 = ctx["w"][0].copy()
            h0 = ctx["h"][0].copy() if ctx["h"] is not None else np.zeros_like(w0)
            a_next = greedy(w0 @ xn, u[0, 3])
            dw, dh = q_update(AgentState(w0, h0, Hypers(beta=agent.beta)),
                              Transition(x, -1.0, xn, 1.0, 0.99, action=int(a[0])), variant,
                              next_action=a_next)
            agent.learn(ctx, idx, a, np.array([-1.0]), np.array([0.99]), nidx, u, step)
            alpha = 0.25 / 4
            np.testing.assert_allclose(ctx["w"][0], w0 + alpha * dw, rtol=1e-12, atol=1e-12)
            if ctx["h"] is not None:
                np.testing.assert_allclose(ctx["h"][0], h0 + alpha * agent.eta * dh,
                                           rtol=1e-12, atol=1e-12)


class TestActorCritic:
    def test_grad_log_matches_finite_difference(self):
        rng = np.random.default_rng(8)
        theta = rng.normal(size=(3, 5))
        x = rng.normal(size=5)
        for a in range(3):
            def logp(flat):
                return np.log(PolicyParams(flat.reshape(3, 5)).probs(x)[a])
            fd = finite_difference_gradient(logp, theta.ravel()).reshape(3, 5)
            np.testing.assert_allclose(PolicyParams(theta).grad_log(x, a), fd, atol=1e-8)

    def test_probs_stable_for_large_preferences(self):
        p = PolicyParams(np.array([[1e4], [0.0], [-1e4]])).probs(np.ones(1))
        assert np.all(np.isfinite(p)) and p[0] == pytest.approx(1.0)

    def test_actor_step_scaled_by_td_error(self):
        rng = np.random.default_rng(9)
        state = random_state(rng, 4, Hypers())
        t = Transition(rng.normal(size=4), 0.3, rng.normal(size=4), 1.0, 0.9, action=1)
        pol = PolicyParams(rng.normal(size=(3, 4)))
        _, _, dtheta = actor_critic_update(state, pol, t, "td")
        delta = td_error(state.w, t)[0]
        np.testing.assert_allclose(dtheta, delta * pol.grad_log(t.x, 1))
        with pytest.raises(ValueError):
            actor_critic_update(state, pol, t, "gtd2")


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.floats(0.0, 5.0), st.integers(0, 2**31))
def test_tdrc_secondary_shrinks_with_beta(n, beta, seed):
    rng = np.random.default_rng(seed)
    s = random_state(rng, n, Hypers(beta=beta))
    t = random_transition(rng, n)
    _, dh0 = PREDICTION_UPDATES["tdc"](s, t)
    _, dh = PREDICTION_UPDATES["tdrc"](s, t)
    np.testing.assert_allclose(dh, dh0 - beta * s.h, rtol=1e-12, atol=1e-12)
