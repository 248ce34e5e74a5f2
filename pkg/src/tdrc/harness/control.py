"""Linear control on Mountain Car: Q-learning / QC / QRC and actor-critic.

Rows are (alpha × run) and evolve independently.  Each run owns one Philox
stream shared by all of its alpha rows, drawing five uniforms per step:
exploration coin, random action, acting tie-break, bootstrap tie-break and
the start position used if the episode ends.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import optimizers as opt
from ..agents import AC_CRITICS, DIVERGENCE_THRESHOLD, PREDICTION_UPDATES, AgentState, Hypers, Transition
from ..environments.mountain_car import N_ACTIONS, mountain_car_step, start_from_uniform
from ..environments.tiles import TileCoderConfig, tile_indices
from ..metrics import RunResult
from .config import DESIGN_FLAGS, ConfigError, ExperimentConfig
from .streams import run_rng

CURVE_STRIDE = 100   # env steps per recorded curve point
DRAW_CHUNK = 10_000
FINAL_FRACTION = 0.1


def greedy(q: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Argmax over the last axis with ties broken uniformly by ``u``."""
    ties = q == q.max(axis=-1, keepdims=True)
    count = ties.sum(axis=-1)
    pick = np.minimum((u * count).astype(np.int64), count - 1) + 1
    return np.argmax(np.cumsum(ties, axis=-1) == pick[..., None], axis=-1)


@dataclass
class EpisodeLog:
    """Per-row episode lengths and the env step at which each ended."""

    lengths: list = field(default_factory=list)
    ends: list = field(default_factory=list)

    def curve(self, n_steps: int, stride: int = CURVE_STRIDE) -> np.ndarray:
        """Steps-to-goal at env steps stride, 2·stride, ..., each labelled by its episode.

        Steps after the last finished episode hold the last finished length;
        with no finished episode they report the running length.
        """
        probe = np.arange(stride, n_steps + 1, stride)
        if not self.lengths:
            return probe.astype(float)
        ends = np.asarray(self.ends)
        lengths = np.asarray(self.lengths, dtype=float)
        k = np.minimum(np.searchsorted(ends, probe), len(ends) - 1)
        return lengths[k]


def _tile_config(config: ExperimentConfig) -> TileCoderConfig:
    return TileCoderConfig(config.n_tilings, tuple(config.tiles_per_dim))


class _Streams:
    """Chunked per-run uniforms, (R, 5) per step."""

    def __init__(self, seed_base: int, n_runs: int):
        self.rngs = [run_rng(seed_base, r) for r in range(n_runs)]
        self.start = np.array([g.random() for g in self.rngs])
        self.buf, self.pos = None, DRAW_CHUNK

    def next(self) -> np.ndarray:
        if self.pos == DRAW_CHUNK:
            self.buf = np.stack([g.random((DRAW_CHUNK, 5)) for g in self.rngs], axis=1)
            self.pos = 0
        out = self.buf[self.pos]
        self.pos += 1
        return out


def _simulate(config: ExperimentConfig, step_fn, n_rows_per_run: int, init_fn):
    """Shared env loop; ``step_fn`` picks actions and learns, returns the action taken."""
    R, K = config.n_runs, n_rows_per_run
    B = K * R
    streams = _Streams(config.seed_base, R)
    run_of_row = np.tile(np.arange(R), K)
    state = start_from_uniform(streams.start[run_of_row])
    ep_len = np.zeros(B, dtype=np.int64)
    logs = [EpisodeLog() for _ in range(B)]
    ctx = init_fn(B)
    tiles = _tile_config(config)
    idx = tile_indices(tiles, state)
    clamped_any = False
    for t in range(config.n_env_steps):
        u = streams.next()[run_of_row]
        a = step_fn.act(ctx, idx, u)
        nxt, reward, term = mountain_car_step(state, a)
        ep_len += 1
        nidx, clamped = tile_indices(tiles, nxt, return_clamped=True)
        clamped_any |= bool(clamped.any())
        gamma = np.where(term, 0.0, config.gamma)
        step_fn.learn(ctx, idx, a, reward, gamma, nidx, u, t)
        done = term | (ep_len >= config.episode_cap)
        if done.any():
            rows = np.flatnonzero(done)
            for b in rows:
                logs[b].lengths.append(int(ep_len[b]))
                logs[b].ends.append(t + 1)
            nxt = nxt.copy()
            nxt[rows] = start_from_uniform(u[rows, 4])
            nidx = nidx.copy()
            nidx[rows] = tile_indices(tiles, nxt[rows])
            ep_len[rows] = 0
        state, idx = nxt, nidx
    return logs, ctx, clamped_any


class _QAgent:
    def __init__(self, config: ExperimentConfig):
        self.variant = config.algorithm
        self.eps = config.epsilon
        self.K = len(config.alphas)
        self.R = config.n_runs
        self.n_tilings = config.n_tilings
        self.n_feat = _tile_config(config).n_features
        a = np.repeat(np.asarray(config.alphas, dtype=float), self.R) / self.n_tilings
        self.alpha = a
        self.eta = float(config.etas[0])
        self.beta = float(config.betas[0]) if self.variant == "qrc" else 0.0

    def init(self, B: int):
        w = np.zeros((B, N_ACTIONS, self.n_feat))
        h = np.zeros_like(w) if self.variant != "qlearning" else None
        return {"w": w, "h": h, "rows": np.arange(B)[:, None], "frozen": np.zeros(B, dtype=bool)}

    @staticmethod
    def _q(w, rows, idx):
        return w[rows[:, :, None], np.arange(N_ACTIONS)[None, :, None], idx[:, None, :]].sum(-1)

    def act(self, ctx, idx, u):
        q = self._q(ctx["w"], ctx["rows"], idx)
        explore = u[:, 0] < self.eps
        rand = np.minimum((u[:, 1] * N_ACTIONS).astype(np.int64), N_ACTIONS - 1)
        return np.where(explore, rand, greedy(q, u[:, 2]))

    def learn(self, ctx, idx, a, reward, gamma, nidx, u, t):
        w, h, rows = ctx["w"], ctx["h"], ctx["rows"]
        live = ~ctx["frozen"]
        q_sa = w[rows, a[:, None], idx].sum(-1)
        q_next = self._q(w, rows, nidx)
        delta = reward + gamma * q_next.max(-1) - q_sa
        step = np.where(live, self.alpha, 0.0)
        if self.variant == "qlearning":
            w[rows, a[:, None], idx] += (step * delta)[:, None]
        else:
            a_next = greedy(q_next, u[:, 3])
            h_hat = h[rows, a[:, None], idx].sum(-1)
            w[rows, a[:, None], idx] += (step * delta)[:, None]
            w[rows, a_next[:, None], nidx] -= (step * gamma * h_hat)[:, None]
            h_step = step * self.eta
            flat = rows[:, 0]
            h[flat, a] -= (h_step * self.beta)[:, None] * h[flat, a]
            h[rows, a[:, None], idx] += (h_step * (delta - h_hat))[:, None]
        if t % 100 == 99:
            big = np.abs(w).max(axis=(1, 2))
            if h is not None:
                big = np.maximum(big, np.abs(h).max(axis=(1, 2)))
            ctx["frozen"] |= ~(big < DIVERGENCE_THRESHOLD)


class _ActorCritic:
    def __init__(self, config: ExperimentConfig):
        self.critic = AC_CRITICS[config.algorithm]
        self.R = config.n_runs
        self.n_feat = _tile_config(config).n_features
        alphas = np.repeat(np.asarray(config.alphas, dtype=float), self.R)[:, None]
        self.alpha = alphas
        self.opt_cfg = config.optimizer_config()
        self.hypers = Hypers(alpha=alphas, eta=float(config.etas[0]),
                             beta=float(config.betas[0]) if self.critic == "tdrc" else 0.0)

    def init(self, B: int):
        n = self.n_feat
        return {
            "w": np.zeros((B, n)), "h": np.zeros((B, n)), "theta": np.zeros((B, N_ACTIONS, n)),
            "ow": opt.init_state(self.opt_cfg, (B, n), self.alpha),
            "oh": opt.init_state(self.opt_cfg, (B, n), self.alpha * float(self.hypers.eta)),
            "ot": opt.init_state(self.opt_cfg, (B, N_ACTIONS, n), self.alpha[:, :, None]),
            "rows": np.arange(B)[:, None], "probs": None,
        }

    def _dense(self, idx):
        x = np.zeros((idx.shape[0], self.n_feat))
        np.put_along_axis(x, idx, 1.0, axis=-1)
        return x

    def act(self, ctx, idx, u):
        prefs = ctx["theta"][ctx["rows"][:, :, None], np.arange(N_ACTIONS)[None, :, None],
                             idx[:, None, :]].sum(-1)
        prefs = prefs - prefs.max(-1, keepdims=True)
        p = np.exp(prefs)
        p /= p.sum(-1, keepdims=True)
        ctx["probs"] = p
        return np.minimum((np.cumsum(p, -1) <= u[:, 1:2]).sum(-1), N_ACTIONS - 1)

    def learn(self, ctx, idx, a, reward, gamma, nidx, u, t):
        x, xn = self._dense(idx), self._dense(nidx)
        tr = Transition(x, reward, xn, 1.0, gamma)
        state = AgentState(ctx["w"], ctx["h"], self.hypers)
        dw, dh = PREDICTION_UPDATES[self.critic](state, tr)
        delta = reward + gamma * (ctx["w"] * xn).sum(-1) - (ctx["w"] * x).sum(-1)
        onehot = np.eye(N_ACTIONS)[a]
        grad = (onehot - ctx["probs"])[:, :, None] * x[:, None, :]
        ctx["theta"] += opt.apply(ctx["ot"], delta[:, None, None] * grad, self.opt_cfg)
        ctx["w"] += opt.apply(ctx["ow"], dw, self.opt_cfg)
        if self.critic != "td":
            ctx["h"] += opt.apply(ctx["oh"], dh, self.opt_cfg)


def run_control(config: ExperimentConfig) -> list[RunResult]:
    """Step-indexed steps-to-goal curves, one RunResult per (alpha, run)."""
    if config.protocol == "control":
        if config.optimizer != "constant":
            raise ConfigError("tile-coded Q control uses constant stepsizes")
        agent = _QAgent(config)
    elif config.protocol == "actor-critic":
        agent = _ActorCritic(config)
    else:
        raise ConfigError(f"run_control does not handle protocol {config.protocol!r}")
    logs, ctx, clamped = _simulate(config, agent, len(config.alphas), agent.init)
    frozen = ctx.get("frozen", np.zeros(len(logs), dtype=bool))
    meta = {"flags": DESIGN_FLAGS, "seed_base": config.seed_base, "curve_stride": CURVE_STRIDE,
            "state_clamped": clamped, "n_tilings": config.n_tilings,
            "tiles_per_dim": list(config.tiles_per_dim)}
    results = []
    for b, log in enumerate(logs):
        k, r = divmod(b, config.n_runs)
        hp = {"alpha": config.alphas[k], "eta": config.etas[0], "beta": config.betas[0]}
        results.append(RunResult(
            log.curve(config.n_env_steps), r, hp, bool(frozen[b]), config.environment,
            config.algorithm, config.optimizer,
            {**meta, "episode_lengths": list(log.lengths), "episode_ends": list(log.ends)}))
    return results


def final_steps_to_goal(result: RunResult) -> float:
    """Mean of the last 10% of a step-indexed steps-to-goal curve."""
    c = np.asarray(result.curve, dtype=float)
    return float(c[-max(1, int(round(FINAL_FRACTION * c.size))):].mean())
