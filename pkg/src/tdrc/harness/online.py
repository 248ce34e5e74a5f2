"""Vectorised prediction runs: online streams and minibatch updates.

A batch of rows is the product (hyper configuration × run).  Hyperparameters
enter as broadcast columns and every operation is elementwise or a reduction
over the feature axis, so each row evolves exactly as it would alone.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from .. import optimizers as opt
from ..agents import (DIVERGENCE_THRESHOLD, NO_SECONDARY, PREDICTION_UPDATES, AgentState, Hypers,
                      Transition)
from ..environments import initial_weights, make_prediction
from ..mdp import ExpectationModel, FeatureMap, MdpSpec, Policy, expectation_matrices
from ..metrics import MspbeEvaluator, RunResult
from .config import DESIGN_FLAGS, ExperimentConfig
from .streams import TransitionTable, simulate_codes

RMSPBE_CAP = 1e10


@dataclass
class PredictionProblem:
    name: str
    mdp: MdpSpec
    features: FeatureMap
    behavior: Policy
    target: Policy
    model: ExpectationModel
    evaluator: MspbeEvaluator
    table: TransitionTable
    w0: np.ndarray
    metadata: dict = field(default_factory=dict)


@lru_cache(maxsize=32)
def prediction_problem(name: str, reward_scale: float = 1.0) -> PredictionProblem:
    mdp, features, behavior, target = make_prediction(name)
    if reward_scale != 1.0:
        mdp = mdp.scale_rewards(reward_scale)
    model = expectation_matrices(mdp, behavior, target, features)
    return PredictionProblem(
        name, mdp, features, behavior, target, model, MspbeEvaluator(model),
        TransitionTable.build(mdp, features, behavior, target),
        initial_weights(name, features.n_features),
        {"reward_scale": reward_scale, "d_b_source": model.metadata.get("d_b_source")},
    )


def hyper_grid(config: ExperimentConfig) -> list[dict]:
    """Hyper combinations in a fixed order; unused axes collapse to one value."""
    alg = config.algorithm
    etas = [1.0] if alg in NO_SECONDARY else config.etas
    betas = config.betas if alg in ("tdrc", "tdcpp") else [0.0]
    return [{"alpha": a, "eta": e, "beta": b}
            for a, e, b in product(config.alphas, etas, betas)]


def _columns(hypers: list[dict], key: str, ndim: int) -> np.ndarray:
    return np.array([h[key] for h in hypers], dtype=float).reshape((-1,) + (1,) * ndim)


def run_rows(problem: PredictionProblem, algorithm: str, optimizer: opt.OptimizerConfig,
             hypers: list[dict], codes: np.ndarray, clip: float = 1.0,
             w0: np.ndarray | None = None, table: TransitionTable | None = None
             ) -> tuple[np.ndarray, np.ndarray]:
    """Run every (hyper, run) row over the transition codes.

    ``codes`` is (R, T) for one transition per update or (R, T, m) for
    minibatches whose updates are averaged.  Returns RMSPBE curves of shape
    (K, R, T + 1), entry 0 at initialisation, and divergence flags (K, R).
    """
    update = PREDICTION_UPDATES[algorithm]
    table = problem.table if table is None else table
    w0 = problem.w0 if w0 is None else np.asarray(w0, dtype=float)
    K, R, T = len(hypers), codes.shape[0], codes.shape[1]
    minibatch = codes.ndim == 3
    n = problem.features.n_features
    col = 3 if minibatch else 2
    hyp = Hypers(alpha=_columns(hypers, "alpha", col), eta=_columns(hypers, "eta", col),
                 beta=_columns(hypers, "beta", col), clip=clip)
    alpha = _columns(hypers, "alpha", 2)
    eta = _columns(hypers, "eta", 2)
    w = np.broadcast_to(w0, (K, R, n)).copy()
    h = np.zeros((K, R, n))
    secondary = algorithm not in NO_SECONDARY
    opt_w = opt.init_state(optimizer, w.shape, alpha)
    opt_h = opt.init_state(optimizer, h.shape, alpha * eta) if secondary else None
    ev = problem.evaluator
    curves = np.empty((K, R, T + 1))
    curves[:, :, 0] = ev.rmspbe(w)
    diverged = np.zeros((K, R), dtype=bool)
    for t in range(T):
        c = codes[:, t]
        tr = Transition(table.x[c], table.reward[c], table.x_next[c], table.rho[c], table.gamma[c])
        if minibatch:
            state = AgentState(w[:, :, None, :], h[:, :, None, :], hyp)
            dw, dh = update(state, tr)
            dw, dh = dw.mean(axis=-2), dh.mean(axis=-2)
        else:
            dw, dh = update(AgentState(w, h, hyp), tr)
        live = ~diverged[..., None]
        w += np.where(live, opt.apply(opt_w, dw, optimizer), 0.0)
        if secondary:
            h += np.where(live, opt.apply(opt_h, dh, optimizer), 0.0)
        big = np.maximum(np.abs(w).max(-1), np.abs(h).max(-1))
        diverged |= ~(big < DIVERGENCE_THRESHOLD)
        curves[:, :, t + 1] = ev.rmspbe(w)
    np.nan_to_num(curves, copy=False, nan=RMSPBE_CAP, posinf=RMSPBE_CAP)
    np.minimum(curves, RMSPBE_CAP, out=curves)
    return curves, diverged


def _online_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    config, hypers = args
    problem = prediction_problem(config.environment)
    codes = simulate_codes(problem.mdp, problem.behavior, range(config.n_runs),
                           config.seed_base, config.n_steps)
    w0 = None if config.initial_weights is None else config.initial_weights
    curves, div = run_rows(problem, config.algorithm, config.optimizer_config(), hypers, codes,
                           clip=config.clip, w0=w0)
    return curves[:, :, :-1], div


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get("TDRC_WORKERS", "1"))
    return max(1, workers)


def map_chunks(fn, config: ExperimentConfig, hypers: list[dict], workers: int | None):
    """Split hyper rows into contiguous chunks and evaluate them, serially or in a pool."""
    workers = min(worker_count(workers), len(hypers))
    bounds = np.linspace(0, len(hypers), workers + 1).astype(int)
    chunks = [(config, hypers[lo:hi]) for lo, hi in zip(bounds[:-1], bounds[1:])]
    if workers == 1:
        return [fn(chunks[0])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


def run_online(config: ExperimentConfig, workers: int | None = None) -> list[RunResult]:
    """One RunResult per (hyper combination, run), RMSPBE recorded before each update."""
    if config.protocol != "online":
        config = config.with_(protocol="online")
    hypers = hyper_grid(config)
    parts = map_chunks(_online_chunk, config, hypers, workers)
    curves = np.concatenate([p[0] for p in parts])
    diverged = np.concatenate([p[1] for p in parts])
    problem = prediction_problem(config.environment)
    meta = {**problem.metadata, "seed_base": config.seed_base, "flags": DESIGN_FLAGS}
    results = []
    for k, hp in enumerate(hypers):
        for r in range(config.n_runs):
            results.append(RunResult(curves[k, r], r, dict(hp), bool(diverged[k, r]),
                                     config.environment, config.algorithm, config.optimizer, meta))
    return results
