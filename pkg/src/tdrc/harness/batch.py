"""Offline batch protocol and the reward-scale study."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..metrics import reward_scale_score, stderr
from .config import DESIGN_FLAGS, ExperimentConfig
from .online import map_chunks, prediction_problem, run_rows
from .streams import run_rng, sample_dataset, simulate_codes

MAX_PRACTICAL_BUDGET = 2**16


@dataclass
class BatchResult:
    """Best-over-alpha AUC per update budget."""

    budgets: list
    alphas: list
    auc: np.ndarray          # (alphas, datasets, budgets) per-dataset AUCs
    best_alpha: list
    mean_auc: np.ndarray     # (budgets,) at the best alpha
    stderr: np.ndarray
    metadata: dict = field(default_factory=dict)

    def first_budget_within(self, tol: float = 0.1) -> int:
        """Smallest budget whose best AUC is within ``tol`` of the largest budget's."""
        target = (1.0 + tol) * self.mean_auc[-1]
        for n, a in zip(self.budgets, self.mean_auc):
            if a <= target:
                return n
        return self.budgets[-1]


def _batch_chunk(args):
    config, hypers = args
    problem = prediction_problem(config.environment)
    d_b = problem.model.d_b
    n_max = max(config.update_budgets)
    codes = np.empty((config.n_runs, n_max, config.minibatch_size), dtype=np.int64)
    for r in range(config.n_runs):
        rng = run_rng(config.seed_base, r)
        data = sample_dataset(problem.mdp, problem.behavior, d_b, config.dataset_size, rng)
        picks = rng.integers(0, config.dataset_size, size=(n_max, config.minibatch_size))
        codes[r] = data[picks]
    w0 = config.initial_weights
    curves, _ = run_rows(problem, config.algorithm, config.optimizer_config(), hypers, codes,
                         clip=config.clip, w0=w0)
    return curves


def run_batch(config: ExperimentConfig, workers: int | None = None) -> BatchResult:
    """For each budget n the AUC is the mean RMSPBE over updates 0..n.

    One run of max(budgets) updates per (alpha, dataset) serves every budget
    as a prefix; minibatch draws are shared across alphas.
    """
    if max(config.update_budgets) > MAX_PRACTICAL_BUDGET:
        warnings.warn(f"update budget {max(config.update_budgets)} exceeds {MAX_PRACTICAL_BUDGET}")
    eta = config.etas[0]
    beta = config.betas[0]
    hypers = [{"alpha": a, "eta": eta, "beta": beta} for a in config.alphas]
    curves = np.concatenate(map_chunks(_batch_chunk, config, hypers, workers))
    cums = np.cumsum(curves, axis=-1)
    budgets = sorted(config.update_budgets)
    auc = np.stack([cums[..., n] / (n + 1) for n in budgets], axis=-1)  # (K, R, B)
    means = auc.mean(axis=1)
    best = np.argmin(means, axis=0)  # first index wins ties: the smaller alpha
    cols = np.arange(len(budgets))
    return BatchResult(
        budgets, list(config.alphas), auc, [config.alphas[k] for k in best], means[best, cols],
        np.array([stderr(auc[k, :, j]) for j, k in enumerate(best)]),
        {"config_hash": config.config_hash(), "flags": DESIGN_FLAGS,
         "algorithm": config.algorithm, "environment": config.environment},
    )


# ----------------------------------------------------------- reward scale

@dataclass
class RewardScaleResult:
    scales: list
    betas: list
    scores: np.ndarray       # (scales, betas)
    td_auc: np.ndarray       # (scales,) mean AUC of TD at its best alpha
    tdrc_auc: np.ndarray     # (scales, betas)
    metadata: dict = field(default_factory=dict)

    def acceptable(self, scale: float, bound: float = 2.0) -> set:
        i = self.scales.index(scale)
        return {b for b, s in zip(self.betas, self.scores[i]) if abs(s) <= bound}


def _best_alpha_aucs(aucs: np.ndarray) -> np.ndarray:
    """Per-run AUCs at the alpha with the lowest mean; aucs is (alphas, runs)."""
    return aucs[int(np.argmin(aucs.mean(axis=1)))]


def run_reward_scale(config: ExperimentConfig) -> RewardScaleResult:
    """TDRC-vs-TD score per (reward scale, beta) on one random walk.

    All scales share the same behaviour trajectories; only the terminal
    rewards change.  Weights start at zero.
    """
    base = prediction_problem(config.environment)
    codes = simulate_codes(base.mdp, base.behavior, range(config.n_runs),
                           config.seed_base, config.n_steps)
    opt_cfg = config.optimizer_config()
    scores = np.empty((len(config.reward_scales), len(config.betas)))
    td_auc = np.empty(len(config.reward_scales))
    tdrc_auc = np.empty_like(scores)
    zeros = np.zeros(base.features.n_features)
    for i, scale in enumerate(config.reward_scales):
        problem = prediction_problem(config.environment, float(scale))
        td_h = [{"alpha": a, "eta": 1.0, "beta": 0.0} for a in config.alphas]
        td_curves, _ = run_rows(problem, "td", opt_cfg, td_h, codes, w0=zeros)
        td = _best_alpha_aucs(td_curves[..., :-1].mean(axis=-1))
        td_auc[i] = td.mean()
        rc_h = [{"alpha": a, "eta": 1.0, "beta": b} for b in config.betas for a in config.alphas]
        rc_curves, _ = run_rows(problem, "tdrc", opt_cfg, rc_h, codes, w0=zeros)
        rc = rc_curves[..., :-1].mean(axis=-1).reshape(len(config.betas), len(config.alphas), -1)
        for j in range(len(config.betas)):
            best = _best_alpha_aucs(rc[j])
            tdrc_auc[i, j] = best.mean()
            scores[i, j] = reward_scale_score(best, td)
    return RewardScaleResult(list(config.reward_scales), list(config.betas), scores, td_auc,
                             tdrc_auc, {"config_hash": config.config_hash(), "flags": DESIGN_FLAGS,
                                        "environment": config.environment})
