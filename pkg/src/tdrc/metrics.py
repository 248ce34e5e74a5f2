"""MSPBE evaluation, learning-curve summaries and cross-run statistics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mdp import ExpectationModel


class MspbeEvaluator:
    """Caches C⁻¹ (or its pseudo-inverse) for repeated MSPBE evaluation.

    ``w`` may carry any number of leading batch axes.
    """

    def __init__(self, model: ExpectationModel, beta: float = 0.0, *, rcond: float = 1e-10):
        C = model.C_beta(beta) if beta else model.C
        self.model = model
        eig = np.linalg.eigvalsh(C)
        self.singular = bool(eig.min() <= rcond * max(eig.max(), 1e-300))
        self.C_inv = np.linalg.pinv(C, rcond=rcond, hermitian=True) if self.singular else np.linalg.inv(C)

    # Row-wise broadcasting instead of matmul: a row's value never depends on
    # how many other rows are evaluated alongside it.
    def residual(self, w: np.ndarray) -> np.ndarray:
        """E[δx] = b - Aw."""
        return self.model.b - (w[..., None, :] * self.model.A).sum(axis=-1)

    def mspbe(self, w: np.ndarray) -> np.ndarray:
        r = self.residual(w)
        Cr = (r[..., None, :] * self.C_inv).sum(axis=-1)
        return np.maximum((Cr * r).sum(axis=-1), 0.0)

    def rmspbe(self, w: np.ndarray) -> np.ndarray:
        return np.sqrt(self.mspbe(w))


def mspbe(w: np.ndarray, model: ExpectationModel) -> float:
    """(b - Aw)ᵀ C⁻¹ (b - Aw); the pseudo-inverse is used when C is singular."""
    return MspbeEvaluator(model).mspbe(np.asarray(w, dtype=float))


def rmspbe(w: np.ndarray, model: ExpectationModel) -> float:
    return np.sqrt(mspbe(w, model))


def mspbe_pp(w: np.ndarray, model: ExpectationModel, beta: float) -> float:
    """MSPBE with the regularised covariance C + βI."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    return MspbeEvaluator(model, beta).mspbe(np.asarray(w, dtype=float))


def mspbe_gradient(w: np.ndarray, model: ExpectationModel, beta: float = 0.0) -> np.ndarray:
    """∇_w of the (regularised) MSPBE: -2 Aᵀ C_β⁻¹ (b - Aw)."""
    ev = MspbeEvaluator(model, beta)
    return -2.0 * model.A.T @ (ev.C_inv @ ev.residual(np.asarray(w, dtype=float)))


# ------------------------------------------------------------- run results

@dataclass
class RunResult:
    curve: np.ndarray
    seed: int
    hypers: dict
    diverged: bool = False
    environment: str = ""
    algorithm: str = ""
    optimizer: str = ""
    metadata: dict = field(default_factory=dict)

    @property
    def auc(self) -> float:
        return auc(self.curve)


def auc(curve) -> float:
    """Normalised area under a learning curve: the mean per-step value."""
    curve = np.asarray(curve, dtype=float)
    if curve.size == 0:
        raise ValueError("empty curve")
    return float(curve.mean())


@dataclass
class SweepSummary:
    mean_curve: np.ndarray
    mean_auc: float
    stderr: float
    n_runs: int
    hypers: dict = field(default_factory=dict)
    normalized: float | None = None
    baseline_auc: float | None = None


def stderr(values) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / np.sqrt(values.size))


def aggregate(results: list[RunResult], baseline_auc: float | None = None) -> SweepSummary:
    """Mean curve, mean AUC and its standard error over runs.

    ``baseline_auc`` (TDRC's mean AUC on the same problem) yields the
    normalised ratio mean_auc / baseline.
    """
    if not results:
        raise ValueError("cannot aggregate an empty result set")
    order = sorted(results, key=lambda r: r.seed)
    curves = np.stack([np.asarray(r.curve, dtype=float) for r in order])
    aucs = np.array([r.auc for r in order])
    mean_auc = float(aucs.mean())
    return SweepSummary(
        mean_curve=curves.mean(axis=0),
        mean_auc=mean_auc,
        stderr=stderr(aucs),
        n_runs=len(results),
        hypers=dict(order[0].hypers),
        normalized=None if baseline_auc is None else mean_auc / baseline_auc,
        baseline_auc=baseline_auc,
    )


def select_best(summaries: list[SweepSummary]) -> SweepSummary:
    """Lowest mean AUC; ties go to the smaller alpha."""
    if not summaries:
        raise ValueError("no configurations to select from")
    return min(summaries, key=lambda s: (s.mean_auc, s.hypers.get("alpha", 0.0)))


def reward_scale_score(tdrc_aucs, td_aucs) -> float:
    """How many TD standard deviations TDRC's mean AUC sits above TD's.

    Returns nan when TD's AUC has zero spread.
    """
    tdrc_aucs = np.asarray(tdrc_aucs, dtype=float)
    td_aucs = np.asarray(td_aucs, dtype=float)
    if tdrc_aucs.size == 0 or td_aucs.size == 0:
        raise ValueError("both samples must be non-empty")
    sd = td_aucs.std(ddof=1) if td_aucs.size > 1 else 0.0
    if not sd > 0:
        return float("nan")
    return float((tdrc_aucs.mean() - td_aucs.mean()) / sd)
