"""Stepsize rules: constant, Adagrad and Adam.

Raw updates coming from the agents are ascent directions (negative
gradients), so every rule returns a delta that is *added* to the weights.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("constant", "adagrad", "adam")


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "adagrad"
    alpha: float = 2.0**-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown optimizer {self.kind!r}; expected one of {KINDS}")
        if not np.all(np.asarray(self.alpha) > 0):
            raise ValueError("alpha must be positive")
        for b in (self.adam_beta1, self.adam_beta2):
            if not 0.0 <= b < 1.0:
                raise ValueError("Adam betas must lie in [0, 1)")


@dataclass
class OptimizerState:
    """Per-weight accumulators.  ``alpha`` may be a column for batched rows."""

    alpha: float | np.ndarray
    sq_sum: np.ndarray | None = None
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    t: int = 0


def init_state(config: OptimizerConfig, shape, alpha=None) -> OptimizerState:
    alpha = config.alpha if alpha is None else alpha
    if config.kind == "adagrad":
        return OptimizerState(alpha, sq_sum=np.zeros(shape))
    if config.kind == "adam":
        return OptimizerState(alpha, m=np.zeros(shape), v=np.zeros(shape))
    return OptimizerState(alpha)


def apply(state: OptimizerState, raw: np.ndarray, config: OptimizerConfig) -> np.ndarray:
    """Turn a raw update into a weight delta, advancing the accumulators."""
    alpha = state.alpha
    if config.kind == "constant":
        return alpha * raw
    if config.kind == "adagrad":
        # accumulate first, then step
        state.sq_sum += raw * raw
        return alpha * raw / (np.sqrt(state.sq_sum) + config.epsilon)
    b1, b2 = config.adam_beta1, config.adam_beta2
    state.t += 1
    state.m *= b1
    state.m += (1.0 - b1) * raw
    state.v *= b2
    state.v += (1.0 - b2) * (raw * raw)
    m_hat = state.m / (1.0 - b1**state.t)
    v_hat = state.v / (1.0 - b2**state.t)
    return alpha * m_hat / (np.sqrt(v_hat) + config.epsilon)


def effective_stepsize(state: OptimizerState, config: OptimizerConfig) -> np.ndarray | float:
    """Per-coordinate Adagrad stepsize for the next step (diagnostics)."""
    if config.kind != "adagrad":
        return state.alpha
    return state.alpha / (np.sqrt(state.sq_sum) + config.epsilon)
