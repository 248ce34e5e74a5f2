"""Linear TD-family updates.

Every update takes the current :class:`AgentState` and one
:class:`Transition` and returns the raw ascent directions ``(dw, dh)``.
Stepsizes are applied afterwards by :mod:`tdrc.optimizers`; the secondary
stepsize multiplier ``eta`` is applied there too (the h optimizer runs with
stepsize ``eta * alpha``), so it never appears in the directions below.

All functions broadcast over leading batch dimensions: ``w``, ``h``, ``x``
and ``x_next`` may be ``(..., n)`` with ``reward``, ``rho`` and ``gamma`` of
shape ``(...)``.  Batched hyperparameters are columns of shape ``(..., 1)``.
Rows never interact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

DIVERGENCE_THRESHOLD = 1e10


@dataclass
class Hypers:
    alpha: float | np.ndarray = 2.0**-4
    eta: float | np.ndarray = 1.0
    beta: float | np.ndarray = 1.0
    clip: float | np.ndarray = 1.0


@dataclass
class AgentState:
    w: np.ndarray
    h: np.ndarray
    hypers: Hypers = field(default_factory=Hypers)
    opt_w: object = None
    opt_h: object = None

    @classmethod
    def zeros(cls, n: int, hypers: Hypers | None = None, batch: tuple = ()) -> "AgentState":
        return cls(np.zeros(batch + (n,)), np.zeros(batch + (n,)), hypers or Hypers())

    def diverged(self) -> np.ndarray:
        big = np.maximum(np.abs(self.w).max(-1), np.abs(self.h).max(-1))
        return ~(big < DIVERGENCE_THRESHOLD)


@dataclass
class Transition:
    x: np.ndarray
    reward: float | np.ndarray
    x_next: np.ndarray
    rho: float | np.ndarray = 1.0
    gamma: float | np.ndarray = 1.0
    action: int | np.ndarray | None = None


def _col(v) -> np.ndarray:
    return np.asarray(v, dtype=float)[..., None]


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a * b).sum(axis=-1, keepdims=True)


def td_error(w: np.ndarray, t: Transition) -> np.ndarray:
    """δ = R + γ wᵀx' - wᵀx, with a trailing singleton axis."""
    return _col(t.reward) + _col(t.gamma) * _dot(w, t.x_next) - _dot(w, t.x)


def _hyper(v) -> np.ndarray:
    return np.asarray(v, dtype=float)


def td_update(state: AgentState, t: Transition):
    delta = td_error(state.w, t)
    dw = (_col(t.rho) * delta) * t.x
    return dw, np.zeros_like(state.h)


def vtrace_update(state: AgentState, t: Transition):
    rho = np.minimum(_col(t.rho), _hyper(state.hypers.clip))
    delta = td_error(state.w, t)
    dw = (rho * delta) * t.x
    return dw, np.zeros_like(state.h)


def _correction(state: AgentState, t: Transition, delta: np.ndarray):
    """Shared TDC pieces: primary direction and ρδ - hᵀx."""
    rho = _col(t.rho)
    hx = _dot(state.h, t.x)
    dw = (rho * delta) * t.x - (rho * _col(t.gamma) * hx) * t.x_next
    return dw, rho * delta - hx


def tdc_update(state: AgentState, t: Transition):
    delta = td_error(state.w, t)
    dw, err = _correction(state, t, delta)
    return dw, err * t.x


def gtd2_update(state: AgentState, t: Transition):
    delta = td_error(state.w, t)
    rho = _col(t.rho)
    hx = _dot(state.h, t.x)
    dw = (rho * hx) * (t.x - _col(t.gamma) * t.x_next)
    return dw, (rho * delta - hx) * t.x


def tdrc_update(state: AgentState, t: Transition):
    delta = td_error(state.w, t)
    dw, err = _correction(state, t, delta)
    return dw, err * t.x - _hyper(state.hypers.beta) * state.h


def tdcpp_update(state: AgentState, t: Transition):
    """TDC on the C_β-regularised objective: TDRC plus a -βh term on w."""
    beta = _hyper(state.hypers.beta)
    delta = td_error(state.w, t)
    dw, err = _correction(state, t, delta)
    return dw - beta * state.h, err * t.x - beta * state.h


def htd_update(state: AgentState, t: Transition):
    """Hybrid TD with λ = 0 (traces e = ρx and e_b = x).

    The correction is scaled by (ρ - 1), so it vanishes on-policy and the
    primary update is exactly TD's.
    """
    delta = td_error(state.w, t)
    rho = _col(t.rho)
    diff_h = _dot(t.x - _col(t.gamma) * t.x_next, state.h)
    dw = (rho * delta) * t.x + ((rho - 1.0) * diff_h) * t.x
    dh = (rho * delta) * t.x - diff_h * t.x
    return dw, dh


PREDICTION_UPDATES: dict[str, Callable] = {
    "td": td_update,
    "vtrace": vtrace_update,
    "tdc": tdc_update,
    "gtd2": gtd2_update,
    "htd": htd_update,
    "tdrc": tdrc_update,
    "tdcpp": tdcpp_update,
}

# algorithms whose h is never touched
NO_SECONDARY = frozenset({"td", "vtrace"})


# ---------------------------------------------------------------- control

CONTROL_VARIANTS = ("qlearning", "qc", "qrc")


def q_update(state: AgentState, t: Transition, variant: str, next_action=None):
    """Linear action-value update with a greedy bootstrap action.

    ``state.w`` and ``state.h`` have shape ``(n_actions, n)``; ``t.x`` and
    ``t.x_next`` are state features and ``t.action`` the action taken.
    ``next_action`` defaults to the lowest-index greedy action at ``x_next``.
    """
    if variant not in CONTROL_VARIANTS:
        raise ValueError(f"unknown control variant {variant!r}")
    w, h = state.w, state.h
    a = int(t.action)
    q_next = w @ t.x_next
    a_next = int(np.argmax(q_next)) if next_action is None else int(next_action)
    delta = float(t.reward) + float(t.gamma) * q_next.max() - w[a] @ t.x
    dw = np.zeros_like(w)
    dh = np.zeros_like(h)
    dw[a] += delta * t.x
    if variant == "qlearning":
        return dw, dh
    h_hat = h[a] @ t.x
    dw[a_next] -= (float(t.gamma) * h_hat) * t.x_next
    dh[a] = (delta - h_hat) * t.x
    if variant == "qrc":
        dh[a] -= float(state.hypers.beta) * h[a]
    return dw, dh


# ----------------------------------------------------------- actor-critic

AC_CRITICS = {"ac-td": "td", "ac-tdc": "tdc", "ac-tdrc": "tdrc"}


@dataclass
class PolicyParams:
    theta: np.ndarray  # (n_actions, n)

    def probs(self, x: np.ndarray) -> np.ndarray:
        prefs = self.theta @ x
        prefs = prefs - prefs.max()
        e = np.exp(prefs)
        return e / e.sum()

    def grad_log(self, x: np.ndarray, action: int) -> np.ndarray:
        """∇_θ ln π(action | x) for the linear softmax."""
        g = -np.outer(self.probs(x), x)
        g[action] += x
        return g


def actor_critic_update(state: AgentState, policy: PolicyParams, t: Transition,
                        critic: str = "tdrc"):
    """One-step actor-critic; the γ^t factor on the actor step is dropped."""
    if critic not in ("td", "tdc", "tdrc"):
        raise ValueError(f"unknown critic {critic!r}")
    dw, dh = PREDICTION_UPDATES[critic](state, t)
    delta = float(td_error(state.w, t)[0])
    dtheta = delta * policy.grad_log(t.x, int(t.action))
    return dw, dh, dtheta
