"""Seeded transition streams for the finite prediction problems.

Each run owns a Philox generator keyed by ``(seed_base, run)``, so a run's
data never depends on which other runs share a batch or a worker.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mdp import FeatureMap, MdpSpec, Policy


def run_rng(seed_base: int, run: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed_base), int(run)])))


def categorical(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draws: row i of ``probs`` sampled with uniform ``u[i]``."""
    cum = np.cumsum(probs, axis=-1)
    idx = (cum <= u[..., None]).sum(axis=-1)
    return np.minimum(idx, probs.shape[-1] - 1)


@dataclass
class TransitionTable:
    """Every (s, a, s') triple flattened to one code with its derived quantities."""

    x: np.ndarray        # (codes, n)
    x_next: np.ndarray
    reward: np.ndarray   # (codes,)
    gamma: np.ndarray
    rho: np.ndarray
    action: np.ndarray
    state: np.ndarray
    next_state: np.ndarray

    @classmethod
    def build(cls, mdp: MdpSpec, features: FeatureMap, behavior: Policy, target: Policy,
              reward_scale: float = 1.0) -> "TransitionTable":
        S, A = mdp.n_states, mdp.n_actions
        s, a, sp = np.meshgrid(np.arange(S), np.arange(A), np.arange(S), indexing="ij")
        s, a, sp = s.ravel(), a.ravel(), sp.ravel()
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = np.where(behavior.probs[s, a] > 0, target.probs[s, a] / behavior.probs[s, a], 0.0)
        phi = features.matrix
        return cls(phi[s], phi[sp], reward_scale * mdp.reward[s, a, sp], mdp.discount[s, a, sp],
                   rho, a, s, sp)

    @staticmethod
    def encode(mdp: MdpSpec, s, a, sp) -> np.ndarray:
        return (np.asarray(s) * mdp.n_actions + np.asarray(a)) * mdp.n_states + np.asarray(sp)


def simulate_codes(mdp: MdpSpec, behavior: Policy, runs, seed_base: int, n_steps: int) -> np.ndarray:
    """Behaviour-policy trajectories as transition codes, shape (len(runs), n_steps).

    Each step consumes three uniforms (action, next state, restart draw).
    Terminating transitions (γ = 0) are followed by a fresh start state.
    """
    runs = list(runs)
    R = len(runs)
    U = np.stack([run_rng(seed_base, r).random((n_steps + 1, 3)) for r in runs])
    start_probs = np.broadcast_to(mdp.start_dist, (R, mdp.n_states))
    s = categorical(start_probs, U[:, 0, 2])
    codes = np.empty((R, n_steps), dtype=np.int64)
    for t in range(n_steps):
        u = U[:, t + 1]
        a = categorical(behavior.probs[s], u[:, 0])
        sp = categorical(mdp.transition[s, a], u[:, 1])
        codes[:, t] = TransitionTable.encode(mdp, s, a, sp)
        restart = categorical(start_probs, u[:, 2])
        s = np.where(mdp.discount[s, a, sp] == 0.0, restart, sp)
    return codes


def sample_dataset(mdp: MdpSpec, behavior: Policy, d_b: np.ndarray, size: int,
                   rng: np.random.Generator) -> np.ndarray:
    """i.i.d. transition codes with s ~ d_b, a ~ b(s), s' ~ P(s, a)."""
    u = rng.random((size, 3))
    s = categorical(np.broadcast_to(d_b, (size, d_b.size)), u[:, 0])
    a = categorical(behavior.probs[s], u[:, 1])
    sp = categorical(mdp.transition[s, a], u[:, 2])
    return TransitionTable.encode(mdp, s, a, sp)
