"""Finite prediction benchmarks: Boyan's chain, Baird's star and the random walk."""
from __future__ import annotations

import numpy as np

from ..mdp import FeatureMap, MdpSpec, Policy

RANDOM_WALK_FEATURES = ("tabular", "inverted", "dependent")

# Conventional Baird initialisation: ones, with the weight shared only by the
# lower state set to 10.  Kept here so run metadata can report it.
BAIRD_INIT = np.array([1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10.0, 1.0])


def boyan_features(n_states: int = 13, n_features: int = 4) -> np.ndarray:
    """Piecewise-linear interpolation between evenly spaced corner states.

    The last state maps to e_0 and state 0 to e_{n_features - 1}.
    """
    span = (n_states - 1) / (n_features - 1)
    phi = np.zeros((n_states, n_features))
    for s in range(n_states):
        pos = (n_states - 1 - s) / span
        lo = min(int(np.floor(pos)), n_features - 2)
        frac = pos - lo
        phi[s, lo] = 1.0 - frac
        phi[s, lo + 1] = frac
    return phi


def make_boyan(n_states: int = 13, step_reward: float = -3.0,
               final_reward: float = -2.0) -> tuple[MdpSpec, FeatureMap, Policy, Policy]:
    """Boyan's chain, on-policy, undiscounted.

    Episodes start in the highest state.  From s >= 2 the chain moves to s-1
    or s-2 with equal probability and reward ``step_reward``; from s = 1 it
    moves to the terminal state 0 with ``final_reward``.  Entering state 0
    terminates (γ = 0) and the chain restarts, so state 0 carries no
    stationary mass.
    """
    S = n_states
    start = S - 1
    P = np.zeros((S, 1, S))
    R = np.zeros((S, 1, S))
    G = np.ones((S, 1, S))
    for s in range(2, S):
        P[s, 0, s - 1] = P[s, 0, s - 2] = 0.5
        R[s, 0, s - 1] = R[s, 0, s - 2] = step_reward
    P[1, 0, 0] = 1.0
    R[1, 0, 0] = final_reward
    # the terminal state itself just restarts; it is never occupied
    P[0, 0, start] = 1.0
    G[:, :, 0] = 0.0
    G[0, 0, :] = 0.0
    d0 = np.zeros(S)
    d0[start] = 1.0
    mdp = MdpSpec(P, R, G, d0, name="boyan")
    pi = Policy(np.ones((S, 1)))
    return mdp, FeatureMap(boyan_features(S)), pi, pi


def baird_features() -> np.ndarray:
    phi = np.zeros((7, 8))
    for s in range(6):
        phi[s, s] = 2.0
        phi[s, 7] = 1.0
    phi[6, 6] = 1.0
    phi[6, 7] = 2.0
    return phi


DASHED, SOLID = 0, 1


def make_baird(gamma: float = 0.99) -> tuple[MdpSpec, FeatureMap, Policy, Policy]:
    """Baird's seven-state star.

    Dashed jumps uniformly to one of the six upper states, solid goes to the
    lower state.  Behaviour: dashed 6/7, solid 1/7.  Target: always solid.
    """
    P = np.zeros((7, 2, 7))
    P[:, DASHED, :6] = 1.0 / 6.0
    P[:, SOLID, 6] = 1.0
    mdp = MdpSpec(P, 0.0, gamma, np.full(7, 1.0 / 7.0), name="baird")
    behavior = Policy(np.tile([6.0 / 7.0, 1.0 / 7.0], (7, 1)))
    target = Policy(np.tile([0.0, 1.0], (7, 1)))
    return mdp, FeatureMap(baird_features()), behavior, target


def random_walk_features(kind: str, n_states: int = 5) -> np.ndarray:
    if kind == "tabular":
        return np.eye(n_states)
    if kind == "inverted":
        phi = np.full((n_states, n_states), 1.0 / np.sqrt(n_states - 1))
        np.fill_diagonal(phi, 0.0)
        return phi
    if kind == "dependent":
        if n_states != 5:
            raise ValueError("dependent features are defined for the 5-state walk only")
        r2, r3 = 1 / np.sqrt(2), 1 / np.sqrt(3)
        return np.array([
            [1.0, 0.0, 0.0],
            [r2, r2, 0.0],
            [r3, r3, r3],
            [0.0, r2, r2],
            [0.0, 0.0, 1.0],
        ])
    raise ValueError(f"unknown random-walk feature scheme {kind!r}; "
                     f"expected one of {RANDOM_WALK_FEATURES}")


LEFT, RIGHT = 0, 1


def make_random_walk(features: str = "tabular", n_states: int = 5, right_reward: float = 1.0,
                     left_reward: float = 0.0, target_right: float = 0.6
                     ) -> tuple[MdpSpec, FeatureMap, Policy, Policy]:
    """Five-state random walk with terminals at both ends.

    Episodes start in the middle state; terminating transitions have γ = 0
    and point back at the start state.
    """
    phi = random_walk_features(features, n_states)
    S = n_states
    start = S // 2
    P = np.zeros((S, 2, S))
    R = np.zeros((S, 2, S))
    G = np.ones((S, 2, S))
    for s in range(S):
        for a, step in ((LEFT, -1), (RIGHT, 1)):
            nxt = s + step
            if 0 <= nxt < S:
                P[s, a, nxt] = 1.0
            else:
                P[s, a, start] = 1.0
                G[s, a, start] = 0.0
                R[s, a, start] = right_reward if nxt >= S else left_reward
    d0 = np.zeros(S)
    d0[start] = 1.0
    mdp = MdpSpec(P, R, G, d0, name=f"randomwalk-{features}")
    behavior = Policy(np.full((S, 2), 0.5))
    target = Policy(np.tile([1.0 - target_right, target_right], (S, 1)))
    return mdp, FeatureMap(phi), behavior, target
