"""Finite MDPs, policies, stationary distributions and the exact A, b, C model.

Episodic problems are folded into a continuing chain: a transition with
discount zero terminates the episode, and the behaviour chain restarts from
``start_dist``.  The next-state index stored for such a transition only
contributes through ``gamma * x(s')`` and therefore never matters for the
expectations.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PROB_TOL = 1e-12


class MdpError(ValueError):
    pass


class StationaryDistributionError(RuntimeError):
    """The behaviour chain has no unique reachable stationary distribution."""


class SingularModelError(np.linalg.LinAlgError):
    def __init__(self, message: str, rank: int, null_space: np.ndarray):
        super().__init__(message)
        self.rank = rank
        self.null_space = null_space


def _check_simplex(p: np.ndarray, name: str, axis: int = -1) -> None:
    if np.any(p < 0) or np.any(p > 1):
        raise MdpError(f"{name} has entries outside [0, 1]")
    if np.any(np.abs(p.sum(axis=axis) - 1.0) > PROB_TOL):
        raise MdpError(f"{name} does not sum to one")


@dataclass(frozen=True)
class MdpSpec:
    """Tabular MDP with per-transition rewards and discounts.

    All tensors are indexed ``[s, a, s']``.
    """

    transition: np.ndarray
    reward: np.ndarray
    discount: np.ndarray
    start_dist: np.ndarray
    name: str = "mdp"

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=float)
        R = np.broadcast_to(np.asarray(self.reward, dtype=float), P.shape).copy()
        G = np.broadcast_to(np.asarray(self.discount, dtype=float), P.shape).copy()
        d0 = np.asarray(self.start_dist, dtype=float)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise MdpError(f"transition must have shape (S, A, S), got {P.shape}")
        if d0.shape != (P.shape[0],):
            raise MdpError("start_dist must have one entry per state")
        _check_simplex(P, "transition")
        _check_simplex(d0, "start_dist")
        if np.any(G < 0) or np.any(G > 1):
            raise MdpError("discount entries must lie in [0, 1]")
        for arr in (P, R, G, d0):
            arr.setflags(write=False)
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "reward", R)
        object.__setattr__(self, "discount", G)
        object.__setattr__(self, "start_dist", d0)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    def scale_rewards(self, scale: float) -> "MdpSpec":
        return MdpSpec(self.transition, self.reward * scale, self.discount,
                       self.start_dist, name=self.name)


@dataclass(frozen=True)
class Policy:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 2:
            raise MdpError("policy must be a (states, actions) matrix")
        _check_simplex(p, "policy")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)


@dataclass(frozen=True)
class FeatureMap:
    matrix: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.matrix, dtype=float)
        if phi.ndim != 2 or phi.shape[1] < 1:
            raise MdpError("feature matrix must be (states, features) with features >= 1")
        if not np.any(phi):
            raise MdpError("feature matrix is identically zero")
        phi.setflags(write=False)
        object.__setattr__(self, "matrix", phi)

    @property
    def n_features(self) -> int:
        return self.matrix.shape[1]

    def __call__(self, s):
        return self.matrix[s]


@dataclass(frozen=True)
class ExpectationModel:
    """A = E[x(x - γx')ᵀ], b = E[Rx], C = E[xxᵀ] under d_b and the target policy.

    ``cross`` holds E[γ x' xᵀ], so that Aᵀ = C - cross.
    """

    A: np.ndarray
    b: np.ndarray
    C: np.ndarray
    d_b: np.ndarray
    cross: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def n_features(self) -> int:
        return self.b.shape[0]

    @property
    def H(self) -> np.ndarray:
        return 0.5 * (self.A + self.A.T)

    def A_beta(self, beta: float) -> np.ndarray:
        return self.A + beta * np.eye(self.n_features)

    def C_beta(self, beta: float) -> np.ndarray:
        return self.C + beta * np.eye(self.n_features)


def behavior_chain(mdp: MdpSpec, behavior: Policy) -> np.ndarray:
    """State-to-state matrix of the behaviour policy with restarts on γ = 0."""
    flow = np.einsum("sa,sat->sat", behavior.probs, mdp.transition)
    terminal = mdp.discount == 0.0
    P_b = np.where(terminal, 0.0, flow).sum(axis=1)
    P_b += np.where(terminal, flow, 0.0).sum(axis=(1, 2))[:, None] * mdp.start_dist[None, :]
    return P_b


def _power_iteration(P: np.ndarray, d0: np.ndarray, max_iter: int, tol: float) -> np.ndarray:
    d = d0.copy()
    for _ in range(max_iter):
        nxt = d @ P
        if np.abs(nxt - d).max() < tol:
            return nxt / nxt.sum()
        d = nxt
    raise StationaryDistributionError(
        f"power iteration did not converge in {max_iter} iterations; "
        "the behaviour chain is periodic or reducible, supply d_b explicitly"
    )


def stationary_distribution(mdp: MdpSpec, behavior: Policy, *,
                            max_iter: int = 1_000_000, tol: float = 1e-12) -> np.ndarray:
    """Stationary state distribution of the restart-augmented behaviour chain.

    Solves (P_bᵀ - I) d = 0 with Σd = 1 directly; falls back to power
    iteration from ``start_dist`` when the solution is not unique.
    """
    P_b = behavior_chain(mdp, behavior)
    n = P_b.shape[0]
    system = np.vstack([P_b.T - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    d, _, rank, _ = np.linalg.lstsq(system, rhs, rcond=None)
    if rank == n and np.all(d > -1e-12):
        d = np.clip(d, 0.0, None)
        d /= d.sum()
        if np.abs(d @ P_b - d).max() <= 1e-10:
            return d
    return _power_iteration(P_b, mdp.start_dist, max_iter, tol)


def expectation_matrices(mdp: MdpSpec, behavior: Policy, target: Policy,
                         features: FeatureMap, d_b: np.ndarray | None = None) -> ExpectationModel:
    """Exact A, b, C under the behaviour stationary distribution.

    Actions are averaged with the target policy, which equals the
    ρ-weighted behaviour expectation.
    """
    phi = features.matrix
    S, nA = mdp.n_states, mdp.n_actions
    if phi.shape[0] != S:
        raise MdpError(f"feature matrix has {phi.shape[0]} rows, MDP has {S} states")
    for pol, name in ((behavior, "behavior"), (target, "target")):
        if pol.probs.shape != (S, nA):
            raise MdpError(f"{name} policy has shape {pol.probs.shape}, expected {(S, nA)}")
    if d_b is None:
        d_b = stationary_distribution(mdp, behavior)
        source = "restart-chain"
    else:
        d_b = np.asarray(d_b, dtype=float)
        if d_b.shape != (S,):
            raise MdpError("d_b override has the wrong length")
        source = "override"

    # weight[s, a, s'] = d_b(s) π(a|s) P(s'|s,a)
    weight = d_b[:, None, None] * target.probs[:, :, None] * mdp.transition
    C = phi.T @ (d_b[:, None] * phi)
    gamma_flow = (weight * mdp.discount).sum(axis=1)  # [s, s']
    cross = phi.T @ gamma_flow.T @ phi  # E[γ x' xᵀ]
    A = C - cross.T
    b = phi.T @ (weight * mdp.reward).sum(axis=(1, 2))
    return ExpectationModel(A=A, b=b, C=C, d_b=d_b, cross=cross,
                            metadata={"d_b_source": source, "mdp": mdp.name})


def td_fixed_point(model: ExpectationModel, *, rcond: float = 1e-12) -> np.ndarray:
    """Solve A w = b; raises SingularModelError carrying the null space."""
    A, b = model.A, model.b
    u, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > rcond * s[0])) if s[0] > 0 else 0
    if rank < A.shape[0]:
        raise SingularModelError(
            f"A is singular (rank {rank} of {A.shape[0]})", rank, vt[rank:].T.copy()
        )
    w = np.linalg.solve(A, b)
    return w


def condition_number(model: ExpectationModel) -> float:
    return float(np.linalg.cond(model.A))


def policy_matrix(mdp: MdpSpec, policy: Policy) -> tuple[np.ndarray, np.ndarray]:
    """Discounted state transition matrix and expected reward under ``policy``."""
    flow = policy.probs[:, :, None] * mdp.transition
    P_gamma = (flow * mdp.discount).sum(axis=1)
    r = (flow * mdp.reward).sum(axis=(1, 2))
    return P_gamma, r


def true_values(mdp: MdpSpec, policy: Policy) -> np.ndarray:
    """v_π from the Bellman equations (I - P_γ) v = r."""
    P_gamma, r = policy_matrix(mdp, policy)
    return np.linalg.solve(np.eye(mdp.n_states) - P_gamma, r)
