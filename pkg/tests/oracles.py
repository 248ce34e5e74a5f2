"""Reference implementations written independently of the package.

They use explicit loops and textbook formulas so that agreement with the
vectorised code is evidence rather than tautology.
"""
from __future__ import annotations

import math

import numpy as np


def dense_expectations(P, R, G, behavior, target, phi, d):
    """A, b, C by summing behaviour-weighted samples with importance ratios."""
    S, nA, _ = P.shape
    n = phi.shape[1]
    A = np.zeros((n, n))
    b = np.zeros(n)
    C = np.zeros((n, n))
    for s in range(S):
        x = phi[s]
        C += d[s] * np.outer(x, x)
        for a in range(nA):
            if behavior[s][a] == 0:
                continue
            rho = target[s][a] / behavior[s][a]
            for sp in range(S):
                p = d[s] * behavior[s][a] * P[s][a][sp]
                if p == 0:
                    continue
                A += p * rho * np.outer(x, x - G[s][a][sp] * phi[sp])
                b += p * rho * R[s][a][sp] * x
    return A, b, C


def restart_chain(P, G, behavior, start):
    S, nA, _ = P.shape
    M = np.zeros((S, S))
    for s in range(S):
        for a in range(nA):
            for sp in range(S):
                p = behavior[s][a] * P[s][a][sp]
                if G[s][a][sp] == 0:
                    M[s] += p * np.asarray(start)
                else:
                    M[s][sp] += p
    return M


def power_iteration(M, iters=200_000, tol=1e-14):
    d = np.full(M.shape[0], 1.0 / M.shape[0])
    for _ in range(iters):
        nxt = d @ M
        # average with the previous iterate to damp periodic chains
        nxt = 0.5 * (nxt + d)
        if np.abs(nxt - d).max() < tol:
            break
        d = nxt
    return nxt / nxt.sum()


def boyan_episode_visits(n_states=13):
    """Expected visits per state in one episode, by enumerating every path."""
    visits = np.zeros(n_states)

    def walk(s, prob):
        visits[s] += prob
        if s == 0:
            return
        if s == 1:
            walk(0, prob)
            return
        walk(s - 1, 0.5 * prob)
        walk(s - 2, 0.5 * prob)

    walk(n_states - 1, 1.0)
    return visits


def value_iteration(P, R, G, policy, tol=1e-13, max_iter=1_000_000):
    S, nA, _ = P.shape
    v = np.zeros(S)
    for _ in range(max_iter):
        new = np.zeros(S)
        for s in range(S):
            for a in range(nA):
                for sp in range(S):
                    new[s] += policy[s][a] * P[s][a][sp] * (R[s][a][sp] + G[s][a][sp] * v[sp])
        if np.abs(new - v).max() < tol:
            return new
        v = new
    return v


def finite_difference_gradient(f, w, eps=1e-6):
    g = np.zeros_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = eps
        g[i] = (f(w + e) - f(w - e)) / (2 * eps)
    return g


def sample_iid_transitions(P, behavior, target, d, n, rng):
    """(s, a, s', rho) arrays sampled with s ~ d, a ~ b(s), s' ~ P."""
    S, nA, _ = P.shape
    s = rng.choice(S, size=n, p=d)
    u = rng.random(n)
    a = (u[:, None] > np.cumsum(behavior, axis=1)[s]).sum(axis=1)
    a = np.minimum(a, nA - 1)
    u2 = rng.random(n)
    sp = (u2[:, None] > np.cumsum(P[s, a], axis=1)).sum(axis=1)
    sp = np.minimum(sp, S - 1)
    rho = target[s, a] / behavior[s, a]
    return s, a, sp, rho


def tile_indices_loop(state, n_tilings, tiles, bounds, displacement):
    """One tiling at a time, scalar arithmetic."""
    out = []
    per_tiling = int(np.prod(tiles))
    for i in range(n_tilings):
        flat = 0
        for d, (lo, hi) in enumerate(bounds):
            u = min(max((state[d] - lo) / (hi - lo), 0.0), 1.0)
            off = (i * displacement[d] / n_tilings) % 1.0
            c = min(int(math.floor(u * (tiles[d] - 1) + off)), tiles[d] - 1)
            flat = flat * tiles[d] + c
        out.append(i * per_tiling + flat)
    return out


def mountain_car_python(pos, vel, action):
    vel = vel + 0.001 * (action - 1) - 0.0025 * math.cos(3 * pos)
    vel = min(max(vel, -0.07), 0.07)
    pos = pos + vel
    pos = min(max(pos, -1.2), 0.5)
    if pos == -1.2:
        vel = 0.0
    return pos, vel, pos >= 0.5


def quadratic_roots(a, c, eta, beta):
    """Roots of λ² + (ηβ + η b_c + λ_z) λ + η(β λ_z + b_a) for a scalar model.

    With one feature, z = 1 gives b_c = c, λ_z = a and b_a = a².
    """
    p = eta * beta + eta * c + a
    q = eta * (beta * a + a * a)
    r = complex(p * p - 4 * q) ** 0.5
    return np.array([(-p + r) / 2, (-p - r) / 2])
