"""Convergence analysis of the expected TDRC dynamics.

The stacked system ρ = [h; w] evolves as ρ' = G ρ + g with

    G = [[-η C_β, -η A], [Aᵀ - C, -A]],   g = [η b; b].

When C is singular (more features than visited states, e.g. Baird's star)
the directions in the null space of the features carry no value information
and contribute exact zero eigenvalues to G.  The analysis then runs on the
model restricted to the range of C; the report records the rank used.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize

from .mdp import ExpectationModel

PD_TOL = 1e-10
HURWITZ_TOL = -1e-10


class SingularCovarianceError(np.linalg.LinAlgError):
    pass


@dataclass
class StabilityReport:
    A_positive_definite: bool
    beta_max: float
    eta_min: float
    beta_max_literal: float = float("nan")
    condition: str = ""
    G_spectrum: list = field(default_factory=list)
    hurwitz: bool | None = None
    eta: float | None = None
    beta: float | None = None
    fixed_point_residual: float | None = None
    reduced_rank: int | None = None
    n_features: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["G_spectrum"] = [[float(z.real), float(z.imag)] for z in self.G_spectrum]
        return d

    def admits(self, eta: float, beta: float) -> bool:
        """Whether (η, β) satisfies condition (i) or the condition (ii) bounds."""
        if self.A_positive_definite:
            return eta >= 0 and beta >= 0
        return 0 <= beta < self.beta_max and eta > self.eta_min


def covariance_rank(model: ExpectationModel, tol: float = PD_TOL) -> tuple[int, np.ndarray]:
    ev, U = np.linalg.eigh(model.C)
    keep = ev > tol * max(ev.max(), 1e-300)
    return int(keep.sum()), U[:, keep]


def reduce_model(model: ExpectationModel, tol: float = PD_TOL) -> tuple[ExpectationModel, np.ndarray]:
    """Restrict A, b, C to the range of C.

    Returns the reduced model and the orthonormal basis Q with w = Q w_r.
    A, C and b all live in this subspace because every feature vector on
    the support of d_b does.
    """
    _, Q = covariance_rank(model, tol)
    reduced = ExpectationModel(
        A=Q.T @ model.A @ Q, b=Q.T @ model.b, C=Q.T @ model.C @ Q,
        d_b=model.d_b, cross=Q.T @ model.cross @ Q,
        metadata={**model.metadata, "reduced_from": model.n_features},
    )
    return reduced, Q


def build_G(model: ExpectationModel, eta: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    A, C, b = model.A, model.C, model.b
    n = A.shape[0]
    I = np.eye(n)
    G = np.block([[-eta * (C + beta * I), -eta * A], [A.T - C, -A]])
    g = np.concatenate([eta * b, b])
    return G, g


def det_G_closed_form(model: ExpectationModel, eta: float, beta: float) -> float:
    """det(G) = ηⁿ det(Aᵀ + βI) det(A) for n features."""
    n = model.n_features
    return float(eta**n * np.linalg.det(model.A.T + beta * np.eye(n)) * np.linalg.det(model.A))


def spectrum(model: ExpectationModel, eta: float, beta: float) -> np.ndarray:
    return np.linalg.eigvals(build_G(model, eta, beta)[0])


def is_hurwitz(eigs: np.ndarray, tol: float = HURWITZ_TOL) -> bool:
    return bool(np.all(np.real(eigs) < tol))


def _finite_real(vals: np.ndarray) -> np.ndarray:
    vals = vals[np.isfinite(vals)]
    return np.real(vals[np.abs(np.imag(vals)) <= 1e-8 * np.maximum(1.0, np.abs(vals))])


def theorem1_bounds(model: ExpectationModel, *, reduce: bool = True) -> StabilityReport:
    """Admissible (η, β) from the TDRC convergence theorem.

    Condition (i): A positive definite, any η, β ≥ 0.  Otherwise

        η > -λ_min(C⁻¹H),   β < min over z with zᵀHz < 0 of  zᵀAAᵀz / |zᵀHz|.

    The β bound is the negative eigenvalue of H⁻¹AAᵀ closest to zero,
    negated; ``beta_max_literal`` reports -λ_max(H⁻¹AAᵀ) taken over the whole
    spectrum, which is negative whenever H has a positive direction.
    Both use generalised eigenproblems rather than explicit inverses.
    """
    n_full = model.n_features
    rank, _ = covariance_rank(model)
    reduced_rank = None
    if rank < n_full:
        if not reduce:
            raise SingularCovarianceError(
                f"C has rank {rank} < {n_full}; use singular_c_bounds or reduce=True")
        model, _ = reduce_model(model)
        reduced_rank = rank
    A, C, H = model.A, model.C, model.H
    h_min = np.linalg.eigvalsh(H).min()
    pd = bool(h_min > PD_TOL)
    report = StabilityReport(A_positive_definite=pd, beta_max=float("inf"), eta_min=0.0,
                             reduced_rank=reduced_rank, n_features=n_full)
    if pd:
        report.condition = "i"
        report.beta_max = float("nan")
        report.eta_min = float("nan")
        return report
    report.condition = "ii"
    ratio = _finite_real(sla.eigvals(A @ A.T, H))  # AAᵀz = λHz
    neg = ratio[ratio < 0]
    report.beta_max = float(-neg.max()) if neg.size else float("inf")
    report.beta_max_literal = float(-ratio.max())
    ch = _finite_real(sla.eigvals(H, C))  # Hz = λCz
    report.eta_min = float(-ch.min())
    return report


def analyze(model: ExpectationModel, eta: float = 1.0, beta: float = 1.0,
            w: np.ndarray | None = None) -> StabilityReport:
    """Convergence bounds plus the G spectrum at (η, β)."""
    report = theorem1_bounds(model)
    m = reduce_model(model)[0] if report.reduced_rank is not None else model
    eigs = spectrum(m, eta, beta)
    report.G_spectrum = sorted(eigs.tolist(), key=lambda z: (z.real, z.imag))
    report.hurwitz = is_hurwitz(eigs)
    report.eta, report.beta = eta, beta
    if w is not None:
        report.fixed_point_residual = fixed_point_residual(w, model, beta)
    return report


# ------------------------------------------------------------ singular C

def _z_quantities(Z: np.ndarray, A: np.ndarray, C: np.ndarray):
    """b_c, b_a, λ_r, λ_c for unit complex vectors stored as rows of Z."""
    Zc = Z.conj()
    b_c = np.einsum("ki,ij,kj->k", Zc, C, Z).real
    AtZ = Z @ A  # rows are (Aᵀ z)ᵀ
    b_a = (np.abs(AtZ) ** 2).sum(axis=1)
    lam = np.einsum("ki,ij,kj->k", Zc, A, Z)
    return b_c, b_a, lam.real, lam.imag


def _eta_bound(b_a, lam_r, lam_c, beta):
    """η lower bound with b_c = 0; inf where β already violates βλ_r + b_a > 0."""
    denom = beta * lam_r + b_a
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (np.sqrt(np.maximum(-beta * lam_c**2 * lam_r / denom, 0.0)) - lam_r) / beta
    return np.where(denom > 0, val, np.inf)


@dataclass
class SingularBoundEstimate:
    eta_lower: float
    beta_upper: float
    n_samples: int
    n_restarts: int
    certificate: bool = False  # sampled estimate, never a proof


def singular_c_bounds(model: ExpectationModel, beta: float, *, n_samples: int = 100_000,
                      n_restarts: int = 100, seed: int = 0, tol: float = 1e-12
                      ) -> SingularBoundEstimate:
    """Monte-Carlo estimate of the singular-C bounds over complex unit z.

    Only z with λ_r = Re(z*Az) < 0 constrain the bounds.  The worst sampled
    directions are refined by local optimisation over the unit sphere.
    """
    if beta <= 0:
        raise ValueError("singular-C bounds need beta > 0")
    A, C = model.A, model.C
    n = A.shape[0]
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n_samples, n)) + 1j * rng.standard_normal((n_samples, n))
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)
    _, b_a, lam_r, lam_c = _z_quantities(Z, A, C)
    active = lam_r < -tol
    if not np.any(active):
        return SingularBoundEstimate(0.0, float("inf"), n_samples, 0)
    eta_vals = np.where(active, _eta_bound(b_a, lam_r, lam_c, beta), -np.inf)
    beta_vals = np.where(active, -b_a / np.where(active, lam_r, -1.0), np.inf)

    def unpack(v):
        z = v[:n] + 1j * v[n:]
        return (z / np.linalg.norm(z))[None, :]

    def neg_eta(v):
        _, ba, lr, lc = _z_quantities(unpack(v), A, C)
        if lr[0] >= -tol:
            return 0.0
        val = _eta_bound(ba, lr, lc, beta)[0]
        return -min(val, 1e12)

    def beta_obj(v):
        _, ba, lr, _ = _z_quantities(unpack(v), A, C)
        return -ba[0] / lr[0] if lr[0] < -tol else 1e12

    eta_best = float(eta_vals.max())
    beta_best = float(beta_vals.min())
    k = min(n_restarts, int(active.sum()))
    for idx in np.argsort(-eta_vals)[:k]:
        z0 = np.concatenate([Z[idx].real, Z[idx].imag])
        res = minimize(neg_eta, z0, method="Nelder-Mead",
                       options={"maxiter": 200 * n, "xatol": 1e-10, "fatol": 1e-12})
        eta_best = max(eta_best, -res.fun)
    for idx in np.argsort(beta_vals)[:k]:
        z0 = np.concatenate([Z[idx].real, Z[idx].imag])
        res = minimize(beta_obj, z0, method="Nelder-Mead",
                       options={"maxiter": 200 * n, "xatol": 1e-10, "fatol": 1e-12})
        beta_best = min(beta_best, res.fun)
    return SingularBoundEstimate(eta_best, beta_best, n_samples, k)


# ------------------------------------------------------------ fixed points

def fixed_point_residual(w: np.ndarray, model: ExpectationModel, beta: float) -> float:
    """‖(A + βI)ᵀ C_β⁻¹ (b - Aw)‖₂, the expected TDRC update for w at h_β."""
    C_beta = model.C_beta(beta)
    r = model.b - model.A @ np.asarray(w, dtype=float)
    h_beta = np.linalg.lstsq(C_beta, r, rcond=None)[0] if beta == 0 else np.linalg.solve(C_beta, r)
    return float(np.linalg.norm(model.A_beta(beta).T @ h_beta))


@dataclass
class FixedPointReport:
    rank_A_beta: int
    equivalent_to_td: bool
    extra_fixed_point: np.ndarray | None = None


def tdrc_fixed_points(model: ExpectationModel, beta: float, tol: float = 1e-10) -> FixedPointReport:
    """Check whether TDRC's fixed points coincide with TD's.

    When -β is an eigenvalue of A, A_β drops rank and any u ∈ null(A_βᵀ)
    yields a non-TD fixed point w = A⁻¹(b - C_β u).
    """
    A_beta = model.A_beta(beta)
    u_svd, s, vt = np.linalg.svd(A_beta.T)
    rank = int(np.sum(s > tol * s[0]))
    n = model.n_features
    if rank == n:
        return FixedPointReport(rank, True)
    u = vt[-1]
    w = np.linalg.solve(model.A, model.b - model.C_beta(beta) @ u)
    return FixedPointReport(rank, False, w)
