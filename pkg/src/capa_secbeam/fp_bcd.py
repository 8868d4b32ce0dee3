"""Fractional-programming block coordinate descent for WSSR maximization.

All updates run on the noise-normalized Gram matrix. The current update
solves the stationarity condition

    lambda J_k + sum_n phi_n^* <phi_n, J_k> = a_k phi_k^*

whose solution lies in the span of the scaled conjugate channels
``phi_n^* = s_n h_n^*``, so each user only needs N x N linear algebra.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .gram import (BeamCoefficients, GramSystem, evaluate_metrics, g_gamma_bound,
                   signal_matrix, sinr_and_leakage)
from .numerics import HermitianEigen, NumericsError, bisect_decreasing, hermitian_eig

log = logging.getLogger(__name__)


class AllUsersOff(RuntimeError):
    pass


@dataclass(frozen=True)
class FpConfig:
    max_iters: int = 100
    wssr_tol: float = 1e-4
    lambda_rel_tol: float = 1e-10
    eta_floor: float = 1e-15
    lambda_min: float = 1e-12
    init: str = "best"

    def __post_init__(self):
        if self.init not in ("mrt", "zf", "best"):
            raise ValueError(f"unknown FP start {self.init!r}")
        for name in ("max_iters", "wssr_tol", "lambda_rel_tol", "eta_floor", "lambda_min"):
            if getattr(self, name) <= 0:
                raise ValueError(f"FpConfig.{name} must be positive")

    @classmethod
    def from_dict(cls, data: dict | None) -> "FpConfig":
        return cls(**(data or {}))


@dataclass
class FpState:
    """Auxiliary variables of the BCD loop.

    ``b`` is the indicator after the latest update; ``b_used`` is the one the
    latest current update was solved with (needed to re-check stationarity).
    """

    b: np.ndarray
    eps: np.ndarray
    beta: np.ndarray
    eta: np.ndarray
    lagrange_lambda: float
    coeffs: BeamCoefficients
    g_gamma: float
    wssr_trace: list = field(default_factory=list)
    power_trace: list = field(default_factory=list)
    b_used: np.ndarray | None = None
    iterations: int = 0
    converged: bool = False
    start: str = "given"


def init_mrt(gram: GramSystem, power_budget: float | None = None) -> BeamCoefficients:
    """Per-user MRT with the budget split equally across users."""
    P = gram.power_budget if power_budget is None else power_budget
    K = gram.num_luts
    diag = np.real(np.diag(gram.gram_norm))[:K]
    C = np.zeros((gram.size, K), dtype=complex)
    C[np.arange(K), np.arange(K)] = np.sqrt(P / K) / np.sqrt(diag)
    return BeamCoefficients(C, basis_normalized=True)


def update_b(sinr, leakage, weights) -> np.ndarray:
    return np.where(np.asarray(sinr) >= np.asarray(leakage), np.asarray(weights, float), 0.0)


def update_epsilon(gram_norm, coeffs, num_luts) -> np.ndarray:
    sinr, _ = sinr_and_leakage(signal_matrix(gram_norm, coeffs), num_luts)
    return sinr


def update_beta(leakage, g_gamma: float) -> np.ndarray:
    leakage = np.asarray(leakage, float)
    # rounding can push leakage a hair above the bound
    return np.maximum((g_gamma - leakage) / (1.0 + leakage), 0.0)


def update_eta(gram_norm, coeffs, num_luts) -> np.ndarray:
    K = num_luts
    S = signal_matrix(gram_norm, coeffs)[:K, :K]
    total = 1.0 + np.sum(np.abs(S) ** 2, axis=1)
    return np.diag(S) / total


def phi_scales(b, eps, eta, beta, g_gamma, k, num_eves) -> np.ndarray:
    """Real scale vector s with Phi_k = s s^T * H (elementwise).

    The eavesdropper rows carry b_k so that the current update minimizes
    exactly the b-weighted surrogate.
    """
    lut = np.sqrt(b * (1.0 + eps) * np.abs(eta) ** 2)
    eve = np.full(num_eves, np.sqrt(b[k] * (1.0 + beta[k]) / (1.0 + g_gamma)))
    return np.concatenate([lut, eve])


def build_phi(gram_norm, scales) -> np.ndarray:
    s = np.asarray(scales, float)
    return np.outer(s, s) * gram_norm


def power_of_lambda(phi_eig: HermitianEigen, k: int, a_mag: float, lam: float) -> float:
    """Transmit power of user k at multiplier ``lam`` from the eigendecomposition."""
    ev = np.clip(phi_eig.eigenvalues, 0.0, None)
    weights = np.abs(phi_eig.eigenvectors[k, :]) ** 2
    return float(a_mag**2 * np.sum(weights * ev / (lam + ev) ** 2))


def w_vector(phi_eig: HermitianEigen, k: int, lam: float) -> np.ndarray:
    """w = e_k - (lam I + Phi)^{-1} Phi e_k, equal to lam (lam I + Phi)^{-1} e_k."""
    V = phi_eig.eigenvectors
    ev = np.clip(phi_eig.eigenvalues, 0.0, None)
    return V @ ((lam / (lam + ev)) * V[k, :].conj())


def direct_power(phi: np.ndarray, k: int, a_mag: float, lam: float) -> float:
    """|a/lam|^2 w^H Phi w with w from a linear solve; independent of eigenvalues."""
    N = len(phi)
    e = np.zeros(N)
    e[k] = 1.0
    w = e - np.linalg.solve(lam * np.eye(N) + phi, phi[:, k])
    return float(np.real((a_mag / lam) ** 2 * (w.conj() @ phi @ w)))


@dataclass(frozen=True)
class _UserSystem:
    k: int
    a: complex
    scales: np.ndarray
    gram_norm: np.ndarray

    @cached_property
    def phi(self) -> np.ndarray:
        return build_phi(self.gram_norm, self.scales)

    @cached_property
    def eig(self) -> HermitianEigen:
        return hermitian_eig(self.phi)


def _user_systems(gram: GramSystem, b, eps, beta, eta, g_gamma, eta_floor):
    K, Q = gram.num_luts, gram.num_eves
    systems = []
    for k in range(K):
        if b[k] <= 0 or abs(eta[k]) <= eta_floor:
            continue
        s = phi_scales(b, eps, eta, beta, g_gamma, k, Q)
        a = np.sqrt(b[k] * (1.0 + eps[k])) * eta[k] / abs(eta[k])
        systems.append(_UserSystem(k, a, s, gram.gram_norm))
    return systems


def scaled_currents(systems, lam: float) -> np.ndarray:
    """Coefficient columns for all active users at multiplier ``lam``, shape (users, N).

    Uses (a/lam) w o s = (a/s_k) (H + lam S^-2)^{-1} e_k. The eigen route
    loses accuracy when the scale vector is strongly graded (a user close to
    shut-off has s_k ~ 1e-9 and Phi's small eigenvalues are then pure
    rounding noise); the scaled system keeps the conditioning of H. Rows with
    s_n = 0 drop out and get a zero coefficient.
    """
    H = systems[0].gram_norm
    N = len(H)
    S = np.array([u.scales for u in systems])
    with np.errstate(divide="ignore", over="ignore"):
        d = lam / S**2
    keep = np.isfinite(d)
    d = np.where(keep, d, 0.0)
    idx = np.arange(N)
    M = np.where(keep[:, :, None] & keep[:, None, :], H[None], 0.0)
    M[:, idx, idx] += d + ~keep
    rhs = np.zeros((len(systems), N), complex)
    for j, u in enumerate(systems):
        rhs[j, u.k] = u.a / u.scales[u.k]
    X = np.linalg.solve(M, rhs[:, :, None])[:, :, 0]
    if not np.all(np.isfinite(X)):
        raise NumericsError("singular solve in current update")
    return X


def _total_power(systems, lam):
    X = scaled_currents(systems, lam)
    H = systems[0].gram_norm
    return float(np.sum(np.real(np.einsum("jn,nm,jm->j", X.conj(), H, X))))


def solve_lambda(systems, power_budget: float, config: FpConfig) -> float:
    """Multiplier with total power equal to the budget, or the floor if the budget is slack."""
    if not systems:
        raise AllUsersOff("no user has an active beam")
    f = lambda lam: _total_power(systems, lam)
    lo = config.lambda_min
    if f(lo) <= power_budget:
        return lo
    hi = 1.0
    for _ in range(200):
        if f(hi) < power_budget:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NumericsError("could not bracket the Lagrange multiplier")
    return bisect_decreasing(f, power_budget, lo, hi, rel_tol=config.lambda_rel_tol)


def update_currents(systems, num_receivers: int, num_luts: int, lam: float) -> BeamCoefficients:
    C = np.zeros((num_receivers, num_luts), dtype=complex)
    if systems:
        X = scaled_currents(systems, lam)
        for j, u in enumerate(systems):
            C[:, u.k] = X[j]
    return BeamCoefficients(C, basis_normalized=True)


def run_bcd(gram: GramSystem, weights=None, power_budget: float | None = None,
            config: FpConfig | None = None, init: BeamCoefficients | None = None):
    """Run the FP-based BCD loop.

    The starting point follows ``config.init`` unless ``init`` is given:
    "mrt" (equal-power MRT), "zf" (water-filled zero-forcing) or "best"
    (run from both and keep the higher final WSSR). Every user starts
    active, whatever its initial secrecy rate.

    Returns the final coefficients (noise-normalized basis) and the state.
    """
    config = config or FpConfig()
    weights = gram.weights if weights is None else np.asarray(weights, float)
    P = gram.power_budget if power_budget is None else float(power_budget)
    gram = gram.with_power(P)
    if init is not None:
        return _bcd_from(gram, weights, P, config, init.normalized(gram))
    starts = {"mrt": ["mrt"], "zf": ["zf"], "best": ["mrt", "zf"]}[config.init]
    best = None
    for name in starts:
        beams = _starting_point(name, gram, weights, P)
        if beams is None:
            continue
        result = _bcd_from(gram, weights, P, config, beams)
        result[1].start = name
        if best is None or result[1].wssr_trace[-1] > best[1].wssr_trace[-1]:
            best = result
    return best


def _starting_point(name, gram, weights, P):
    if name == "mrt":
        return init_mrt(gram, P)
    from .zf import SingularGram, run_zf

    try:
        beams, _ = run_zf(gram, weights, P)
    except SingularGram:
        log.info("ZF start unavailable: singular Gram")
        return None
    return beams


def _bcd_from(gram, weights, P, config, beams):
    K, N = gram.num_luts, gram.size
    G = g_gamma_bound(gram, P)
    m = evaluate_metrics(gram, beams, weights)
    state = FpState(
        b=np.asarray(weights, float).copy(), eps=m.sinr.copy(),
        beta=update_beta(m.leakage, G), eta=update_eta(gram.gram_norm, beams.coeffs, K),
        lagrange_lambda=0.0, coeffs=beams, g_gamma=G, wssr_trace=[m.wssr],
        power_trace=[m.total_power],
    )

    for it in range(config.max_iters):
        C = state.coeffs.coeffs
        state.eps = update_epsilon(gram.gram_norm, C, K)
        _, leakage = sinr_and_leakage(signal_matrix(gram.gram_norm, C), K)
        state.beta = update_beta(leakage, G)
        state.eta = update_eta(gram.gram_norm, C, K)

        systems = _user_systems(gram, state.b, state.eps, state.beta, state.eta, G,
                                config.eta_floor)
        state.b_used = state.b.copy()
        if not systems:
            log.warning("all users switched off after %d iterations", it)
            state.coeffs = BeamCoefficients(np.zeros((N, K), dtype=complex))
            state.wssr_trace.append(0.0)
            state.power_trace.append(0.0)
            state.iterations = it + 1
            break
        lam = solve_lambda(systems, P, config)
        state.lagrange_lambda = lam
        state.coeffs = update_currents(systems, N, K, lam)

        m = evaluate_metrics(gram, state.coeffs, weights)
        state.b = update_b(m.sinr, m.leakage, weights)
        state.wssr_trace.append(m.wssr)
        state.power_trace.append(m.total_power)
        state.iterations = it + 1
        if state.wssr_trace[-1] - state.wssr_trace[-2] < config.wssr_tol:
            state.converged = True
            break
    if not np.any(state.b > 0):
        # nobody has a positive secrecy rate; radiating anything only leaks
        state.coeffs = BeamCoefficients(np.zeros((N, K), dtype=complex))
    return state.coeffs, state


def surrogate_objective(gram: GramSystem, coeffs, b, eps, beta, eta, g_gamma) -> float:
    """Quadratic-transform surrogate (natural log) at the given auxiliary point."""
    K = gram.num_luts
    S = signal_matrix(gram.gram_norm, coeffs)
    _, leakage = sinr_and_leakage(S, K)
    Sk = np.abs(S[:K, :K]) ** 2
    desired = np.diag(S[:K, :K])
    quad = 2 * np.real(eta.conj() * desired) - np.abs(eta) ** 2 * (1 + Sk.sum(axis=1))
    terms = (np.log1p(eps) - eps + (1 + eps) * quad
             + np.log1p(beta) - beta + (1 + beta) * (g_gamma - leakage) / (1 + g_gamma))
    return float(np.sum(b * terms))


def fractional_objective(gram: GramSystem, coeffs, b, eps, beta, g_gamma) -> float:
    """Surrogate with the fractional term kept (before the quadratic transform)."""
    K = gram.num_luts
    S = signal_matrix(gram.gram_norm, coeffs)
    _, leakage = sinr_and_leakage(S, K)
    Sk = np.abs(S[:K, :K]) ** 2
    frac = np.diag(Sk) / (1 + Sk.sum(axis=1))
    terms = (np.log1p(eps) - eps + (1 + eps) * frac
             + np.log1p(beta) - beta + (1 + beta) * (g_gamma - leakage) / (1 + g_gamma))
    return float(np.sum(b * terms))


# --- grid-level kernel actions, used to verify the closed-form inversion ---

def apply_kernel(phi_values: np.ndarray, quad_weights: np.ndarray, lam: float,
                 f: np.ndarray) -> np.ndarray:
    """(W f)(s) = lam f(s) + sum_n conj(phi_n(s)) int phi_n f ds on a quadrature grid."""
    proj = (phi_values * quad_weights) @ f
    return lam * f + phi_values.conj().T @ proj


def apply_inverse_kernel(phi_values: np.ndarray, quad_weights: np.ndarray, lam: float,
                         f: np.ndarray) -> np.ndarray:
    """Closed-form inverse of :func:`apply_kernel` (identity minus low rank)."""
    Phi = (phi_values * quad_weights) @ phi_values.conj().T
    proj = (phi_values * quad_weights) @ f
    coef = np.linalg.solve(lam * np.eye(len(Phi)) + Phi, proj)
    return (f - phi_values.conj().T @ coef) / lam


def kkt_residual(phi_values: np.ndarray, quad_weights: np.ndarray, lam: float,
                 a: complex, k: int, current: np.ndarray) -> float:
    """Relative pointwise residual of the stationarity condition for one user.

    ``phi_values`` are the scaled channels phi_n(s) on the grid and ``current``
    is J_k reconstructed on the same grid.
    """
    lhs = apply_kernel(phi_values, quad_weights, lam, current)
    rhs = a * phi_values[k].conj()
    scale = max(np.max(np.abs(lhs)), np.max(np.abs(rhs)), np.max(np.abs(lam * current)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(lhs - rhs)) / scale)
