"""Zero-forcing currents from the inverse Gram matrix plus weighted water-filling."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .gram import BeamCoefficients, GramSystem, MetricsReport, evaluate_metrics

COND_LIMIT = 1e12


class SingularGram(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class ZfSolution:
    zf_coeffs: np.ndarray  # (N, K), raw basis, column k = k-th column of H^-1
    zf_norms: np.ndarray  # int |J_k^ZF|^2 = [H^-1]_kk
    allocations: np.ndarray
    water_level: float


def zf_directions(gram_raw: np.ndarray, num_luts: int | None = None) -> np.ndarray:
    """First ``num_luts`` columns of the inverse Gram matrix.

    Solved through a Cholesky factorization of the Hermitian Gram; raises
    :class:`SingularGram` for near-collinear channels.
    """
    H = np.asarray(gram_raw, dtype=complex)
    N = len(H)
    K = N if num_luts is None else num_luts
    cond = np.linalg.cond(H)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularGram(f"Gram condition number {cond:.3g} exceeds {COND_LIMIT:g}")
    try:
        factor = scipy.linalg.cho_factor(H)
    except np.linalg.LinAlgError as exc:
        raise SingularGram(str(exc)) from exc
    return scipy.linalg.cho_solve(factor, np.eye(N, K, dtype=complex))


def water_fill(zf_norms, noise_powers, weights, power_budget: float):
    """Maximize sum_k a_k log2(1 + P_k / n_k) s.t. sum P_k <= P, n_k = sigma_k^2 zf_norm_k.

    Returns ``(allocations, mu)`` with P_k = (mu a_k - n_k)^+.
    """
    n = np.asarray(noise_powers, float) * np.asarray(zf_norms, float)
    alpha = np.asarray(weights, float)
    active = alpha > 0
    mu = 0.0
    while active.any():
        mu = (power_budget + n[active].sum()) / alpha[active].sum()
        still = active & (mu * alpha > n)
        if np.array_equal(still, active):
            break
        active = still
    alloc = np.where(active, mu * alpha - n, 0.0)
    return np.maximum(alloc, 0.0), float(mu)


def zf_solution(gram: GramSystem, weights=None, power_budget: float | None = None) -> ZfSolution:
    weights = gram.weights if weights is None else np.asarray(weights, float)
    P = gram.power_budget if power_budget is None else power_budget
    K = gram.num_luts
    V = zf_directions(gram.gram_raw, K)
    norms = np.real(np.diag(V[:K, :K]))
    alloc, mu = water_fill(norms, gram.noise_powers[:K], weights, P)
    return ZfSolution(zf_coeffs=V, zf_norms=norms, allocations=alloc, water_level=mu)


def zf_rate(sol: ZfSolution, noise_powers, weights) -> float:
    n = np.asarray(noise_powers, float) * sol.zf_norms
    return float(np.asarray(weights, float) @ np.log2(1.0 + sol.allocations / n))


def run_zf(gram: GramSystem, weights=None, power_budget: float | None = None):
    """Power-allocated ZF beams (noise-normalized basis) and their metrics."""
    weights = gram.weights if weights is None else np.asarray(weights, float)
    sol = zf_solution(gram, weights, power_budget)
    raw = sol.zf_coeffs * np.sqrt(sol.allocations / sol.zf_norms)[None, :]
    beams = BeamCoefficients(raw, basis_normalized=False).normalized(gram)
    report: MetricsReport = evaluate_metrics(gram, beams, weights)
    return beams, report
