"""Coefficient-space representation of current patterns.

Every current pattern handled by the solvers has the form
``J_k(s) = sum_n C[n, k] * conj(h_n(s))`` over the receiver channels, so
received amplitudes, leakage and transmit power all reduce to products with
the channel Gram matrix ``H[n, m] = int h_n(s) conj(h_m(s)) ds``.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSamples, Scenario, sample_channels
from .numerics import hermitian_asymmetry


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class GramSystem:
    gram_raw: np.ndarray
    gram_norm: np.ndarray
    noise_powers: np.ndarray  # sigma^2 in receiver order
    weights: np.ndarray
    num_luts: int
    num_eves: int
    power_budget: float

    @property
    def size(self) -> int:
        return self.num_luts + self.num_eves

    @property
    def noise_std(self) -> np.ndarray:
        return np.sqrt(self.noise_powers)

    def with_power(self, power_budget: float) -> "GramSystem":
        return GramSystem(self.gram_raw, self.gram_norm, self.noise_powers,
                          self.weights, self.num_luts, self.num_eves, float(power_budget))


def _symmetrize(A):
    return 0.5 * (A + A.conj().T)


def gram_from_vectors(values: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    """Weighted inner products of the rows of ``values``: sum_j w_j h_n(j) conj(h_m(j))."""
    v = values if weights is None else values * weights
    return _symmetrize(v @ values.conj().T)


def assemble_gram(gram_raw, noise_powers, weights, num_luts, power_budget) -> GramSystem:
    gram_raw = _symmetrize(np.asarray(gram_raw, dtype=complex))
    noise_powers = np.asarray(noise_powers, dtype=float)
    if gram_raw.shape != (len(noise_powers),) * 2:
        raise DimensionError("Gram size does not match the noise vector")
    inv_std = 1.0 / np.sqrt(noise_powers)
    gram_norm = _symmetrize(inv_std[:, None] * gram_raw * inv_std[None, :])
    for A in (gram_raw, gram_norm):
        A.setflags(write=False)
    weights = np.asarray(weights, dtype=float)
    return GramSystem(
        gram_raw=gram_raw, gram_norm=gram_norm, noise_powers=noise_powers,
        weights=weights, num_luts=int(num_luts),
        num_eves=len(noise_powers) - int(num_luts), power_budget=float(power_budget),
    )


def build_gram(samples: ChannelSamples, noise_powers, weights, num_luts: int,
               power_budget: float) -> GramSystem:
    raw = gram_from_vectors(samples.values, samples.grid.weights)
    return assemble_gram(raw, noise_powers, weights, num_luts, power_budget)


def scenario_gram(scenario: Scenario, order: int | None = None) -> GramSystem:
    """Continuous-aperture Gram system of a scenario via Gauss-Legendre quadrature."""
    samples = sample_channels(scenario, order)
    return build_gram(samples, scenario.noise_powers, scenario.weights,
                      scenario.num_luts, scenario.power_budget)


@dataclass(frozen=True)
class BeamCoefficients:
    coeffs: np.ndarray  # (N, K)
    basis_normalized: bool = True

    def normalized(self, gram: GramSystem) -> "BeamCoefficients":
        """Re-express over noise-normalized channels (row n scaled by sigma_n)."""
        if self.basis_normalized:
            return self
        return BeamCoefficients(gram.noise_std[:, None] * self.coeffs, True)

    def raw(self, gram: GramSystem) -> "BeamCoefficients":
        if not self.basis_normalized:
            return self
        return BeamCoefficients(self.coeffs / gram.noise_std[:, None], False)


def user_powers(gram_matrix: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """int |J_k|^2 ds = c_k^H H c_k for each column, with H matching the basis."""
    return np.real(np.einsum("nk,nm,mk->k", coeffs.conj(), gram_matrix, coeffs))


def signal_matrix(gram_norm: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """S[n, k] = int h_n(s) J_k(s) ds for normalized channels h_n."""
    gram_norm = np.asarray(gram_norm)
    coeffs = np.asarray(coeffs)
    if coeffs.ndim != 2 or gram_norm.shape[1] != coeffs.shape[0]:
        raise DimensionError(f"cannot apply {gram_norm.shape} Gram to {coeffs.shape} coefficients")
    return gram_norm @ coeffs


def sinr_and_leakage(S: np.ndarray, num_luts: int):
    K = num_luts
    P = np.abs(S) ** 2
    desired = np.diag(P[:K, :K])
    interference = P[:K, :K].sum(axis=1) - desired
    sinr = desired / (1.0 + interference)
    leakage = P[K:, :].sum(axis=0)
    return sinr, leakage


@dataclass(frozen=True)
class MetricsReport:
    sinr: np.ndarray
    leakage: np.ndarray
    per_user_secrecy: np.ndarray
    wssr: float
    per_user_power: np.ndarray
    raw_secrecy: np.ndarray = field(repr=False)  # before clamping at zero

    @property
    def total_power(self) -> float:
        return float(self.per_user_power.sum())

    def to_dict(self) -> dict:
        return {
            "wssr": self.wssr,
            "total_power": self.total_power,
            "sinr": self.sinr.tolist(),
            "leakage": self.leakage.tolist(),
            "per_user_secrecy": self.per_user_secrecy.tolist(),
            "per_user_power": self.per_user_power.tolist(),
        }


def secrecy_rates(sinr, leakage):
    raw = np.log2((1.0 + sinr) / (1.0 + leakage))
    return np.maximum(raw, 0.0), raw


def evaluate_metrics(gram: GramSystem, beams: BeamCoefficients, weights=None) -> MetricsReport:
    weights = gram.weights if weights is None else np.asarray(weights, float)
    C = beams.normalized(gram).coeffs
    if C.shape != (gram.size, gram.num_luts):
        raise DimensionError(f"expected coefficients of shape {(gram.size, gram.num_luts)}, got {C.shape}")
    S = signal_matrix(gram.gram_norm, C)
    sinr, leakage = sinr_and_leakage(S, gram.num_luts)
    sec, raw = secrecy_rates(sinr, leakage)
    return MetricsReport(
        sinr=sinr, leakage=leakage, per_user_secrecy=sec,
        wssr=float(weights @ sec), per_user_power=user_powers(gram.gram_norm, C),
        raw_secrecy=raw,
    )


def g_gamma_bound(gram: GramSystem, power_budget: float | None = None) -> float:
    """Cauchy-Schwarz bound P * sum_q int |h_q|^2 on any user's leakage."""
    P = gram.power_budget if power_budget is None else power_budget
    K = gram.num_luts
    return float(P * np.real(np.trace(gram.gram_norm[K:, K:])))


def reconstruct_currents(channel_values: np.ndarray, beams: BeamCoefficients) -> np.ndarray:
    """Pointwise current patterns (K, nodes) from coefficients over the given channel rows.

    ``channel_values`` must be in the same normalization as ``beams``.
    """
    return beams.coeffs.T @ channel_values.conj()


def check_gram(gram: GramSystem, tol: float = 1e-10) -> None:
    for A in (gram.gram_raw, gram.gram_norm):
        if hermitian_asymmetry(A) > tol:
            raise DimensionError("Gram matrix not Hermitian")
