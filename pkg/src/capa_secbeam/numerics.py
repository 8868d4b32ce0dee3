"""Shared numerical primitives: tensor Gauss-Legendre grids, a checked
Hermitian eigendecomposition, and a bracketed root search for monotone
scalar equations."""

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.optimize


class NumericsError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray  # (M*M, 2) points on the aperture plane [m]
    weights: np.ndarray  # (M*M,) [m^2]
    order: int

    @property
    def area(self) -> float:
        return float(self.weights.sum())

    def points3d(self) -> np.ndarray:
        """Nodes lifted to z = 0."""
        return np.column_stack([self.nodes, np.zeros(len(self.nodes))])

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate sampled values along the last axis."""
        return values @ self.weights


def gauss_legendre_grid(half_len_x: float, half_len_y: float, order: int) -> QuadratureGrid:
    """Tensor-product Gauss-Legendre rule on [-hx, hx] x [-hy, hy].

    Nodes are ordered with the x index varying slowest.
    """
    if order < 1:
        raise NumericsError(f"invalid quadrature order {order}")
    if half_len_x <= 0 or half_len_y <= 0:
        raise NumericsError("half-lengths must be positive")
    t, w = np.polynomial.legendre.leggauss(order)
    x, wx = half_len_x * t, half_len_x * w
    y, wy = half_len_y * t, half_len_y * w
    X, Y = np.meshgrid(x, y, indexing="ij")
    W = np.outer(wx, wy)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    return QuadratureGrid(nodes=nodes, weights=W.ravel(), order=order)


@dataclass(frozen=True)
class HermitianEigen:
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # columns; A = V diag(w) V^H

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def hermitian_asymmetry(matrix: np.ndarray) -> float:
    scale = np.linalg.norm(matrix)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(matrix - matrix.conj().T) / scale)


def hermitian_eig(matrix: np.ndarray, tol: float = 1e-10) -> HermitianEigen:
    A = np.asarray(matrix, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NumericsError(f"expected a square matrix, got shape {A.shape}")
    if hermitian_asymmetry(A) > tol:
        raise NumericsError("matrix is not Hermitian within tolerance")
    w, V = np.linalg.eigh(0.5 * (A + A.conj().T))
    return HermitianEigen(eigenvalues=w, eigenvectors=V)


def bisect_decreasing(
    f: Callable[[float], float],
    target: float,
    lo: float,
    hi: float,
    rel_tol: float = 1e-10,
    max_iter: int = 200,
) -> float:
    """Solve f(x) = target for a non-increasing f bracketed by [lo, hi].

    Brent's bracketing method does the work (on log x when the bracket is
    positive, which suits Lagrange multipliers spanning decades). If its
    answer misses the residual tolerance, plain bisection takes over.
    """
    f_lo, f_hi = f(lo), f(hi)
    if not (f_lo >= target >= f_hi):
        raise NumericsError(
            f"bracket failure: target {target!r} outside [{f_hi!r}, {f_lo!r}]"
        )
    tol = rel_tol * max(abs(target), 1e-300)
    if abs(f_lo - target) <= tol:
        return lo
    if abs(f_hi - target) <= tol:
        return hi
    log_scale = lo > 0
    g = (lambda u: f(np.exp(u)) - target) if log_scale else (lambda x: f(x) - target)
    a, b = (np.log(lo), np.log(hi)) if log_scale else (lo, hi)
    try:
        root = scipy.optimize.brentq(g, a, b, xtol=1e-14, maxiter=max_iter)
        x = float(np.exp(root)) if log_scale else float(root)
        if abs(f(x) - target) <= tol:
            return x
    except (RuntimeError, ValueError):
        pass
    geometric = lo > 0 and hi / lo > 4.0
    for _ in range(max_iter):
        mid = np.sqrt(lo * hi) if geometric else 0.5 * (lo + hi)
        if geometric and hi / lo < 4.0:
            geometric = False
        f_mid = f(mid)
        if abs(f_mid - target) <= tol:
            return float(mid)
        if f_mid > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * abs(hi):
            break
    return float(0.5 * (lo + hi))
