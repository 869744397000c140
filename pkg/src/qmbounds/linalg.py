"""Dense Hermitian / real-symmetric kernels.

Production eigendecompositions go through LAPACK (``numpy.linalg.eigh``).
A cyclic complex Jacobi solver is kept alongside as an independent reference
for cross-checking small problems.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonHermitianInput, SingularMatrix

logger = logging.getLogger(__name__)

HERMITIAN_RTOL = 1e-10


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray   # real, ascending
    vectors: np.ndarray  # columns are eigenvectors

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def _check_square(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")


def check_hermitian(a, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    a = np.asarray(a)
    _check_square(a)
    asym = max_abs(a - a.conj().T)
    if asym > rtol * max_abs(a):
        raise NonHermitianInput(f"matrix is not Hermitian (asymmetry {asym:.3e})")
    return a


def eigh(a, method: str = "lapack") -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix with ascending eigenvalues.

    ``method="jacobi"`` selects the pure-numpy cyclic Jacobi solver.
    """
    a = check_hermitian(a)
    # symmetrize exactly so tiny asymmetries do not leak into the spectrum
    a = 0.5 * (a + a.conj().T)
    if method == "lapack":
        w, v = np.linalg.eigh(a)
    elif method == "jacobi":
        w, v = jacobi_eigh(a)
    else:
        raise ValueError(f"unknown eigh method {method!r}")
    return EigenDecomposition(np.asarray(w, dtype=float), v)


def jacobi_eigh(a, tol: float = 1e-14, max_sweeps: int = 100):
    """Cyclic Jacobi diagonalization of a Hermitian matrix.

    Each 2x2 pivot block ``[[x, b], [b*, y]]`` is split into a phase
    ``diag(1, e^{-i phi})`` times a real rotation, so the same code handles
    real-symmetric and complex-Hermitian input.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(max_abs(a), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(a) ** 2) - np.sum(np.abs(np.diag(a)) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                mag = abs(b)
                if mag <= tol * scale * 1e-3:
                    continue
                phase = b / mag
                x, y = a[p, p].real, a[q, q].real
                theta = 0.5 * np.arctan2(2.0 * mag, x - y)
                c, s = np.cos(theta), np.sin(theta)
                u = np.array([[c, -s], [s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ u
                a[idx, :] = u.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ u
                a[p, q] = a[q, p] = 0.0
    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _sym(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    _check_square(a)
    return a


def min_eigenvalue(a) -> float:
    a = _sym(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(0.5 * (a + a.T))[0])


def loewner_leq(a, b, tol: float = 1e-9) -> bool:
    """True iff ``a <= b`` in the Loewner order, up to a scale-relative tolerance."""
    a, b = _sym(a), _sym(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    diff = b - a
    return min_eigenvalue(diff) >= -tol * (1.0 + max_abs(diff))


def count_positive_eigenvalues(a, tol: float = 1e-9) -> int:
    a = _sym(a)
    w = np.linalg.eigvalsh(0.5 * (a + a.T))
    return int(np.sum(w > tol * (1.0 + max_abs(a))))


def invert_spd(a, with_condition: bool = False):
    """Inverse of a symmetric positive-definite matrix.

    Raises SingularMatrix when the smallest eigenvalue is not safely positive,
    which is exactly when the matrix Cramer-Rao bound is undefined.
    """
    a = _sym(a)
    dec = eigh(a)
    w, v = dec.values, dec.vectors.real
    wmin, wmax = w[0], w[-1]
    if wmin <= 1e-12 * max_abs(a):
        raise SingularMatrix(f"matrix is singular or indefinite (min eigenvalue {wmin:.3e})")
    inv = (v / w) @ v.T
    inv = 0.5 * (inv + inv.T)
    cond = wmax / wmin
    logger.debug("invert_spd: condition estimate %.3e", cond)
    if with_condition:
        return inv, cond
    return inv
