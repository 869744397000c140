"""Weighted figures of merit Tr{W Sigma} through orthogonal transformations of the generators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import BoundReport
from .errors import DimensionMismatch, NotOrthogonal, SingularTransformedFisher
from .fisher import qfi_matrix
from .hilbert import Basis, GeneratorSet, ModeConfig, QuantumState
from .linalg import check_hermitian, invert_spd, max_abs

ORTHO_TOL = 1e-8
WEIGHT_EPS = 1e-12


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Make the first nonzero component of every column positive."""
    out = vectors.copy()
    for c in range(out.shape[1]):
        col = out[:, c]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            out[:, c] = -col
    return out


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Positive semidefinite weight W = O D O^T with D = diag(w)."""

    W: np.ndarray
    O: np.ndarray
    w: np.ndarray

    @classmethod
    def from_matrix(cls, W) -> "WeightMatrix":
        W = np.asarray(W, dtype=float)
        check_hermitian(W)
        W = 0.5 * (W + W.T)
        M = W.shape[0]
        if max_abs(W - np.diag(np.diag(W))) == 0.0:
            # diagonal weights: keep the modes themselves, so degenerate W stays mode-aligned
            order = np.argsort(np.diag(W), kind="stable")
            O = np.eye(M)[:, order]
            w = np.diag(W)[order]
        else:
            w, O = np.linalg.eigh(W)
            O = _fix_signs(O)
        scale = 1.0 + max_abs(W)
        if w[0] < -1e-9 * scale:
            raise ValueError("weight matrix must be positive semidefinite")
        w = np.where(np.abs(w) <= WEIGHT_EPS * scale, 0.0, w)
        return cls(W, O, w)

    @classmethod
    def rank_one(cls, n) -> "WeightMatrix":
        n = np.asarray(n, dtype=float)
        return cls.from_matrix(np.outer(n, n))

    @property
    def M(self) -> int:
        return self.W.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.O * self.w) @ self.O.T


def check_orthogonal(O, tol: float = ORTHO_TOL) -> np.ndarray:
    O = np.asarray(O, dtype=float)
    if O.ndim != 2 or O.shape[0] != O.shape[1]:
        raise DimensionMismatch(f"O must be square, got {O.shape}")
    err = max_abs(O.T @ O - np.eye(O.shape[0]))
    if err > tol:
        raise NotOrthogonal(f"||O^T O - I||_max = {err:.3e}")
    return O


def transform_generators(gens: GeneratorSet, O) -> GeneratorSet:
    """H'_k = sum_l O_kl H_l, so that H.theta = H'.theta' with theta' = O theta."""
    O = check_orthogonal(O)
    if O.shape[0] != gens.M:
        raise DimensionMismatch(f"O is {O.shape[0]}x{O.shape[0]}, generators have M={gens.M}")
    return GeneratorSet(gens.config, gens.basis, O @ gens.h, gens.n.copy())


def verify_qfi_transform(state: QuantumState, gens: GeneratorSet, O, tol: float = 1e-8) -> BoundReport:
    """Residual of F_Q[rho, O H] = O F_Q[rho, H] O^T."""
    O = check_orthogonal(O)
    F = qfi_matrix(state, gens)
    Ft = qfi_matrix(state, transform_generators(gens, O))
    predicted = O @ F @ O.T
    residual = max_abs(Ft - predicted)
    scale = 1.0 + max_abs(predicted)
    ok = residual <= tol * scale
    return BoundReport("qfi_transform", -residual, ok, ok, predicted, Ft, "residual",
                       {"residual": residual})


def transformed_spreads(config: ModeConfig, counts, O) -> np.ndarray:
    """delta Lambda'_k = max - min eigenvalue of H'_k on the fixed-count sector."""
    O = check_orthogonal(O)
    basis = Basis.fock(config, counts)
    h, _ = basis.diagonals
    ht = O @ h
    return ht.max(axis=1) - ht.min(axis=1)


@dataclass(frozen=True)
class WeightedBound:
    sigma_max: np.ndarray
    spreads: np.ndarray
    weights: np.ndarray
    O: np.ndarray
    description: str

    @property
    def value(self) -> float:
        """Tr{W Sigma^W_max} per repetition."""
        w = self.weights
        mask = w > 0
        return float(np.sum(w[mask] / self.spreads[mask] ** 2))


def weighted_bound(W, config: ModeConfig, counts) -> WeightedBound:
    """Sigma^W_max = sum over weighted transformed modes of o_k o_k^T / (delta Lambda'_k)^2."""
    wm = W if isinstance(W, WeightMatrix) else WeightMatrix.from_matrix(W)
    if wm.M != config.M:
        raise DimensionMismatch("weight matrix size must equal the number of modes")
    spreads = transformed_spreads(config, counts, wm.O.T)
    sigma = np.zeros((config.M, config.M))
    parts = []
    for k in range(config.M):
        if wm.w[k] <= 0:
            continue
        if spreads[k] <= 1e-12:
            raise SingularTransformedFisher(f"transformed mode {k} has zero spectral spread")
        o = wm.O[:, k]
        sigma += np.outer(o, o) / spreads[k] ** 2
        coeffs = ", ".join(f"{c:.6g}" for c in o)
        parts.append(f"H'=({coeffs}).H: (|max> + |min>)/sqrt(2), spread {spreads[k]:.6g}")
    desc = "; ".join(parts) if parts else "no weighted directions"
    return WeightedBound(sigma, spreads, wm.w.copy(), wm.O.copy(), desc)


def trace_weighted_crb(W, F) -> float:
    """Tr{W F^{-1}} evaluated as sum_k w_k o_k^T F^{-1} o_k over the eigenpairs of W."""
    wm = W if isinstance(W, WeightMatrix) else WeightMatrix.from_matrix(W)
    Finv = invert_spd(F)
    return float(sum(wm.w[k] * wm.O[:, k] @ Finv @ wm.O[:, k] for k in range(wm.M) if wm.w[k] > 0))


def random_orthogonal(rng: np.random.Generator, M: int) -> np.ndarray:
    """Haar-random orthogonal matrix via QR with sign correction."""
    q, r = np.linalg.qr(rng.standard_normal((M, M)))
    return q * np.sign(np.diag(r))
