"""Covariance, quantum Fisher and classical Fisher matrices for commuting phase generators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .hilbert import GeneratorSet, QuantumState, phase_evolve
from .linalg import eigh

SUPPORT_EPS = 1e-12
PROB_EPS = 1e-12
POVM_TOL = 1e-10


def _check(state: QuantumState, gens: GeneratorSet) -> None:
    if state.basis.dim != gens.dim:
        raise DimensionMismatch(f"state dimension {state.basis.dim} != generator dimension {gens.dim}")


def mean_values(state: QuantumState, gens: GeneratorSet) -> np.ndarray:
    _check(state, gens)
    return gens.h @ state.populations


def fluctuation_matrix(state: QuantumState, gens: GeneratorSet) -> np.ndarray:
    """Symmetrized second moments 1/2 <{H_k, H_l}>; for diagonal H_k this is <H_k H_l>."""
    _check(state, gens)
    p = state.populations
    g = (gens.h * p) @ gens.h.T
    return 0.5 * (g + g.T)


def covariance_matrix(state: QuantumState, gens: GeneratorSet) -> np.ndarray:
    m = mean_values(state, gens)
    return fluctuation_matrix(state, gens) - np.outer(m, m)


def number_moments(state: QuantumState, gens: GeneratorSet):
    """First moments <N_k> and second moments <N_k N_l>."""
    _check(state, gens)
    p = state.populations
    first = gens.n @ p
    second = (gens.n * p) @ gens.n.T
    return first, 0.5 * (second + second.T)


# --------------------------------------------------------------------------
# spectral data


def low_rank_factor(state: QuantumState, eps: float = SUPPORT_EPS) -> np.ndarray:
    """Matrix K with rho = K K^dagger, built from the state's own structure where possible."""
    if state.vector is not None:
        return state.vector[:, None]
    if state.density is not None:
        dec = eigh(state.density)
        keep = dec.values > eps
        return dec.vectors[:, keep] * np.sqrt(dec.values[keep])
    blocks = []
    for p, fs in state.terms:
        if p <= 0:
            continue
        k = np.ones((1, 1), dtype=complex)
        for f in fs:
            k = np.kron(k, low_rank_factor(f, eps))
        blocks.append(np.sqrt(p) * k)
    return np.hstack(blocks)


def support_decomposition(state: QuantumState, eps: float = SUPPORT_EPS):
    """Eigenvalues p and eigenvectors U (columns) of rho restricted to its support."""
    k = low_rank_factor(state, eps)
    u, s, _ = np.linalg.svd(k, full_matrices=False)
    p = s ** 2
    keep = p > eps
    return p[keep], u[:, keep]


# --------------------------------------------------------------------------
# quantum Fisher matrix


def qfi_matrix(state: QuantumState, gens: GeneratorSet, method: str = "auto") -> np.ndarray:
    """Quantum Fisher matrix F_Q[rho, H].

    ``method="spectral"`` always evaluates
    ``2 sum_ab (p_a - p_b)^2/(p_a + p_b) Re(<a|H_k|b><b|H_l|a>)`` over the
    eigenbasis of rho, split into support-support and support-kernel pieces so
    only the support eigenvectors are needed. ``"auto"`` uses 4 Cov for pure
    states, which is the spectral formula's exact value there.
    """
    _check(state, gens)
    if method not in ("auto", "spectral"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto" and state.is_pure:
        return 4.0 * covariance_matrix(state, gens)
    p, u = support_decomposition(state)
    M = gens.M
    # A_k restricted to support x support, and H_k U_S for the kernel part
    hu = [gens.h[k][:, None] * u for k in range(M)]
    a = [u.conj().T @ hu[k] for k in range(M)]
    ps = p[:, None] + p[None, :]
    pd = p[:, None] - p[None, :]
    w = 2.0 * pd ** 2 / ps
    F = np.zeros((M, M))
    for k in range(M):
        for l in range(k, M):
            inner = np.sum(w * np.real(a[k] * a[l].T))
            # sum over kernel vectors b: <a|H_k Q H_l|a> with Q = 1 - U U^dagger
            qhl = hu[l] - u @ a[l]
            cross = np.real(np.sum(hu[k].conj() * qhl, axis=0))
            F[k, l] = F[l, k] = inner + 4.0 * np.dot(p, cross)
    return 0.5 * (F + F.T)


def sld_operators(state: QuantumState, gens: GeneratorSet, eps: float = SUPPORT_EPS) -> list:
    """Symmetric logarithmic derivatives L_k with d rho/d theta_k = (L_k rho + rho L_k)/2."""
    _check(state, gens)
    dec = eigh(state.dm)
    p, u = dec.values, dec.vectors
    ps = p[:, None] + p[None, :]
    coef = np.where(ps > eps, -2j * (p[None, :] - p[:, None]) / np.where(ps > eps, ps, 1.0), 0.0)
    out = []
    for k in range(gens.M):
        a = u.conj().T @ (gens.h[k][:, None] * u)
        lk = u @ (coef * a) @ u.conj().T
        out.append(0.5 * (lk + lk.conj().T))
    return out


def derivative(state: QuantumState, gens: GeneratorSet, k: int) -> np.ndarray:
    """d rho / d theta_k = -i [H_k, rho]."""
    h = gens.h[k]
    return -1j * (h[:, None] - h[None, :]) * state.dm


# --------------------------------------------------------------------------
# measurements


@dataclass(frozen=True, eq=False)
class Povm:
    """Positive operator-valued measure on the state's basis."""

    elements: tuple

    def __post_init__(self):
        els = tuple(np.asarray(e, dtype=complex) for e in self.elements)
        if not els:
            raise ValueError("a POVM needs at least one element")
        dim = els[0].shape[0]
        for e in els:
            if e.shape != (dim, dim):
                raise DimensionMismatch("POVM elements must share one square shape")
            if np.max(np.abs(e - e.conj().T)) > POVM_TOL:
                raise ValueError("POVM element is not Hermitian")
            if np.linalg.eigvalsh(0.5 * (e + e.conj().T))[0] < -POVM_TOL:
                raise ValueError("POVM element is not positive semidefinite")
        if np.max(np.abs(sum(els) - np.eye(dim))) > POVM_TOL:
            raise ValueError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", els)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self) -> int:
        return len(self.elements)

    @classmethod
    def projective(cls, vectors, complete: bool = True) -> "Povm":
        """Projectors onto orthonormal vectors, plus the complement projector if needed."""
        vs = [np.asarray(v, dtype=complex).reshape(-1) for v in vectors]
        els = [np.outer(v, v.conj()) for v in vs]
        rest = np.eye(vs[0].shape[0]) - sum(els)
        if complete and np.max(np.abs(rest)) > POVM_TOL:
            els.append(rest)
        return cls(tuple(els))

    @classmethod
    def trivial(cls, dim: int) -> "Povm":
        return cls((np.eye(dim, dtype=complex),))

    @classmethod
    def computational(cls, dim: int) -> "Povm":
        return cls.projective(np.eye(dim))


def _povm_check(povm: Povm, gens: GeneratorSet) -> None:
    if povm.dim != gens.dim:
        raise DimensionMismatch(f"POVM dimension {povm.dim} != generator dimension {gens.dim}")


def probabilities(state: QuantumState, gens: GeneratorSet, povm: Povm, theta) -> np.ndarray:
    """p(x|theta) = Tr[Pi_x rho(theta)], clipped at 0 and renormalized."""
    _check(state, gens)
    _povm_check(povm, gens)
    rho = phase_evolve(state, gens, theta).dm
    p = np.array([np.real(np.sum(e.T * rho)) for e in povm.elements])
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def classical_fisher_matrix(state: QuantumState, gens: GeneratorSet, povm: Povm, theta) -> np.ndarray:
    """Classical Fisher matrix with exact derivatives from the commutator form."""
    _check(state, gens)
    _povm_check(povm, gens)
    evolved = phase_evolve(state, gens, theta)
    rho = evolved.dm
    M = gens.M
    drho = [derivative(evolved, gens, k) for k in range(M)]
    F = np.zeros((M, M))
    for e in povm.elements:
        et = e.T
        p = np.real(np.sum(et * rho))
        if p < PROB_EPS:
            continue
        dp = np.array([np.real(np.sum(et * d)) for d in drho])
        F += np.outer(dp, dp) / p
    return 0.5 * (F + F.T)


def classical_fisher_fd(state: QuantumState, gens: GeneratorSet, povm: Povm, theta,
                        step: float = 1e-5) -> np.ndarray:
    """Central finite-difference classical Fisher matrix; a cross-check for the exact version."""
    theta = np.asarray(theta, dtype=float)
    p0 = probabilities(state, gens, povm, theta)
    M = gens.M
    dp = np.zeros((M, len(p0)))
    for k in range(M):
        e = np.zeros(M)
        e[k] = step
        dp[k] = (probabilities(state, gens, povm, theta + e) - probabilities(state, gens, povm, theta - e)) / (2 * step)
    mask = p0 >= PROB_EPS
    return (dp[:, mask] / p0[mask]) @ dp[:, mask].T
