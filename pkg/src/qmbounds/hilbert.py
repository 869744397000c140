"""Hilbert-space representations of an M-mode interferometer.

A basis is a tensor product of *registers*:

* ``Particle`` -- one distinguishable particle that may occupy any sublevel of
  any mode (dimension ``sum_k d_k``);
* ``FockSector`` -- bosons with a fixed number of particles in each mode,
  labelled by sublevel occupations;
* ``ModeLocal`` -- a single mode holding 0..nmax particles.

Every collective generator ``H_k`` and number operator ``N_k`` is diagonal in
these product bases, so generator sets are stored as diagonals of shape (M, dim).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from .errors import (
    BasisUnsupported,
    DimensionMismatch,
    DimensionOverflow,
    NoStructure,
)

DEFAULT_DIM_CAP = 5000
NORM_TOL = 1e-10


# --------------------------------------------------------------------------
# mode configuration


@dataclass(frozen=True)
class ModeConfig:
    """Sublevel spectra ``lambda_kj`` of the single-particle Hamiltonian per mode."""

    spectra: tuple

    def __post_init__(self):
        spectra = tuple(tuple(float(x) for x in s) for s in self.spectra)
        if not spectra:
            raise ValueError("need at least one mode")
        for k, s in enumerate(spectra):
            if len(s) < 2:
                raise ValueError(f"mode {k} needs at least two sublevels")
            if not all(math.isfinite(x) for x in s):
                raise ValueError(f"mode {k} has a non-finite eigenvalue")
        object.__setattr__(self, "spectra", spectra)

    @classmethod
    def uniform(cls, modes: int, spectrum: Sequence[float] = (0.5, -0.5)) -> "ModeConfig":
        return cls(tuple(tuple(spectrum) for _ in range(modes)))

    @property
    def M(self) -> int:
        return len(self.spectra)

    @property
    def dims(self) -> tuple:
        return tuple(len(s) for s in self.spectra)

    @property
    def lambda_plus(self) -> np.ndarray:
        return np.array([max(s) for s in self.spectra])

    @property
    def lambda_minus(self) -> np.ndarray:
        return np.array([min(s) for s in self.spectra])

    @property
    def lambda_max(self) -> np.ndarray:
        return np.array([max(abs(x) for x in s) for s in self.spectra])

    @property
    def spread(self) -> np.ndarray:
        return self.lambda_plus - self.lambda_minus

    @property
    def balanced(self) -> bool:
        return bool(np.allclose(self.lambda_plus, -self.lambda_minus, rtol=0, atol=1e-12))

    def plus_index(self, k: int) -> int:
        s = self.spectra[k]
        return s.index(max(s))

    def minus_index(self, k: int) -> int:
        s = self.spectra[k]
        return s.index(min(s))

    @property
    def offsets(self) -> tuple:
        """Start of mode k inside the single-particle space."""
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.dims)[:-1]]))

    def to_dict(self) -> dict:
        return {"modes": self.M, "spectra": [list(s) for s in self.spectra]}

    @classmethod
    def from_dict(cls, d: dict) -> "ModeConfig":
        if "spectra" in d and d["spectra"] is not None:
            cfg = cls(tuple(tuple(s) for s in d["spectra"]))
            if "modes" in d and d["modes"] is not None and int(d["modes"]) != cfg.M:
                raise ValueError("modes does not match the number of spectra")
            return cfg
        return cls.uniform(int(d["modes"]))


# --------------------------------------------------------------------------
# registers


def compositions(n: int, parts: int):
    """All tuples of ``parts`` non-negative ints summing to n, first part largest first."""
    if parts == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in compositions(n - first, parts - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class Particle:
    """A single distinguishable particle; labels are (mode, sublevel)."""

    def labels(self, config: ModeConfig) -> list:
        return [(k, j) for k in range(config.M) for j in range(config.dims[k])]

    def modes(self, config: ModeConfig) -> frozenset:
        return frozenset(range(config.M))

    def diagonals(self, config: ModeConfig):
        labels = self.labels(config)
        h = np.zeros((config.M, len(labels)))
        n = np.zeros((config.M, len(labels)))
        for a, (k, j) in enumerate(labels):
            h[k, a] = config.spectra[k][j]
            n[k, a] = 1.0
        return h, n


@dataclass(frozen=True)
class FockSector:
    """Bosons with ``counts[k]`` particles in mode k; labels are per-mode occupation tuples."""

    counts: tuple

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if any(c < 0 for c in self.counts):
            raise ValueError("particle counts must be non-negative")

    def labels(self, config: ModeConfig) -> list:
        if len(self.counts) != config.M:
            raise DimensionMismatch("FockSector counts must have one entry per mode")
        per_mode = [list(compositions(c, d)) for c, d in zip(self.counts, config.dims)]
        return list(itertools.product(*per_mode))

    def modes(self, config: ModeConfig) -> frozenset:
        return frozenset(k for k, c in enumerate(self.counts) if c > 0)

    def diagonals(self, config: ModeConfig):
        labels = self.labels(config)
        lam = [np.array(s) for s in config.spectra]
        h = np.zeros((config.M, len(labels)))
        n = np.zeros((config.M, len(labels)))
        for a, occ in enumerate(labels):
            for k in range(config.M):
                h[k, a] = float(np.dot(lam[k], occ[k]))
                n[k, a] = self.counts[k]
        return h, n


@dataclass(frozen=True)
class ModeLocal:
    """A single mode with a fluctuating number 0..nmax of particles."""

    mode: int
    nmax: int

    def labels(self, config: ModeConfig) -> list:
        d = config.dims[self.mode]
        return [(n, occ) for n in range(self.nmax + 1) for occ in compositions(n, d)]

    def modes(self, config: ModeConfig) -> frozenset:
        return frozenset([self.mode])

    def diagonals(self, config: ModeConfig):
        labels = self.labels(config)
        lam = np.array(config.spectra[self.mode])
        h = np.zeros((config.M, len(labels)))
        n = np.zeros((config.M, len(labels)))
        for a, (num, occ) in enumerate(labels):
            h[self.mode, a] = float(np.dot(lam, occ))
            n[self.mode, a] = num
        return h, n


Register = Union[Particle, FockSector, ModeLocal]


# --------------------------------------------------------------------------
# bases


@dataclass(frozen=True)
class Basis:
    """Tensor product of registers over a fixed mode configuration."""

    config: ModeConfig
    registers: tuple
    cap: int = field(default=DEFAULT_DIM_CAP, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "registers", tuple(self.registers))
        if not self.registers:
            raise ValueError("a basis needs at least one register")
        if self.dim > self.cap:
            raise DimensionOverflow(f"basis dimension {self.dim} exceeds cap {self.cap}")

    # constructors matching the three canonical basis kinds
    @classmethod
    def particles(cls, config: ModeConfig, n: int, cap: int = DEFAULT_DIM_CAP) -> "Basis":
        if n < 1:
            raise ValueError("need at least one particle")
        dim = sum(config.dims) ** n
        if dim > cap:
            raise DimensionOverflow(f"basis dimension {dim} exceeds cap {cap}")
        return cls(config, (Particle(),) * n, cap)

    @classmethod
    def fock(cls, config: ModeConfig, counts: Sequence[int], cap: int = DEFAULT_DIM_CAP) -> "Basis":
        if len(counts) != config.M:
            raise DimensionMismatch("need one particle count per mode")
        return cls(config, (FockSector(tuple(counts)),), cap)

    @classmethod
    def mode_local(cls, config: ModeConfig, mode: int, nmax: int, cap: int = DEFAULT_DIM_CAP) -> "Basis":
        return cls(config, (ModeLocal(mode, nmax),), cap)

    @classmethod
    def product(cls, *bases: "Basis") -> "Basis":
        config = bases[0].config
        if any(b.config != config for b in bases):
            raise DimensionMismatch("cannot combine bases over different mode configurations")
        regs = tuple(r for b in bases for r in b.registers)
        return cls(config, regs, max(b.cap for b in bases))

    @property
    def kind(self) -> str:
        if all(isinstance(r, Particle) for r in self.registers):
            return "particles"
        if len(self.registers) == 1 and isinstance(self.registers[0], FockSector):
            return "fock"
        if len(self.registers) == 1 and isinstance(self.registers[0], ModeLocal):
            return "mode_local"
        return "product"

    @property
    def register_dims(self) -> tuple:
        return tuple(_register_dim(r, self.config) for r in self.registers)

    @property
    def dim(self) -> int:
        return int(np.prod(self.register_dims))

    @property
    def n_particles(self) -> int | None:
        """Total particle number if fixed, else None."""
        total = 0
        for r in self.registers:
            if isinstance(r, Particle):
                total += 1
            elif isinstance(r, FockSector):
                total += sum(r.counts)
            else:
                return None
        return total

    def modes(self) -> frozenset:
        out = frozenset()
        for r in self.registers:
            out |= r.modes(self.config)
        return out

    @cached_property
    def labels(self) -> list:
        return list(itertools.product(*(r.labels(self.config) for r in self.registers)))

    def index(self, label) -> int:
        return self._label_index[label]

    @cached_property
    def _label_index(self) -> dict:
        return {lab: a for a, lab in enumerate(self.labels)}

    @cached_property
    def diagonals(self):
        """Diagonals (h, n), each of shape (M, dim), of the generators and number operators."""
        h = np.zeros((self.config.M, 1))
        n = np.zeros((self.config.M, 1))
        for r in self.registers:
            hr, nr = r.diagonals(self.config)
            h = (h[:, :, None] + hr[:, None, :]).reshape(self.config.M, -1)
            n = (n[:, :, None] + nr[:, None, :]).reshape(self.config.M, -1)
        return h, n


def _register_dim(r: Register, config: ModeConfig) -> int:
    if isinstance(r, Particle):
        return sum(config.dims)
    if isinstance(r, FockSector):
        return int(np.prod([math.comb(c + d - 1, d - 1) for c, d in zip(r.counts, config.dims)]))
    d = config.dims[r.mode]
    return sum(math.comb(n + d - 1, d - 1) for n in range(r.nmax + 1))


# --------------------------------------------------------------------------
# states


@dataclass(frozen=True, eq=False)
class QuantumState:
    """A pure vector, a density matrix, or a structured mixture of product terms.

    Structured mixtures keep ``terms = ((p_gamma, (factor_1, ..., factor_L)), ...)``
    where every term uses the same factor bases and ``basis`` is their product.
    """

    basis: Basis
    vector: np.ndarray | None = None
    density: np.ndarray | None = None
    terms: tuple | None = None

    # constructors

    @classmethod
    def pure(cls, basis: Basis, vector, normalize: bool = False) -> "QuantumState":
        v = np.asarray(vector, dtype=complex).reshape(-1)
        if v.shape[0] != basis.dim:
            raise DimensionMismatch(f"vector length {v.shape[0]} != basis dimension {basis.dim}")
        nrm = np.linalg.norm(v)
        if normalize:
            v = v / nrm
        elif abs(nrm - 1.0) > NORM_TOL:
            raise ValueError(f"state vector not normalized (norm {nrm!r})")
        return cls(basis, vector=v)

    @classmethod
    def mixed(cls, basis: Basis, rho) -> "QuantumState":
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (basis.dim, basis.dim):
            raise DimensionMismatch(f"density matrix shape {rho.shape} != ({basis.dim}, {basis.dim})")
        if np.max(np.abs(rho - rho.conj().T)) > NORM_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > NORM_TOL:
            raise ValueError("density matrix does not have unit trace")
        if np.linalg.eigvalsh(rho)[0] < -NORM_TOL:
            raise ValueError("density matrix is not positive semidefinite")
        return cls(basis, density=0.5 * (rho + rho.conj().T))

    @classmethod
    def mixture(cls, terms) -> "QuantumState":
        terms = tuple((float(p), tuple(fs)) for p, fs in terms)
        if not terms:
            raise ValueError("empty mixture")
        weights = np.array([p for p, _ in terms])
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > NORM_TOL:
            raise ValueError("mixture weights must be non-negative and sum to 1")
        layout = tuple(f.basis for f in terms[0][1])
        for _, fs in terms:
            if tuple(f.basis for f in fs) != layout:
                raise DimensionMismatch("all mixture terms must share the same factor bases")
        return cls(Basis.product(*layout), terms=terms)

    @classmethod
    def product(cls, *factors: "QuantumState") -> "QuantumState":
        return cls.mixture([(1.0, factors)])

    # views

    @property
    def form(self) -> str:
        if self.vector is not None:
            return "pure"
        if self.density is not None:
            return "density"
        return "mixture"

    @property
    def factor_bases(self) -> tuple | None:
        if self.terms is None:
            return None
        return tuple(f.basis for f in self.terms[0][1])

    @property
    def is_pure(self) -> bool:
        if self.vector is not None:
            return True
        if self.terms is not None:
            return len(self.terms) == 1 and all(f.is_pure for f in self.terms[0][1])
        return False

    @cached_property
    def ket(self) -> np.ndarray:
        if self.vector is not None:
            return self.vector
        if self.terms is not None and self.is_pure:
            v = np.ones(1, dtype=complex)
            for f in self.terms[0][1]:
                v = np.kron(v, f.ket)
            return v
        raise ValueError("state is not pure")

    @cached_property
    def dm(self) -> np.ndarray:
        if self.density is not None:
            return self.density
        if self.vector is not None:
            return np.outer(self.vector, self.vector.conj())
        rho = np.zeros((self.basis.dim, self.basis.dim), dtype=complex)
        for p, fs in self.terms:
            t = np.ones((1, 1), dtype=complex)
            for f in fs:
                t = np.kron(t, f.dm)
            rho += p * t
        return rho

    @cached_property
    def populations(self) -> np.ndarray:
        """Diagonal of the density matrix in the product basis."""
        if self.vector is not None:
            return np.abs(self.vector) ** 2
        if self.density is not None:
            return np.real(np.diag(self.density)).copy()
        pops = np.zeros(self.basis.dim)
        for p, fs in self.terms:
            t = np.ones(1)
            for f in fs:
                t = np.kron(t, f.populations)
            pops += p * t
        return pops

    def densified(self) -> "QuantumState":
        return QuantumState(self.basis, density=self.dm)

    def trace(self) -> float:
        return float(np.sum(self.populations))

    def purity(self) -> float:
        if self.is_pure:
            return 1.0
        rho = self.dm
        return float(np.real(np.vdot(rho, rho)))

    def expect_diag(self, diag) -> float:
        return float(np.dot(self.populations, diag))


# --------------------------------------------------------------------------
# generators


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """Commuting collective generators and number operators, stored as diagonals."""

    config: ModeConfig
    basis: Basis
    h: np.ndarray  # (M, dim)
    n: np.ndarray  # (M, dim)

    @property
    def M(self) -> int:
        return self.h.shape[0]

    @property
    def dim(self) -> int:
        return self.h.shape[1]

    @property
    def H(self) -> list:
        return [np.diag(hk).astype(complex) for hk in self.h]

    @property
    def number_ops(self) -> list:
        return [np.diag(nk).astype(complex) for nk in self.n]

    def combination(self, coeffs) -> np.ndarray:
        """Diagonal of ``sum_k c_k H_k``."""
        return np.asarray(coeffs, dtype=float) @ self.h

    def check(self, state: QuantumState) -> None:
        if state.basis.dim != self.dim:
            raise DimensionMismatch(f"state dimension {state.basis.dim} != generator dimension {self.dim}")


def build_generators(basis: Basis) -> GeneratorSet:
    h, n = basis.diagonals
    return GeneratorSet(basis.config, basis, h.copy(), n.copy())


def phase_evolve(state: QuantumState, gens: GeneratorSet, theta) -> QuantumState:
    """Apply ``exp(-i H.theta)``; structured mixtures stay structured."""
    gens.check(state)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != gens.M:
        raise DimensionMismatch(f"need {gens.M} phases, got {theta.shape[0]}")
    if state.terms is not None and gens.basis == state.basis:
        terms = []
        for p, fs in state.terms:
            terms.append((p, tuple(phase_evolve(f, build_generators(f.basis), theta) for f in fs)))
        return QuantumState(state.basis, terms=tuple(terms))
    ph = np.exp(-1j * (theta @ gens.h))
    if state.vector is not None:
        return QuantumState(state.basis, vector=ph * state.vector)
    rho = state.dm
    return QuantumState(state.basis, density=ph[:, None] * rho * ph.conj()[None, :])


# --------------------------------------------------------------------------
# reductions


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of ``rho`` on a tensor product with subsystem ``dims``, keeping ``keep``."""
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    drop = [i for i in range(n) if i not in keep]
    t = rho.reshape(dims + dims)
    # contract dropped subsystems pairwise, highest index first so axes stay valid
    for i in sorted(drop, reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + m)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(dk, dk)


def reduce_particle(state: QuantumState, i: int) -> QuantumState:
    """Reduced single-particle state of particle ``i`` (distinguishable basis only)."""
    if state.basis.kind != "particles":
        raise BasisUnsupported("particle reduction needs a distinguishable-particle basis")
    n = len(state.basis.registers)
    if not 0 <= i < n:
        raise IndexError(f"particle index {i} out of range")
    single = Basis(state.basis.config, (Particle(),))
    if state.terms is not None and all(len(fb.registers) == 1 for fb in state.factor_bases):
        rho = sum(p * fs[i].dm for p, fs in state.terms)
        return QuantumState(single, density=rho)
    dims = state.basis.register_dims
    if state.vector is not None:
        psi = np.moveaxis(state.vector.reshape(dims), i, 0).reshape(dims[i], -1)
        rho = psi @ psi.conj().T
    else:
        rho = partial_trace(state.dm, dims, [i])
    return QuantumState(single, density=rho)


def factor_modes(state: QuantumState) -> list:
    """Modes touched by each factor of a structured mixture, or raise NoStructure."""
    if state.terms is None:
        raise NoStructure("state carries no structural decomposition")
    out = []
    for fb in state.factor_bases:
        if any(isinstance(r, Particle) for r in fb.registers):
            raise NoStructure("particle factors are not mode-local")
        out.append(fb.modes())
    for a, b in itertools.combinations(out, 2):
        if a & b:
            raise NoStructure("factors share modes; no mode-factorized decomposition")
    return out


def reduce_modes_structured(state: QuantumState, modes) -> QuantumState:
    """Reduced state of the factor(s) covering exactly ``modes``: ``sum_g p_g rho_{g,A}``."""
    modes = frozenset(modes)
    fm = factor_modes(state)
    idx = [a for a, m in enumerate(fm) if m & modes]
    covered = frozenset().union(*(fm[a] for a in idx)) if idx else frozenset()
    if covered != modes:
        raise NoStructure(f"modes {sorted(modes)} do not match a union of factors")
    if not idx:
        raise NoStructure(f"no factor acts on modes {sorted(modes)}")
    bases = [state.factor_bases[a] for a in idx]
    basis = Basis.product(*bases)
    rho = np.zeros((basis.dim, basis.dim), dtype=complex)
    for p, fs in state.terms:
        t = np.ones((1, 1), dtype=complex)
        for a in idx:
            t = np.kron(t, fs[a].dm)
        rho += p * t
    return QuantumState(basis, density=rho)


def reduce_mode_structured(state: QuantumState, k: int) -> QuantumState:
    fm = factor_modes(state)
    if frozenset([k]) not in fm:
        raise NoStructure(f"no factor acts on mode {k} alone")
    return reduce_modes_structured(state, [k])


# --------------------------------------------------------------------------
# cross-representation embedding


def symmetrization_isometry(fock: Basis, cap: int = DEFAULT_DIM_CAP) -> tuple:
    """Isometry V mapping a FockFixedPerMode basis into the symmetric particle space."""
    if fock.kind != "fock":
        raise BasisUnsupported("symmetrization needs a FockFixedPerMode basis")
    config = fock.config
    counts = fock.registers[0].counts
    n = sum(counts)
    target = Basis.particles(config, n, cap=cap)
    single = Particle().labels(config)
    sp_index = {lab: a for a, lab in enumerate(single)}
    d1 = len(single)
    v = np.zeros((target.dim, fock.dim))
    for col, (occ,) in enumerate(fock.labels):
        levels = []
        for k, occ_k in enumerate(occ):
            for j, c in enumerate(occ_k):
                levels += [sp_index[(k, j)]] * c
        perms = set(itertools.permutations(levels))
        amp = 1.0 / math.sqrt(len(perms))
        for seq in perms:
            row = 0
            for s in seq:
                row = row * d1 + s
            v[row, col] = amp
    return target, v


def symmetrize_embed(state: QuantumState, cap: int = DEFAULT_DIM_CAP) -> QuantumState:
    target, v = symmetrization_isometry(state.basis, cap)
    if state.vector is not None:
        return QuantumState(target, vector=v @ state.vector)
    return QuantumState(target, density=v @ state.dm @ v.T)
