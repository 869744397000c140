"""Optimal probe-state families and random states from each separability class."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidArgs,
    InvalidP,
    InvalidPartition,
    NegativeTarget,
    NonIntegerTargets,
    UnbalancedSpectrum,
)
from .hilbert import Basis, ModeConfig, Particle, QuantumState

CLASSES = ("particle-sep", "mode-sep", "lambda-sep", "p-producible", "arbitrary-pure")
MAX_TERMS = 4


# --------------------------------------------------------------------------
# parameter types


@dataclass(frozen=True)
class Direction:
    """Estimation direction n with signs eps_k = sign(n_k), sign(0) taken as +1."""

    n: tuple

    def __post_init__(self):
        n = tuple(float(x) for x in np.asarray(self.n, dtype=float).reshape(-1))
        if not n or not all(np.isfinite(n)):
            raise ValueError("direction must be a finite non-empty vector")
        object.__setattr__(self, "n", n)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.n)

    @property
    def signs(self) -> np.ndarray:
        return np.where(self.vector < 0, -1.0, 1.0)

    def normalized(self) -> "Direction":
        v = self.vector
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("cannot normalize the zero direction")
        return Direction(tuple(v / norm))

    @classmethod
    def uniform(cls, M: int) -> "Direction":
        return cls(tuple(np.full(M, 1.0 / np.sqrt(M))))


def validate_partition(partition, M: int) -> tuple:
    """Return the partition as a tuple of sorted tuples, or raise InvalidPartition."""
    try:
        groups = tuple(tuple(sorted(int(k) for k in g)) for g in partition)
    except TypeError as exc:
        raise InvalidPartition(f"malformed partition {partition!r}") from exc
    flat = [k for g in groups for k in g]
    if any(len(g) == 0 for g in groups):
        raise InvalidPartition("partition groups must be non-empty")
    if sorted(flat) != list(range(M)):
        raise InvalidPartition(f"partition {partition!r} is not a disjoint cover of modes 0..{M - 1}")
    return groups


@dataclass(frozen=True)
class EntanglementSpec:
    """Entanglement limits: particles per mode P_k, mode partition, and gain-table (M_e, P_e)."""

    P: tuple | None = None
    partition: tuple | None = None
    Me: int | None = None
    Pe: int | None = None

    def checked_P(self, counts: Sequence[int]) -> tuple:
        if self.P is None:
            return tuple(max(int(c), 1) for c in counts)
        P = tuple(int(p) for p in self.P)
        if len(P) != len(counts):
            raise InvalidP("need one P_k per mode")
        for p, c in zip(P, counts):
            if p < 1 or p > max(c, 1):
                raise InvalidP(f"P_k={p} outside 1..N_k={c}")
        return P

    def checked_partition(self, M: int) -> tuple:
        if self.partition is None:
            return tuple((k,) for k in range(M))
        return validate_partition(self.partition, M)


def _require_balanced(config: ModeConfig) -> None:
    if not config.balanced:
        raise UnbalancedSpectrum("construction requires lambda_{k+} = -lambda_{k-} for every mode")


def _counts(config: ModeConfig, counts) -> tuple:
    if np.isscalar(counts):
        counts = (int(counts),) * config.M
    counts = tuple(int(c) for c in counts)
    if len(counts) != config.M:
        raise DimensionMismatch(f"need {config.M} particle counts, got {len(counts)}")
    if any(c < 0 for c in counts):
        raise ValueError("particle counts must be non-negative")
    return counts


# --------------------------------------------------------------------------
# particle-representation states


def _single_particle_superposition(config: ModeConfig, amps: dict) -> QuantumState:
    """Single-particle pure state from {(k, j): amplitude}."""
    basis = Basis(config, (Particle(),))
    v = np.zeros(basis.dim, dtype=complex)
    for (k, j), a in amps.items():
        v[config.offsets[k] + j] += a
    return QuantumState.pure(basis, v)


def msps_state(config: ModeConfig, assignment: Sequence[int]) -> QuantumState:
    """Product of particles each localized on mode k_i in a balanced extremal superposition."""
    _require_balanced(config)
    if len(assignment) == 0:
        raise InvalidArgs("need at least one particle")
    factors = []
    for k in assignment:
        k = int(k)
        if not 0 <= k < config.M:
            raise InvalidArgs(f"mode index {k} out of range")
        amp = 1.0 / np.sqrt(2.0)
        factors.append(_single_particle_superposition(
            config, {(k, config.plus_index(k)): amp, (k, config.minus_index(k)): amp}))
    return QuantumState.product(*factors)


def msps_assignment(targets: Sequence[float]) -> list:
    """Particle-to-mode assignment realizing integer mean occupations, in mode order."""
    out = []
    for k, t in enumerate(targets):
        if t < 0:
            raise NegativeTarget(f"target {t} for mode {k} is negative")
        if abs(t - round(t)) > 1e-9:
            raise NonIntegerTargets("the MsPs strategy needs integer mean occupations")
        out += [k] * int(round(t))
    return out


def meps_state(config: ModeConfig, N: int, targets: Sequence[float]) -> QuantumState:
    """Product of identical particles delocalized over all modes with weights <N_k>/N."""
    _require_balanced(config)
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (config.M,):
        raise DimensionMismatch(f"need {config.M} targets")
    if np.any(targets < 0):
        raise NegativeTarget("mean occupations must be non-negative")
    if N < 1 or abs(targets.sum() - N) > 1e-9:
        raise InvalidArgs(f"targets must sum to N={N}")
    amps = {}
    for k in range(config.M):
        a = np.sqrt(targets[k] / (2.0 * N))
        amps[(k, config.plus_index(k))] = a
        amps[(k, config.minus_index(k))] = a
    single = _single_particle_superposition(config, amps)
    return QuantumState.product(*([single] * N))


# --------------------------------------------------------------------------
# Fock-representation states


def extremal_label(config: ModeConfig, counts: Sequence[int], eps: Sequence[float]) -> tuple:
    """Occupation label with N_k particles in lambda_{k+} (eps_k=+1) or lambda_{k-} (eps_k=-1)."""
    label = []
    for k, (c, e) in enumerate(zip(counts, eps)):
        occ = [0] * config.dims[k]
        if c:
            occ[config.plus_index(k) if e > 0 else config.minus_index(k)] = c
        label.append(tuple(occ))
    return tuple(label)


def multinoon(config: ModeConfig, counts: Sequence[int], signs: Sequence[float] | None = None) -> QuantumState:
    """(|N, eps> + |N, -eps>)/sqrt(2) on a single FockSector register."""
    _require_balanced(config)
    counts = _counts(config, counts)
    if sum(counts) == 0:
        raise InvalidArgs("a NOON state needs at least one particle")
    if signs is None:
        signs = np.ones(config.M)
    signs = np.where(np.asarray(signs, dtype=float) < 0, -1.0, 1.0)
    basis = Basis.fock(config, counts)
    v = np.zeros(basis.dim, dtype=complex)
    v[basis.index((extremal_label(config, counts, signs),))] += 1.0 / np.sqrt(2.0)
    v[basis.index((extremal_label(config, counts, -signs),))] += 1.0 / np.sqrt(2.0)
    return QuantumState.pure(basis, v)


def noon(config: ModeConfig, k: int, n: int) -> QuantumState:
    counts = [0] * config.M
    counts[k] = n
    return multinoon(config, counts)


def mspe_noon_product(config: ModeConfig, counts: Sequence[int]) -> QuantumState:
    """Product over modes of single-mode NOON states."""
    _require_balanced(config)
    counts = _counts(config, counts)
    if any(c < 1 for c in counts):
        raise InvalidArgs("every mode needs at least one particle")
    return QuantumState.product(*(noon(config, k, c) for k, c in enumerate(counts)))


def mepe_multinoon(config: ModeConfig, counts: Sequence[int], direction) -> QuantumState:
    """Multimode NOON state with extremal sublevels matched to the signs of n."""
    d = direction if isinstance(direction, Direction) else Direction(direction)
    if len(d.n) != config.M:
        raise DimensionMismatch("direction length must equal the number of modes")
    return multinoon(config, counts, d.signs)


def chain_blocks(n: int, p: int) -> list:
    """Block sizes [p]*s + [r] with s = n // p and r = n - s p (r omitted when 0)."""
    s, r = divmod(n, p)
    return [p] * s + ([r] if r else [])


def blocked_multinoon(config: ModeConfig, groups, blocks, direction=None) -> QuantumState:
    """Product over groups and block index i of multinoon states with blocks[k][i] particles in mode k.

    Within a group, the i-th blocks of all member modes are entangled into one
    multimode NOON state; modes that have run out of blocks contribute nothing.
    """
    _require_balanced(config)
    signs = np.ones(config.M) if direction is None else Direction(direction).signs
    factors = []
    for g in groups:
        for sizes in itertools.zip_longest(*(blocks[k] for k in g), fillvalue=0):
            counts = [0] * config.M
            for k, c in zip(g, sizes):
                counts[k] = c
            if sum(counts):
                factors.append(multinoon(config, counts, signs))
    if not factors:
        raise InvalidArgs("no particles to place")
    return QuantumState.product(*factors)


def p_producible_noon_chain(config: ModeConfig, counts: Sequence[int], P: Sequence[int]) -> QuantumState:
    """Per mode: s_k NOON(P_k) blocks and one NOON(r_k) block."""
    counts = _counts(config, counts)
    P = EntanglementSpec(P=tuple(P)).checked_P(counts)
    blocks = [chain_blocks(c, p) for c, p in zip(counts, P)]
    return blocked_multinoon(config, [(k,) for k in range(config.M)], blocks)


def lambda_sep_multinoon(config: ModeConfig, counts: Sequence[int], partition, direction) -> QuantumState:
    """Product over partition groups of multimode NOON states."""
    counts = _counts(config, counts)
    groups = validate_partition(partition, config.M)
    d = direction if isinstance(direction, Direction) else Direction(direction)
    if len(d.n) != config.M:
        raise DimensionMismatch("direction length must equal the number of modes")
    return blocked_multinoon(config, groups, [[c] if c else [] for c in counts], d.n)


def gain_optimal_state(config: ModeConfig, nbar: int, Me: int, Pe: int, direction=None) -> QuantumState:
    """Optimal state for the gain table: u groups of M_e modes plus one of v, blocks [P_e]*s + [r]."""
    M = config.M
    if not (1 <= Me <= M and 1 <= Pe <= nbar):
        raise InvalidArgs("need 1 <= M_e <= M and 1 <= P_e <= N/M")
    modes = list(range(M))
    groups = [tuple(modes[i:i + Me]) for i in range(0, M, Me)]
    blocks = [chain_blocks(nbar, Pe) for _ in range(M)]
    return blocked_multinoon(config, groups, blocks, direction)


# --------------------------------------------------------------------------
# random states


def haar_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def _weights(rng: np.random.Generator) -> np.ndarray:
    terms = int(rng.integers(1, MAX_TERMS + 1))
    return rng.dirichlet(np.ones(terms))


def _mode_local_factor(rng, config: ModeConfig, k: int, nmax: int) -> QuantumState:
    """Mixture over particle-number sectors of Haar states within each sector."""
    basis = Basis.mode_local(config, k, nmax)
    sectors = {}
    for a, ((n, _),) in enumerate(basis.labels):
        sectors.setdefault(n, []).append(a)
    q = rng.dirichlet(np.ones(nmax + 1))
    rho = np.zeros((basis.dim, basis.dim), dtype=complex)
    for n, idx in sectors.items():
        psi = haar_vector(rng, len(idx))
        rho[np.ix_(idx, idx)] += q[n] * np.outer(psi, psi.conj())
    return QuantumState.mixed(basis, rho)


def _group_counts(config: ModeConfig, counts, group) -> tuple:
    return tuple(c if k in group else 0 for k, c in enumerate(counts))


def sample_state(config: ModeConfig, N, cls: str, spec: EntanglementSpec | None = None,
                 seed: int = 0) -> QuantumState:
    """Random state of the requested separability class, deterministic in ``seed``.

    ``N`` is the total particle number for ``particle-sep`` and the particle
    number per mode (int or per-mode list) for the Fock-based classes.
    """
    rng = np.random.default_rng(seed)
    spec = spec or EntanglementSpec()
    if cls not in CLASSES:
        raise InvalidArgs(f"unknown state class {cls!r}; expected one of {CLASSES}")

    if cls == "particle-sep":
        n = int(N) if np.isscalar(N) else int(sum(N))
        single = Basis(config, (Particle(),))
        # fix the dimension check up front
        Basis.particles(config, n)
        terms = []
        for w in _weights(rng):
            fs = tuple(QuantumState.pure(single, haar_vector(rng, single.dim)) for _ in range(n))
            terms.append((w, fs))
        return QuantumState.mixture(terms)

    counts = _counts(config, N)

    if cls == "arbitrary-pure":
        basis = Basis.fock(config, counts)
        return QuantumState.pure(basis, haar_vector(rng, basis.dim))

    if cls == "mode-sep":
        terms = []
        for w in _weights(rng):
            fs = tuple(_mode_local_factor(rng, config, k, counts[k]) for k in range(config.M))
            terms.append((w, fs))
        return QuantumState.mixture(terms)

    if cls == "lambda-sep":
        groups = spec.checked_partition(config.M)
        bases = [Basis.fock(config, _group_counts(config, counts, g)) for g in groups]
        terms = []
        for w in _weights(rng):
            fs = tuple(QuantumState.pure(b, haar_vector(rng, b.dim)) for b in bases)
            terms.append((w, fs))
        return QuantumState.mixture(terms)

    # p-producible: entangled blocks of at most P_k particles inside each mode
    P = spec.checked_P(counts)
    bases = []
    for k, (c, p) in enumerate(zip(counts, P)):
        for b in chain_blocks(c, p):
            cc = [0] * config.M
            cc[k] = b
            bases.append(Basis.fock(config, cc))
    terms = []
    for w in _weights(rng):
        fs = tuple(QuantumState.pure(b, haar_vector(rng, b.dim)) for b in bases)
        terms.append((w, fs))
    return QuantumState.mixture(terms)


def random_density_matrix(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    """Random mixed state from a Ginibre matrix of the given rank."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_povm(rng: np.random.Generator, dim: int, outcomes: int) -> list:
    """Random POVM: A_x = S^{-1/2} G_x S^{-1/2} with S = sum_x G_x for random PSD G_x."""
    gs = []
    for _ in range(outcomes):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        gs.append(g @ g.conj().T)
    s = sum(gs)
    w, v = np.linalg.eigh(s)
    s_inv_half = (v / np.sqrt(w)) @ v.conj().T
    return [s_inv_half @ g @ s_inv_half for g in gs]


__all__ = [
    "CLASSES", "Direction", "EntanglementSpec", "validate_partition",
    "msps_state", "msps_assignment", "meps_state", "multinoon", "noon",
    "mspe_noon_product", "mepe_multinoon", "chain_blocks", "blocked_multinoon",
    "p_producible_noon_chain", "lambda_sep_multinoon", "gain_optimal_state",
    "haar_vector", "sample_state", "random_density_matrix", "random_povm",
]
