"""State-independent sensitivity limits, state-dependent checks, shot-noise rank and gain factors.

Matrix bounds are compared with a quantum Fisher matrix in the Loewner order;
direction-dependent bounds are compared through their quadratic forms n^T B n.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidArgs,
    InvalidP,
    MomentMismatch,
    NegativeTarget,
    NoStructure,
    NonIntegerTargets,
    ZeroInformation,
)
from .fisher import covariance_matrix, number_moments, qfi_matrix
from .hilbert import (
    GeneratorSet,
    ModeConfig,
    QuantumState,
    build_generators,
    factor_modes,
    reduce_modes_structured,
    reduce_particle,
)
from .linalg import count_positive_eigenvalues, max_abs, min_eigenvalue
from .states import Direction, chain_blocks, validate_partition

MOMENT_TOL = 1e-9
REPORT_TOL = 1e-8


# --------------------------------------------------------------------------
# moments


@dataclass(frozen=True, eq=False)
class MomentData:
    """First moments <N_k> and second moments <N_k N_l> of the mode populations."""

    first: np.ndarray
    second: np.ndarray | None = None
    source: str = "user-supplied"

    def __post_init__(self):
        first = np.asarray(self.first, dtype=float).reshape(-1)
        if np.any(first < 0):
            raise ValueError("first moments must be non-negative")
        object.__setattr__(self, "first", first)
        if self.second is not None:
            second = np.asarray(self.second, dtype=float)
            if second.ndim == 1:
                second = np.diag(second)
            if second.shape != (first.size, first.size):
                raise DimensionMismatch("second moments must be an M x M matrix")
            if max_abs(second - second.T) > 1e-10 * (1 + max_abs(second)):
                raise ValueError("second moments must be symmetric")
            diag = np.diag(second)
            if np.any(diag < -1e-12):
                raise ValueError("<N_k^2> must be non-negative")
            bound = np.sqrt(np.outer(np.clip(diag, 0, None), np.clip(diag, 0, None)))
            if np.any(np.abs(second) > bound + 1e-9 * (1 + max_abs(bound))):
                raise ValueError("second moments violate |<N_k N_l>| <= sqrt(<N_k^2><N_l^2>)")
            object.__setattr__(self, "second", second)

    @property
    def M(self) -> int:
        return self.first.size

    @property
    def second_diag(self) -> np.ndarray:
        if self.second is None:
            raise InvalidArgs("second moments <N_k^2> are required")
        return np.diag(self.second).copy()

    @classmethod
    def fixed(cls, counts: Sequence[int]) -> "MomentData":
        c = np.asarray(counts, dtype=float)
        return cls(c, np.outer(c, c), "fixed-counts")

    def to_dict(self) -> dict:
        return {
            "first": self.first.tolist(),
            "second": None if self.second is None else self.second.tolist(),
            "source": self.source,
        }


def moments_from_state(state: QuantumState, gens: GeneratorSet) -> MomentData:
    first, second = number_moments(state, gens)
    return MomentData(first, second, "from-state")


def resolve_moments(state: QuantumState | None, gens: GeneratorSet | None,
                    user: MomentData | None = None) -> MomentData:
    """From-state moments win over user moments; a disagreement beyond 1e-9 is an error."""
    if state is None:
        if user is None:
            raise InvalidArgs("no state and no moments supplied")
        return user
    ms = moments_from_state(state, gens)
    if user is not None:
        if user.M != ms.M:
            raise MomentMismatch("user moments have the wrong number of modes")
        diff = max_abs(user.first - ms.first)
        if user.second is not None:
            diff = max(diff, max_abs(user.second - ms.second))
        if diff > MOMENT_TOL:
            raise MomentMismatch(f"user-supplied moments differ from the state's by {diff:.3e}")
    return ms


def _check_config(moments: MomentData, config: ModeConfig) -> None:
    if moments.M != config.M:
        raise DimensionMismatch(f"moments for {moments.M} modes, configuration has {config.M}")


# --------------------------------------------------------------------------
# state-independent bounds


def shot_noise_bound(moments: MomentData, config: ModeConfig) -> np.ndarray:
    """F_SN = diag(4 lambda_kmax^2 <N_k>)."""
    _check_config(moments, config)
    return np.diag(4.0 * config.lambda_max ** 2 * moments.first)


def mode_separable_bound(moments: MomentData, config: ModeConfig) -> np.ndarray:
    """F_MS = diag(4 lambda_kmax^2 <N_k^2>)."""
    _check_config(moments, config)
    return np.diag(4.0 * config.lambda_max ** 2 * moments.second_diag)


def p_producible_bound(counts: Sequence[int], P: Sequence[int], config: ModeConfig) -> np.ndarray:
    """F^P_MS = diag((s_k P_k^2 + r_k^2)(lambda_k+ - lambda_k-)^2)."""
    counts = [int(c) for c in counts]
    P = [int(p) for p in P]
    if len(counts) != config.M or len(P) != config.M:
        raise DimensionMismatch("need one N_k and one P_k per mode")
    entries = []
    for c, p in zip(counts, P):
        if not 1 <= p <= c:
            raise InvalidP(f"need 1 <= P_k <= N_k, got P_k={p}, N_k={c}")
        entries.append(sum(b * b for b in chain_blocks(c, p)))
    return np.diag(np.array(entries, dtype=float) * config.spread ** 2)


def _direction(direction, M: int) -> Direction:
    d = direction if isinstance(direction, Direction) else Direction(direction)
    if len(d.n) != M:
        raise DimensionMismatch(f"direction has {len(d.n)} components, expected {M}")
    return d


@dataclass(frozen=True, eq=False)
class QuadraticBound:
    """Direction-dependent bound: the matrix B^n and its quadratic form n^T B^n n."""

    name: str
    direction: Direction
    matrix: np.ndarray
    cross_matrix: np.ndarray | None = None

    def form(self, n=None) -> float:
        v = self.direction.vector if n is None else np.asarray(n, dtype=float)
        return float(v @ self.matrix @ v)

    def cross_form(self, n=None) -> float:
        if self.cross_matrix is None:
            raise InvalidArgs("cross moments <N_k N_l> were not supplied")
        v = self.direction.vector if n is None else np.asarray(n, dtype=float)
        return float(v @ self.cross_matrix @ v)


def heisenberg_bound(direction, moments: MomentData, config: ModeConfig,
                     cross: bool = True) -> QuadraticBound:
    """F^n_HL = v v^T with v_k = 2 lambda_kmax eps_k sqrt(<N_k^2>).

    With ``cross`` and full second moments, also F^n_HL' with entries
    4 eps_k eps_l lambda_kmax lambda_lmax <N_k N_l> (diagonal 4 lambda_kmax^2 <N_k^2>).
    """
    _check_config(moments, config)
    d = _direction(direction, config.M)
    lam = d.signs * config.lambda_max
    v = 2.0 * lam * np.sqrt(np.clip(moments.second_diag, 0.0, None))
    cross_m = None
    if cross and moments.second is not None:
        cross_m = 4.0 * np.outer(lam, lam) * moments.second
    return QuadraticBound("heisenberg", d, np.outer(v, v), cross_m)


def heisenberg_bound_fixed(direction, counts: Sequence[int], config: ModeConfig) -> QuadraticBound:
    """F^n_HL,b = f f^T with f_k = eps_k N_k (lambda_k+ - lambda_k-) for fixed particle numbers."""
    d = _direction(direction, config.M)
    f = d.signs * np.asarray(counts, dtype=float) * config.spread
    return QuadraticBound("heisenberg_fixed", d, np.outer(f, f))


def partition_bound(direction, partition, moments: MomentData, config: ModeConfig) -> np.ndarray:
    """F^n_Lambda: F^n_HL with all entries between different groups set to zero."""
    groups = validate_partition(partition, config.M)
    hl = heisenberg_bound(direction, moments, config, cross=False).matrix
    mask = np.zeros((config.M, config.M), dtype=bool)
    for g in groups:
        mask[np.ix_(g, g)] = True
    return np.where(mask, hl, 0.0)


def weak_qcrb(direction, F) -> float:
    """(n^T n)^2 / (n^T F n), the weak multiparameter Cramer-Rao bound per repetition."""
    n = Direction(direction).vector if not isinstance(direction, Direction) else direction.vector
    F = np.asarray(F, dtype=float)
    if F.shape != (n.size, n.size):
        raise DimensionMismatch(f"F has shape {F.shape}, direction length {n.size}")
    q = float(n @ F @ n)
    if q <= 1e-14:
        raise ZeroInformation(f"n^T F n = {q:.3e}; no information along this direction")
    return float(n @ n) ** 2 / q


def shot_noise_rank(F_Q, F_SN, tol: float = 1e-9) -> int:
    """Number of positive eigenvalues of F_Q - F_SN."""
    F_Q = np.asarray(F_Q, dtype=float)
    F_SN = np.asarray(F_SN, dtype=float)
    if F_Q.shape != F_SN.shape:
        raise DimensionMismatch(f"shapes differ: {F_Q.shape} vs {F_SN.shape}")
    return count_positive_eigenvalues(F_Q - F_SN, tol)


# --------------------------------------------------------------------------
# gain factor


def _gain_args(N: int, M: int, Me: int, Pe: int) -> int:
    if M < 1 or N < 1 or N % M:
        raise InvalidArgs(f"M={M} must divide N={N}")
    nbar = N // M
    if not 1 <= Pe <= nbar:
        raise InvalidArgs(f"need 1 <= P_e <= N/M = {nbar}, got {Pe}")
    if not 1 <= Me <= M:
        raise InvalidArgs(f"need 1 <= M_e <= M = {M}, got {Me}")
    return nbar


def s_max(N: int, M: int, Me: int, Pe: int, unit_components: bool = False) -> float:
    """Largest n^T F_Q n with |n_k| = 1/sqrt(M) (or |n_k| = 1) for at most P_e
    entangled particles per mode and M_e entangled modes, lambda = +-1/2."""
    nbar = _gain_args(N, M, Me, Pe)
    s, r = divmod(nbar, Pe)
    u, v = divmod(M, Me)
    value = float((s * Pe ** 2 + r ** 2) * (u * Me ** 2 + v ** 2))
    return value if unit_components else value / M


def gain_factor(N: int, M: int, Me: int, Pe: int, unit_components: bool = False):
    """(S_max, G) with G = S_max(M_e, P_e) / S_max(1, 1); G does not depend on the convention."""
    smax = s_max(N, M, Me, Pe, unit_components)
    return smax, smax / s_max(N, M, 1, 1, unit_components)


def gain_table(N: int, M: int, unit_components: bool = False) -> list:
    """Rows (M_e, P_e, S_max, G) over every valid pair."""
    nbar = _gain_args(N, M, 1, 1)
    rows = []
    for Me in range(1, M + 1):
        for Pe in range(1, nbar + 1):
            smax, g = gain_factor(N, M, Me, Pe, unit_components)
            rows.append((Me, Pe, smax, g))
    return rows


def gain_from_states(N: int, M: int, Me: int, Pe: int) -> tuple:
    """Construction route for the gain: n^T F_Q n of the explicit optimal states, n uniform.

    Returns (S(M_e, P_e), S(1, 1), ratio). Independent of the closed form in ``gain_factor``.
    """
    from .states import gain_optimal_state

    nbar = _gain_args(N, M, Me, Pe)
    config = ModeConfig.uniform(M)
    d = Direction.uniform(M)

    def quad(me, pe):
        st = gain_optimal_state(config, nbar, me, pe, d.n)
        F = qfi_matrix(st, build_generators(st.basis), method="spectral")
        return float(d.vector @ F @ d.vector)

    s_opt, s_ref = quad(Me, Pe), quad(1, 1)
    return s_opt, s_ref, s_opt / s_ref


# --------------------------------------------------------------------------
# localization envelope of particle-separable strategies


def product_covariance(config: ModeConfig, conditional, distributions) -> np.ndarray:
    """Sum_i D^(i) - h^(i) h^(i)T for pure single-particle products.

    ``conditional[k]`` holds the sublevel probabilities p_{j|k} inside mode k and
    ``distributions[i, k]`` is the probability p_k^(i) of finding particle i in mode k.
    """
    cond = [np.asarray(c, dtype=float) for c in conditional]
    if len(cond) != config.M or any(c.size != d for c, d in zip(cond, config.dims)):
        raise DimensionMismatch("need one sublevel distribution per mode")
    for c in cond:
        if np.any(c < 0) or abs(c.sum() - 1.0) > 1e-9:
            raise InvalidArgs("conditional sublevel probabilities must be a distribution")
    dist = np.atleast_2d(np.asarray(distributions, dtype=float))
    if dist.shape[1] != config.M:
        raise DimensionMismatch("particle distributions need M columns")
    if np.any(dist < 0) or np.any(np.abs(dist.sum(axis=1) - 1.0) > 1e-9):
        raise InvalidArgs("each particle's mode distribution must sum to 1")
    lam = [np.array(s) for s in config.spectra]
    mean = np.array([lam[k] @ cond[k] for k in range(config.M)])
    square = np.array([lam[k] ** 2 @ cond[k] for k in range(config.M)])
    D = np.diag(square * dist.sum(axis=0))
    h = dist * mean
    return D - h.T @ h


def localization_envelope(config: ModeConfig, conditional, targets, distributions=None):
    """(Gamma_MsPs, Gamma_mid, Gamma_MePs) for fixed conditional sublevel weights.

    Gamma_MsPs localizes each particle on one mode (integer targets required,
    particles assigned in mode order), Gamma_MePs uses p_k^(i) = <N_k>/N for
    every particle, and Gamma_mid uses the supplied ``distributions`` (or the
    MePs choice when omitted).
    """
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (config.M,):
        raise DimensionMismatch("need one target per mode")
    if np.any(targets < 0):
        raise NegativeTarget("targets must be non-negative")
    if np.any(np.abs(targets - np.round(targets)) > 1e-9):
        raise NonIntegerTargets("the localized strategy needs integer <N_k>")
    counts = np.round(targets).astype(int)
    N = int(counts.sum())
    if N < 1:
        raise InvalidArgs("need at least one particle")
    localized = np.zeros((N, config.M))
    localized[np.arange(N), np.repeat(np.arange(config.M), counts)] = 1.0
    delocalized = np.tile(targets / N, (N, 1))
    if distributions is None:
        distributions = delocalized
    dist = np.atleast_2d(np.asarray(distributions, dtype=float))
    if dist.shape[0] != N or np.any(np.abs(dist.sum(axis=0) - targets) > 1e-9):
        raise InvalidArgs("particle distributions must sum to the targets over particles")
    return (
        product_covariance(config, conditional, localized),
        product_covariance(config, conditional, dist),
        product_covariance(config, conditional, delocalized),
    )


# --------------------------------------------------------------------------
# reports


@dataclass
class BoundReport:
    """Outcome of comparing a bound with a Fisher matrix (or their quadratic forms)."""

    name: str
    margin: float
    satisfied: bool
    saturated: bool
    matrix: np.ndarray | None = None
    reference: np.ndarray | None = None
    kind: str = "matrix"
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "kind": self.kind,
            "satisfied": bool(self.satisfied),
            "saturated": bool(self.saturated),
            "margin": float(self.margin),
        }
        if self.matrix is not None:
            out["bound"] = np.asarray(self.matrix, dtype=float).tolist()
        if self.reference is not None:
            out["reference"] = np.asarray(self.reference, dtype=float).tolist()
        out.update({k: _plain(v) for k, v in self.details.items()})
        return out


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


def compare_matrix(name: str, bound, F_Q, tol: float = REPORT_TOL) -> BoundReport:
    """Check F_Q <= bound: margin is the least eigenvalue of bound - F_Q."""
    bound = np.asarray(bound, dtype=float)
    F_Q = np.asarray(F_Q, dtype=float)
    if bound.shape != F_Q.shape:
        raise DimensionMismatch(f"bound shape {bound.shape} != Fisher shape {F_Q.shape}")
    scale = 1.0 + max_abs(bound)
    margin = min_eigenvalue(bound - F_Q)
    satisfied = margin >= -tol * scale
    saturated = satisfied and max_abs(bound - F_Q) <= tol * scale
    return BoundReport(name, margin, bool(satisfied), bool(saturated), bound, F_Q, "matrix")


def compare_form(name: str, bound_value: float, value: float, tol: float = REPORT_TOL,
                 matrix=None, direction=None) -> BoundReport:
    """Check value <= bound_value for a quadratic form along one direction."""
    scale = 1.0 + abs(bound_value)
    margin = float(bound_value - value)
    satisfied = margin >= -tol * scale
    saturated = satisfied and abs(margin) <= tol * scale
    details = {"bound_value": float(bound_value), "value": float(value)}
    if direction is not None:
        details["direction"] = list(direction)
    return BoundReport(name, margin, bool(satisfied), bool(saturated), matrix, None, "direction", details)


def _particle_structured(state: QuantumState) -> bool:
    return (state.terms is not None and state.basis.kind == "particles"
            and all(len(fb.registers) == 1 for fb in state.factor_bases))


def _mode_groups(state: QuantumState):
    """Mode sets of the factors of a mode-factorized mixture, or None."""
    if state.terms is None:
        return None
    try:
        return factor_modes(state)
    except NoStructure:
        return None


def particle_separable_covariance(state: QuantumState) -> np.ndarray:
    """Sum_i Gamma[rho^(i), H^(i)] over the reduced single-particle states."""
    n = len(state.basis.registers)
    total = 0.0
    for i in range(n):
        red = reduce_particle(state, i)
        total = total + covariance_matrix(red, build_generators(red.basis))
    return np.asarray(total)


def group_covariance(state: QuantumState, groups) -> np.ndarray:
    """Block-diagonal covariance of the product of reduced states on the given mode groups."""
    M = state.basis.config.M
    out = np.zeros((M, M))
    for g in groups:
        red = reduce_modes_structured(state, g)
        cov = covariance_matrix(red, build_generators(red.basis))
        idx = sorted(g)
        out[np.ix_(idx, idx)] = cov[np.ix_(idx, idx)]
    return out


def check_state_dependent_bounds(state: QuantumState, gens: GeneratorSet, direction=None,
                                 classes: Sequence[str] | None = None,
                                 F_Q: np.ndarray | None = None) -> list:
    """State-dependent bounds as BoundReports.

    * ``particle-sep``: F_Q <= 4 sum_i Gamma[rho^(i)]
    * ``mode-sep``: F_Q <= 4 diag(Var_k[rho_k])
    * ``lambda-sep``: F_Q <= 4 Gamma[rho_A1 x ... x rho_AL] for the factor groups
    * ``cauchy-schwarz``: n^T F_Q n <= 4 n^T Gamma^n n with Gamma^n = v v^T, v_k = eps_k Delta H_k

    With ``classes=None`` every class whose structure the state carries is checked.
    """
    M = gens.M
    if F_Q is None:
        F_Q = qfi_matrix(state, gens)
    groups = _mode_groups(state)
    auto = classes is None
    if auto:
        classes = []
        if _particle_structured(state):
            classes.append("particle-sep")
        if groups is not None:
            if all(len(g) <= 1 for g in groups):
                classes.append("mode-sep")
            else:
                classes.append("lambda-sep")
        classes.append("cauchy-schwarz")
    reports = []
    for cls in classes:
        if cls == "particle-sep":
            if not _particle_structured(state):
                raise NoStructure("particle-separable check needs a product-of-particles decomposition")
            bound = 4.0 * particle_separable_covariance(state)
            reports.append(compare_matrix("particle_separable_state", bound, F_Q))
        elif cls in ("mode-sep", "lambda-sep"):
            if groups is None:
                raise NoStructure(f"{cls} check needs a mode-factorized decomposition")
            if cls == "mode-sep" and any(len(g) > 1 for g in groups):
                raise NoStructure("factors span several modes; the state is not mode-factorized")
            gs = [g for g in groups if g]
            bound = 4.0 * group_covariance(state, gs)
            name = "mode_separable_state" if cls == "mode-sep" else "lambda_separable_state"
            rep = compare_matrix(name, bound, F_Q)
            rep.details["groups"] = [sorted(g) for g in gs]
            reports.append(rep)
        elif cls == "cauchy-schwarz":
            d = Direction.uniform(M) if direction is None else _direction(direction, M)
            var = np.clip(np.diag(covariance_matrix(state, gens)), 0.0, None)
            v = d.signs * np.sqrt(var)
            gamma_n = np.outer(v, v)
            n = d.vector
            reports.append(compare_form("cauchy_schwarz_state", 4.0 * float(n @ gamma_n @ n),
                                        float(n @ F_Q @ n), matrix=4.0 * gamma_n, direction=d.n))
        else:
            raise InvalidArgs(f"unknown bound class {cls!r}")
    return reports


__all__ = [
    "MomentData", "moments_from_state", "resolve_moments",
    "shot_noise_bound", "mode_separable_bound", "p_producible_bound",
    "QuadraticBound", "heisenberg_bound", "heisenberg_bound_fixed", "partition_bound",
    "weak_qcrb", "shot_noise_rank", "s_max", "gain_factor", "gain_table", "gain_from_states",
    "product_covariance", "localization_envelope",
    "BoundReport", "compare_matrix", "compare_form", "check_state_dependent_bounds",
    "particle_separable_covariance", "group_covariance",
]
