"""Monte-Carlo check of the Cramer-Rao chain with grid maximum-likelihood estimation."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bounds import weak_qcrb
from .errors import DimensionMismatch, FlatLikelihood, SingularMatrix, ZeroInformation
from .fisher import Povm
from .hilbert import GeneratorSet, QuantumState
from .linalg import invert_spd

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-300
TIE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    state: QuantumState
    gens: GeneratorSet
    povm: Povm
    true_theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.true_theta, dtype=float).reshape(-1)
        if theta.size != self.gens.M:
            raise DimensionMismatch(f"need {self.gens.M} true phases")
        if self.povm.dim != self.gens.dim or self.state.basis.dim != self.gens.dim:
            raise DimensionMismatch("state, generators and POVM must share one dimension")
        object.__setattr__(self, "true_theta", theta)

    @property
    def M(self) -> int:
        return self.gens.M

    def _kernel(self):
        """Precomputed c_x[a, b] = Pi_x[b, a] rho[a, b] on the support of rho."""
        cached = getattr(self, "_cache", None)
        if cached is None:
            rho = self.state.dm
            mask = np.abs(rho) > 0
            ia, ib = np.nonzero(mask)
            coeff = np.array([e.T[ia, ib] * rho[ia, ib] for e in self.povm.elements])
            de = self.gens.h[:, ia] - self.gens.h[:, ib]   # (M, nnz)
            cached = (coeff, de)
            object.__setattr__(self, "_cache", cached)
        return cached

    def probabilities(self, thetas) -> np.ndarray:
        """p(x|theta) for a batch of parameter vectors, shape (T, X); clipped and renormalized."""
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        coeff, de = self._kernel()
        phase = np.exp(-1j * (thetas @ de))            # (T, nnz)
        p = np.real(phase @ coeff.T)                   # (T, X)
        p = np.clip(p, 0.0, None)
        return p / p.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class Grid:
    """Per-parameter grids centred on ``center`` with the given half width and point count."""

    center: tuple
    half_width: float = 0.5
    points: int = 201

    def axes(self) -> list:
        return [np.linspace(c - self.half_width, c + self.half_width, self.points) for c in self.center]

    @property
    def step(self) -> float:
        return 2.0 * self.half_width / (self.points - 1)


def sample_outcomes(model: MeasurementModel, mu: int, seed: int) -> np.ndarray:
    """Multinomial outcome counts of mu repetitions at the true parameters."""
    p = model.probabilities(model.true_theta)[0]
    rng = np.random.default_rng(seed)
    return rng.multinomial(int(mu), p)


def log_likelihood(counts, model: MeasurementModel, thetas) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    p = model.probabilities(thetas)
    used = counts > 0
    return np.log(np.maximum(p[:, used], LOG_FLOOR)) @ counts[used]


def _refine(values: np.ndarray, i: int, x: np.ndarray) -> float:
    """Vertex of the parabola through the maximum and its neighbours, kept within one step."""
    if i == 0 or i == len(x) - 1:
        return float(x[i])
    y0, y1, y2 = values[i - 1], values[i], values[i + 1]
    denom = y0 - 2 * y1 + y2
    if denom >= 0:
        return float(x[i])
    shift = 0.5 * (y0 - y2) / denom
    shift = max(-1.0, min(1.0, shift))
    return float(x[i] + shift * (x[1] - x[0]))


def _argmax_central(values: np.ndarray) -> np.ndarray:
    """Flat indices of the maximum; among near-ties, the one closest to the grid centre."""
    top = values.max()
    tied = np.flatnonzero(values >= top - TIE_RTOL * max(1.0, abs(top)))
    if tied.size == 1:
        return np.unravel_index(tied[0], values.shape)
    centre = (np.array(values.shape) - 1) / 2.0
    coords = np.array(np.unravel_index(tied, values.shape)).T
    best = tied[np.argmin(np.sum((coords - centre) ** 2, axis=1))]
    return np.unravel_index(best, values.shape)


def mle_estimate(counts, model: MeasurementModel, grid: Grid) -> np.ndarray:
    """Grid maximum likelihood followed by one quadratic refinement per axis."""
    counts = np.asarray(counts)
    if counts.sum() == 0:
        raise FlatLikelihood("no outcomes recorded")
    axes = grid.axes()
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    ll = log_likelihood(counts, model, mesh).reshape([len(a) for a in axes])
    if ll.max() - ll.min() <= 1e-12:
        raise FlatLikelihood("log-likelihood is flat over the grid")
    idx = _argmax_central(ll)
    est = []
    for k, ax in enumerate(axes):
        sl = list(idx)
        sl[k] = slice(None)
        est.append(_refine(ll[tuple(sl)], idx[k], ax))
    return np.array(est)


@dataclass
class EstimationRun:
    mu: int
    records: int
    seed: int
    grid: Grid
    true_theta: np.ndarray
    estimates: np.ndarray
    counts: np.ndarray

    @property
    def empirical_sigma(self) -> np.ndarray:
        if self.records < 2:
            return np.zeros((len(self.true_theta),) * 2)
        return np.atleast_2d(np.cov(self.estimates, rowvar=False, ddof=1))


def run_estimation(model: MeasurementModel, mu: int, records: int, seed: int,
                   grid: Grid | None = None) -> EstimationRun:
    """R records of mu repetitions; record r uses seed + r."""
    grid = grid or Grid(tuple(model.true_theta))
    est = np.zeros((records, model.M))
    all_counts = np.zeros((records, len(model.povm)), dtype=np.int64)
    for r in range(records):
        c = sample_outcomes(model, mu, seed + r)
        all_counts[r] = c
        est[r] = mle_estimate(c, model, grid)
    return EstimationRun(int(mu), int(records), int(seed), grid, model.true_theta.copy(), est, all_counts)


@dataclass
class DirectionSummary:
    direction: list
    empirical: float
    empirical_se: float
    crb: float | None
    weak_classical: float | None
    weak_quantum: float | None
    crb_quantum: float | None
    relative_excess: float | None
    weak_ok: bool | None = None
    chain_ok: bool | None = None


@dataclass
class CrbReport:
    mu: int
    records: int
    degenerate: bool
    bias: list
    bias_se: list
    bias_ok: bool
    directions: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "records": self.records,
            "degenerate": self.degenerate,
            "bias": self.bias,
            "bias_se": self.bias_se,
            "bias_within_3se": self.bias_ok,
            "directions": [vars(d) for d in self.directions],
        }


def crb_report(run: EstimationRun, F, F_Q, directions) -> CrbReport:
    """Empirical n^T Sigma n against n^T F^-1 n / mu and the weak bounds per direction."""
    F = np.asarray(F, dtype=float)
    F_Q = np.asarray(F_Q, dtype=float)
    R, mu = run.records, run.mu
    sigma = run.empirical_sigma
    degenerate = R < 2 or np.allclose(sigma, 0.0)
    mean = run.estimates.mean(axis=0)
    sd = run.estimates.std(axis=0, ddof=1) if R > 1 else np.zeros_like(mean)
    se = sd / np.sqrt(R)
    bias = mean - run.true_theta
    bias_ok = bool(np.all(np.abs(bias) <= 3 * se + 1e-15)) if not degenerate else False
    try:
        Finv = invert_spd(F)
    except SingularMatrix:
        Finv = None
    try:
        FQinv = invert_spd(F_Q)
    except SingularMatrix:
        FQinv = None
    out = CrbReport(mu, R, bool(degenerate), bias.tolist(), se.tolist(), bias_ok)
    for n in directions:
        n = np.asarray(n, dtype=float)
        proj = run.estimates @ n
        emp = float(n @ sigma @ n)
        # standard error of a sample variance under normality
        emp_se = emp * np.sqrt(2.0 / (R - 1)) if R > 1 else float("nan")
        crb = float(n @ Finv @ n) / mu if Finv is not None else None
        crbq = float(n @ FQinv @ n) / mu if FQinv is not None else None
        try:
            weak_c = weak_qcrb(n, F) / mu
        except ZeroInformation:
            weak_c = None
        try:
            weak_q = weak_qcrb(n, F_Q) / mu
        except ZeroInformation:
            weak_q = None
        ref = crb if crb is not None else weak_c
        excess = (emp - ref) / ref if ref else None
        weak_ok = None if (weak_c is None or degenerate) else bool(emp >= weak_c - 3 * emp_se)
        chain_ok = None
        if crb is not None and weak_c is not None:
            chain_ok = bool(weak_c <= crb * (1 + 1e-10))
        out.directions.append(DirectionSummary(
            [float(x) for x in n], emp, float(emp_se), crb, weak_c, weak_q, crbq, excess, weak_ok, chain_ok))
        logger.debug("direction %s: empirical %.4e (mean %.4e)", n, emp, proj.mean())
    return out
