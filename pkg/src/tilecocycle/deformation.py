"""Shape matrices, torus orbits of lifted frequencies and weak-mixing diagnostics."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cocycle import integer_step, reduce_torus
from .errors import Degenerate, RadiusTooLarge, UsageError
from .substitution import SubstitutionSystem


@dataclass(frozen=True)
class ShapeMatrix:
    entries: np.ndarray  # d x s
    basis: str = ""

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2:
            raise UsageError("shape matrix must be 2-dimensional")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def s(self) -> int:
        return self.entries.shape[1]

    def max_minor(self) -> float:
        L = self.entries
        return max(abs(float(np.linalg.det(L[:, list(c)])))
                   for c in itertools.combinations(range(self.s), self.d))

    @classmethod
    def default(cls, sys: SubstitutionSystem) -> "ShapeMatrix":
        return cls(sys.shape0, ",".join(sys.basis))


def as_shape(L, sys: Optional[SubstitutionSystem] = None) -> ShapeMatrix:
    if L is None:
        if sys is None:
            raise UsageError("a system is needed for the default shape")
        return ShapeMatrix.default(sys)
    if isinstance(L, ShapeMatrix):
        return L
    return ShapeMatrix(np.asarray(L, dtype=float))


def lift(L, lam) -> np.ndarray:
    """z = L^T lam reduced mod Z^s."""
    L = as_shape(L)
    return reduce_torus(L.entries.T @ np.asarray(lam, dtype=float))


def torus_distance(z: np.ndarray) -> np.ndarray:
    """Sup-norm distance to Z^s along the last axis."""
    f = np.mod(z, 1.0)
    return np.minimum(f, 1.0 - f).max(axis=-1)


@dataclass
class EpsilonSequence:
    values: np.ndarray  # eps_0 .. eps_N

    def __len__(self) -> int:
        return len(self.values)


def _step_matrix(sys: SubstitutionSystem, k: int) -> np.ndarray:
    A = np.eye(sys.s, dtype=np.int64)
    for _ in range(k):
        A = sys.MT @ A
    return A


def epsilon_matrix(sys: SubstitutionSystem, Z, N: int, k: int = 1) -> np.ndarray:
    """eps_n for a batch of torus points; returns an array of shape (len(Z), N + 1)."""
    if N < 1:
        raise UsageError("N must be at least 1")
    Z = reduce_torus(np.atleast_2d(np.asarray(Z, dtype=float)))
    A = _step_matrix(sys, k)
    out = np.empty((Z.shape[0], N + 1))
    out[:, 0] = torus_distance(Z)
    for n in range(1, N + 1):
        Z = integer_step(A, Z)
        out[:, n] = torus_distance(Z)
    return out


def epsilon_sequence(sys: SubstitutionSystem, z, N: int, k: int = 1,
                     precision: Optional[int] = None) -> EpsilonSequence:
    """Distances of the orbit z, A z, A^2 z, ... (A = (M^T)^k) to the lattice.

    Double precision loses about log10 of the largest expanding eigenvalue
    digits per step; ``precision`` switches to mpmath with that many digits.
    """
    if precision is None:
        return EpsilonSequence(epsilon_matrix(sys, z, N, k)[0])
    import mpmath

    ctx = mpmath.mp.clone()
    ctx.dps = int(precision)
    A = [[int(v) for v in row] for row in _step_matrix(sys, k)]
    zc = [c - ctx.floor(c) for c in (ctx.mpf(v) if not hasattr(v, "_mpf_") else v for v in z)]
    vals = np.empty(N + 1)
    for n in range(N + 1):
        if n:
            zc = [ctx.fsum(A[a][b] * zc[b] for b in range(sys.s)) for a in range(sys.s)]
            zc = [c - ctx.floor(c) for c in zc]
        vals[n] = float(max(min(c, 1 - c) for c in zc))
    return EpsilonSequence(vals)


@dataclass(frozen=True)
class Verdict:
    candidate: bool
    first_escape: Optional[int]
    slope: float
    min_tail_epsilon: float

    @property
    def label(self) -> str:
        return "CandidateEigenvalue" if self.candidate else f"Rejected({self.first_escape})"


def _decay_slope(eps: np.ndarray) -> float:
    n = np.nonzero(eps > 0)[0]
    if len(n) < 2:
        return -math.inf
    return float(np.polyfit(n.astype(float), np.log(eps[n]), 1)[0])


def verdict_from_epsilon(eps: np.ndarray, tol: float) -> Verdict:
    N = len(eps) - 1
    tail_start = N - N // 3
    tail = eps[tail_start:]
    bad = np.nonzero(tail >= tol)[0]
    slope = _decay_slope(eps)
    if len(bad) == 0 and slope < 0:
        return Verdict(True, None, slope, float(tail.min()))
    first = int(tail_start + bad[0]) if len(bad) else None
    return Verdict(False, first, slope, float(tail.min()))


def eigenvalue_test(sys: SubstitutionSystem, L, lam, N: int, tol: float, k: int = 1,
                    precision: Optional[int] = None) -> Verdict:
    """CandidateEigenvalue iff eps_n < tol on the last third of [0, N] and log eps_n decays."""
    if N < 50:
        raise UsageError("eigenvalue_test needs N >= 50")
    L = as_shape(L, sys)
    if precision is None:
        z = lift(L, lam)
    else:
        import mpmath

        ctx = mpmath.mp.clone()
        ctx.dps = int(precision)
        z = [ctx.fsum(ctx.mpf(float(L.entries[i, a])) * ctx.mpf(float(lam[i])) for i in range(L.d))
             for a in range(L.s)]
    eps = epsilon_sequence(sys, z, N, k, precision).values
    return verdict_from_epsilon(eps, tol)


def veech_statistic(sys: SubstitutionSystem, z, N: int, rho: float, k: int = 1) -> float:
    """Fraction of n in (0, N] with eps_n(z) < rho."""
    if not 0 < rho < 0.5 + 1e-15:
        raise UsageError("rho must lie in (0, 1/2]")
    eps = epsilon_sequence(sys, z, N, k).values[1:]
    return float(np.mean(eps < rho))


def rho_default(sys: SubstitutionSystem) -> float:
    norm_inf = int(np.abs(sys.MT).sum(axis=1).max())
    return 2.0 / (norm_inf + 1)


def expanding_dimension(sys: SubstitutionSystem, tol: float = 1e-9):
    mods = np.abs(np.linalg.eigvals(sys.M.astype(float)))
    if (np.abs(mods - 1.0) < tol).any():
        raise Degenerate("driver has an eigenvalue on the unit circle")
    dim = int((mods > 1.0).sum())
    return dim, dim >= sys.d + 1


def sample_deformations(L0, radius: float, count: int, seed, min_minor: Optional[float] = None) -> list:
    """Entrywise uniform perturbations of L0, resampling rank-degenerate draws."""
    L0 = as_shape(L0)
    if radius < 0:
        raise UsageError("radius must be non-negative")
    if min_minor is None:
        min_minor = 0.25 * L0.max_minor()
    rng = np.random.default_rng(seed)
    out, rejected = [], 0
    while len(out) < count:
        L = ShapeMatrix(L0.entries + rng.uniform(-radius, radius, size=L0.entries.shape), L0.basis)
        if L.max_minor() > min_minor:
            out.append(L)
        else:
            rejected += 1
            if rejected > max(count, 10):
                raise RadiusTooLarge(f"more than half of the draws at radius {radius} are rank-degenerate")
    return out


def random_frequencies(rng: np.random.Generator, count: int, d: int = 2,
                       lo: float = 0.1, hi: float = 10.0) -> np.ndarray:
    """Uniform directions with modulus uniform in [lo, hi]."""
    v = rng.normal(size=(count, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * rng.uniform(lo, hi, size=(count, 1))


@dataclass(frozen=True)
class ScanConfig:
    samples: int = 100
    lams_per_sample: int = 20
    radius: float = 0.05
    N: int = 300
    tol: float = 1e-3
    seed: int = 42
    rho: Optional[float] = None
    k: int = 1
    lam_min: float = 0.1
    lam_max: float = 10.0
    # explicit frequencies tested against every deformation instead of random draws
    fixed_lams: Optional[tuple] = None


def _scan_sample(args):
    sys, sid, L, seed, cfg, rho = args
    if cfg.fixed_lams is not None:
        lams = np.array(cfg.fixed_lams, dtype=float).reshape(-1, L.d)
    else:
        lams = random_frequencies(np.random.default_rng(seed), cfg.lams_per_sample, L.d, cfg.lam_min, cfg.lam_max)
    Z = reduce_torus(lams @ L.entries)
    eps = epsilon_matrix(sys, Z, cfg.N, cfg.k)
    rows = []
    for lam, e in zip(lams, eps):
        v = verdict_from_epsilon(e, cfg.tol)
        escape = float(np.mean(e[1:] >= rho))
        rows.append((sid, float(lam[0]), float(lam[1]), v.label, escape, v.min_tail_epsilon))
    return rows


def weak_mixing_scan(sys: SubstitutionSystem, L0, cfg: ScanConfig, jobs: int = 1) -> list:
    """Rows (sample_id, lam_x, lam_y, verdict, escape_fraction, min_tail_epsilon).

    Each deformation draws its frequencies from its own child seed, so the
    rows do not depend on how samples are spread over workers.
    """
    L0 = as_shape(L0, sys)
    rho = rho_default(sys) if cfg.rho is None else cfg.rho
    shape_seed, lam_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    shapes = sample_deformations(L0, cfg.radius, cfg.samples, shape_seed)
    tasks = [(sys, sid, L, child, cfg, rho) for sid, (L, child) in enumerate(zip(shapes, lam_seed.spawn(len(shapes))))]
    if jobs <= 1:
        chunks = map(_scan_sample, tasks)
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            chunks = list(ex.map(_scan_sample, tasks))
    return [row for chunk in chunks for row in chunk]
