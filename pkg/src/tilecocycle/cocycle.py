"""Spectral cocycle over the toral endomorphism z -> M^T z mod Z^s."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import UsageError, ZeroVector
from .substitution import SubstitutionSystem, matrix_power_exact, substitution_matrix

TWO_PI = 2.0 * math.pi


def reduce_torus(z) -> np.ndarray:
    z = np.mod(np.asarray(z, dtype=float), 1.0)
    z[z >= 1.0] = 0.0
    return z


def integer_step(A: np.ndarray, Z) -> np.ndarray:
    """A z mod Z^s along the last axis of Z, for an integer matrix A.

    Products are reduced mod 1 one at a time and summed in a fixed order, so
    single points and batches follow bit-identical orbits (the map is
    expanding, so any difference in rounding would grow).
    """
    Z = np.asarray(Z, dtype=float)
    A = np.asarray(A)
    out = np.empty_like(Z)
    for a in range(A.shape[0]):
        acc = np.zeros(Z.shape[:-1])
        for b in range(A.shape[1]):
            if A[a, b]:
                acc = acc + np.mod(float(A[a, b]) * Z[..., b], 1.0)
        out[..., a] = acc
    return reduce_torus(out)


def torus_step(sys: SubstitutionSystem, z: np.ndarray, k: int = 1) -> np.ndarray:
    for _ in range(k):
        z = integer_step(sys.MT, z)
    return z


def fourier_matrix(sys: SubstitutionSystem, z) -> np.ndarray:
    """Entry (j, k) is the sum of exp(-2 pi i <z, x>) over x in digits[j][k]."""
    z = reduce_torus(z)
    rows, cols, dig = sys.flat_digits
    # reduce each product mod 1 before summing so the phase stays O(1)
    phase = np.mod(np.mod(dig * z, 1.0).sum(axis=1), 1.0)
    w = np.exp(-1j * TWO_PI * phase)
    flat = rows * sys.m + cols
    re = np.bincount(flat, weights=w.real, minlength=sys.m * sys.m)
    im = np.bincount(flat, weights=w.imag, minlength=sys.m * sys.m)
    return (re + 1j * im).reshape(sys.m, sys.m)


def cocycle_matrix(sys: SubstitutionSystem, z, n: int) -> np.ndarray:
    """Unrenormalized product M(A^{n-1} z) ... M(z), A = M^T."""
    z = reduce_torus(z)
    P = np.eye(sys.m, dtype=complex)
    for _ in range(n):
        P = fourier_matrix(sys, z) @ P
        z = torus_step(sys, z)
    return P


@dataclass
class CocycleResult:
    log_norm: float
    unit_matrix: np.ndarray
    steps: int
    trail: Optional[np.ndarray] = None

    def matrix(self) -> np.ndarray:
        return math.exp(self.log_norm) * self.unit_matrix


def _norm(P: np.ndarray, norm: str) -> float:
    if norm == "fro":
        return float(np.linalg.norm(P))
    if norm == "op":
        return float(np.linalg.norm(P, 2))
    raise UsageError(f"unknown norm {norm!r}")


def cocycle_product(sys: SubstitutionSystem, z, n: int, norm: str = "fro",
                    keep_trail: bool = False) -> CocycleResult:
    if n < 1:
        raise UsageError("n must be at least 1")
    z = reduce_torus(z)
    P = np.eye(sys.m, dtype=complex)
    log_norm = 0.0
    trail = np.empty(n) if keep_trail else None
    for i in range(n):
        P = fourier_matrix(sys, z) @ P
        nrm = _norm(P, norm)
        if nrm == 0.0:
            log_norm = -math.inf
            if keep_trail:
                trail[i:] = -math.inf
            break
        P /= nrm
        log_norm += math.log(nrm)
        if keep_trail:
            trail[i] = log_norm / (i + 1)
        z = torus_step(sys, z)
    return CocycleResult(log_norm, P, n, trail)


def _window(N: int, window: Optional[int]) -> int:
    if window is None:
        window = max(1, N // 10)
    if not 1 <= window <= N:
        raise UsageError("need N >= window >= 1")
    return window


def lyapunov(sys: SubstitutionSystem, z, N: int, window: Optional[int] = None,
             norm: str = "fro"):
    """Upper Lyapunov exponent estimate: max of (1/n) log||M(z, n)|| over n in [N - window, N]."""
    window = _window(N, window)
    res = cocycle_product(sys, z, N, norm=norm, keep_trail=True)
    trail = res.trail
    lo = max(N - window, 1)
    return float(trail[lo - 1:].max()), trail


def fourier_matrices(sys: SubstitutionSystem, Z) -> np.ndarray:
    """fourier_matrix for a batch of torus points; shape (len(Z), m, m)."""
    Z = reduce_torus(np.atleast_2d(Z))
    rows, cols, dig = sys.flat_digits
    phase = np.mod(np.mod(dig[None, :, :] * Z[:, None, :], 1.0).sum(axis=2), 1.0)
    w = np.exp(-1j * TWO_PI * phase)
    scatter = np.zeros((len(rows), sys.m * sys.m))
    scatter[np.arange(len(rows)), rows * sys.m + cols] = 1.0
    return (w @ scatter).reshape(-1, sys.m, sys.m)


def lyapunov_batch(sys: SubstitutionSystem, Z, N: int, window: Optional[int] = None) -> np.ndarray:
    """lyapunov (Frobenius norm) for each row of Z at once."""
    window = _window(N, window)
    Z = reduce_torus(np.atleast_2d(np.asarray(Z, dtype=float)))
    B = Z.shape[0]
    P = np.broadcast_to(np.eye(sys.m, dtype=complex), (B, sys.m, sys.m)).copy()
    log_norm = np.zeros(B)
    best = np.full(B, -math.inf)
    lo = max(N - window, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(N):
            P = fourier_matrices(sys, Z) @ P
            nrm = np.sqrt((np.abs(P) ** 2).sum(axis=(1, 2)))
            dead = nrm == 0.0
            P /= np.where(dead, 1.0, nrm)[:, None, None]
            log_norm = np.where(dead | np.isneginf(log_norm), -math.inf, log_norm + np.log(np.where(dead, 1.0, nrm)))
            if i + 1 >= lo:
                best = np.maximum(best, log_norm / (i + 1))
            Z = integer_step(sys.MT, Z)
    return best


def lyapunov_directional(sys: SubstitutionSystem, z, zeta, N: int,
                         window: Optional[int] = None, precision: Optional[int] = None) -> float:
    """Growth rate of M(z, n) zeta with per-step renormalization of the vector.

    Rounding errors re-inject the dominant direction at relative size ~1e-16
    per step, so for vectors in a slower invariant subspace double precision
    only resolves the slow rate for roughly 16 / log10(gap) steps. Pass
    ``precision`` (decimal digits) to run the iteration in mpmath instead.
    """
    window = _window(N, window)
    if precision is not None:
        if all(abs(c) == 0 for c in zeta):
            raise ZeroVector("zeta must be nonzero")
        return _lyapunov_directional_mp(sys, z, zeta, N, window, precision)
    zeta = np.asarray(zeta, dtype=complex)
    nrm = float(np.linalg.norm(zeta))
    if nrm == 0.0:
        raise ZeroVector("zeta must be nonzero")
    z = reduce_torus(z)
    v = zeta / nrm
    log_norm = 0.0
    trail = np.empty(N)
    for i in range(N):
        v = fourier_matrix(sys, z) @ v
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            trail[i:] = -math.inf
            break
        v /= nv
        log_norm += math.log(nv)
        trail[i] = log_norm / (i + 1)
        z = torus_step(sys, z)
    lo = max(N - window, 1)
    return float(trail[lo - 1:].max())


def _fourier_matrix_mp(sys: SubstitutionSystem, z, mp):
    rows, cols, dig = sys.flat_digits
    F = [[mp.mpc(0) for _ in range(sys.m)] for _ in range(sys.m)]
    for j, k, x in zip(rows, cols, dig):
        t = mp.fsum(zi * int(xi) for zi, xi in zip(z, x))
        t = t - mp.floor(t)
        F[j][k] += mp.expjpi(-2 * t)
    return F


def _lyapunov_directional_mp(sys, z, zeta, N, window, precision):
    import mpmath

    ctx = mpmath.mp.clone()
    ctx.dps = int(precision)
    MT = [[int(v) for v in row] for row in sys.MT]
    zc = [ctx.mpf(float(v)) for v in reduce_torus(z)]
    # mpmath entries are kept as they are, so callers can pass vectors built at full precision
    v = [ctx.mpc(c) if hasattr(c, "_mpf_") or hasattr(c, "_mpc_") else ctx.mpc(complex(c)) for c in zeta]
    log_norm = ctx.mpf(0)
    trail = np.empty(N)
    prev_z, F = None, None
    for i in range(N):
        if zc != prev_z:
            F = _fourier_matrix_mp(sys, zc, ctx)
            prev_z = list(zc)
        v = [ctx.fsum(F[j][k] * v[k] for k in range(sys.m)) for j in range(sys.m)]
        nv = ctx.sqrt(ctx.fsum(abs(c) ** 2 for c in v))
        if nv == 0:
            trail[i:] = -math.inf
            break
        v = [c / nv for c in v]
        log_norm += ctx.log(nv)
        trail[i] = float(log_norm / (i + 1))
        zc = [ctx.fsum(MT[a][b] * zc[b] for b in range(sys.s)) for a in range(sys.s)]
        zc = [c - ctx.floor(c) for c in zc]
    lo = max(N - window, 1)
    return float(trail[lo - 1:].max())


def directional_precision(sys: SubstitutionSystem, N: int, guard: int = 30) -> int:
    """Decimal digits that keep the PF re-injection below the slow component for N steps."""
    w = np.sort(np.abs(np.linalg.eigvals(substitution_matrix(sys).astype(float))))[::-1]
    gap = w[0] / max(w[1], 1e-300)
    return guard + int(math.ceil(N * math.log10(max(gap, 1.0))))


def pf_orthogonal_vector(sys: SubstitutionSystem, precision: int, seed_index: int = 0) -> list:
    """e_i minus its projection on the tile-frequency vector, at ``precision`` digits.

    The frequency vector is the PF eigenvector of S, i.e. the PF left
    eigenvector of S^T, so the result spans an S^T-invariant complement.
    """
    import mpmath

    ctx = mpmath.mp.clone()
    ctx.dps = int(precision)
    S = ctx.matrix([[int(v) for v in row] for row in substitution_matrix(sys)])
    w, V = ctx.eig(S)
    i = max(range(len(w)), key=lambda t: ctx.re(w[t]))
    r = [ctx.re(V[t, i]) for t in range(sys.m)]
    rr = ctx.fsum(c * c for c in r)
    zeta = [(1 if t == seed_index else 0) - r[t] * r[seed_index] / rr for t in range(sys.m)]
    return [ctx.mpc(c) for c in zeta]


def transpose_power(sys: SubstitutionSystem, n: int) -> np.ndarray:
    return matrix_power_exact(substitution_matrix(sys).T, n)


def domination_check(sys: SubstitutionSystem, z, n: int, tol: float = 1e-9) -> bool:
    """|M(z, n)_{jk}| <= ((S^T)^n)_{jk} entrywise."""
    if n > 12:
        raise UsageError("domination_check needs n <= 12")
    P = cocycle_matrix(sys, z, n)
    bound = transpose_power(sys, n).astype(float)
    return bool((np.abs(P) <= bound + tol).all())
