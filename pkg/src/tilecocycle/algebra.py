"""Classification and roots of the cubic f(z) = z^3 - p z^2 + q z + r."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

from .errors import Degenerate, NoComplexRoot, UsageError

REDUCIBLE = "Reducible"
THREE_REAL = "ThreeRealRoots"
COMPLEX_NON_PERRON = "ComplexNonPerron"
COMPLEX_PISOT = "ComplexPisot"
STRONGLY_NON_PISOT = "ComplexPerronStronglyNonPisot"

UNIT_TIE_TOL = 1e-12


@dataclass(frozen=True)
class CubicParams:
    p: int
    q: int
    r: int

    def __post_init__(self):
        for name in ("p", "q", "r"):
            if not isinstance(getattr(self, name), int) or isinstance(getattr(self, name), bool):
                raise UsageError(f"{name} must be an integer")
        if self.p < 0 or self.q < 0 or self.r < 1:
            raise UsageError(f"need p >= 0, q >= 0, r >= 1; got {(self.p, self.q, self.r)}")

    def f(self, z):
        return z ** 3 - self.p * z ** 2 + self.q * z + self.r

    def df(self, z):
        return 3 * z ** 2 - 2 * self.p * z + self.q


@dataclass(frozen=True)
class CubicClass:
    tag: str
    params: CubicParams
    integer_root: Optional[int]
    lam: Optional[complex]
    real_root: float
    roots: tuple

    @property
    def lambda_modulus(self) -> Optional[float]:
        return None if self.lam is None else abs(self.lam)

    @property
    def weak_mixing(self) -> Optional[bool]:
        """Weak mixing of the undeformed Kenyon tiling space, None outside the Perron classes."""
        if self.tag == STRONGLY_NON_PISOT:
            return True
        if self.tag == COMPLEX_PISOT:
            return False
        return None

    def label(self) -> str:
        if self.tag == REDUCIBLE:
            return f"Reducible({self.integer_root})"
        return self.tag


def _divisors(n: int) -> list[int]:
    out = []
    for k in range(1, math.isqrt(n) + 1):
        if n % k == 0:
            out.extend({k, n // k})
    return sorted(out)


def integer_root(params: CubicParams) -> Optional[int]:
    """Smallest-modulus integer root, searched exactly over the signed divisors of r."""
    for k in _divisors(params.r):
        for c in (-k, k):
            if params.f(c) == 0:
                return c
    return None


def has_complex_root(params: CubicParams) -> bool:
    """Exact integer form of the complex-root test.

    With D = p^2 - 3q the test reads p^2 < 3q, or 27r + p^3 - 3pD > 2 D sqrt(D).
    Squaring the second inequality keeps everything in integers.
    """
    p, q, r = params.p, params.q, params.r
    D = p * p - 3 * q
    if D < 0:
        return True
    T = 27 * r + p ** 3 - 3 * p * D
    if T < 0:
        return False
    lhs, rhs = T * T, 4 * D ** 3
    if lhs == rhs:
        raise Degenerate(f"repeated real root for {(p, q, r)}")
    return lhs > rhs


def _newton(params: CubicParams, z: complex, steps: int = 50) -> complex:
    for _ in range(steps):
        d = params.df(z)
        if d == 0:
            break
        step = params.f(z) / d
        z -= step
        if abs(step) <= 1e-17 * max(1.0, abs(z)):
            break
    return z


def cubic_roots(params: CubicParams) -> tuple[complex, complex, complex]:
    """All three roots: Cardano seed, then Newton polish."""
    p, q, r = params.p, params.q, params.r
    # z = t + p/3 gives t^3 + a t + b = 0
    a = q - p * p / 3.0
    b = r + p * q / 3.0 - 2.0 * p ** 3 / 27.0
    disc = cmath.sqrt(b * b / 4.0 + a ** 3 / 27.0)
    u3 = -b / 2.0 + disc
    if abs(u3) < 1e-300:
        u3 = -b / 2.0 - disc
    omega = complex(-0.5, math.sqrt(3) / 2)
    if abs(u3) < 1e-300:
        seeds = [complex(p / 3.0)] * 3
    else:
        u = u3 ** (1.0 / 3.0)
        seeds = []
        for k in range(3):
            uk = u * omega ** k
            seeds.append(uk - a / (3.0 * uk) + p / 3.0)
    roots = [_newton(params, s) for s in seeds]
    return tuple(roots)


def classify_cubic(params: CubicParams) -> CubicClass:
    k = integer_root(params)
    roots = cubic_roots(params)
    reals = sorted((z for z in roots if abs(z.imag) < 1e-9 * max(1.0, abs(z))), key=lambda z: -abs(z))
    try:
        complex_exists = has_complex_root(params)
    except Degenerate:
        if k is None:
            raise
        complex_exists = False
    lam = None
    if complex_exists:
        real_root = _real_root(params, roots)
        lam = _complex_from_real(params, real_root)
        roots = (lam, lam.conjugate(), complex(real_root))
    else:
        real_root = reals[0].real if reals else roots[0].real
    if k is not None:
        return CubicClass(REDUCIBLE, params, k, lam, real_root, roots)
    if not complex_exists:
        return CubicClass(THREE_REAL, params, None, None, real_root, roots)
    if abs(abs(real_root) - 1.0) <= UNIT_TIE_TOL:
        raise Degenerate(f"real root within {UNIT_TIE_TOL} of the unit circle for {params}")
    if params.p == 0 and params.q == 0:
        tag = COMPLEX_NON_PERRON
    elif params.r > params.p + params.q + 1:
        tag = STRONGLY_NON_PISOT
    else:
        tag = COMPLEX_PISOT
    return CubicClass(tag, params, None, lam, real_root, roots)


def _real_root(params: CubicParams, roots) -> float:
    # single real root: the seed with the smallest imaginary part, polished on the real line
    z = min(roots, key=lambda w: abs(w.imag))
    x = z.real
    for _ in range(50):
        d = params.df(x)
        if d == 0:
            break
        step = params.f(x) / d
        x -= step
        if abs(step) <= 1e-17 * max(1.0, abs(x)):
            break
    return x


def _complex_from_real(params: CubicParams, beta: float) -> complex:
    # f(z) = (z - beta)(z^2 + b z + c) with b = beta - p, c = -r/beta
    b = beta - params.p
    c = -params.r / beta
    lam = complex(-b / 2.0, math.sqrt(max(4.0 * c - b * b, 0.0)) / 2.0)
    lam = _newton(params, lam)
    return complex(lam.real, abs(lam.imag))


def complex_root(params: CubicParams) -> complex:
    """The root with positive imaginary part."""
    if not has_complex_root(params):
        raise NoComplexRoot(f"f has three real roots for {params}")
    return _complex_from_real(params, _real_root(params, cubic_roots(params)))
