"""Concrete substitution systems: the Kenyon (p, q, r) family and a 6x6 square substitution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (COMPLEX_NON_PERRON, COMPLEX_PISOT, REDUCIBLE, STRONGLY_NON_PISOT, THREE_REAL,
                      CubicClass, CubicParams, classify_cubic)
from .errors import NoComplexRoot, NonPerron, Reducible, UsageError
from .substitution import SubstitutionSystem

A, B, C = 0, 1, 2

# Digit conventions for the Kenyon family.
#   "tiling": the B-images of B and C use {p l^2 - r - j l : j = 1..q} and
#             {j l^2 : j = 0..p-1}; the supertiles are interior-disjoint.
#   "offset": the same sets with j = 0..q-1 and {(p - j) l^2 : j = 0..p-1}.
#             Kept for comparison; it stacks two tiles on one address from
#             level 7 on for (1, 1, 1), so it does not generate a tiling.
KENYON_CONVENTIONS = ("tiling", "offset")


@dataclass(frozen=True)
class KenyonModel:
    params: CubicParams
    cubic: CubicClass
    lam: complex
    system: SubstitutionSystem
    convention: str

    @property
    def shape(self) -> np.ndarray:
        return self.system.shape0


def kenyon_digits(p: int, q: int, r: int, convention: str = "tiling") -> tuple:
    if convention not in KENYON_CONVENTIONS:
        raise UsageError(f"unknown digit convention {convention!r}; choose from {KENYON_CONVENTIONS}")
    D = [[[] for _ in range(3)] for _ in range(3)]
    D[A][B] = [(0, 0, 0)]
    D[B][C] = [(-j, 0, p) for j in range(1, r + 1)]
    D[C][A] = [(-j, 0, p) for j in range(1, r + 1)]
    if convention == "tiling":
        D[B][B] = [(-r, -j, p) for j in range(1, q + 1)]
        D[C][B] = [(0, 0, j) for j in range(p)]
    else:
        D[B][B] = [(-r, -j, p) for j in range(q)]
        D[C][B] = [(0, 0, p - j) for j in range(p)]
    return tuple(tuple(tuple(cell) for cell in row) for row in D)


def kenyon_driver(p: int, q: int, r: int) -> tuple:
    """Multiplication by lambda on (1, lambda, lambda^2) coordinates, column convention."""
    return ((0, 0, -r), (1, 0, -q), (0, 1, p))


def kenyon_system(params: CubicParams, convention: str = "tiling") -> KenyonModel:
    cls = classify_cubic(params)
    if cls.tag == REDUCIBLE:
        raise Reducible(cls.integer_root)
    if cls.tag == THREE_REAL:
        raise NoComplexRoot(f"{params}: no complex root, the complex-root inequality fails")
    if cls.tag == COMPLEX_NON_PERRON:
        raise NonPerron(f"{params}: p = q = 0 gives three roots of equal modulus")
    assert cls.tag in (COMPLEX_PISOT, STRONGLY_NON_PISOT)
    p, q, r = params.p, params.q, params.r
    lam = cls.lam
    l2 = lam * lam
    shape = ((1.0, lam.real, l2.real), (0.0, lam.imag, l2.imag))
    system = SubstitutionSystem(
        name=f"kenyon({p},{q},{r})" + ("" if convention == "tiling" else f"[{convention}]"),
        m=3, s=3, d=2,
        digits=kenyon_digits(p, q, r, convention),
        driver=kenyon_driver(p, q, r),
        theta=abs(lam),
        default_shape=shape,
        labels=("A", "B", "C"),
        basis=("1", "lambda", "lambda^2"),
        tile_spans=((0, 1), (1, 2), (0, 2)),
    )
    return KenyonModel(params, cls, lam, system, convention)


def kenyon_multiply_oracle(params: CubicParams):
    """x -> alpha(lambda * alpha^{-1}(x)) by polynomial arithmetic in Z[t]/(f)."""
    p, q, r = params.p, params.q, params.r

    def oracle(x):
        # (n1 + n2 t + n3 t^2) * t = n1 t + n2 t^2 + n3 t^3, then t^3 = p t^2 - q t - r
        poly = [0, x[0], x[1], x[2]]
        c3 = poly.pop()
        poly[2] += p * c3
        poly[1] -= q * c3
        poly[0] -= r * c3
        return poly

    return oracle


# 6x6 digit images, top row first. Rows are either all 2 or a 0/1 word.
SQUARE_GRIDS = (
    ("222222", "222222", "101001", "100101", "222222", "222222"),
    ("222222", "222222", "101001", "101101", "222222", "222222"),
    ("010001", "001100", "222222", "222222", "100100", "100101"),
)
V01, V2, H = 0, 1, 2


@dataclass(frozen=True)
class SquareModel:
    system: SubstitutionSystem
    grids: tuple

    @property
    def shape(self) -> np.ndarray:
        return self.system.shape0


def _row_kind(row: str) -> str:
    kinds = set(row)
    if kinds == {"2"}:
        return "2"
    if kinds <= {"0", "1"}:
        return "01"
    raise UsageError(f"row {row!r} mixes 2 with 0/1")


def square_digits(grids=SQUARE_GRIDS) -> tuple:
    D = [[[] for _ in range(3)] for _ in range(3)]
    for j, grid in enumerate(grids):
        rows = list(reversed(grid))  # bottom-up
        c01 = c2 = 0
        for y, row in enumerate(rows):
            for x, ch in enumerate(row):
                addr = [0, 0, 0]
                addr[V01], addr[V2], addr[H] = c01, c2, x
                D[j][int(ch)].append(tuple(addr))
            if _row_kind(row) == "01":
                c01 += 1
            else:
                c2 += 1
    return tuple(tuple(tuple(cell) for cell in row) for row in D)


def square_system() -> SquareModel:
    system = SubstitutionSystem(
        name="square",
        m=3, s=3, d=2,
        digits=square_digits(),
        driver=((2, 4, 0), (4, 2, 0), (0, 0, 6)),
        theta=6.0,
        # v01 and v2 are unit vertical steps, h the unit horizontal step
        default_shape=((0.0, 0.0, 1.0), (1.0, 1.0, 0.0)),
        labels=("0", "1", "2"),
        basis=("v01", "v2", "h"),
        tile_spans=((H, V01), (H, V01), (H, V2)),
    )
    return SquareModel(system, SQUARE_GRIDS)


def square_multiply_oracle(grids=SQUARE_GRIDS):
    """Row bookkeeping: a vertical stack of rows maps to the stacked rows of its images."""
    def counts(j):
        kinds = [_row_kind(row) for row in grids[j]]
        return kinds.count("01"), kinds.count("2"), len(grids[j][0])

    a01, b01, w01 = counts(0)
    if counts(1) != (a01, b01, w01):
        raise UsageError("tiles 0 and 1 must share a row pattern")
    a2, b2, w2 = counts(2)
    if w01 != w2:
        raise UsageError("images must have equal width")

    def oracle(x):
        out = [0, 0, 0]
        out[V01] = x[V01] * a01 + x[V2] * a2
        out[V2] = x[V01] * b01 + x[V2] * b2
        out[H] = x[H] * w01
        return out

    return oracle


def square_driver_eigen() -> list:
    M = np.array(square_system().system.driver, dtype=float)
    return sorted((float(abs(v)) for v in np.linalg.eigvals(M)), reverse=True)


def driver_oracle(model):
    if isinstance(model, KenyonModel):
        return kenyon_multiply_oracle(model.params)
    if isinstance(model, SquareModel):
        return square_multiply_oracle(model.grids)
    raise UsageError("no geometric oracle for this model")


def get_model(name: str, *args, **kwargs):
    if name == "kenyon":
        return kenyon_system(CubicParams(*args), **kwargs)
    if name == "square":
        return square_system()
    raise UsageError(f"unknown model {name!r}")


MODEL_NAMES = ("kenyon", "square")
