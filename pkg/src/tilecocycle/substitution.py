"""Substitution systems in integer address coordinates.

A system stores, for every ordered pair of prototiles (j, k), the addresses of
the copies of prototile k inside the inflated prototile j. Geometry enters only
through a shape matrix applied late, so all combinatorics are exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InconsistentDriver, NotPrimitive, OverflowGuard, UsageError

INT64_GUARD = 2 ** 62
MAX_PATCH_TILES = 5_000_000


@dataclass(frozen=True)
class SubstitutionSystem:
    name: str
    m: int
    s: int
    d: int
    digits: tuple  # digits[j][k] = tuple of address tuples
    driver: tuple  # s x s integer matrix M with alpha(phi x) = M alpha(x)
    theta: float
    default_shape: tuple  # d x s floats
    labels: tuple = ()
    basis: tuple = ()
    # generators of each prototile parallelogram, as pairs of basis indices
    tile_spans: Optional[tuple] = None

    def __post_init__(self):
        if len(self.digits) != self.m or any(len(row) != self.m for row in self.digits):
            raise UsageError("digits must be an m x m table")
        for row in self.digits:
            for cell in row:
                for x in cell:
                    if len(x) != self.s:
                        raise UsageError(f"address {x} does not have length s={self.s}")
        if np.shape(self.driver) != (self.s, self.s):
            raise UsageError("driver must be s x s")
        if np.shape(self.default_shape) != (self.d, self.s):
            raise UsageError("default shape must be d x s")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(self.m)))
        if not self.basis:
            object.__setattr__(self, "basis", tuple(f"e{i}" for i in range(self.s)))

    @cached_property
    def M(self) -> np.ndarray:
        return np.array(self.driver, dtype=np.int64)

    @cached_property
    def MT(self) -> np.ndarray:
        return self.M.T.copy()

    @cached_property
    def shape0(self) -> np.ndarray:
        return np.array(self.default_shape, dtype=float)

    @cached_property
    def flat_digits(self):
        """(rows, cols, addresses) with one entry per digit, ordered by (j, k)."""
        rows, cols, addrs = [], [], []
        for j in range(self.m):
            for k in range(self.m):
                for x in self.digits[j][k]:
                    rows.append(j)
                    cols.append(k)
                    addrs.append(x)
        a = np.array(addrs, dtype=np.int64).reshape(-1, self.s)
        return np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), a

    def label(self, k: int) -> str:
        return self.labels[k]

    # JSON schema round trip
    def to_json_dict(self) -> dict:
        out = {
            "name": self.name,
            "m": self.m,
            "s": self.s,
            "d": self.d,
            "theta": float(self.theta),
            "driver": [[int(v) for v in row] for row in self.driver],
            "digits": [[[list(map(int, x)) for x in cell] for cell in row] for row in self.digits],
            "defaultShape": [[float(v) for v in row] for row in self.default_shape],
            "labels": list(self.labels),
            "basis": list(self.basis),
        }
        if self.tile_spans is not None:
            out["tileSpans"] = [list(p) for p in self.tile_spans]
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> "SubstitutionSystem":
        try:
            return cls(
                name=str(data["name"]),
                m=int(data["m"]),
                s=int(data["s"]),
                d=int(data["d"]),
                digits=tuple(tuple(tuple(tuple(int(v) for v in x) for x in cell) for cell in row)
                             for row in data["digits"]),
                driver=tuple(tuple(int(v) for v in row) for row in data["driver"]),
                theta=float(data["theta"]),
                default_shape=tuple(tuple(float(v) for v in row) for row in data["defaultShape"]),
                labels=tuple(data.get("labels", ())),
                basis=tuple(data.get("basis", ())),
                tile_spans=(tuple(tuple(int(v) for v in p) for p in data["tileSpans"])
                            if data.get("tileSpans") is not None else None),
            )
        except (KeyError, TypeError) as exc:
            raise UsageError(f"malformed model JSON: {exc!r}") from exc

    def dumps(self) -> str:
        # repr of a float is the shortest string that round-trips, at most 17 significant digits
        return json.dumps(self.to_json_dict(), indent=1)

    @classmethod
    def loads(cls, text: str) -> "SubstitutionSystem":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"invalid JSON: {exc}") from exc
        return cls.from_json_dict(data)


@dataclass
class Patch:
    """Tiles of a supertile: parallel arrays of types and integer addresses."""
    types: np.ndarray
    addrs: np.ndarray
    level: int
    root: int

    def __len__(self) -> int:
        return len(self.types)

    @property
    def tiles(self) -> list:
        return [(int(t), tuple(int(v) for v in a)) for t, a in zip(self.types, self.addrs)]


@dataclass
class Hierarchy:
    """Supertile expansion keeping every intermediate level.

    ``stages[t]`` is the patch after t inflation steps and ``parents[t][i]`` is
    the index in ``stages[t-1]`` of the tile that produced tile i of stage t.
    A tile (k, a) of stage t is the seed of a level-(n - t) supertile whose
    tiles are ``expand_supertile(sys, k, n - t)`` shifted by ``M^(n-t) a``.
    """
    sys: SubstitutionSystem
    stages: list
    parents: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.stages) - 1

    @property
    def leaves(self) -> Patch:
        return self.stages[-1]

    def supertile_anchor(self, t: int) -> np.ndarray:
        """Address offsets of the level-(n - t) supertiles seeded at stage t."""
        P = matrix_power_exact(self.sys.M, self.n - t)
        return _apply(P, self.stages[t].addrs)

    def ancestor_index(self, t: int) -> np.ndarray:
        """For every leaf, the index of its ancestor in stage t."""
        idx = np.arange(len(self.leaves))
        for u in range(self.n, t, -1):
            idx = self.parents[u][idx]
        return idx


def substitution_matrix(sys: SubstitutionSystem) -> np.ndarray:
    """S[j, k] = number of type-j tiles in the image of prototile k."""
    S = np.zeros((sys.m, sys.m), dtype=np.int64)
    for j in range(sys.m):
        for k in range(sys.m):
            S[j, k] = len(sys.digits[k][j])
    return S


def is_primitive(S) -> bool:
    S = np.asarray(S)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise UsageError("square matrix required")
    if (S < 0).any():
        raise UsageError("non-negative matrix required")
    m = S.shape[0]
    B = (S > 0).astype(np.int64)
    P = np.eye(m, dtype=np.int64)
    for _ in range((m - 1) ** 2 + 1):
        P = ((P @ B) > 0).astype(np.int64)
    return bool((P > 0).all())


def matrix_power_exact(M: np.ndarray, n: int) -> np.ndarray:
    """M^n with Python integers; returned as int64 when it fits, else object dtype."""
    P = [[int(i == j) for j in range(M.shape[0])] for i in range(M.shape[0])]
    A = [[int(v) for v in row] for row in M]
    for _ in range(n):
        P = [[sum(P[i][t] * A[t][j] for t in range(len(A))) for j in range(len(A))] for i in range(len(A))]
    if max((abs(v) for row in P for v in row), default=0) < INT64_GUARD:
        return np.array(P, dtype=np.int64)
    return np.array(P, dtype=object)


def _apply(P: np.ndarray, addrs: np.ndarray) -> np.ndarray:
    """Rows of addrs mapped by x -> P x, with an overflow guard for int64."""
    if P.dtype == object or addrs.dtype == object:
        return np.array([[sum(int(P[i, t]) * int(a[t]) for t in range(P.shape[1])) for i in range(P.shape[0])]
                         for a in addrs], dtype=object).reshape(-1, P.shape[0])
    if len(addrs):
        bound = float(np.abs(P).sum(axis=1).max()) * float(np.abs(addrs).max())
        if bound >= INT64_GUARD:
            raise OverflowGuard("address coordinates would exceed 64-bit range; pass exact=True")
    return addrs @ P.T


def _inflate(sys: SubstitutionSystem, patch: Patch, exact: bool):
    """One substitution step in the form (k, a) -> (b, M a + x), x in digits[k][b]."""
    rows, cols, dig = sys.flat_digits
    M = np.array(sys.driver, dtype=object) if exact else sys.M
    base = _apply(M, patch.addrs.astype(object) if exact else patch.addrs)
    types, addrs, parents = [], [], []
    for t in range(len(rows)):
        sel = np.nonzero(patch.types == rows[t])[0]
        if len(sel) == 0:
            continue
        x = dig[t].astype(object) if exact else dig[t]
        new = base[sel] + x
        if not exact and len(new) and np.abs(new).max() >= INT64_GUARD:
            raise OverflowGuard("address coordinates would exceed 64-bit range; pass exact=True")
        types.append(np.full(len(sel), cols[t], dtype=np.int64))
        addrs.append(new)
        parents.append(sel)
    if not types:
        empty = np.zeros((0, sys.s), dtype=object if exact else np.int64)
        return Patch(np.zeros(0, dtype=np.int64), empty, patch.level + 1, patch.root), np.zeros(0, dtype=np.int64)
    types = np.concatenate(types)
    addrs = np.concatenate(addrs)
    parents = np.concatenate(parents)
    order = _canonical_order(types, addrs)
    return Patch(types[order], addrs[order], patch.level + 1, patch.root), parents[order]


def _canonical_order(types: np.ndarray, addrs: np.ndarray) -> np.ndarray:
    if addrs.dtype == object:
        keys = [(int(t),) + tuple(int(v) for v in a) for t, a in zip(types, addrs)]
        return np.array(sorted(range(len(keys)), key=keys.__getitem__), dtype=np.int64)
    cols = [addrs[:, i] for i in range(addrs.shape[1] - 1, -1, -1)]
    return np.lexsort(cols + [types])


def patch_size(sys: SubstitutionSystem, j: int, n: int) -> int:
    """Number of tiles in the level-n supertile of j, from exact powers of S."""
    S = [[int(v) for v in row] for row in substitution_matrix(sys)]
    col = [int(k == j) for k in range(sys.m)]
    for _ in range(n):
        col = [sum(S[a][b] * col[b] for b in range(sys.m)) for a in range(sys.m)]
    return sum(col)


def check_patch_size(sys: SubstitutionSystem, j: int, n: int, limit: Optional[int] = None) -> None:
    limit = MAX_PATCH_TILES if limit is None else limit
    size = patch_size(sys, j, n)
    if size > limit:
        raise OverflowGuard(f"level-{n} supertile of {sys.labels[j]} has {size} tiles (limit {limit})")


def root_patch(sys: SubstitutionSystem, j: int, exact: bool = False) -> Patch:
    if not 0 <= j < sys.m:
        raise UsageError(f"prototile index {j} out of range 0..{sys.m - 1}")
    dtype = object if exact else np.int64
    return Patch(np.array([j], dtype=np.int64), np.zeros((1, sys.s), dtype=dtype), 0, j)


def expand_hierarchy(sys: SubstitutionSystem, j: int, n: int, exact: bool = False) -> Hierarchy:
    if n < 0:
        raise UsageError("level must be non-negative")
    check_patch_size(sys, j, n)
    stages = [root_patch(sys, j, exact)]
    parents = [np.zeros(0, dtype=np.int64)]
    for _ in range(n):
        nxt, par = _inflate(sys, stages[-1], exact)
        stages.append(nxt)
        parents.append(par)
    return Hierarchy(sys, stages, parents)


def expand_supertile(sys: SubstitutionSystem, j: int, n: int, exact: bool = False) -> Patch:
    """Tiles of the level-n supertile of prototile j, sorted by (type, address).

    Uses 64-bit integers with overflow detection; ``exact=True`` switches to
    arbitrary precision Python integers.
    """
    patch = root_patch(sys, j, exact)
    if n < 0:
        raise UsageError("level must be non-negative")
    check_patch_size(sys, j, n)
    for _ in range(n):
        patch, _ = _inflate(sys, patch, exact)
    return patch


def tile_census(sys: SubstitutionSystem, j: int, n: int) -> np.ndarray:
    patch = expand_supertile(sys, j, n)
    return np.bincount(patch.types, minlength=sys.m).astype(np.int64)


@dataclass(frozen=True)
class PFData:
    pf_value: float
    right: np.ndarray
    left: np.ndarray
    second_modulus: float
    eigenvalues: np.ndarray


def pf_data(S) -> PFData:
    """Perron-Frobenius data of a primitive matrix.

    ``right`` sums to 1 (tile frequencies); ``left`` is scaled so that
    left . right = 1.
    """
    S = np.asarray(S, dtype=float)
    if not is_primitive(S):
        raise NotPrimitive("matrix is not primitive")
    w, V = np.linalg.eig(S)
    i = int(np.argmax(w.real))
    pf = float(w[i].real)
    right = np.abs(V[:, i].real)
    right = right / right.sum()
    wl, U = np.linalg.eig(S.T)
    il = int(np.argmax(wl.real))
    left = np.abs(U[:, il].real)
    left = left / (left @ right)
    others = np.delete(w, i)
    second = float(np.abs(others).max()) if len(others) else 0.0
    return PFData(pf, right, left, second, w)


def driver_consistency(sys: SubstitutionSystem, samples: int,
                       oracle: Callable[[Sequence[int]], Sequence[int]],
                       seed: int = 0, bound: int = 1000) -> bool:
    """Compare M x with a geometric multiplication oracle on random integer vectors."""
    rng = np.random.default_rng(seed)
    M = [[int(v) for v in row] for row in sys.driver]
    for _ in range(samples):
        x = [int(v) for v in rng.integers(-bound, bound + 1, size=sys.s)]
        got = tuple(sum(M[i][t] * x[t] for t in range(sys.s)) for i in range(sys.s))
        expected = tuple(int(v) for v in oracle(x))
        if got != expected:
            raise InconsistentDriver(tuple(x), expected, got)
    return True
