"""Twisted integrals over supertiles and boxes, and local-dimension lower bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .cocycle import cocycle_matrix, cocycle_product, fourier_matrix, torus_step
from .deformation import as_shape, lift
from .errors import BoxTooLarge, UsageError
from .geometry import prototile_edges, realize_patch
from .substitution import Hierarchy, SubstitutionSystem, expand_hierarchy, expand_supertile, pf_data

TWO_PI = 2.0 * math.pi
EXACT_PRODUCT_LEVELS = 20


@dataclass(frozen=True)
class TestFunction:
    psi_hat: Callable[[np.ndarray], np.ndarray]  # lam -> complex m-vector
    description: str = ""

    __test__ = False  # not a pytest class

    def __call__(self, lam) -> np.ndarray:
        return np.asarray(self.psi_hat(np.asarray(lam, dtype=float)), dtype=complex)


def _segment_factor(w):
    # integral of exp(-2 pi i w t) over t in [0, 1]
    return np.exp(-1j * np.pi * w) * np.sinc(w)


def parallelogram_transform(u, v, lam) -> complex:
    """Fourier transform at lam of the indicator of {s u + t v : s, t in [0, 1]}."""
    lam = np.asarray(lam, dtype=float)
    area = abs(u[0] * v[1] - u[1] * v[0])
    return area * _segment_factor(lam @ u) * _segment_factor(lam @ v)


def indicator_functions(sys: SubstitutionSystem, L=None, weights=None) -> TestFunction:
    """psi_k = weights_k times the indicator of prototile k (anchored at its origin)."""
    U, V = prototile_edges(sys, L)
    w = np.ones(sys.m) if weights is None else np.asarray(weights, dtype=float)

    def psi_hat(lam):
        return np.array([w[k] * parallelogram_transform(U[k], V[k], lam) for k in range(sys.m)])

    return TestFunction(psi_hat, "weighted prototile indicators")


def mean_zero_functions(sys: SubstitutionSystem, L=None, seed_index: int = 0) -> TestFunction:
    """Indicators rescaled so that psi_hat(0) is orthogonal to the tile-frequency vector."""
    U, V = prototile_edges(sys, L)
    area = np.abs(U[:, 0] * V[:, 1] - U[:, 1] * V[:, 0])
    freq = pf_data(_smatrix(sys)).right
    c = -freq * freq[seed_index] / (freq @ freq)
    c[seed_index] += 1.0
    tf = indicator_functions(sys, L, c / area)
    return TestFunction(tf.psi_hat, "mean-zero indicator combination")


def zero_function(sys: SubstitutionSystem) -> TestFunction:
    return TestFunction(lambda lam: np.zeros(sys.m, dtype=complex), "zero")


def _smatrix(sys):
    from .substitution import substitution_matrix

    return substitution_matrix(sys)


def _cocycle_vectors(sys: SubstitutionSystem, z, psi_vec: np.ndarray, n: int) -> list:
    """[M(z, i) psi_vec for i = 0..n]."""
    out = [psi_vec.astype(complex)]
    v = out[0]
    for _ in range(n):
        v = fourier_matrix(sys, z) @ v
        out.append(v)
        z = torus_step(sys, z)
    return out


def twisted_supertile_integral(sys: SubstitutionSystem, L, lam, j: int, n: int, psi: TestFunction) -> complex:
    """[M(z, n) psi_hat(lam)](j) with z = L^T lam."""
    if n < 0:
        raise UsageError("n must be non-negative")
    L = as_shape(L, sys)
    z = lift(L, lam)
    vec = psi(lam)
    if n == 0:
        return complex(vec[j])
    if n <= EXACT_PRODUCT_LEVELS:
        return complex((cocycle_matrix(sys, z, n) @ vec)[j])
    res = cocycle_product(sys, z, n)
    return complex(math.exp(res.log_norm) * (res.unit_matrix @ vec)[j])


def twisted_supertile_bruteforce(sys: SubstitutionSystem, L, lam, j: int, n: int, psi: TestFunction) -> complex:
    """Direct sum over the tiles (k, a) of the level-n supertile of exp(-2 pi i <L^T lam, a>) psi_k(lam)."""
    if n > 12:
        raise UsageError("brute force limited to n <= 12")
    L = as_shape(L, sys)
    patch = expand_supertile(sys, j, n)
    return _direct_sum(L, lam, patch.types, patch.addrs, psi)


def _direct_sum(L, lam, types, addrs, psi) -> complex:
    lam = np.asarray(lam, dtype=float)
    pos = addrs.astype(float) @ L.entries.T
    phase = np.exp(-1j * TWO_PI * np.mod(pos @ lam, 1.0))
    return complex((phase * psi(lam)[types]).sum())


def translated_supertile_integral(sys: SubstitutionSystem, L, lam, j: int, n: int, y, psi: TestFunction) -> complex:
    lam = np.asarray(lam, dtype=float)
    ph = np.exp(-1j * TWO_PI * float(np.asarray(y, dtype=float) @ lam))
    return ph * twisted_supertile_integral(sys, L, lam, j, n, psi)


# box decomposition

@dataclass
class RealizedHierarchy:
    hierarchy: Hierarchy
    shape: object
    realized: object  # RealizedPatch of the leaves
    center: np.ndarray
    inradius: float

    @property
    def sys(self) -> SubstitutionSystem:
        return self.hierarchy.sys


def seed_hierarchy(sys: SubstitutionSystem, L, j: int, n: int, center=None) -> RealizedHierarchy:
    """Level-n supertile of type j with its full hierarchy; the box center defaults to its deepest point."""
    from shapely.geometry import Point
    from shapely.ops import polylabel

    from .geometry import _union

    L = as_shape(L, sys)
    H = expand_hierarchy(sys, j, n)
    realized = realize_patch(sys, L, H.leaves)
    U = _union(realized.polygons)
    if U.geom_type != "Polygon":
        U = max(U.geoms, key=lambda g: g.area)
    if center is None:
        c = polylabel(U, tolerance=1e-6 * math.sqrt(U.area))
        center = np.array([c.x, c.y])
    center = np.asarray(center, dtype=float)
    inr = float(U.exterior.distance(Point(*center)))
    if not U.contains(Point(*center)):
        inr = 0.0
    return RealizedHierarchy(H, L, realized, center, inr)


@dataclass
class BoxDecomposition:
    R: float
    counts: np.ndarray  # counts[i, k]: level-i supertiles of type k inside the box
    assigned: list  # per level i, indices into hierarchy stage n - i
    leftover: np.ndarray  # leaf indices meeting the box but not covered
    inside_leaves: np.ndarray  # leaf indices contained in the box

    def level_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)


def _box_flags(polys: np.ndarray, center: np.ndarray, R: float, tol: float = 1e-12):
    rel = polys - center
    inside = (np.abs(rel) <= R + tol).all(axis=(1, 2))
    # convex polygon meets the open box iff their projections overlap on both axes and on polygon normals
    lo, hi = rel.min(axis=1), rel.max(axis=1)
    meets = ((lo < R) & (hi > -R)).all(axis=1)
    E = np.roll(rel, -1, axis=1) - rel
    normals = np.stack([-E[..., 1], E[..., 0]], axis=-1)
    corners = np.array([[-R, -R], [R, -R], [R, R], [-R, R]])
    for e in range(rel.shape[1]):
        nrm = normals[:, e]
        pp = (rel * nrm[:, None, :]).sum(-1)
        bb = nrm @ corners.T
        meets &= ~((pp.max(1) <= bb.min(1)) | (bb.max(1) <= pp.min(1)))
    return inside, meets


def box_decomposition(rh: RealizedHierarchy, R: float) -> BoxDecomposition:
    """Greedy top-down cover of the box center + [-R, R]^2 by supertiles of the hierarchy."""
    if rh.inradius < R * math.sqrt(2) - 1e-12:
        raise BoxTooLarge(f"box of half-width {R} is not inside the seed supertile (inradius {rh.inradius:.6g})")
    H = rh.hierarchy
    n = H.n
    inside, meets = _box_flags(rh.realized.polygons, rh.center, R)
    sys = H.sys
    counts = np.zeros((n + 1, sys.m), dtype=np.int64)
    assigned = [np.zeros(0, dtype=np.int64)] * (n + 1)
    # node_inside[t]: all leaves below stage-t node are inside the box
    node_inside = [None] * (n + 1)
    node_inside[n] = inside
    for t in range(n, 0, -1):
        up = np.ones(len(H.stages[t - 1]), dtype=bool)
        np.logical_and.at(up, H.parents[t], node_inside[t])
        node_inside[t - 1] = up
    for t in range(n + 1):
        parent_inside = (node_inside[t - 1][H.parents[t]] if t > 0
                         else np.zeros(len(H.stages[0]), dtype=bool))
        sel = np.nonzero(node_inside[t] & ~parent_inside)[0]
        level = n - t
        assigned[level] = sel
        counts[level] = np.bincount(H.stages[t].types[sel], minlength=sys.m)
    leftover = np.nonzero(meets & ~inside)[0]
    return BoxDecomposition(R, counts, assigned, leftover, np.nonzero(inside)[0])


def box_tiles(rh: RealizedHierarchy, R: float) -> np.ndarray:
    """Leaf indices of all tiles meeting the box."""
    inside, meets = _box_flags(rh.realized.polygons, rh.center, R)
    return np.nonzero(meets | inside)[0]


def twisted_box_integral(rh: RealizedHierarchy, lam, R: float, psi: TestFunction,
                         decomposition: Optional[BoxDecomposition] = None) -> complex:
    """Supertile pieces via the cocycle plus leftover boundary tiles summed directly."""
    dec = box_decomposition(rh, R) if decomposition is None else decomposition
    H = rh.hierarchy
    sys = H.sys
    L = rh.shape
    lam = np.asarray(lam, dtype=float)
    z = lift(L, lam)
    vecs = _cocycle_vectors(sys, z, psi(lam), H.n)
    total = 0j
    for level in range(H.n + 1):
        sel = dec.assigned[level]
        if len(sel) == 0:
            continue
        t = H.n - level
        anchors = H.supertile_anchor(t)[sel].astype(float)
        y = anchors @ L.entries.T
        phase = np.exp(-1j * TWO_PI * np.mod(y @ lam, 1.0))
        total += complex((phase * vecs[level][H.stages[t].types[sel]]).sum())
    leaves = H.leaves
    idx = dec.leftover
    total += _direct_sum(L, lam, leaves.types[idx], leaves.addrs[idx], psi)
    return total


def twisted_box_bruteforce(rh: RealizedHierarchy, lam, R: float, psi: TestFunction) -> complex:
    idx = box_tiles(rh, R)
    leaves = rh.hierarchy.leaves
    return _direct_sum(rh.shape, lam, leaves.types[idx], leaves.addrs[idx], psi)


def fit_box_constant(sys: SubstitutionSystem, decompositions: list) -> float:
    """Smallest C with sum_k kappa_k^(i) <= C R^(d-1) theta^(i(1-d)) over the given decompositions."""
    d, theta = sys.d, sys.theta
    C = 0.0
    for dec in decompositions:
        for i, tot in enumerate(dec.level_totals()):
            if tot:
                C = max(C, tot / (dec.R ** (d - 1) * theta ** (i * (1 - d))))
    return C


def box_constant_theory(sys: SubstitutionSystem, L, max_level: int) -> tuple[float, float]:
    """(C_theory, C_R) for the undeformed, self-similar shape.

    An assigned level-i supertile lies inside the box and its parent pokes
    out, so it sits within diam(parent) <= 2 R_{i+1} of the box boundary.
    Comparing areas gives count_i <= 8R * 2 R_{i+1} / (theta^(2i) a_min), and
    with R_n <= C_R theta^n this yields C = 16 C_R theta / a_min (d = 2).
    """
    from .geometry import prototile_areas, supertile_radii

    if sys.d != 2:
        raise UsageError("box_constant_theory is planar only")
    theta = sys.theta
    C_R = 0.0
    for n in range(1, max_level + 1):
        for j in range(sys.m):
            C_R = max(C_R, supertile_radii(sys, L, j, n)[1] / theta ** n)
    a_min = float(prototile_areas(sys, L).min())
    return 16.0 * C_R * theta / a_min, C_R


# local-dimension bounds

def dim_lower_bound(chi_plus: float, d: int, theta: float) -> float:
    if theta <= 1:
        raise UsageError("theta must exceed 1")
    return max(0.0, 2.0 * min(d - chi_plus / math.log(theta), 1.0))


def dim_lower_bound_zero(S, d: int, theta: float) -> float:
    pf = pf_data(S)
    if pf.second_modulus <= 0:
        return 2.0
    return dim_lower_bound(math.log(pf.second_modulus), d, theta)
