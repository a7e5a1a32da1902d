"""Polygon realization of address patches, coronas, collared tiles and SVG output."""

from __future__ import annotations

import colorsys
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .deformation import ShapeMatrix, as_shape
from .errors import DegenerateShape, IncompleteCorona, NotSaturated, UsageError
from .substitution import Patch, SubstitutionSystem, expand_hierarchy, expand_supertile

TOUCH_TOL = 1e-9
POINT_MERGE_TOL = 1e-7
AREA_MIN = 1e-9


def max_level_cap(default: int = 40) -> int:
    """Expansion depth cap, overridable through TILINGS_MAX_LEVEL."""
    raw = os.environ.get("TILINGS_MAX_LEVEL")
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise UsageError(f"TILINGS_MAX_LEVEL must be an integer, got {raw!r}") from exc


def check_level(n: int) -> None:
    cap = max_level_cap()
    if n > cap:
        raise UsageError(f"level {n} exceeds TILINGS_MAX_LEVEL={cap}")


def prototile_edges(sys: SubstitutionSystem, L) -> tuple[np.ndarray, np.ndarray]:
    """Edge vectors (u_k, v_k) of every prototile parallelogram under shape L."""
    if sys.tile_spans is None:
        raise UsageError(f"model {sys.name} has no prototile geometry")
    L = as_shape(L, sys).entries
    U = np.array([L[:, a] for a, _ in sys.tile_spans])
    V = np.array([L[:, b] for _, b in sys.tile_spans])
    return U, V


def prototile_areas(sys: SubstitutionSystem, L) -> np.ndarray:
    U, V = prototile_edges(sys, L)
    return np.abs(U[:, 0] * V[:, 1] - U[:, 1] * V[:, 0])


@dataclass
class RealizedPatch:
    types: np.ndarray
    addrs: np.ndarray
    polygons: np.ndarray  # (N, 4, d), counter-clockwise or clockwise per prototile
    shape: ShapeMatrix
    sys: Optional[SubstitutionSystem] = None
    _adjacency: Optional[tuple] = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.types)

    @property
    def areas(self) -> np.ndarray:
        P = self.polygons
        x, y = P[..., 0], P[..., 1]
        return 0.5 * np.abs((x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y).sum(axis=1))

    @property
    def centers(self) -> np.ndarray:
        return self.polygons.mean(axis=1)

    def subset(self, mask) -> "RealizedPatch":
        idx = np.nonzero(mask)[0] if np.asarray(mask).dtype == bool else np.asarray(mask)
        return RealizedPatch(self.types[idx], self.addrs[idx], self.polygons[idx], self.shape, self.sys)


def realize_patch(sys: SubstitutionSystem, shape, patch: Patch) -> RealizedPatch:
    L = as_shape(shape, sys)
    U, V = prototile_edges(sys, L)
    area = np.abs(U[:, 0] * V[:, 1] - U[:, 1] * V[:, 0])
    if (area < AREA_MIN).any():
        raise DegenerateShape(f"prototile area below {AREA_MIN}: {area}")
    anchors = patch.addrs.astype(float) @ L.entries.T
    u, v = U[patch.types], V[patch.types]
    polys = np.stack([anchors, anchors + u, anchors + u + v, anchors + v], axis=1)
    return RealizedPatch(patch.types.copy(), patch.addrs.copy(), polys, L, sys)


# pairwise geometry

def _point_segment_distance(P, A, B):
    AB = B - A
    t = ((P - A) * AB).sum(-1) / np.maximum((AB * AB).sum(-1), 1e-300)
    t = np.clip(t, 0.0, 1.0)
    D = A + t[..., None] * AB - P
    return np.sqrt((D * D).sum(-1))


def _separated(P, Q):
    """Separating-axis test for batches of convex polygons (K, n, 2)."""
    sep = np.zeros(len(P), dtype=bool)
    for poly in (P, Q):
        E = np.roll(poly, -1, axis=1) - poly
        normals = np.stack([-E[..., 1], E[..., 0]], axis=-1)
        for e in range(poly.shape[1]):
            n = normals[:, e][:, None, :]
            pp = (P * n).sum(-1)
            qq = (Q * n).sum(-1)
            sep |= (pp.max(1) < qq.min(1)) | (qq.max(1) < pp.min(1))
    return sep


def polygon_distance(P, Q) -> np.ndarray:
    """Distance between convex polygons, batched; 0 when they intersect."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = P.shape[1]
    best = np.full(len(P), np.inf)
    for X, Y in ((P, Q), (Q, P)):
        A = Y
        B = np.roll(Y, -1, axis=1)
        for i in range(n):
            d = _point_segment_distance(X[:, i][:, None, :], A, B).min(axis=1)
            best = np.minimum(best, d)
    best[~_separated(P, Q)] = 0.0
    return best


def touching_pairs(realized: RealizedPatch, tol: float = TOUCH_TOL) -> np.ndarray:
    """All pairs (i < j) of tiles whose closed supports are within tol."""
    if len(realized) < 2:
        return np.zeros((0, 2), dtype=np.int64)
    C = realized.centers
    rad = np.sqrt(((realized.polygons - C[:, None, :]) ** 2).sum(-1)).max()
    tree = cKDTree(C)
    pairs = tree.query_pairs(2 * rad + 2 * tol, output_type="ndarray")
    if len(pairs) == 0:
        return pairs.reshape(0, 2)
    out = []
    for lo in range(0, len(pairs), 200_000):
        chunk = pairs[lo:lo + 200_000]
        d = polygon_distance(realized.polygons[chunk[:, 0]], realized.polygons[chunk[:, 1]])
        out.append(chunk[d <= tol])
    pairs = np.concatenate(out)
    return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]


def adjacency(realized: RealizedPatch, tol: float = TOUCH_TOL):
    """CSR-style neighbor lists (indptr, indices), cached on the patch."""
    if realized._adjacency is not None:
        return realized._adjacency
    pairs = touching_pairs(realized, tol)
    n = len(realized)
    both = np.concatenate([pairs, pairs[:, ::-1]]) if len(pairs) else np.zeros((0, 2), dtype=np.int64)
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, both[:, 0] + 1, 1)
    indptr = np.cumsum(indptr)
    realized._adjacency = (indptr, both[:, 1].copy())
    return realized._adjacency


def _corner_angles(polys: np.ndarray) -> np.ndarray:
    prev = np.roll(polys, 1, axis=1) - polys
    nxt = np.roll(polys, -1, axis=1) - polys
    cos = (prev * nxt).sum(-1) / (np.linalg.norm(prev, axis=-1) * np.linalg.norm(nxt, axis=-1))
    return np.arccos(np.clip(cos, -1.0, 1.0))


def interior_mask(realized: RealizedPatch, tol: float = TOUCH_TOL) -> np.ndarray:
    """True for tiles that do not touch the boundary of the patch union.

    Every vertex point lying on a tile's closed boundary must be surrounded
    by a full turn of tile angles (corner angles, plus pi where the point sits
    inside another tile's edge).
    """
    n = len(realized)
    if n == 0:
        return np.zeros(0, dtype=bool)
    polys = realized.polygons
    nv = polys.shape[1]
    pts = polys.reshape(-1, 2)
    tree = cKDTree(pts)
    pp = tree.query_pairs(POINT_MERGE_TOL, output_type="ndarray")
    g = coo_matrix((np.ones(len(pp)), (pp[:, 0], pp[:, 1])), shape=(len(pts), len(pts))) if len(pp) else \
        coo_matrix((len(pts), len(pts)))
    _, cluster = connected_components(g, directed=False)
    ncl = cluster.max() + 1
    cover = np.bincount(cluster, weights=_corner_angles(polys).ravel(), minlength=ncl)

    # points lying inside an edge of a touching tile (T-junctions)
    indptr, nbr = adjacency(realized, tol)
    src = np.repeat(np.arange(n), np.diff(indptr))
    on_edge_tile, on_edge_pt = [], []
    if len(src):
        A = polys[src]                      # tile whose edges are tested
        Bv = polys[nbr]                     # vertices of the neighbor
        E0, E1 = A, np.roll(A, -1, axis=1)
        for c in range(nv):
            P = Bv[:, c][:, None, :]
            d = _point_segment_distance(P, E0, E1)
            d0 = np.linalg.norm(E0 - P, axis=-1)
            d1 = np.linalg.norm(E1 - P, axis=-1)
            hit = ((d <= tol) & (d0 > POINT_MERGE_TOL) & (d1 > POINT_MERGE_TOL)).any(axis=1)
            if hit.any():
                on_edge_tile.append(src[hit])
                on_edge_pt.append(cluster[nbr[hit] * nv + c])
    if on_edge_pt:
        on_edge_tile = np.concatenate(on_edge_tile)
        on_edge_pt = np.concatenate(on_edge_pt)
        # each (tile, point) incidence counts once
        key = np.unique(on_edge_tile * ncl + on_edge_pt)
        cover += np.pi * np.bincount(key % ncl, minlength=ncl)
    else:
        on_edge_tile = on_edge_pt = np.zeros(0, dtype=np.int64)
    full = cover >= 2 * np.pi - 1e-6
    ok = full[cluster].reshape(n, nv).all(axis=1)
    if len(on_edge_pt):
        bad = on_edge_tile[~full[on_edge_pt]]
        ok[bad] = False
    return ok


def corona(realized: RealizedPatch, index: int, interior: Optional[np.ndarray] = None) -> set:
    """Indices of all tiles touching tile ``index`` (itself excluded)."""
    if interior is None:
        interior = interior_mask(realized)
    if not interior[index]:
        raise IncompleteCorona(f"tile {index} touches the patch boundary")
    indptr, nbr = adjacency(realized)
    return set(int(v) for v in nbr[indptr[index]:indptr[index + 1]])


# collared prototiles

def _neighborhoods(realized: RealizedPatch, depth: int):
    indptr, nbr = adjacency(realized)
    n = len(realized)
    interior = interior_mask(realized)
    ok = interior.copy()
    sets = [None] * n
    for i in range(n):
        if not interior[i]:
            continue
        ring = set(nbr[indptr[i]:indptr[i + 1]].tolist())
        ball = ring | {i}
        for _ in range(depth - 1):
            if not all(interior[t] for t in ring):
                ok[i] = False
                break
            nxt = set()
            for t in ring:
                nxt.update(nbr[indptr[t]:indptr[t + 1]].tolist())
            ring = nxt - ball
            ball |= nxt
        if ok[i]:
            sets[i] = ball
    return ok, sets


def collar_signatures(realized: RealizedPatch, depth: int = 1) -> list:
    """Per tile, (type, sorted (type, address offset) of its depth-corona) or None if incomplete."""
    ok, sets = _neighborhoods(realized, depth)
    types = realized.types.tolist()
    addrs = [tuple(int(v) for v in a) for a in realized.addrs]
    out = [None] * len(realized)
    for i in np.nonzero(ok)[0]:
        ai = addrs[i]
        members = sorted((types[t], tuple(x - y for x, y in zip(addrs[t], ai))) for t in sets[i] if t != i)
        out[i] = (types[i], tuple(members))
    return out


@dataclass
class CollaredAtlas:
    classes: list  # sorted list of signatures
    witnesses: list  # occurrences of each class at the final level
    level: int
    depth: int
    history: dict = field(default_factory=dict)  # level -> class count

    @property
    def count(self) -> int:
        return len(self.classes)

    def index(self) -> dict:
        return {sig: i for i, sig in enumerate(self.classes)}

    def to_json(self) -> list:
        return [{"class_id": i, "center_type": sig[0],
                 "corona": [[t, list(off)] for t, off in sig[1]]} for i, sig in enumerate(self.classes)]


def collared_census(sys: SubstitutionSystem, shape, level: int, roots: Optional[Sequence[int]] = None,
                    depth: int = 1) -> Counter:
    roots = range(sys.m) if roots is None else roots
    counts = Counter()
    for j in roots:
        realized = realize_patch(sys, shape, expand_supertile(sys, j, level))
        counts.update(sig for sig in collar_signatures(realized, depth) if sig is not None)
    return counts


def collared_prototiles(sys: SubstitutionSystem, shape=None, level: int = 1, max_level: Optional[int] = None,
                        roots: Optional[Sequence[int]] = None, depth: int = 1) -> CollaredAtlas:
    """Distinct collared tiles, enlarging the level until the class count saturates.

    Saturation: equal class counts at two consecutive levels and every class
    seen at least twice at the later one.
    """
    if max_level is None:
        max_level = level + 4
    max_level = min(max_level, max_level_cap())
    history = {}
    prev = collared_census(sys, shape, level, roots, depth)
    history[level] = len(prev)
    for lvl in range(level + 1, max_level + 1):
        cur = collared_census(sys, shape, lvl, roots, depth)
        history[lvl] = len(cur)
        if len(cur) == len(prev) and min(cur.values(), default=0) >= 2:
            classes = sorted(cur)
            return CollaredAtlas(classes, [cur[c] for c in classes], lvl, depth, history)
        prev = cur
    raise NotSaturated(f"collared class count still changing up to level {max_level}: {history}")


def collared_labels(realized: RealizedPatch, atlas: CollaredAtlas) -> np.ndarray:
    """Class index per tile; -1 where the corona is incomplete or the class is unknown."""
    idx = atlas.index()
    return np.array([idx.get(sig, -1) if sig is not None else -1
                     for sig in collar_signatures(realized, atlas.depth)], dtype=np.int64)


def supertile_in_context(sys: SubstitutionSystem, shape, j: int, n: int, depth: int = 1,
                         max_extra: int = 4):
    """A level-n supertile of type j sitting inside a larger supertile with all coronas complete.

    Returns (context RealizedPatch, boolean mask of the chosen supertile's tiles).
    """
    for extra in range(1, max_extra + 1):
        for root in range(sys.m):
            H = expand_hierarchy(sys, root, n + extra)
            realized = realize_patch(sys, shape, H.leaves)
            ok, _ = _neighborhoods(realized, depth)
            anc = H.ancestor_index(extra)
            seeds = np.nonzero(H.stages[extra].types == j)[0]
            good = np.ones(len(H.stages[extra]), dtype=bool)
            np.logical_and.at(good, anc, ok)
            for s in seeds:
                if good[s]:
                    return realized, anc == s
    raise NotSaturated(f"no level-{n} supertile of type {j} with complete coronas within {max_extra} extra levels")


# supertile metrics

def _union(polygons: np.ndarray):
    import shapely

    g = shapely.polygons(polygons)
    # a tiny mitre buffer closes rounding cracks between adjacent tiles
    return shapely.union_all(shapely.buffer(g, 1e-9, join_style="mitre"))


def supertile_radii(sys: SubstitutionSystem, shape, j: int, n: int) -> tuple[float, float]:
    """(inradius, circumradius) of the level-n supertile of type j."""
    import shapely
    from shapely.ops import polylabel

    realized = realize_patch(sys, shape, expand_supertile(sys, j, n))
    U = _union(realized.polygons)
    if U.geom_type != "Polygon":
        U = max(U.geoms, key=lambda g: g.area)
    center = polylabel(U, tolerance=1e-6 * math.sqrt(U.area))
    inr = float(U.exterior.distance(center))
    for ring in U.interiors:
        inr = min(inr, float(ring.distance(center)))
    circ = float(shapely.minimum_bounding_radius(U))
    return inr, circ


# SVG

def palette(i: int) -> str:
    if i < 0:
        return "#bdbdbd"
    h = (i * 0.6180339887498949) % 1.0
    r, g, b = colorsys.hls_to_rgb(h, 0.62, 0.62)
    return "#{:02x}{:02x}{:02x}".format(round(r * 255), round(g * 255), round(b * 255))


def render_svg(realized: RealizedPatch, coloring="type", path=None, stroke_width: Optional[float] = None) -> str:
    """Deterministic SVG; ``coloring`` is "type", a CollaredAtlas, or an explicit label array."""
    n = len(realized)
    if isinstance(coloring, str):
        if coloring != "type":
            raise UsageError(f"unknown coloring {coloring!r}")
        labels = realized.types
    elif isinstance(coloring, CollaredAtlas):
        labels = collared_labels(realized, coloring)
    else:
        labels = np.asarray(coloring, dtype=np.int64)
        if len(labels) != n:
            raise UsageError("label array length must match the patch")
    if n:
        keys = [realized.addrs[:, i] for i in range(realized.addrs.shape[1] - 1, -1, -1)]
        order = np.lexsort(keys + [realized.types])
        pts = realized.polygons[..., :2].reshape(-1, 2) * np.array([1.0, -1.0])
        lo, hi = pts.min(axis=0), pts.max(axis=0)
    else:
        order = np.zeros(0, dtype=np.int64)
        lo, hi = np.zeros(2), np.ones(2)
    span = np.maximum(hi - lo, 1e-12)
    pad = 0.02 * span
    x0, y0 = lo - pad
    w, h = span + 2 * pad
    if stroke_width is None:
        stroke_width = 0.002 * float(max(w, h))
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{x0:.6f} {y0:.6f} {w:.6f} {h:.6f}">',
        f'<g stroke="#202020" stroke-width="{stroke_width:.6f}" stroke-linejoin="round">',
    ]
    for i in order:
        poly = realized.polygons[i]
        pts = " ".join(f"{x:.6f},{-y:.6f}" for x, y in poly[:, :2])
        lines.append(f'<polygon points="{pts}" fill="{palette(int(labels[i]))}"/>')
    lines += ["</g>", "</svg>", ""]
    text = "\n".join(lines)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


def fill_colors(svg_text: str) -> set:
    import re

    return set(re.findall(r'fill="(#[0-9a-f]{6})"', svg_text))
