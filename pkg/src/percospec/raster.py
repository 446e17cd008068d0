"""Rasterized occupancy for vacant connectivity and generic arm patterns.

A raster cell counts as occupied when some unit disk intersects the closed
cell, so the raster over-approximates the occupied set by at most half a cell
diagonal and an exact disk-graph crossing always shows up on the raster.
Occupied cells use 8-connectivity and vacant cells 4-connectivity, which
preserves discrete planar duality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import ANNULUS, Region
from .model import PointConfiguration

_STRUCT8 = np.ones((3, 3), dtype=bool)
_STRUCT4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class OccupancyRaster:
    """Grid over a region's bounding box with occupancy and region masks."""

    region: Region
    h: float                # realized cell size (target h rounded to fit)
    x0: float
    y0: float
    occupied: np.ndarray    # (ny, nx) bool
    in_region: np.ndarray   # (ny, nx) bool, cell center inside the region

    @property
    def shape(self):
        return self.occupied.shape

    def centers_x(self) -> np.ndarray:
        return self.x0 + (np.arange(self.shape[1]) + 0.5) * self.h

    def centers_y(self) -> np.ndarray:
        return self.y0 + (np.arange(self.shape[0]) + 0.5) * self.h

    def label_occupied(self) -> tuple[np.ndarray, int]:
        lab, n = ndimage.label(self.occupied & self.in_region, structure=_STRUCT8)
        return lab, n

    def label_vacant(self) -> tuple[np.ndarray, int]:
        lab, n = ndimage.label(~self.occupied & self.in_region, structure=_STRUCT4)
        return lab, n


def rasterize(cfg: PointConfiguration, region: Region, h: float) -> OccupancyRaster:
    if h <= 0:
        raise ValueError("resolution must be positive")
    x0, y0, x1, y1 = region.bbox()
    nx = max(1, int(math.ceil((x1 - x0) / h - 1e-12)))
    ny = max(1, int(math.ceil((y1 - y0) / h - 1e-12)))
    hx = (x1 - x0) / nx
    hy = (y1 - y0) / ny
    hh = max(hx, hy)
    occ = np.zeros((ny, nx), dtype=bool)
    slack = 1.0 + math.hypot(hx, hy)
    near = ((cfg.xy[:, 0] > x0 - slack) & (cfg.xy[:, 0] < x1 + slack)
            & (cfg.xy[:, 1] > y0 - slack) & (cfg.xy[:, 1] < y1 + slack))
    for px, py in cfg.xy[near]:
        i0 = max(0, int((px - 1.0 - x0) / hx) - 1)
        i1 = min(nx, int((px + 1.0 - x0) / hx) + 2)
        j0 = max(0, int((py - 1.0 - y0) / hy) - 1)
        j1 = min(ny, int((py + 1.0 - y0) / hy) + 2)
        if i0 >= i1 or j0 >= j1:
            continue
        cx0 = x0 + np.arange(i0, i1) * hx
        cy0 = y0 + np.arange(j0, j1) * hy
        dx = np.maximum(np.maximum(cx0 - px, px - (cx0 + hx)), 0.0)
        dy = np.maximum(np.maximum(cy0 - py, py - (cy0 + hy)), 0.0)
        d2 = dy[:, None] ** 2 + dx[None, :] ** 2
        occ[j0:j1, i0:i1] |= d2 <= 1.0
    cx = x0 + (np.arange(nx) + 0.5) * hx
    cy = y0 + (np.arange(ny) + 0.5) * hy
    centers = np.column_stack((np.repeat(cx[None, :], ny, axis=0).ravel(),
                               np.repeat(cy[:, None], nx, axis=1).ravel()))
    in_region = region.contains(centers).reshape(ny, nx)
    return OccupancyRaster(region, hh, x0, y0, occ, in_region)


def vacant_crossing_raster(cfg: PointConfiguration, box: Region, axis: str = "LR",
                           h: float = 0.05) -> bool:
    """4-connected vacant-cell crossing of the rasterized box."""
    if h > 0.1:
        raise ValueError("vacant raster detection needs h <= 0.1")
    if box.kind != "rect":
        raise ValueError("vacant crossings are defined for boxes")
    ras = rasterize(cfg, box, h)
    lab, _ = ras.label_vacant()
    if axis == "LR":
        a, b = lab[:, 0], lab[:, -1]
    else:
        a, b = lab[0, :], lab[-1, :]
    la = np.unique(a[a > 0])
    lb = np.unique(b[b > 0])
    return bool(np.intersect1d(la, lb, assume_unique=True).size)


def occupied_crossing_raster(cfg: PointConfiguration, box: Region,
                             axis: str = "LR", h: float = 0.05) -> bool:
    """8-connected occupied-cell crossing of the rasterized box."""
    ras = rasterize(cfg, box, h)
    lab, _ = ras.label_occupied()
    if axis == "LR":
        a, b = lab[:, 0], lab[:, -1]
    else:
        a, b = lab[0, :], lab[-1, :]
    la = np.unique(a[a > 0])
    lb = np.unique(b[b > 0])
    return bool(np.intersect1d(la, lb, assume_unique=True).size)


# ---------------------------------------------------------------------------
# boundary words for raster arm detection
# ---------------------------------------------------------------------------

def _inner_ring_indices(ras: OccupancyRaster):
    """Raster cells just outside the inner square, in cyclic boundary order.

    For sector regions the ring is clipped to in-region cells and returned in
    linear order from one wall to the other.
    """
    region = ras.region
    r, _ = region.params
    cx, cy = region.center.x, region.center.y
    nx = ras.shape[1]
    ny = ras.shape[0]
    # index box of cells whose center lies strictly inside the open inner square
    xs = ras.centers_x()
    ys = ras.centers_y()
    ix = np.flatnonzero((xs > cx - r) & (xs < cx + r))
    iy = np.flatnonzero((ys > cy - r) & (ys < cy + r))
    if len(ix) == 0 or len(iy) == 0:
        raise ValueError("resolution too coarse for the inner square")
    i0, i1 = ix[0], ix[-1]
    j0, j1 = iy[0] if len(iy) else 0, iy[-1]
    ring = []
    jb, jt = j0 - 1, j1 + 1
    il, ir = i0 - 1, i1 + 1
    for i in range(il, ir + 1):          # bottom, left to right
        ring.append((jb, i))
    for j in range(jb + 1, jt + 1):      # right side, up
        ring.append((j, ir))
    for i in range(ir - 1, il - 1, -1):  # top, right to left
        ring.append((jt, i))
    for j in range(jt - 1, jb, -1):      # left side, down
        ring.append((j, il))
    ring = [(j, i) for (j, i) in ring if 0 <= i < nx and 0 <= j < ny]
    if region.kind == ANNULUS:
        return ring, True
    # sector regions lose the ring cells outside the grid; what remains is
    # already in linear wall-to-wall order
    return [(j, i) for (j, i) in ring if ras.in_region[j, i]], False


def _outer_touch_mask(ras: OccupancyRaster) -> np.ndarray:
    """Cells adjacent to the outer boundary of the region's bounding box."""
    ny, nx = ras.shape
    m = np.zeros((ny, nx), dtype=bool)
    m[0, :] = m[-1, :] = True
    m[:, 0] = m[:, -1] = True
    if ras.region.kind != ANNULUS:
        # sector regions: only sides on the outer square count; for the upper
        # half annulus the bottom row is a wall, for the quarter the bottom
        # row and left column are walls.
        if ras.region.kind == "half_annulus":
            m[0, :] = False
        else:
            m[0, :] = False
            m[:, 0] = False
    return m & ras.in_region


def boundary_word(ras: OccupancyRaster):
    """(word, cyclic): bridging-component word along the inner boundary ring.

    The word lists, in boundary order, one letter per inner-ring cell that
    belongs to an occupied (8-connected) or vacant (4-connected) component
    touching the outer boundary; letters are ('O'|'V', component id), with
    consecutive repeats collapsed.
    """
    lab_o, _ = ras.label_occupied()
    lab_v, _ = ras.label_vacant()
    outer = _outer_touch_mask(ras)
    bridging_o = np.unique(lab_o[outer & (lab_o > 0)])
    bridging_v = np.unique(lab_v[outer & (lab_v > 0)])
    ring, cyclic = _inner_ring_indices(ras)
    word = []
    for (j, i) in ring:
        if lab_o[j, i] > 0 and lab_o[j, i] in bridging_o:
            letter = ("O", int(lab_o[j, i]))
        elif lab_v[j, i] > 0 and lab_v[j, i] in bridging_v:
            letter = ("V", int(lab_v[j, i]))
        else:
            continue
        if word and word[-1] == letter:
            continue
        word.append(letter)
    if cyclic and len(word) > 1 and word[0] == word[-1]:
        word.pop()
    return word, cyclic


def word_matches_pattern(word, pattern, cyclic: bool) -> bool:
    """Subsequence match of an arm pattern against the boundary word.

    Pattern entries are colors 'O'/'V'; a match assigns distinct components
    to pattern positions of the same color (arms are disjoint) while arcs may
    repeat in the word.  Cyclic words are matched over all rotations.
    """
    k = len(pattern)
    if k == 0:
        raise ValueError("empty pattern")
    n = len(word)
    if n == 0:
        return False

    def linear_match(seq):
        # depth-first subsequence embedding with distinct components per color
        def rec(pi, si, used):
            if pi == k:
                return True
            for t in range(si, len(seq)):
                col, comp = seq[t]
                if col != pattern[pi] or (col, comp) in used:
                    continue
                if rec(pi + 1, t + 1, used | {(col, comp)}):
                    return True
            return False

        return rec(0, 0, frozenset())

    if not cyclic:
        return linear_match(word)
    for r in range(n):
        if linear_match([word[(r + t) % n] for t in range(n)]):
            return True
    return False
