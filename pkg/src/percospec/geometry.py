"""Planar regions and the exact geometric predicates used by the detectors.

All regions are rectangles or square annuli (sup-norm annuli ``W_R \\ W_r``),
optionally restricted to the upper half-plane or the first quadrant.  Every
non-rectangular region is decomposed into an overlapping union of closed
axis-aligned rectangles, so that each membership / intersection predicate
reduces to a handful of point-rectangle, segment-rectangle and
disk-lens-rectangle tests.  All tests compare squared quantities where
possible and use closed-set (``<=``) conventions; ties are measure zero under
the sampling distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

RECT = "rect"
ANNULUS = "annulus"
HALF_ANNULUS = "half_annulus"
QUARTER_ANNULUS = "quarter_annulus"

_KINDS = (RECT, ANNULUS, HALF_ANNULUS, QUARTER_ANNULUS)


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


def _rect(x0, y0, x1, y1):
    return (float(x0), float(y0), float(x1), float(y1))


@dataclass(frozen=True)
class Region:
    """Rectangle or (possibly half/quarter) square annulus.

    rect: params = (a, b) half-widths, region = center + [-a,a] x [-b,b].
    annulus kinds: params = (r, R) with 0 < r < R in the sup norm; the full
    annulus is center + [-R,R]^2 minus the open square (-r,r)^2, the half
    annulus is its intersection with {y >= cy}, the quarter annulus with
    {x >= cx, y >= cy}.
    """

    kind: str
    center: Point2 = field(default_factory=lambda: Point2(0.0, 0.0))
    params: tuple = (1.0, 1.0)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown region kind {self.kind!r}")
        a, b = self.params
        if self.kind == RECT:
            if not (a > 0 and b > 0):
                raise ValueError("rect half-widths must be positive")
        else:
            if not 0 < a < b:
                raise ValueError("annulus needs 0 < r < R")

    # -- constructors ------------------------------------------------------
    @staticmethod
    def rect(a: float, b: float, center: Point2 = Point2(0.0, 0.0)) -> "Region":
        return Region(RECT, center, (float(a), float(b)))

    @staticmethod
    def square(L: float, center: Point2 = Point2(0.0, 0.0)) -> "Region":
        return Region(RECT, center, (float(L), float(L)))

    @staticmethod
    def annulus(r: float, R: float, center: Point2 = Point2(0.0, 0.0),
                kind: str = ANNULUS) -> "Region":
        return Region(kind, center, (float(r), float(R)))

    # -- basic queries -----------------------------------------------------
    @property
    def is_annular(self) -> bool:
        return self.kind != RECT

    def bbox(self):
        cx, cy = self.center.x, self.center.y
        a, b = self.params
        if self.kind == RECT:
            return _rect(cx - a, cy - b, cx + a, cy + b)
        r, R = self.params
        if self.kind == ANNULUS:
            return _rect(cx - R, cy - R, cx + R, cy + R)
        if self.kind == HALF_ANNULUS:
            return _rect(cx - R, cy, cx + R, cy + R)
        return _rect(cx, cy, cx + R, cy + R)

    def area(self) -> float:
        if self.kind == RECT:
            a, b = self.params
            return 4.0 * a * b
        r, R = self.params
        full = 4.0 * (R * R - r * r)
        if self.kind == ANNULUS:
            return full
        if self.kind == HALF_ANNULUS:
            return full / 2.0
        return full / 4.0

    def rects(self):
        """Closed axis-aligned rectangles whose union is the region."""
        cx, cy = self.center.x, self.center.y
        if self.kind == RECT:
            a, b = self.params
            return [_rect(cx - a, cy - b, cx + a, cy + b)]
        r, R = self.params
        if self.kind == ANNULUS:
            return [
                _rect(cx - R, cy - R, cx - r, cy + R),   # left band
                _rect(cx + r, cy - R, cx + R, cy + R),   # right band
                _rect(cx - R, cy + r, cx + R, cy + R),   # top band
                _rect(cx - R, cy - R, cx + R, cy - r),   # bottom band
            ]
        if self.kind == HALF_ANNULUS:
            return [
                _rect(cx - R, cy, cx - r, cy + R),
                _rect(cx + r, cy, cx + R, cy + R),
                _rect(cx - R, cy + r, cx + R, cy + R),
            ]
        return [
            _rect(cx + r, cy, cx + R, cy + R),
            _rect(cx, cy + r, cx + R, cy + R),
        ]

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized closed-region membership for an (n, 2) array."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        out = np.zeros(len(pts), dtype=bool)
        for rc in self.rects():
            x0, y0, x1, y1 = rc
            out |= ((pts[:, 0] >= x0) & (pts[:, 0] <= x1)
                    & (pts[:, 1] >= y0) & (pts[:, 1] <= y1))
        return out

    # -- boundary pieces for arm events -------------------------------------
    def inner_segments(self):
        """Segments of the inner square boundary belonging to the region closure."""
        if not self.is_annular:
            raise ValueError("inner boundary only defined for annular regions")
        cx, cy = self.center.x, self.center.y
        r, _ = self.params
        if self.kind == ANNULUS:
            return [
                ((cx - r, cy - r), (cx + r, cy - r)),
                ((cx + r, cy - r), (cx + r, cy + r)),
                ((cx + r, cy + r), (cx - r, cy + r)),
                ((cx - r, cy + r), (cx - r, cy - r)),
            ]
        if self.kind == HALF_ANNULUS:
            return [
                ((cx - r, cy), (cx - r, cy + r)),
                ((cx - r, cy + r), (cx + r, cy + r)),
                ((cx + r, cy + r), (cx + r, cy)),
            ]
        return [
            ((cx + r, cy), (cx + r, cy + r)),
            ((cx + r, cy + r), (cx, cy + r)),
        ]

    def outer_segments(self):
        if not self.is_annular:
            raise ValueError("outer boundary only defined for annular regions")
        cx, cy = self.center.x, self.center.y
        _, R = self.params
        if self.kind == ANNULUS:
            return [
                ((cx - R, cy - R), (cx + R, cy - R)),
                ((cx + R, cy - R), (cx + R, cy + R)),
                ((cx + R, cy + R), (cx - R, cy + R)),
                ((cx - R, cy + R), (cx - R, cy - R)),
            ]
        if self.kind == HALF_ANNULUS:
            return [
                ((cx - R, cy), (cx - R, cy + R)),
                ((cx - R, cy + R), (cx + R, cy + R)),
                ((cx + R, cy + R), (cx + R, cy)),
            ]
        return [
            ((cx + R, cy), (cx + R, cy + R)),
            ((cx + R, cy + R), (cx, cy + R)),
        ]

    def wall_segments(self):
        """Axis segments closing a half/quarter annulus (empty for the full one)."""
        if not self.is_annular:
            raise ValueError("walls only defined for annular regions")
        cx, cy = self.center.x, self.center.y
        r, R = self.params
        if self.kind == ANNULUS:
            return []
        if self.kind == HALF_ANNULUS:
            return [
                ((cx - R, cy), (cx - r, cy)),
                ((cx + r, cy), (cx + R, cy)),
            ]
        return [
            ((cx + r, cy), (cx + R, cy)),
            ((cx, cy + r), (cx, cy + R)),
        ]


# ---------------------------------------------------------------------------
# vectorized predicates
# ---------------------------------------------------------------------------

def dist2_point_rect(pts: np.ndarray, rect) -> np.ndarray:
    """Squared Euclidean distance from points to a closed rectangle."""
    x0, y0, x1, y1 = rect
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    dx = np.maximum(np.maximum(x0 - pts[:, 0], pts[:, 0] - x1), 0.0)
    dy = np.maximum(np.maximum(y0 - pts[:, 1], pts[:, 1] - y1), 0.0)
    return dx * dx + dy * dy


def disks_meet_region(pts: np.ndarray, region: Region, radius: float = 1.0) -> np.ndarray:
    """True where the closed disk B(p, radius) intersects the region."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    r2 = radius * radius
    out = np.zeros(len(pts), dtype=bool)
    for rc in region.rects():
        out |= dist2_point_rect(pts, rc) <= r2
    return out


def dist2_point_segment(pts: np.ndarray, a, b) -> np.ndarray:
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    u = b - a
    uu = float(u @ u)
    if uu == 0.0:
        d = pts - a
        return np.einsum("ij,ij->i", d, d)
    t = ((pts - a) @ u) / uu
    t = np.clip(t, 0.0, 1.0)
    proj = a + t[:, None] * u
    d = pts - proj
    return np.einsum("ij,ij->i", d, d)


def disks_meet_segment(pts: np.ndarray, seg, radius: float = 1.0) -> np.ndarray:
    a, b = seg
    return dist2_point_segment(pts, a, b) <= radius * radius


def _segment_interval_inside_disk(a, u, c, radius2):
    """Solve |a + s*u - c|^2 <= radius2 for s; return (lo, hi) or empty (1, 0).

    Vectorized over leading axis of a, u, c.
    """
    d = a - c
    A = np.einsum("ij,ij->i", u, u)
    B = 2.0 * np.einsum("ij,ij->i", u, d)
    C = np.einsum("ij,ij->i", d, d) - radius2
    lo = np.full(len(A), 1.0)
    hi = np.full(len(A), 0.0)
    # degenerate direction: interval is all-or-nothing
    degen = A <= 0.0
    inside = degen & (C <= 0.0)
    lo[inside], hi[inside] = 0.0, 1.0
    ok = ~degen
    disc = B * B - 4.0 * A * C
    good = ok & (disc >= 0.0)
    sq = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        s1 = (-B - sq) / (2.0 * A)
        s2 = (-B + sq) / (2.0 * A)
    lo[good] = s1[good]
    hi[good] = s2[good]
    return lo, hi


def lens_meets_rect(p: np.ndarray, q: np.ndarray, rect) -> np.ndarray:
    """True where B1(p) cap B1(q) intersects the closed rectangle.

    Assumes |p - q| <= 2 so the lens is nonempty.  The lens is convex and
    contains the midpoint, so the intersection is nonempty iff the midpoint
    lies in the rectangle or some rectangle edge meets the lens.
    """
    p = np.asarray(p, dtype=float).reshape(-1, 2)
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    x0, y0, x1, y1 = rect
    m = 0.5 * (p + q)
    out = ((m[:, 0] >= x0) & (m[:, 0] <= x1) & (m[:, 1] >= y0) & (m[:, 1] <= y1))
    todo = np.flatnonzero(~out)
    if len(todo) == 0:
        return out
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    pp, qq = p[todo], q[todo]
    hit = np.zeros(len(todo), dtype=bool)
    for k in range(4):
        a = np.array(corners[k], dtype=float)
        b = np.array(corners[(k + 1) % 4], dtype=float)
        n = len(todo)
        A = np.broadcast_to(a, (n, 2)).copy()
        U = np.broadcast_to(b - a, (n, 2)).copy()
        lo1, hi1 = _segment_interval_inside_disk(A, U, pp, 1.0)
        lo2, hi2 = _segment_interval_inside_disk(A, U, qq, 1.0)
        lo = np.maximum(np.maximum(lo1, lo2), 0.0)
        hi = np.minimum(np.minimum(hi1, hi2), 1.0)
        hit |= lo <= hi
    out[todo] = hit
    return out


def lens_meets_region(p: np.ndarray, q: np.ndarray, region: Region) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1, 2)
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    out = np.zeros(len(p), dtype=bool)
    for rc in region.rects():
        rem = ~out
        if not rem.any():
            break
        out[rem] = lens_meets_rect(p[rem], q[rem], rc)
    return out


def segments_meet_rect(a: np.ndarray, b: np.ndarray, rect) -> np.ndarray:
    """Liang-Barsky test: True where closed segment [a, b] meets the rectangle."""
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    x0, y0, x1, y1 = rect
    d = b - a
    t0 = np.zeros(len(a))
    t1 = np.ones(len(a))
    ok = np.ones(len(a), dtype=bool)
    for coord, lo, hi in ((0, x0, x1), (1, y0, y1)):
        p = d[:, coord]
        alo = lo - a[:, coord]
        ahi = hi - a[:, coord]
        par = p == 0.0
        ok &= ~(par & ((alo > 0.0) | (ahi < 0.0)))
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = np.where(par, 0.0, alo / np.where(par, 1.0, p))
            r2 = np.where(par, 1.0, ahi / np.where(par, 1.0, p))
        tlo = np.minimum(r1, r2)
        thi = np.maximum(r1, r2)
        t0 = np.where(par, t0, np.maximum(t0, tlo))
        t1 = np.where(par, t1, np.minimum(t1, thi))
    return ok & (t0 <= t1)


def segments_meet_region(a: np.ndarray, b: np.ndarray, region: Region) -> np.ndarray:
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    out = np.zeros(len(a), dtype=bool)
    for rc in region.rects():
        rem = ~out
        if not rem.any():
            break
        out[rem] = segments_meet_rect(a[rem], b[rem], rc)
    return out
