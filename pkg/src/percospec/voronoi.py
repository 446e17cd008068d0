"""Delaunay/Voronoi construction and colored-cell percolation detectors.

The triangulation is built with Qhull (scipy.spatial.Delaunay); circumcenters
and the dual cell-boundary segments are derived from it.  An exact-arithmetic
in-circle verification (float filter + Fraction fallback, ties broken by
index order) is available and can repair a build by Lawson flips, so the
empty-circumcircle property can be asserted exactly.

Cell-level connectivity in a box follows the rule: two cells are adjacent
inside a region iff their shared boundary segment intersects the closed
region; a cell touches a boundary segment iff the segment passes through it.
Both predicates are computed exactly from the dual segments: the set of cells
met by a segment equals {nearest cell of the segment start} together with the
cells of every dual edge crossing the segment.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .boolean import _component_labels
from .geometry import Region, segments_meet_rect, segments_meet_region
from .model import PointConfiguration

_INCIRCLE_FLOAT_TOL = 1e-9


# ---------------------------------------------------------------------------
# exact in-circle predicate
# ---------------------------------------------------------------------------

def _orient2(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _incircle_det(a, b, c, p) -> float:
    ax, ay = a[0] - p[0], a[1] - p[1]
    bx, by = b[0] - p[0], b[1] - p[1]
    cx, cy = c[0] - p[0], c[1] - p[1]
    return ((ax * ax + ay * ay) * (bx * cy - by * cx)
            - (bx * bx + by * by) * (ax * cy - ay * cx)
            + (cx * cx + cy * cy) * (ax * by - ay * bx))


def _incircle_det_exact(a, b, c, p) -> Fraction:
    ax, ay = Fraction(float(a[0])) - Fraction(float(p[0])), Fraction(float(a[1])) - Fraction(float(p[1]))
    bx, by = Fraction(float(b[0])) - Fraction(float(p[0])), Fraction(float(b[1])) - Fraction(float(p[1]))
    cx, cy = Fraction(float(c[0])) - Fraction(float(p[0])), Fraction(float(c[1])) - Fraction(float(p[1]))
    return ((ax * ax + ay * ay) * (bx * cy - by * cx)
            - (bx * bx + by * by) * (ax * cy - ay * cx)
            + (cx * cx + cy * cy) * (ax * by - ay * bx))


def incircle_sign(a, b, c, p) -> int:
    """Sign of the in-circle test for p against the ccw circle through a,b,c.

    +1: p strictly inside, -1: strictly outside, 0: exactly cocircular.
    Uses a float filter with an exact rational fallback near zero.
    """
    orient = _orient2(a, b, c)
    if orient < 0:
        a, b = b, a
        orient = -orient
    if orient == 0:
        return -1  # degenerate triangle: empty circle convention
    d = _incircle_det(a, b, c, p)
    scale = max(abs(x) for x in (a[0], a[1], b[0], b[1], c[0], c[1], p[0], p[1], 1.0))
    if abs(d) > _INCIRCLE_FLOAT_TOL * scale**4:
        return 1 if d > 0 else -1
    de = _incircle_det_exact(a, b, c, p)
    if de > 0:
        return 1
    if de < 0:
        return -1
    return 0


# ---------------------------------------------------------------------------
# triangulation wrapper
# ---------------------------------------------------------------------------

def _circumcenters(xy: np.ndarray, simplices: np.ndarray):
    a = xy[simplices[:, 0]]
    b = xy[simplices[:, 1]]
    c = xy[simplices[:, 2]]
    a2 = np.einsum("ij,ij->i", a, a)
    b2 = np.einsum("ij,ij->i", b, b)
    c2 = np.einsum("ij,ij->i", c, c)
    d = 2.0 * (a[:, 0] * (b[:, 1] - c[:, 1]) + b[:, 0] * (c[:, 1] - a[:, 1])
               + c[:, 0] * (a[:, 1] - b[:, 1]))
    ux = (a2 * (b[:, 1] - c[:, 1]) + b2 * (c[:, 1] - a[:, 1]) + c2 * (a[:, 1] - b[:, 1])) / d
    uy = (a2 * (c[:, 0] - b[:, 0]) + b2 * (a[:, 0] - c[:, 0]) + c2 * (b[:, 0] - a[:, 0])) / d
    centers = np.column_stack((ux, uy))
    rr = centers - a
    radii2 = np.einsum("ij,ij->i", rr, rr)
    return centers, radii2


@dataclass(frozen=True)
class DelaunayTriangulation:
    """Triangulation with circumcircle data and the dual segment per edge.

    edges is an (m, 2) array of vertex pairs; edge_tri an (m, 2) array of the
    adjacent triangle ids (-1 on the hull side); circumcenters/circumradii2
    hold the dual vertices.  The dual segment of an interior edge joins the
    two adjacent circumcenters; hull edges have an unbounded dual and are
    never active inside a padded window.
    """

    xy: np.ndarray
    simplices: np.ndarray
    edges: np.ndarray
    edge_tri: np.ndarray
    circumcenters: np.ndarray
    circumradii2: np.ndarray
    hull_vertices: np.ndarray

    @property
    def n_points(self) -> int:
        return len(self.xy)

    def neighbor_lists(self) -> list[np.ndarray]:
        n = self.n_points
        if len(self.edges) == 0:
            return [np.empty(0, dtype=np.int64) for _ in range(n)]
        both = np.concatenate((self.edges, self.edges[:, ::-1]))
        order = np.argsort(both[:, 0], kind="stable")
        both = both[order]
        starts = np.searchsorted(both[:, 0], np.arange(n + 1))
        return [both[starts[i]:starts[i + 1], 1] for i in range(n)]

    def verify_empty_circumcircles(self, tree: cKDTree | None = None) -> list[tuple[int, int]]:
        """Exact check of the empty-circumcircle property.

        Returns a list of (triangle id, offending point) pairs; empty when the
        triangulation is exactly Delaunay (ties count as empty, matching the
        index-order perturbation convention).
        """
        if tree is None:
            tree = cKDTree(self.xy)
        bad = []
        radii = np.sqrt(self.circumradii2)
        for t, (center, rad) in enumerate(zip(self.circumcenters, radii)):
            if not np.isfinite(rad):
                continue
            cand = tree.query_ball_point(center, rad + 1e-9)
            tri = set(int(v) for v in self.simplices[t])
            a, b, c = (self.xy[v] for v in self.simplices[t])
            for p in cand:
                if p in tri:
                    continue
                if incircle_sign(a, b, c, self.xy[p]) > 0:
                    bad.append((t, int(p)))
        return bad


def _edges_from_simplices(simplices: np.ndarray, neighbors: np.ndarray):
    t = len(simplices)
    edge_list = []
    tri_list = []
    for k in range(3):
        e = simplices[:, [(k + 1) % 3, (k + 2) % 3]]
        opp = neighbors[:, k]
        mine = np.arange(t)
        keep = (opp < mine)  # dedupe: keep each interior edge once, hull edges (-1) kept
        edge_list.append(e[keep])
        tri_list.append(np.column_stack((mine[keep], opp[keep])))
    edges = np.vstack(edge_list) if edge_list else np.empty((0, 2), dtype=np.int64)
    edge_tri = np.vstack(tri_list) if tri_list else np.empty((0, 2), dtype=np.int64)
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    return np.column_stack((lo, hi)).astype(np.int64), edge_tri.astype(np.int64)


def build_delaunay(points, verify: bool = False) -> DelaunayTriangulation:
    """Delaunay triangulation of a configuration or an (n, 2) array.

    With verify=True the empty-circumcircle property is checked with the
    exact predicate and violated edges are repaired by Lawson flips (needed
    only for near-cocircular inputs that the floating-point build resolved
    inconsistently).
    """
    xy = points.xy if isinstance(points, PointConfiguration) else np.asarray(points, dtype=float)
    xy = np.ascontiguousarray(xy.reshape(-1, 2))
    n = len(xy)
    if n < 3 or _all_collinear(xy):
        return _degenerate_triangulation(xy)
    tri = Delaunay(xy)
    simplices = tri.simplices.astype(np.int64)
    neighbors = tri.neighbors.astype(np.int64)
    edges, edge_tri = _edges_from_simplices(simplices, neighbors)
    centers, radii2 = _circumcenters(xy, simplices)
    hull = np.unique(tri.convex_hull)
    out = DelaunayTriangulation(xy, simplices, edges, edge_tri, centers, radii2, hull)
    if verify:
        bad = out.verify_empty_circumcircles()
        if bad:
            out = _lawson_repair(out)
    return out


def _all_collinear(xy: np.ndarray) -> bool:
    if len(xy) < 3:
        return True
    a = xy[0]
    d = xy - a
    # exact test against the first non-coincident direction
    for i in range(1, len(xy)):
        u = xy[i] - a
        if u[0] != 0.0 or u[1] != 0.0:
            cr = d[:, 0] * u[1] - d[:, 1] * u[0]
            return bool(np.all(cr == 0.0))
    return True


def _degenerate_triangulation(xy: np.ndarray) -> DelaunayTriangulation:
    """Fewer than 3 points, or all collinear: chain adjacency, no triangles."""
    n = len(xy)
    if n <= 1:
        edges = np.empty((0, 2), dtype=np.int64)
    else:
        order = np.lexsort((xy[:, 1], xy[:, 0]))
        edges = np.column_stack((order[:-1], order[1:])).astype(np.int64)
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        edges = np.column_stack((lo, hi))
    return DelaunayTriangulation(
        xy,
        np.empty((0, 3), dtype=np.int64),
        edges,
        np.full((len(edges), 2), -1, dtype=np.int64),
        np.empty((0, 2), dtype=float),
        np.empty(0, dtype=float),
        np.arange(n, dtype=np.int64),
    )


def _lawson_repair(tri: DelaunayTriangulation) -> DelaunayTriangulation:
    """Flip non-Delaunay interior edges until the exact predicate holds."""
    xy = tri.xy
    triangles = [tuple(int(v) for v in s) for s in tri.simplices]

    def edge_map(tris):
        em = {}
        for t, (a, b, c) in enumerate(tris):
            for u, v in ((a, b), (b, c), (c, a)):
                em.setdefault((min(u, v), max(u, v)), []).append(t)
        return em

    em = edge_map(triangles)
    stack = [e for e, ts in em.items() if len(ts) == 2]
    guard = 0
    while stack:
        guard += 1
        if guard > 50 * max(1, len(triangles)):
            raise RuntimeError("Lawson repair did not terminate")
        e = stack.pop()
        ts = em.get(e, [])
        if len(ts) != 2:
            continue
        t1, t2 = ts
        a, b = e
        c = next(v for v in triangles[t1] if v not in e)
        d = next(v for v in triangles[t2] if v not in e)
        if incircle_sign(xy[a], xy[b], xy[c], xy[d]) <= 0:
            continue
        # flip: replace (a,b,c),(a,b,d) by (c,d,a),(c,d,b)
        for t_old in (t1, t2):
            for u, v in ((triangles[t_old][0], triangles[t_old][1]),
                         (triangles[t_old][1], triangles[t_old][2]),
                         (triangles[t_old][2], triangles[t_old][0])):
                key = (min(u, v), max(u, v))
                em[key] = [t for t in em[key] if t not in (t1, t2)]
        triangles[t1] = (c, d, a)
        triangles[t2] = (c, d, b)
        for t_new in (t1, t2):
            for u, v in ((triangles[t_new][0], triangles[t_new][1]),
                         (triangles[t_new][1], triangles[t_new][2]),
                         (triangles[t_new][2], triangles[t_new][0])):
                key = (min(u, v), max(u, v))
                em.setdefault(key, []).append(t_new)
                if len(em[key]) == 2:
                    stack.append(key)
    simplices = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    # rebuild neighbor structure from the edge map
    m = edge_map(triangles)
    neighbors = np.full((len(triangles), 3), -1, dtype=np.int64)
    for t, (a, b, c) in enumerate(triangles):
        for k, (u, v) in enumerate(((b, c), (c, a), (a, b))):
            ts = m[(min(u, v), max(u, v))]
            others = [x for x in ts if x != t]
            neighbors[t, k] = others[0] if others else -1
    edges, edge_tri = _edges_from_simplices(simplices, neighbors)
    centers, radii2 = _circumcenters(xy, simplices)
    return DelaunayTriangulation(xy, simplices, edges, edge_tri, centers, radii2,
                                 tri.hull_vertices)


# ---------------------------------------------------------------------------
# dual-segment queries
# ---------------------------------------------------------------------------

class VoronoiGeometry:
    """Triangulation plus the dual segments, ready for cell connectivity."""

    def __init__(self, xy: np.ndarray):
        self.tri = build_delaunay(xy)
        self.xy = self.tri.xy
        self.edges = self.tri.edges
        et = self.tri.edge_tri
        self.finite = (et[:, 0] >= 0) & (et[:, 1] >= 0)
        cc = self.tri.circumcenters
        self.dual_a = np.zeros((len(self.edges), 2))
        self.dual_b = np.zeros((len(self.edges), 2))
        if len(self.edges):
            safe0 = np.where(et[:, 0] >= 0, et[:, 0], 0)
            safe1 = np.where(et[:, 1] >= 0, et[:, 1], 0)
            if len(cc):
                self.dual_a = cc[safe0]
                self.dual_b = cc[safe1]
        self.kdtree = cKDTree(self.xy)
        self._nbr = None

    @property
    def n_points(self):
        return len(self.xy)

    def neighbor_lists(self):
        if self._nbr is None:
            self._nbr = self.tri.neighbor_lists()
        return self._nbr

    def nearest(self, p) -> int:
        return int(self.kdtree.query(np.asarray(p, dtype=float))[1])

    def cells_meeting_segment(self, seg) -> np.ndarray:
        """Unordered set of cells whose closed cell intersects the segment.

        A segment visits consecutive cells, switching exactly where it crosses
        a dual segment; hence the set is the nearest cell of one endpoint plus
        both cells of every dual edge crossing the segment.
        """
        a = np.asarray(seg[0], dtype=float)
        b = np.asarray(seg[1], dtype=float)
        hits = _segments_cross(self.dual_a, self.dual_b, a, b) & self.finite
        cells = set(self.edges[hits].ravel().tolist())
        cells.add(self.nearest(a))
        cells.add(self.nearest(b))
        return np.array(sorted(cells), dtype=np.int64)

    def boundary_cell_walk(self, seg, max_steps: int = 100000) -> list[int]:
        """Ordered cells met by the segment, via nearest-neighbor stepping."""
        a = np.asarray(seg[0], dtype=float)
        b = np.asarray(seg[1], dtype=float)
        u = b - a
        nbrs = self.neighbor_lists()
        cur = self.nearest(a)
        out = [cur]
        s = 0.0
        for _ in range(max_steps):
            cand_s = np.inf
            cand = -1
            for v in nbrs[cur]:
                mid = 0.5 * (self.xy[cur] + self.xy[v])
                d = self.xy[v] - self.xy[cur]
                denom = float(u @ d)
                if denom <= 0.0:
                    continue
                sv = float((mid - a) @ d) / denom
                if s < sv < cand_s:
                    cand_s = sv
                    cand = int(v)
            if cand < 0 or cand_s >= 1.0:
                break
            cur = cand
            s = cand_s
            out.append(cur)
        else:
            raise RuntimeError("boundary walk did not terminate")
        return out

    def hull_contact(self, cells: np.ndarray) -> bool:
        """True if any of the cells (or a neighbor) is unbounded: padding failure."""
        is_hull = np.zeros(self.n_points, dtype=bool)
        is_hull[self.tri.hull_vertices] = True
        if np.any(is_hull[cells]):
            return True
        in_cells = np.zeros(self.n_points, dtype=bool)
        in_cells[cells] = True
        if len(self.edges) == 0:
            return False
        touching = in_cells[self.edges[:, 0]] | in_cells[self.edges[:, 1]]
        if np.any(touching & ~self.finite):
            return True
        nbr_pts = self.edges[touching].ravel()
        return bool(np.any(is_hull[nbr_pts]))


def _segments_cross(a0: np.ndarray, a1: np.ndarray, b0, b1) -> np.ndarray:
    """Vectorized proper/improper segment intersection test."""
    b0 = np.asarray(b0, dtype=float)
    b1 = np.asarray(b1, dtype=float)

    def cross(o, p, q):
        return (p[:, 0] - o[:, 0]) * (q[:, 1] - o[:, 1]) - (p[:, 1] - o[:, 1]) * (q[:, 0] - o[:, 0])

    n = len(a0)
    B0 = np.broadcast_to(b0, (n, 2))
    B1 = np.broadcast_to(b1, (n, 2))
    d1 = cross(a0, a1, B0)
    d2 = cross(a0, a1, B1)
    d3 = cross(B0, B1, a0)
    d4 = cross(B0, B1, a1)
    return ((d1 * d2) <= 0.0) & ((d3 * d4) <= 0.0) & ~((d1 == 0) & (d2 == 0) & (d3 == 0) & (d4 == 0))


# ---------------------------------------------------------------------------
# colored crossing scaffold
# ---------------------------------------------------------------------------

class PaddingError(RuntimeError):
    pass


class ColoredCellGraph:
    """Cells meeting a box with the adjacency active inside the box.

    Adjacency rule: cells are joined iff their shared dual segment intersects
    the closed box.  The graph keeps, for each box side, the exact set of
    cells met by that side.
    """

    def __init__(self, geom: VoronoiGeometry, marks: np.ndarray, box: Region,
                 check_padding: bool = True):
        if box.kind != "rect":
            raise ValueError("crossing boxes must be rectangles")
        self.geom = geom
        self.marks = np.asarray(marks, dtype=np.int8)
        self.box = box
        x0, y0, x1, y1 = box.bbox()
        self.side_segments = {
            "left": ((x0, y0), (x0, y1)),
            "right": ((x1, y0), (x1, y1)),
            "top": ((x0, y1), (x1, y1)),
            "bottom": ((x0, y0), (x1, y0)),
        }
        self.side_cells = {name: geom.cells_meeting_segment(seg)
                           for name, seg in self.side_segments.items()}
        inside = ((geom.xy[:, 0] >= x0) & (geom.xy[:, 0] <= x1)
                  & (geom.xy[:, 1] >= y0) & (geom.xy[:, 1] <= y1))
        cand = set(np.flatnonzero(inside).tolist())
        for cells in self.side_cells.values():
            cand.update(cells.tolist())
        self.cells = np.array(sorted(cand), dtype=np.int64)
        if check_padding and geom.hull_contact(self.cells):
            raise PaddingError("a cell meeting the box reaches the sample hull; "
                               "increase the sampling pad")
        self.local = np.full(geom.n_points, -1, dtype=np.int64)
        self.local[self.cells] = np.arange(len(self.cells))
        emask = (self.local[geom.edges[:, 0]] >= 0) & (self.local[geom.edges[:, 1]] >= 0)
        emask &= geom.finite
        eidx = np.flatnonzero(emask)
        if len(eidx):
            hits = segments_meet_rect(geom.dual_a[eidx], geom.dual_b[eidx], box.bbox())
            eidx = eidx[hits]
        self.active_pairs = self.local[geom.edges[eidx]]
        self._adj = None

    def _adjacency(self):
        if self._adj is None:
            n = len(self.cells)
            both = (np.concatenate((self.active_pairs, self.active_pairs[:, ::-1]))
                    if len(self.active_pairs) else np.empty((0, 2), dtype=np.int64))
            if len(both):
                both = both[np.argsort(both[:, 0], kind="stable")]
            starts = np.searchsorted(both[:, 0], np.arange(n + 1))
            self._adj = [both[starts[i]:starts[i + 1], 1] for i in range(n)]
        return self._adj

    def _side_local(self, side: str) -> np.ndarray:
        return self.local[self.side_cells[side]]

    def reach(self, color: int, side: str, marks: np.ndarray | None = None) -> np.ndarray:
        """Cells of the given color connected to the side through same-color cells."""
        marks = self.marks if marks is None else marks
        adj = self._adjacency()
        n = len(self.cells)
        ok = marks[self.cells] == color
        seen = np.zeros(n, dtype=bool)
        stack = [int(i) for i in self._side_local(side) if ok[i]]
        for i in stack:
            seen[i] = True
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if ok[v] and not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        return seen

    def crosses(self, color: int = 1, axis: str = "LR",
                marks: np.ndarray | None = None) -> bool:
        a, b = ("left", "right") if axis == "LR" else ("top", "bottom")
        marks = self.marks if marks is None else marks
        reach = self.reach(color, a, marks)
        tgt = self._side_local(b)
        ok = marks[self.cells] == color
        return bool(np.any(reach[tgt] & ok[tgt]))


def voronoi_crossing(cfg: PointConfiguration, box: Region, color: int = 1,
                     axis: str = "LR", geom: VoronoiGeometry | None = None) -> bool:
    if not cfg.marked:
        raise ValueError("Voronoi crossings need a marked configuration")
    if geom is None:
        geom = VoronoiGeometry(cfg.xy)
    return ColoredCellGraph(geom, cfg.marks, box).crosses(color=color, axis=axis)


VORONOI_DEFAULT_PAD = 10.0


def voronoi_sample_window(L: float, pad: float = VORONOI_DEFAULT_PAD) -> Region:
    return Region.square(L + pad)


class VoronoiCrossingScaffold:
    """Per-configuration machinery for the colored LR crossing of W_L."""

    def __init__(self, cfg: PointConfiguration, L: float,
                 check_padding: bool = True):
        if not cfg.marked:
            raise ValueError("needs a marked configuration")
        self.cfg = cfg
        self.L = float(L)
        self.geom = VoronoiGeometry(cfg.xy)
        self.graph = ColoredCellGraph(self.geom, cfg.marks, Region.square(L),
                                      check_padding=check_padding)

    def value(self) -> int:
        return 1 if self.graph.crosses(color=1, axis="LR") else -1

    def duality_holds(self) -> bool:
        """Black LR crossing XOR white TB crossing, exact cell-level planarity."""
        black = self.graph.crosses(color=1, axis="LR")
        white = self.graph.crosses(color=-1, axis="TB")
        return black != white

    def _flip_value(self, local_idx: int) -> int:
        marks = np.array(self.cfg.marks, dtype=np.int8)
        g = int(self.graph.cells[local_idx])
        marks[g] = -marks[g]
        return 1 if self.graph.crosses(color=1, axis="LR", marks=marks) else -1

    def mark_flip_pivotal_indices(self) -> np.ndarray:
        """Configuration indices whose colour flip changes the crossing sign.

        A necessary condition prunes the candidates: with its own colour the
        cell must join the left and right sides through black cells, and with
        the opposite colour it must join top and bottom through white cells
        (the crossing and its dual must both run through the cell).  Each
        candidate is then confirmed by an actual flip.
        """
        g = self.graph
        marks = self.cfg.marks
        cells = g.cells
        col = marks[cells]
        rl = g.reach(1, "left")
        rr = g.reach(1, "right")
        rt = g.reach(-1, "top")
        rb = g.reach(-1, "bottom")
        touch = {s: np.zeros(len(cells), dtype=bool) for s in ("left", "right", "top", "bottom")}
        for s in touch:
            touch[s][g._side_local(s)] = True
        adj = g._adjacency()
        f0 = 1 if bool(np.any(rl[g._side_local("right")] & (col[g._side_local("right")] == 1))) else -1

        out = []
        for i in range(len(cells)):
            nbr = adj[i]
            if col[i] == 1:
                if not (rl[i] and rr[i]):
                    continue
                okt = touch["top"][i] or bool(len(nbr) and np.any(rt[nbr]))
                okb = touch["bottom"][i] or bool(len(nbr) and np.any(rb[nbr]))
                if not (okt and okb):
                    continue
            else:
                if not (rt[i] and rb[i]):
                    continue
                okl = touch["left"][i] or bool(len(nbr) and np.any(rl[nbr]))
                okr = touch["right"][i] or bool(len(nbr) and np.any(rr[nbr]))
                if not (okl and okr):
                    continue
            if self._flip_value(i) != f0:
                out.append(int(cells[i]))
        return np.array(sorted(out), dtype=np.int64)

    def removal_pivotal_indices(self, method: str = "patch",
                                rebuild_pad: float = 6.0) -> np.ndarray:
        """Configuration indices whose removal changes the crossing sign.

        Removing a point hands its cell to the neighbours, which squeezes the
        crossing value between the two colourings of that cell; a removal can
        therefore only matter for mark-flip pivotal points.  Those are checked
        either on a local re-tessellation around the removed point ("patch")
        or by a full rebuild on a reduced window ("rebuild").
        """
        quenched = self.mark_flip_pivotal_indices()
        if len(quenched) == 0:
            return quenched
        f0 = self.value()
        out = []
        for gidx in quenched:
            if method == "patch":
                f1 = self._value_without_patched(int(gidx))
            else:
                f1 = self._value_without_rebuilt(int(gidx), rebuild_pad)
            if f1 != f0:
                out.append(int(gidx))
        return np.array(sorted(out), dtype=np.int64)

    def _value_without_rebuilt(self, gidx: int, rebuild_pad: float) -> int:
        win = Region.square(self.L + rebuild_pad)
        keep = win.contains(self.cfg.xy)
        keep[gidx] = False
        geom = VoronoiGeometry(self.cfg.xy[keep])
        graph = ColoredCellGraph(geom, self.cfg.marks[keep], Region.square(self.L),
                                 check_padding=False)
        return 1 if graph.crosses(color=1, axis="LR") else -1

    def _value_without_patched(self, gidx: int) -> int:
        """Crossing sign after deleting one point, via a 2-ring re-tessellation.

        Deleting a point redistributes its cell among its Delaunay neighbours
        (ring 1); their new cells, hence all their boundary segments, are
        already exact in the Voronoi diagram of the 2-ring alone, while every
        other cell is untouched.  The box adjacency is patched accordingly and
        the crossing re-examined.
        """
        geom, g = self.geom, self.graph
        nbrs = geom.neighbor_lists()
        ring1 = np.asarray(nbrs[gidx], dtype=np.int64)
        local_pts = set(ring1.tolist())
        for y in ring1:
            local_pts.update(nbrs[int(y)].tolist())
        local_pts.discard(gidx)
        S = np.array(sorted(local_pts), dtype=np.int64)
        if len(S) < 4:
            return self._value_without_rebuilt(gidx, 6.0)
        sub = VoronoiGeometry(self.cfg.xy[S])
        in_ring1 = np.zeros(geom.n_points, dtype=bool)
        in_ring1[ring1] = True
        ge = S[sub.edges]
        keep = (in_ring1[ge[:, 0]] | in_ring1[ge[:, 1]]) & sub.finite
        if np.any(keep):
            hits = segments_meet_rect(sub.dual_a[keep], sub.dual_b[keep],
                                      self.graph.box.bbox())
            new_pairs = ge[keep][hits]
        else:
            new_pairs = np.empty((0, 2), dtype=np.int64)
        old_pairs = g.cells[g.active_pairs] if len(g.active_pairs) else \
            np.empty((0, 2), dtype=np.int64)
        if len(old_pairs):
            stale = (in_ring1[old_pairs[:, 0]] | in_ring1[old_pairs[:, 1]]
                     | (old_pairs[:, 0] == gidx) | (old_pairs[:, 1] == gidx))
            old_pairs = old_pairs[~stale]
        pairs = np.vstack((old_pairs, new_pairs)) if len(new_pairs) else old_pairs

        def new_side(name):
            cells = set(int(c) for c in g.side_cells[name])
            if gidx in cells:
                cells.discard(gidx)
                loc = sub.cells_meeting_segment(self.side_segment(name))
                cells.update(int(v) for v in S[loc] if in_ring1[v])
            return cells

        left, right = new_side("left"), new_side("right")
        marks = self.cfg.marks
        seeds = {c for c in left if marks[c] == 1}
        targets = {c for c in right if marks[c] == 1}
        if not seeds or not targets:
            return -1
        if seeds & targets:
            return 1
        adj: dict[int, list[int]] = {}
        for a, b in pairs:
            a, b = int(a), int(b)
            if marks[a] == 1 and marks[b] == 1:
                adj.setdefault(a, []).append(b)
                adj.setdefault(b, []).append(a)
        stack = list(seeds)
        seen = set(seeds)
        while stack:
            u = stack.pop()
            for v in adj.get(u, ()):
                if v in targets:
                    return 1
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return -1

    def side_segment(self, name: str):
        return self.graph.side_segments[name]

    def pivotal_counts(self, method: str = "patch") -> tuple[int, int]:
        """(removal-pivotal count, mark-flip pivotal count) for this replica."""
        quenched = self.mark_flip_pivotal_indices()
        if len(quenched) == 0:
            return 0, 0
        f0 = self.value()
        removal = 0
        for gidx in quenched:
            f1 = (self._value_without_patched(int(gidx)) if method == "patch"
                  else self._value_without_rebuilt(int(gidx), 6.0))
            if f1 != f0:
                removal += 1
        return removal, len(quenched)


class VoronoiCrossingFunctional:
    """+-1 indicator of the black LR cell crossing of W_L.

    The declared dependence region is the sampling window: cell geometry has
    no hard cutoff, but the padded window makes outside influence vanish up
    to the checked tolerance (hull-contact guard).
    """

    def __init__(self, L: float, intensity: float = 1.0,
                 pad: float = VORONOI_DEFAULT_PAD):
        self.L = float(L)
        self.intensity = float(intensity)
        self.pad = float(pad)
        self.box = Region.square(L)
        self.sampling_window = voronoi_sample_window(L, pad)
        self.dependence_region = self.sampling_window
        self.increasing = True
        self.name = f"voronoi-crossing-L{L:g}"
        self.calls = 0

    def __call__(self, cfg: PointConfiguration) -> float:
        self.calls += 1
        return 1.0 if voronoi_crossing(cfg, self.box) else -1.0

    def scaffold(self, cfg: PointConfiguration,
                 check_padding: bool = True) -> VoronoiCrossingScaffold:
        self.calls += 1
        return VoronoiCrossingScaffold(cfg, self.L, check_padding=check_padding)

    def replica_pivotal_counts(self, cfg: PointConfiguration) -> tuple[int, int]:
        return self.scaffold(cfg).pivotal_counts()


# ---------------------------------------------------------------------------
# arm events on the colored cell graph
# ---------------------------------------------------------------------------

def colored_region_components(cfg: PointConfiguration, region: Region,
                              geom: VoronoiGeometry | None = None,
                              color: int = 1) -> int:
    """Number of distinct same-colour cell components bridging the annulus.

    Cells participate iff they intersect the region; adjacency iff the shared
    dual segment meets the region; a component bridges iff it contains a cell
    met by the inner boundary and one met by the outer boundary.
    """
    if not cfg.marked:
        raise ValueError("needs a marked configuration")
    if not region.is_annular:
        raise ValueError("arm events need an annular region")
    if geom is None:
        geom = VoronoiGeometry(cfg.xy)
    inner = set()
    for seg in region.inner_segments():
        inner.update(geom.cells_meeting_segment(seg).tolist())
    outer = set()
    for seg in region.outer_segments():
        outer.update(geom.cells_meeting_segment(seg).tolist())
    cand = set(np.flatnonzero(region.contains(geom.xy)).tolist())
    cand |= inner | outer
    for seg in region.wall_segments():
        cand.update(geom.cells_meeting_segment(seg).tolist())
    cells = np.array(sorted(cand), dtype=np.int64)
    if geom.hull_contact(cells):
        raise PaddingError("annulus cells reach the sample hull; increase pad")
    local = np.full(geom.n_points, -1, dtype=np.int64)
    local[cells] = np.arange(len(cells))
    col = cfg.marks[cells]
    emask = (local[geom.edges[:, 0]] >= 0) & (local[geom.edges[:, 1]] >= 0) & geom.finite
    eidx = np.flatnonzero(emask)
    if len(eidx):
        hits = segments_meet_region(geom.dual_a[eidx], geom.dual_b[eidx], region)
        eidx = eidx[hits]
    pairs = local[geom.edges[eidx]]
    same = col[pairs[:, 0]] == col[pairs[:, 1]]
    keep = same & (col[pairs[:, 0]] == color)
    pairs = pairs[keep]
    labels = _component_labels(len(cells), pairs)
    inner_l = set(int(labels[local[c]]) for c in inner if cfg.marks[c] == color)
    outer_l = set(int(labels[local[c]]) for c in outer if cfg.marks[c] == color)
    return len(inner_l & outer_l)


def voronoi_arm_event(cfg: PointConfiguration, region: Region, n_arms: int = 4,
                      geom: VoronoiGeometry | None = None) -> bool:
    """Alternating-colour arm event with n_arms arms in a full square annulus.

    For an even number 2k of alternating arms the event holds iff at least k
    distinct black components bridge the annulus (equivalently k white ones).
    """
    if n_arms % 2 != 0 or region.kind != "annulus":
        raise ValueError("cell-level arm events support even alternating "
                         "patterns in full annuli")
    k = n_arms // 2
    return colored_region_components(cfg, region, geom=geom, color=1) >= k
