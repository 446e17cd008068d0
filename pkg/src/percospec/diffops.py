"""Add-one / remove-one / iterated difference operators and pivotal sets.

These are the generic, brute-force reference implementations: they evaluate
the functional directly on perturbed configurations.  Model-specific fast
paths (articulation points for disk crossings, cell patches for Voronoi
crossings) live with their models and are tested against these.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .geometry import Region
from .model import MarkedPoint, PointConfiguration, add_point, remove_point

MAX_ITERATED_ORDER = 20


class Functional:
    """Evaluatable map from configurations to reals, with metadata.

    dependence_region limits which points can affect the value (used to prune
    pivotality scans); increasing declares monotonicity under point addition
    (adding a +1/black point never decreases the value, adding a -1/white
    point never increases it).  Evaluations are counted in ``calls``.
    """

    def __init__(self, fn, dependence_region: Region | None = None,
                 increasing: bool = False, name: str = ""):
        self._fn = fn
        self.dependence_region = dependence_region
        self.increasing = increasing
        self.name = name or getattr(fn, "__name__", "functional")
        self.calls = 0

    def __call__(self, cfg: PointConfiguration) -> float:
        self.calls += 1
        return float(self._fn(cfg))


@dataclass(frozen=True)
class PivotalSet:
    """Indices of a configuration that the functional is sensitive to."""

    cfg: PointConfiguration
    removal: np.ndarray
    mark_flip: np.ndarray | None = None

    def __post_init__(self):
        for name in ("removal", "mark_flip"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.ascontiguousarray(np.asarray(arr, dtype=np.int64))
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)


def add_one_cost(F, cfg: PointConfiguration, p: MarkedPoint) -> float:
    """F(cfg + p) - F(cfg)."""
    return F(add_point(cfg, p)) - F(cfg)


def remove_one_cost(F, cfg: PointConfiguration, index: int) -> float:
    """F(cfg) - F(cfg - point[index])."""
    return F(cfg) - F(remove_point(cfg, index))


def iterated_difference(F, cfg: PointConfiguration, points: list[MarkedPoint]) -> float:
    """Alternating-sign sum of F over all subsets of added points.

    Symmetric in the points by construction; 2^k evaluations with each
    intermediate configuration built incrementally.
    """
    k = len(points)
    if k > MAX_ITERATED_ORDER:
        raise ValueError(f"iterated difference capped at order {MAX_ITERATED_ORDER}")
    locs = [p.loc.as_array() for p in points]
    for i, j in combinations(range(k), 2):
        if np.all(locs[i] == locs[j]):
            raise ValueError("iterated difference needs pairwise distinct points")
    total = 0.0
    for mask in range(1 << k):
        sub = cfg
        bits = 0
        for i in range(k):
            if mask >> i & 1:
                sub = add_point(sub, points[i])
                bits += 1
        total += (-1) ** (k - bits) * F(sub)
    return total


def _boolean_value(F, cfg) -> float:
    v = F(cfg)
    if v not in (-1.0, 1.0):
        raise ValueError("pivotal sets are defined for +-1 valued functionals")
    return v


def _candidate_indices(F, cfg: PointConfiguration) -> np.ndarray:
    region = getattr(F, "dependence_region", None)
    if region is None:
        return np.arange(cfg.n)
    return np.flatnonzero(region.contains(cfg.xy))


def pivotal_points(F, cfg: PointConfiguration) -> PivotalSet:
    """Exact removal-pivotal set by brute re-evaluation with locality pruning."""
    v = _boolean_value(F, cfg)
    out = []
    for i in _candidate_indices(F, cfg):
        if F(remove_point(cfg, int(i))) != v:
            out.append(int(i))
    return PivotalSet(cfg, np.array(out, dtype=np.int64))


def quenched_pivotal_points(F, cfg: PointConfiguration) -> PivotalSet:
    """Exact mark-flip pivotal set; rejects unmarked configurations."""
    if not cfg.marked:
        raise ValueError("quenched pivotality needs a marked configuration")
    v = _boolean_value(F, cfg)
    out = []
    for i in _candidate_indices(F, cfg):
        marks = np.array(cfg.marks)
        marks[i] = -marks[i]
        if F(cfg.with_marks(marks)) != v:
            out.append(int(i))
    return PivotalSet(cfg, np.empty(0, dtype=np.int64),
                      np.array(out, dtype=np.int64))
