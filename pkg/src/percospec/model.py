"""Point configurations, Poisson sampling, and the two dynamics couplings.

Marks are carried internally as signs in {-1, +1} (+1 is black, -1 white);
the {0, 1} colour convention maps 0 <-> -1 and 1 <-> +1 at the API boundary.
Configurations are immutable: every operation returns a new object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Point2, Region
from .rng import SeedSpec

_MAX_REJECTION_ROUNDS = 1000


@dataclass(frozen=True)
class MarkedPoint:
    loc: Point2
    mark: int = 1

    def __post_init__(self):
        if self.mark not in (-1, 1):
            raise ValueError("mark must be -1 or +1")


@dataclass(frozen=True)
class PointConfiguration:
    """Finite simple point set in a planar window, optionally marked.

    xy is the (n, 2) coordinate array; marks is an (n,) array of signs for
    marked configurations and None otherwise.  Arrays are frozen (writeable
    flag cleared) so configurations can be shared across workers.
    """

    xy: np.ndarray
    window: Region
    marks: np.ndarray | None = None
    id: str = ""
    out_of_window: int = 0

    def __post_init__(self):
        xy = np.ascontiguousarray(np.asarray(self.xy, dtype=float).reshape(-1, 2))
        xy.setflags(write=False)
        object.__setattr__(self, "xy", xy)
        if not np.all(np.isfinite(xy)):
            raise ValueError("coordinates must be finite")
        if self.marks is not None:
            marks = np.ascontiguousarray(np.asarray(self.marks, dtype=np.int8))
            if marks.shape != (len(xy),):
                raise ValueError("marks must match point count")
            if len(marks) and not np.all(np.abs(marks) == 1):
                raise ValueError("marks must be +-1")
            marks.setflags(write=False)
            object.__setattr__(self, "marks", marks)
        if len(xy) > 1:
            # simplicity: duplicate locations have probability zero and are rejected
            order = np.lexsort((xy[:, 1], xy[:, 0]))
            s = xy[order]
            if np.any(np.all(s[1:] == s[:-1], axis=1)):
                raise ValueError("duplicate point locations")

    @property
    def n(self) -> int:
        return len(self.xy)

    @property
    def marked(self) -> bool:
        return self.marks is not None

    @property
    def points(self) -> list[MarkedPoint]:
        marks = self.marks if self.marked else np.ones(self.n, dtype=np.int8)
        return [MarkedPoint(Point2(float(x), float(y)), int(m))
                for (x, y), m in zip(self.xy, marks)]

    def with_marks(self, marks: np.ndarray) -> "PointConfiguration":
        return PointConfiguration(self.xy, self.window, marks, self.id,
                                  self.out_of_window)


def _uniform_in_region(rng: np.random.Generator, region: Region, n: int) -> np.ndarray:
    """n i.i.d. uniform points in the region (rejection from the bbox)."""
    x0, y0, x1, y1 = region.bbox()
    if region.kind == "rect":
        u = rng.random((n, 2))
        return np.column_stack((x0 + (x1 - x0) * u[:, 0], y0 + (y1 - y0) * u[:, 1]))
    out = np.empty((0, 2))
    need = n
    for _ in range(_MAX_REJECTION_ROUNDS):
        if need <= 0:
            break
        m = max(16, int(need * (x1 - x0) * (y1 - y0) / region.area() * 1.2) + 4)
        u = rng.random((m, 2))
        cand = np.column_stack((x0 + (x1 - x0) * u[:, 0], y0 + (y1 - y0) * u[:, 1]))
        cand = cand[region.contains(cand)]
        out = np.vstack((out, cand[:need]))
        need = n - len(out)
    if need > 0:
        raise RuntimeError("rejection sampling failed to fill the region")
    return out


def sample_poisson(intensity: float, window: Region, seed: SeedSpec,
                   marked: bool = False) -> PointConfiguration:
    """Homogeneous Poisson sample in the window; fair signs when marked."""
    if intensity < 0:
        raise ValueError("intensity must be nonnegative")
    rng = seed.generator()
    n = int(rng.poisson(intensity * window.area()))
    xy = _uniform_in_region(rng, window, n)
    marks = (rng.integers(0, 2, n, dtype=np.int8) * 2 - 1) if marked else None
    rid = f"{seed.experiment}/{seed.replica}/{seed.purpose}"
    return PointConfiguration(xy, window, marks, rid)


def add_point(cfg: PointConfiguration, p: MarkedPoint) -> PointConfiguration:
    """Configuration with one extra point (duplicates rejected).

    Points outside the window are allowed; the configuration keeps a count of
    them so detectors can flag insufficient padding.
    """
    loc = p.loc.as_array()
    if cfg.n and np.any(np.all(cfg.xy == loc, axis=1)):
        raise ValueError("point already present at this location")
    xy = np.vstack((cfg.xy, loc[None, :]))
    marks = None
    if cfg.marked:
        marks = np.concatenate((cfg.marks, np.array([p.mark], dtype=np.int8)))
    outside = cfg.out_of_window + (0 if cfg.window.contains(loc[None, :])[0] else 1)
    return PointConfiguration(xy, cfg.window, marks, cfg.id, outside)


def remove_point(cfg: PointConfiguration, index: int) -> PointConfiguration:
    if not 0 <= index < cfg.n:
        raise IndexError(f"point index {index} out of range for n={cfg.n}")
    keep = np.ones(cfg.n, dtype=bool)
    keep[index] = False
    was_outside = not cfg.window.contains(cfg.xy[index][None, :])[0]
    marks = cfg.marks[keep] if cfg.marked else None
    outside = cfg.out_of_window - (1 if was_outside else 0)
    return PointConfiguration(cfg.xy[keep], cfg.window, marks, cfg.id, outside)


@dataclass(frozen=True)
class DynamicsCoupling:
    """A base configuration together with its evolved state at time t."""

    base: PointConfiguration
    t: float
    kind: str  # "OU" or "frozen"
    evolved: PointConfiguration
    retained: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self):
        retained = np.ascontiguousarray(np.asarray(self.retained, dtype=np.int64))
        retained.setflags(write=False)
        object.__setattr__(self, "retained", retained)


def evolve_ou(base: PointConfiguration, t: float, intensity: float,
              seed: SeedSpec) -> DynamicsCoupling:
    """Birth-death evolution: keep each point w.p. e^{-t}, refill the deficit.

    The evolved configuration has the same marginal law as the base: survivors
    keep their marks, fresh points arrive as an independent Poisson sample of
    intensity (1 - e^{-t}) * intensity with fresh fair marks.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    rng = seed.generator()
    p_keep = math.exp(-t)
    keep = rng.random(base.n) < p_keep
    retained = np.flatnonzero(keep)
    fresh = sample_poisson((1.0 - p_keep) * intensity, base.window,
                           seed.with_(purpose=seed.purpose + "/ou-fresh"),
                           marked=base.marked)
    xy = np.vstack((base.xy[keep], fresh.xy))
    marks = None
    if base.marked:
        marks = np.concatenate((base.marks[keep], fresh.marks))
    evolved = PointConfiguration(xy, base.window, marks, base.id + f"@ou{t:g}")
    return DynamicsCoupling(base, t, "OU", evolved, retained)


def evolve_frozen(base: PointConfiguration, t: float, seed: SeedSpec) -> DynamicsCoupling:
    """Frozen evolution: locations fixed, each mark resampled w.p. 1 - e^{-t}."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    if not base.marked:
        raise ValueError("frozen dynamics needs a marked configuration")
    rng = seed.generator()
    resample = rng.random(base.n) >= math.exp(-t)
    fresh = rng.integers(0, 2, base.n, dtype=np.int8) * 2 - 1
    marks = np.where(resample, fresh, base.marks).astype(np.int8)
    retained = np.flatnonzero(~resample)
    evolved = PointConfiguration(base.xy, base.window, marks, base.id + f"@fr{t:g}")
    return DynamicsCoupling(base, t, "frozen", evolved, retained)
