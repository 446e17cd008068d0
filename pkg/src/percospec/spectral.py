"""Monte Carlo estimators for spectral/pivotal intensities and moments.

The first-order identity estimated here has two independent routes: the
configuration-point route (four times the expected pivotal count) and the
added-point route (intensity times the mean squared add-one cost at uniform
locations).  Both are computed on the same replicas so their discrepancy has
a meaningful paired error; they must agree within a few standard errors on
every run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Region
from .model import PointConfiguration, sample_poisson
from .results import EstimatorResult, batch_means
from .rng import SeedSpec


@dataclass(frozen=True)
class MomentDensityQuery:
    """Which correlation density to estimate, at which points."""

    functional: str
    order: int
    points: tuple
    normalize: bool = False  # divide by the estimated second moment

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if self.order == 2:
            (x0, y0), (x1, y1) = self.points
            if x0 == x1 and y0 == y1:
                raise ValueError("order-2 evaluation points must be distinct")


def _uniform_points(region: Region, rng, m: int) -> np.ndarray:
    x0, y0, x1, y1 = region.bbox()
    u = rng.random((m, 2))
    return np.column_stack((x0 + (x1 - x0) * u[:, 0], y0 + (y1 - y0) * u[:, 1]))


@dataclass(frozen=True)
class DualRouteResult:
    """Paired estimates of one quantity by two routes."""

    configuration_route: EstimatorResult   # pivotal-count route
    added_point_route: EstimatorResult     # uniform add-one route
    discrepancy_sigma: float
    second_moment: float                   # estimate of E[F^2] on the same replicas

    def agree(self, n_sigma: float = 3.0) -> bool:
        return self.discrepancy_sigma <= n_sigma


def spectral_intensity_integral(F, window: Region, intensity: float, n: int,
                                seed: SeedSpec, x_per_replica: int = 16) -> DualRouteResult:
    """Integral of the first spectral correlation density over the window.

    Route 1 evaluates four times the pivotal count of each replica; route 2
    evaluates intensity * |window| * mean squared add-one cost at uniform
    locations.  F must be a +-1 crossing functional exposing ``scaffold``.
    """
    area = window.area()
    mecke = np.empty(n)
    added = np.empty(n)
    fsq = np.empty(n)
    for rep in range(n):
        rs = seed.with_(replica=rep)
        cfg = sample_poisson(intensity, F.sampling_window,
                             rs.with_(purpose="cfg"))
        sc = F.scaffold(cfg)
        crossing = sc.crosses()
        fsq[rep] = 1.0
        if crossing:
            piv = sc.pivotal_node_positions()
            inside = window.contains(sc.graph.xy[piv]) if len(piv) else \
                np.empty(0, dtype=bool)
            mecke[rep] = 4.0 * int(np.count_nonzero(inside))
            added[rep] = 0.0  # increasing +-1 functional: add-one cost vanishes
            continue
        mecke[rep] = 0.0
        xs = _uniform_points(window, rs.with_(purpose="xs").generator(),
                             x_per_replica)
        hits = sum(1 for x in xs if sc.add_point_creates(x))
        added[rep] = intensity * area * 4.0 * hits / x_per_replica
    m_est, m_se = batch_means(mecke)
    a_est, a_se = batch_means(added)
    d_est, d_se = batch_means(added - mecke)
    disc = abs(d_est) / d_se if d_se > 0 else float("inf")
    meta = {"window_area": area, "intensity": intensity, "functional": F.name}
    return DualRouteResult(
        EstimatorResult(m_est, m_se, n, seed, {**meta, "route": "pivotal-count"}),
        EstimatorResult(a_est, a_se, n, seed, {**meta, "route": "add-one"}),
        float(disc),
        float(fsq.mean()),
    )


def _second_difference_sq(sc, x, y) -> float:
    """Squared two-point iterated difference for an increasing crossing."""
    if sc.crosses():
        return 0.0
    cx = sc.add_point_creates(x)
    cy = sc.add_point_creates(y)
    cxy = True if (cx or cy) else sc.add_pair_creates(x, y)
    d = 2.0 * (int(cxy) - int(cx) - int(cy))
    return d * d


def second_moment_bound_check(F, intensity: float, rho: float, n: int,
                              seed: SeedSpec) -> dict:
    """First and second moments of the spectral mass inside the rho-window.

    Returns the first-moment estimate M1, the second-moment estimate
    M2 = pair integral + M1 (the diagonal term), and their ratio M2 / M1^2.
    A flagged ratio of ``inf`` means M1 came out zero.
    """
    if not 0 < rho <= 1:
        raise ValueError("rho must be in (0, 1]")
    box = Region.square(rho * F.L)
    area = box.area()
    first = np.empty(n)
    second = np.empty(n)
    for rep in range(n):
        rs = seed.with_(replica=rep)
        cfg = sample_poisson(intensity, F.sampling_window, rs.with_(purpose="cfg"))
        sc = F.scaffold(cfg)
        rng = rs.with_(purpose="xy").generator()
        pts = _uniform_points(box, rng, 3)
        x, y = pts[0], pts[1]
        if sc.crosses():
            first[rep] = 0.0
            second[rep] = 0.0
        else:
            first[rep] = intensity * area * 4.0 * int(sc.add_point_creates(pts[2]))
            second[rep] = (intensity * area) ** 2 * _second_difference_sq(sc, x, y)
    m1, m1_se = batch_means(first)
    m2_pair, m2_se = batch_means(second)
    m2 = m2_pair + m1
    ratio = m2 / (m1 * m1) if m1 > 0 else float("inf")
    return {
        "M1": EstimatorResult(m1, m1_se, n, seed, {"kind": "spectral-mass-1"}),
        "M2": EstimatorResult(m2, m2_se, n, seed, {"kind": "spectral-mass-2"}),
        "ratio": float(ratio),
        "flagged": m1 <= 0,
        "rho": rho,
    }


def paley_zygmund_lower_bound(m1, m2, s: float) -> float:
    """(1-s)^2 M1^2 / M2: lower bound on P(Z > s E Z) for nonnegative Z."""
    m1 = m1.estimate if isinstance(m1, EstimatorResult) else float(m1)
    m2 = m2.estimate if isinstance(m2, EstimatorResult) else float(m2)
    if not 0 <= s < 1:
        raise ValueError("s must lie in [0, 1)")
    if m2 <= 0:
        raise ValueError("second moment must be positive")
    return (1.0 - s) ** 2 * m1 * m1 / m2


def second_difference_scan(F, distances, n: int, seed: SeedSpec,
                           intensity: float, alpha4_fn=None) -> list[dict]:
    """E[(two-point difference)^2] against the squared 4-arm probability.

    Points sit symmetrically on the horizontal axis at each separation; the
    comparison column is alpha4(1, separation/4)^2 with the ratio attached.
    alpha4_fn(r, R) -> EstimatorResult supplies the arm probabilities (the
    cached estimator by default).
    """
    if alpha4_fn is None:
        from .arm_events import estimate_arm_probability, standard_arm_spec

        def alpha4_fn(r, R):
            return estimate_arm_probability(standard_arm_spec("A4", r, R),
                                            intensity, max(2000, n // 4),
                                            seed.with_(experiment="scan-alpha4"))
    rows = []
    for d in distances:
        if d < 4:
            raise ValueError("separations below 4 are not scanned")
        x = np.array([-d / 2.0, 0.0])
        y = np.array([d / 2.0, 0.0])
        vals = np.empty(n)
        for rep in range(n):
            cfg = sample_poisson(intensity, F.sampling_window,
                                 seed.with_(replica=rep, purpose=f"scan{d:g}"))
            sc = F.scaffold(cfg)
            vals[rep] = _second_difference_sq(sc, x, y)
        est, se = batch_means(vals)
        a4 = alpha4_fn(1.0, max(1.0 + 1e-9, d / 4.0))
        denom = a4.estimate ** 2
        rows.append({
            "distance": float(d),
            "estimate": est,
            "stderr": se,
            "alpha4": a4.estimate,
            "alpha4_stderr": a4.stderr,
            "ratio": est / denom if denom > 0 else float("inf"),
        })
    return rows
