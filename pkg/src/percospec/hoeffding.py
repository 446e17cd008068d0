"""Exact orthogonal mark decompositions on finite configurations.

A functional of n independent fair signs expands uniquely over the products
of signs indexed by subsets; coefficients are computed by full enumeration of
the 2^n sign vectors (gray-code order, so incremental evaluators pay one flip
per step) followed by a fast Walsh-Hadamard transform.  Everything here is
exact up to float rounding, and the identities are asserted per replica, not
just in expectation.

Index convention: sign vector b in [0, 2^n) has eps_i = -1 iff bit i of b is
set; subsets S are bitmasks with chi_S(eps) = prod_{i in S} eps_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Point2, Region
from .model import MarkedPoint, PointConfiguration, add_point, sample_poisson
from .results import EstimatorResult, batch_ratio
from .rng import SeedSpec

MAX_CUBE_POINTS = 20


def walsh_transform(values: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform (involution up to factor 2^n)."""
    v = np.array(values, dtype=float)
    n = len(v)
    if n & (n - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < n:
        v = v.reshape(-1, 2 * h)
        a = v[:, :h].copy()
        b = v[:, h:].copy()
        v[:, :h] = a + b
        v[:, h:] = a - b
        v = v.reshape(-1)
        h *= 2
    return v


def coefficients_from_values(values: np.ndarray) -> np.ndarray:
    """Subset coefficients c[S] = E[F(eps) chi_S(eps)] from the value table."""
    return walsh_transform(values) / len(values)


def values_from_coefficients(coeffs: np.ndarray) -> np.ndarray:
    return walsh_transform(coeffs)


def evaluate_mark_cube(feval, n: int) -> np.ndarray:
    """Value table of a mark functional over all 2^n sign vectors.

    Walks the cube in gray-code order, flipping one sign per step; feval gets
    the live sign array and must not retain it.
    """
    if n > MAX_CUBE_POINTS:
        raise ValueError(f"mark cube capped at {MAX_CUBE_POINTS} points")
    signs = np.ones(max(n, 1), dtype=np.int8)[:n]
    vals = np.empty(1 << n)
    vals[0] = feval(signs)
    prev = 0
    for i in range(1, 1 << n):
        gray = i ^ (i >> 1)
        flip = (gray ^ prev).bit_length() - 1
        signs[flip] = -signs[flip]
        vals[gray] = feval(signs)
        prev = gray
    return vals


def _chi(mask: int, n: int) -> np.ndarray:
    b = np.arange(1 << n, dtype=np.uint64)
    return np.where(np.bitwise_count(b & np.uint64(mask)) % 2, -1.0, 1.0)


def subset_sizes(n: int) -> np.ndarray:
    return np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)


@dataclass(frozen=True)
class HoeffdingTable:
    """Exact subset coefficients of a functional over a fixed point set."""

    xy: np.ndarray
    values: np.ndarray
    coeffs: np.ndarray

    @property
    def n(self) -> int:
        return len(self.xy)

    def coefficient(self, subset) -> float:
        mask = 0
        for i in subset:
            mask |= 1 << int(i)
        return float(self.coeffs[mask])

    def reconstruct(self, signs: np.ndarray) -> float:
        b = 0
        for i, s in enumerate(signs):
            if s == -1:
                b |= 1 << i
        return float(values_from_coefficients(self.coeffs)[b])

    def parseval_gap(self) -> float:
        return abs(float(np.mean(self.values ** 2) - np.sum(self.coeffs ** 2)))

    def reconstruction_gap(self) -> float:
        return float(np.max(np.abs(values_from_coefficients(self.coeffs) - self.values)))

    def conditional_second_moment(self) -> float:
        """E[F^2 | positions] = sum of squared coefficients."""
        return float(np.sum(self.coeffs ** 2))


def mark_value_table(F, cfg: PointConfiguration) -> np.ndarray:
    """Value table of F over all mark assignments of cfg's points.

    Functionals may expose ``mark_evaluator(cfg) -> signs -> value`` to reuse
    per-configuration geometry; otherwise marks are rebuilt per evaluation.
    """
    if hasattr(F, "mark_evaluator"):
        feval = F.mark_evaluator(cfg)
    else:
        def feval(signs):
            return F(cfg.with_marks(signs.copy()))
    return evaluate_mark_cube(feval, cfg.n)


def hoeffding_decompose(F, cfg: PointConfiguration) -> HoeffdingTable:
    """Exact decomposition of F as a functional of cfg's marks."""
    if cfg.n > MAX_CUBE_POINTS:
        raise ValueError(f"decomposition capped at {MAX_CUBE_POINTS} points")
    values = mark_value_table(F, cfg)
    return HoeffdingTable(cfg.xy, values, coefficients_from_values(values))


# ---------------------------------------------------------------------------
# coordinate-averaging operators and the projection identities
# ---------------------------------------------------------------------------

def q_operator(values: np.ndarray, t: int) -> np.ndarray:
    """Average the functional over coordinate t (as a value table)."""
    n_total = len(values)
    step = 1 << t
    if step >= n_total:
        raise ValueError("coordinate out of range")
    v = np.asarray(values, dtype=float)
    flipped = v.reshape(-1, 2 * step)[:, list(range(step, 2 * step)) + list(range(step))]
    return ((v.reshape(-1, 2 * step) + flipped) / 2.0).reshape(-1)


def projection_identity_gap(values: np.ndarray, subset) -> float:
    """Max deviation of c[T] chi_T from prod_{t in T}(I-Q_t) prod_{y not in T} Q_y F."""
    n = int(math.log2(len(values)))
    mask = 0
    for i in subset:
        mask |= 1 << int(i)
    coeffs = coefficients_from_values(values)
    lhs = coeffs[mask] * _chi(mask, n)
    rhs = np.asarray(values, dtype=float)
    for t in range(n):
        if mask >> t & 1:
            rhs = rhs - q_operator(rhs, t)
        else:
            rhs = q_operator(rhs, t)
    return float(np.max(np.abs(lhs - rhs)))


def alternating_conditional_gap(values: np.ndarray) -> float:
    """Max deviation of c[full] chi_full from the alternating conditional sum.

    The top coefficient times the full sign product equals the sum over all
    coordinate subsets T of (-1)^(n-|T|) E[F | signs in T]; both sides are
    evaluated as functions on the cube.
    """
    n = int(math.log2(len(values)))
    coeffs = coefficients_from_values(values)
    full = (1 << n) - 1
    lhs = coeffs[full] * _chi(full, n)
    rhs = np.zeros_like(np.asarray(values, dtype=float))
    for tmask in range(1 << n):
        cond = np.asarray(values, dtype=float)
        for y in range(n):
            if not (tmask >> y & 1):
                cond = q_operator(cond, y)
        size = int(tmask).bit_count()
        rhs = rhs + (-1) ** (n - size) * cond
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# mark-averaged difference integrands at one or two added points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarkDifferenceTable:
    """All evaluations of F on cfg plus one or two signed points.

    For points (x, y): base value, the four pair values v_xy[(e1, e2)], and
    the singles v_x[e], v_y[e]; for a single point only base and v_x.
    """

    base: float
    v_x: dict
    v_y: dict | None = None
    v_xy: dict | None = None

    @property
    def order(self) -> int:
        return 1 if self.v_xy is None else 2


def mark_difference_table(F, cfg: PointConfiguration, points) -> MarkDifferenceTable:
    pts = [p.as_array() if isinstance(p, Point2) else np.asarray(p, dtype=float)
           for p in points]
    if len(pts) not in (1, 2):
        raise ValueError("one or two added points")
    if len(pts) == 2 and np.all(pts[0] == pts[1]):
        raise ValueError("added points must be distinct")
    base = F(cfg)
    v_x = {}
    for e in (1, -1):
        v_x[e] = F(add_point(cfg, MarkedPoint(Point2(*pts[0]), e)))
    if len(pts) == 1:
        return MarkDifferenceTable(base, v_x)
    v_y = {}
    v_xy = {}
    for e in (1, -1):
        v_y[e] = F(add_point(cfg, MarkedPoint(Point2(*pts[1]), e)))
    for e1 in (1, -1):
        cfg_x = add_point(cfg, MarkedPoint(Point2(*pts[0]), e1))
        for e2 in (1, -1):
            v_xy[(e1, e2)] = F(add_point(cfg_x, MarkedPoint(Point2(*pts[1]), e2)))
    return MarkDifferenceTable(base, v_x, v_y, v_xy)


def _second_difference(t: MarkDifferenceTable, e1: int, e2: int) -> float:
    return t.v_xy[(e1, e2)] - t.v_x[e1] - t.v_y[e2] + t.base


def psi_phi_integrands(t: MarkDifferenceTable) -> tuple[float, float]:
    """(annealed, projected) correlation integrands, exact in the marks.

    Order 1: the square of the sign-weighted mean of the add-one cost versus
    the mean square.  Order 2: the top Walsh coefficient squared of the
    two-point iterated difference versus its full squared mass.
    """
    if t.order == 1:
        g = {e: t.v_x[e] - t.base for e in (1, -1)}
        c_top = 0.5 * (g[1] - g[-1])
        mean_sq = 0.5 * (g[1] ** 2 + g[-1] ** 2)
        return c_top ** 2, mean_sq
    g = {(e1, e2): _second_difference(t, e1, e2)
         for e1 in (1, -1) for e2 in (1, -1)}
    c_top = 0.25 * (g[(1, 1)] - g[(1, -1)] - g[(-1, 1)] + g[(-1, -1)])
    mean_sq = 0.25 * sum(v * v for v in g.values())
    return c_top ** 2, mean_sq


@dataclass(frozen=True)
class ZVariables:
    """The four mark-conditional averages of the two-point difference.

    z[0] carries the sign product, z[1] the first sign, z[2] the second, and
    z[3] none; the annealed integrand is z[0]^2 and the projected integrand
    the total square mass.  ``special`` flags the configurations ("one point
    decides with and without the other") excluded from the 3|Z1| domination.
    """

    z: tuple
    special: bool

    @property
    def psi2(self) -> float:
        return self.z[0] ** 2

    @property
    def phi2(self) -> float:
        return sum(v * v for v in self.z)


def z_variables(F, cfg: PointConfiguration, x, y) -> ZVariables:
    if not getattr(F, "increasing", False):
        raise ValueError("the z-variable case analysis needs an increasing functional")
    t = mark_difference_table(F, cfg, [x, y])
    g = {(e1, e2): _second_difference(t, e1, e2)
         for e1 in (1, -1) for e2 in (1, -1)}
    z1 = 0.25 * (g[(1, 1)] - g[(1, -1)] - g[(-1, 1)] + g[(-1, -1)])
    z2 = 0.25 * (g[(1, 1)] + g[(1, -1)] - g[(-1, 1)] - g[(-1, -1)])
    z3 = 0.25 * (g[(1, 1)] - g[(1, -1)] + g[(-1, 1)] - g[(-1, -1)])
    z4 = 0.25 * (g[(1, 1)] + g[(1, -1)] + g[(-1, 1)] + g[(-1, -1)])

    def decides(v_with, v_without_pair, single):
        return (v_with[(1, 1)] == 1 == -v_with[(-1, -1)]
                and v_with[(1, -1)] == 1 == -v_with[(-1, 1)]
                and single[1] == 1 == -single[-1])

    exy = decides(t.v_xy, t.base, t.v_y)
    swapped = {(e2, e1): v for (e1, e2), v in t.v_xy.items()}
    eyx = decides(swapped, t.base, t.v_x)
    return ZVariables((z1, z2, z3, z4), bool(exy or eyx))


# ---------------------------------------------------------------------------
# Monte Carlo wrappers over small backgrounds
# ---------------------------------------------------------------------------

def _background(intensity, window, seed, rep) -> PointConfiguration:
    cfg = sample_poisson(intensity, window, seed.with_(replica=rep, purpose="bg"),
                         marked=True)
    if cfg.n > MAX_CUBE_POINTS:
        raise ValueError("background too dense for exact mark enumeration; "
                         "shrink the window or intensity")
    return cfg


def correlation_pair(F, points, intensity, window, n: int, seed: SeedSpec):
    """Monte Carlo means of the (annealed, projected) integrands.

    Returns (psi_result, phi_result, per_replica) with the per-replica arrays
    kept for exact pointwise assertions; the advertised inequality psi <= phi
    and, for increasing F at one point, phi = 2 psi, hold replica by replica.
    """
    psis = np.empty(n)
    phis = np.empty(n)
    for rep in range(n):
        cfg = _background(intensity, window, seed, rep)
        psi, phi = psi_phi_integrands(mark_difference_table(F, cfg, points))
        psis[rep], phis[rep] = psi, phi
    from .results import batch_means
    pm, pse = batch_means(psis)
    fm, fse = batch_means(phis)
    meta = {"order": len(points), "intensity": intensity}
    return (EstimatorResult(pm, pse, n, seed, {**meta, "kind": "annealed"}),
            EstimatorResult(fm, fse, n, seed, {**meta, "kind": "projected"}),
            (psis, phis))


def annealed_correlation_psi(F, points, intensity, window, n, seed) -> EstimatorResult:
    return correlation_pair(F, points, intensity, window, n, seed)[0]


def projected_correlation_phi(F, points, intensity, window, n, seed) -> EstimatorResult:
    return correlation_pair(F, points, intensity, window, n, seed)[1]


def sample_annealed_spectral_sample(F, intensity, window, n: int, seed: SeedSpec):
    """Weighted subset-size histogram of the annealed spectral sample.

    Per replica, a subset is drawn with probability proportional to its
    squared coefficient and the replica re-weighted by the conditional second
    moment; replicas with all-zero coefficients carry zero weight.  Returns a
    dict with the weighted size histogram, the sampled-mean size, and the
    exact conditional mean size for cross-checking.
    """
    hist: dict[int, float] = {}
    weights = np.empty(n)
    sampled_sizes = np.empty(n, dtype=np.int64)
    exact_mean_num = np.empty(n)
    for rep in range(n):
        cfg = _background(intensity, window, seed, rep)
        table = hoeffding_decompose(F, cfg)
        w = table.conditional_second_moment()
        weights[rep] = w
        if w <= 0:
            sampled_sizes[rep] = 0
            exact_mean_num[rep] = 0.0
            continue
        probs = table.coeffs ** 2 / w
        rng = seed.with_(replica=rep, purpose="subset").generator()
        pick = int(rng.choice(len(probs), p=probs))
        size = int(pick).bit_count()
        sampled_sizes[rep] = size
        hist[size] = hist.get(size, 0.0) + w
        exact_mean_num[rep] = float(np.sum(subset_sizes(cfg.n) * table.coeffs ** 2))
    wsum = float(weights.sum())
    mean_size = (float(np.sum(weights * sampled_sizes)) / wsum if wsum > 0 else 0.0)
    exact_mean = (float(exact_mean_num.sum()) / wsum if wsum > 0 else 0.0)
    return {
        "histogram": {k: v / wsum for k, v in sorted(hist.items())} if wsum else {},
        "mean_size_sampled": mean_size,
        "mean_size_exact": exact_mean,
        "total_weight": wsum,
        "n": n,
    }


def falling_factorial(m: int, k: int) -> int:
    out = 1
    for j in range(k):
        out *= max(m - j, 0)
    return out


def pivotal_vs_quenched_factor(F, k: int, n: int, seed: SeedSpec,
                               intensity: float | None = None,
                               window: Region | None = None) -> EstimatorResult:
    """Ratio of k-th factorial moments: removal-pivotal over mark-flip pivotal.

    The two processes have factorial moment measures in exact proportion
    2^-k; the estimator returns the Monte Carlo ratio with a batched standard
    error and the expected value in the metadata.
    """
    if k not in (1, 2):
        raise ValueError("factor check implemented for k in {1, 2}")
    intensity = F.intensity if intensity is None else intensity
    window = F.sampling_window if window is None else window
    num = np.empty(n)
    den = np.empty(n)
    for rep in range(n):
        cfg = sample_poisson(intensity, window,
                             seed.with_(replica=rep, purpose="pivfac"), marked=True)
        if hasattr(F, "replica_pivotal_counts"):
            p, q = F.replica_pivotal_counts(cfg)
        else:
            from .diffops import pivotal_points, quenched_pivotal_points
            p = len(pivotal_points(F, cfg).removal)
            q = len(quenched_pivotal_points(F, cfg).mark_flip)
        num[rep] = falling_factorial(p, k)
        den[rep] = falling_factorial(q, k)
    ratio, se = batch_ratio(num, den)
    return EstimatorResult(ratio, se, n, seed,
                           {"kind": "pivotal-factor", "k": k,
                            "expected": 0.5 ** k,
                            "mean_removal_ff": float(num.mean()),
                            "mean_flip_ff": float(den.mean())})
