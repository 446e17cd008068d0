"""End-to-end drivers: noise curves, covariance comparisons, ratio tables.

All drivers share base configurations across the time grid (common random
numbers): the base functional value is computed once per replica and reused,
which the workers assert by counting evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._parallel import map_replicas
from .arm_events import PINNED_LAMBDA_C, estimate_arm_probability, standard_arm_spec
from .boolean import BooleanCrossingFunctional
from .cache import get_cached_arm, put_cached_arm
from .geometry import Region
from .model import evolve_frozen, evolve_ou, sample_poisson
from .results import EstimatorResult, batch_means, bernoulli_result
from .rng import SeedSpec
from .voronoi import (ColoredCellGraph, VoronoiCrossingFunctional,
                      VoronoiGeometry, colored_region_components,
                      voronoi_sample_window)

DEFAULT_H = 0.05


# ---------------------------------------------------------------------------
# cached arm probabilities
# ---------------------------------------------------------------------------

def cached_alpha4(model: str, r: float, R: float, n: int, seed: SeedSpec,
                  intensity: float | None = None, method: str = "exact",
                  h: float = DEFAULT_H) -> EstimatorResult:
    if r >= R:
        return EstimatorResult(1.0, 0.0, 1, seed, {"kind": "arm-convention"})
    intensity = (PINNED_LAMBDA_C if model == "boolean" else 1.0) \
        if intensity is None else intensity
    hit = get_cached_arm(model, intensity, r, R, method, h, seed, n)
    if hit is not None:
        return hit
    if model == "boolean":
        res = estimate_arm_probability(standard_arm_spec("A4", r, R), intensity,
                                       n, seed, method=method, h=h)
    elif model == "voronoi":
        res = estimate_voronoi_arm_probability(r, R, n, seed, intensity=intensity)
    else:
        raise ValueError(f"unknown model {model!r}")
    put_cached_arm(model, intensity, r, R, method, h, seed, n, res)
    return res


def estimate_voronoi_arm_probability(r: float, R: float, n: int, seed: SeedSpec,
                                     intensity: float = 1.0,
                                     n_arms: int = 4) -> EstimatorResult:
    """Alternating-colour arm probability on the cell graph (even arm counts)."""
    region = Region.annulus(r, R)
    window = Region.square(R + 10.0)
    k = n_arms // 2
    hits = 0
    for rep in range(n):
        cfg = sample_poisson(intensity, window,
                             seed.with_(replica=rep, purpose="vor-arm"), marked=True)
        if colored_region_components(cfg, region) >= k:
            hits += 1
    return bernoulli_result(hits, n, seed, kind="voronoi-arm", r=r, R=R,
                            n_arms=n_arms, intensity=intensity)


# ---------------------------------------------------------------------------
# noise curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseCurve:
    model: str
    dynamics: str
    L: float
    times: np.ndarray
    u: np.ndarray                 # rescaled abscissa: t * L^2 * alpha4(1, L)
    p_neq: np.ndarray
    p_neq_se: np.ndarray
    cov: np.ndarray
    cov_se: np.ndarray
    var0: float
    mean_f: float
    n: int
    seed: SeedSpec
    alpha4: EstimatorResult | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.p_neq < -1e-12) or np.any(self.p_neq > 1 + 1e-12):
            raise ValueError("probabilities out of range")


def _batched_cov(f0: np.ndarray, ft: np.ndarray, k: int = 32):
    n = len(f0)
    idx = (np.arange(n) * min(k, n)) // n
    kk = idx.max() + 1
    covs = np.empty(kk)
    for b in range(kk):
        m = idx == b
        covs[b] = np.mean(f0[m] * ft[m]) - np.mean(f0[m]) * np.mean(ft[m])
    cov = float(np.mean(f0 * ft) - np.mean(f0) * np.mean(ft))
    se = float(covs.std(ddof=1) / np.sqrt(kk)) if kk > 1 else float("inf")
    return cov, se


def _noise_worker(payload, start: int, stop: int):
    model, dynamics, L, times, intensity, seed = payload
    m = stop - start
    f0 = np.empty(m)
    ft = np.empty((m, len(times)))
    if model == "boolean":
        F = BooleanCrossingFunctional(L, intensity)
        for i, rep in enumerate(range(start, stop)):
            rs = seed.with_(replica=rep)
            cfg = sample_poisson(intensity, F.sampling_window, rs.with_(purpose="cfg"))
            base_calls = F.calls
            f0[i] = F(cfg)
            assert F.calls == base_calls + 1
            for j, t in enumerate(times):
                coup = evolve_ou(cfg, t, intensity, rs.with_(purpose=f"ou{j}"))
                ft[i, j] = F(coup.evolved)
        return f0, ft
    F = VoronoiCrossingFunctional(L, intensity)
    for i, rep in enumerate(range(start, stop)):
        rs = seed.with_(replica=rep)
        cfg = sample_poisson(intensity, F.sampling_window, rs.with_(purpose="cfg"),
                             marked=True)
        base_calls = F.calls
        sc = F.scaffold(cfg)
        f0[i] = 1.0 if sc.graph.crosses() else -1.0
        assert F.calls == base_calls + 1
        for j, t in enumerate(times):
            if dynamics == "OU":
                coup = evolve_ou(cfg, t, intensity, rs.with_(purpose=f"ou{j}"))
                ft[i, j] = F(coup.evolved)
            else:
                coup = evolve_frozen(cfg, t, rs.with_(purpose=f"fr{j}"))
                ft[i, j] = 1.0 if sc.graph.crosses(marks=coup.evolved.marks) else -1.0
    return f0, ft


def noise_curve(model: str, dynamics: str, L: float, times, n: int,
                seed: SeedSpec, intensity: float | None = None,
                alpha4: EstimatorResult | None = None,
                alpha4_n: int = 20000, threads: int = 1) -> NoiseCurve:
    """Paired noise curve P(f != f^t) and Cov(f, f^t) over a shared base.

    The rescaled axis uses a cached 4-arm probability, estimated first if no
    cache entry exists.
    """
    if model not in ("boolean", "voronoi"):
        raise ValueError("model must be 'boolean' or 'voronoi'")
    if dynamics == "frozen" and model != "voronoi":
        raise ValueError("frozen dynamics applies to the Voronoi model")
    intensity = (PINNED_LAMBDA_C if model == "boolean" else 1.0) \
        if intensity is None else intensity
    times = np.asarray(list(times), dtype=float)
    if alpha4 is None:
        alpha4 = cached_alpha4(model, 1.0, L, alpha4_n,
                               seed.with_(experiment=seed.experiment + "/alpha4"),
                               intensity=intensity)
    payload = (model, dynamics, L, tuple(times), intensity, seed)
    f0, ft = map_replicas(_noise_worker, payload, n, threads=threads)
    p = np.empty(len(times))
    p_se = np.empty(len(times))
    cov = np.empty(len(times))
    cov_se = np.empty(len(times))
    for j in range(len(times)):
        neq = (f0 != ft[:, j]).astype(float)
        p[j], p_se[j] = batch_means(neq)
        cov[j], cov_se[j] = _batched_cov(f0, ft[:, j])
    return NoiseCurve(model, dynamics, L, times,
                      times * L * L * alpha4.estimate,
                      p, p_se, cov, cov_se,
                      var0=float(np.var(f0)), mean_f=float(np.mean(f0)),
                      n=n, seed=seed, alpha4=alpha4,
                      meta={"intensity": intensity})


# ---------------------------------------------------------------------------
# OU vs frozen covariance comparison (Voronoi)
# ---------------------------------------------------------------------------

def _ou_frozen_worker(payload, start, stop):
    L, times, intensity, seed = payload
    m = stop - start
    f0 = np.empty(m)
    f_ou = np.empty((m, len(times)))
    f_fr = np.empty((m, len(times)))
    F = VoronoiCrossingFunctional(L, intensity)
    for i, rep in enumerate(range(start, stop)):
        rs = seed.with_(replica=rep)
        cfg = sample_poisson(intensity, F.sampling_window, rs.with_(purpose="cfg"),
                             marked=True)
        sc = F.scaffold(cfg)
        f0[i] = 1.0 if sc.graph.crosses() else -1.0
        for j, t in enumerate(times):
            ou = evolve_ou(cfg, t, intensity, rs.with_(purpose=f"ou{j}"))
            f_ou[i, j] = F(ou.evolved)
            fr = evolve_frozen(cfg, t, rs.with_(purpose=f"fr{j}"))
            f_fr[i, j] = 1.0 if sc.graph.crosses(marks=fr.evolved.marks) else -1.0
    return f0, f_ou, f_fr


def ou_vs_frozen_covariance(L: float, times, n: int, seed: SeedSpec,
                            intensity: float = 1.0, threads: int = 1) -> list[dict]:
    """Paired Cov(f, f^t) under OU and frozen dynamics on shared bases."""
    times = np.asarray(list(times), dtype=float)
    payload = (L, tuple(times), intensity, seed)
    f0, f_ou, f_fr = map_replicas(_ou_frozen_worker, payload, n, threads=threads)
    rows = []
    for j, t in enumerate(times):
        c_ou, se_ou = _batched_cov(f0, f_ou[:, j])
        c_fr, se_fr = _batched_cov(f0, f_fr[:, j])
        # paired difference of the two covariances over the same batches
        d, d_se = _batched_cov_diff(f0, f_ou[:, j], f_fr[:, j])
        rows.append({"t": float(t), "cov_ou": c_ou, "cov_ou_se": se_ou,
                     "cov_frozen": c_fr, "cov_frozen_se": se_fr,
                     "diff": d, "diff_se": d_se, "var0": float(np.var(f0))})
    return rows


def _batched_cov_diff(f0, fa, fb, k: int = 32):
    n = len(f0)
    idx = (np.arange(n) * min(k, n)) // n
    kk = idx.max() + 1
    diffs = np.empty(kk)
    for b in range(kk):
        m = idx == b
        ca = np.mean(f0[m] * fa[m]) - np.mean(f0[m]) * np.mean(fa[m])
        cb = np.mean(f0[m] * fb[m]) - np.mean(f0[m]) * np.mean(fb[m])
        diffs[b] = ca - cb
    d = (np.mean(f0 * fa) - np.mean(f0) * np.mean(fa)) \
        - (np.mean(f0 * fb) - np.mean(f0) * np.mean(fb))
    se = float(diffs.std(ddof=1) / np.sqrt(kk)) if kk > 1 else float("inf")
    return float(d), se


# ---------------------------------------------------------------------------
# quasi-multiplicativity ratios
# ---------------------------------------------------------------------------

def quasimult_table(model: str, triples, n: int, seed: SeedSpec,
                    intensity: float | None = None, method: str = "exact",
                    max_rel_stderr: float = 0.2) -> list[dict]:
    """Ratio alpha(r1,r2) alpha(r2,r3) / alpha(r1,r3) per scale triple.

    alpha(r, r) is 1 by convention.  Raises if any estimate is degenerate or
    too noisy (relative standard error above ``max_rel_stderr``).
    """
    rows = []
    for (r1, r2, r3) in triples:
        if not 1 <= r1 <= r2 <= r3:
            raise ValueError("triples must satisfy 1 <= r1 <= r2 <= r3")
        parts = {}
        for (a, b) in ((r1, r2), (r2, r3), (r1, r3)):
            res = cached_alpha4(model, a, b, n,
                                seed.with_(experiment=f"{seed.experiment}/qm-{a:g}-{b:g}"),
                                intensity=intensity, method=method)
            if res.estimate <= 0:
                raise RuntimeError(f"alpha4({a},{b}) came out zero; "
                                   "increase the replica count")
            if res.stderr > 0 and res.stderr / res.estimate > max_rel_stderr:
                raise RuntimeError(f"alpha4({a},{b}) too noisy "
                                   f"({res.stderr / res.estimate:.1%}); "
                                   "increase the replica count")
            parts[(a, b)] = res
        a12, a23, a13 = parts[(r1, r2)], parts[(r2, r3)], parts[(r1, r3)]
        ratio = a12.estimate * a23.estimate / a13.estimate
        rel = [r.stderr / r.estimate for r in (a12, a23, a13) if r.estimate > 0]
        se = ratio * float(np.sqrt(np.sum(np.square(rel))))
        rows.append({"r1": r1, "r2": r2, "r3": r3, "ratio": ratio,
                     "ratio_se": se,
                     "a12": a12.estimate, "a12_se": a12.stderr,
                     "a23": a23.estimate, "a23_se": a23.stderr,
                     "a13": a13.estimate, "a13_se": a13.stderr})
    return rows


# ---------------------------------------------------------------------------
# instability collapse over the rescaled axis
# ---------------------------------------------------------------------------

def instability_collapse(L_list, u_grid, n: int, seed: SeedSpec,
                         intensity: float | None = None,
                         alpha4_n: int = 20000, threads: int = 1) -> dict:
    """P(f != f^t) at matched rescaled times u across window sizes.

    For each window size the time grid is u / (L^2 alpha4(1, L)); the result
    reports the per-u vertical spread across window sizes.
    """
    if len(L_list) < 3:
        raise ValueError("need at least three window sizes")
    u_grid = np.asarray(list(u_grid), dtype=float)
    curves = {}
    for L in L_list:
        a4 = cached_alpha4("boolean", 1.0, L, alpha4_n,
                           seed.with_(experiment=f"{seed.experiment}/alpha4-L{L:g}"),
                           intensity=intensity)
        times = u_grid / (L * L * a4.estimate)
        curves[L] = noise_curve("boolean", "OU", L, times,
                                n, seed.with_(experiment=f"{seed.experiment}/L{L:g}"),
                                intensity=intensity, alpha4=a4, threads=threads)
    p = np.array([curves[L].p_neq for L in L_list])
    spread = p.max(axis=0) - p.min(axis=0)
    return {"L_list": list(L_list), "u_grid": u_grid, "curves": curves,
            "p_matrix": p, "spread": spread}
