import numpy as np
import pytest

from percospec.arm_events import PINNED_LAMBDA_C, sample_near_region
from percospec.boolean import (BooleanCrossingFunctional, CrossingScaffold,
                               build_disk_graph, crossing_indicator,
                               occupied_crossing)
from percospec.diffops import pivotal_points
from percospec.geometry import Point2, Region
from percospec.model import MarkedPoint, PointConfiguration, add_point, sample_poisson
from percospec.rng import SeedSpec

SEED = SeedSpec(31, "boolean-tests")


def cfg_from(points, window=None):
    window = window or Region.square(10)
    return PointConfiguration(np.asarray(points, dtype=float).reshape(-1, 2),
                              window)


def test_empty_no_crossing():
    assert not occupied_crossing(cfg_from(np.empty((0, 2))), Region.square(1))
    assert crossing_indicator(cfg_from(np.empty((0, 2))), 8) == -1


def test_single_disk_covers_small_box():
    # corner distance sqrt(0.5) < 1: one unit disk covers the whole box
    assert occupied_crossing(cfg_from([[0.0, 0.0]]), Region.rect(0.5, 0.5))


def test_two_overlapping_disks_span():
    assert occupied_crossing(cfg_from([[-0.6, 0.0], [0.6, 0.0]]),
                             Region.rect(1.0, 1.0))


def test_disjoint_disks_do_not_span():
    assert not occupied_crossing(cfg_from([[-1.5, 0.0], [1.5, 0.0]]),
                                 Region.rect(1.0, 1.0))


def test_path_must_stay_in_box():
    # the chain detours above the box: the lens of the top pair lies outside
    pts = [[-1.8, 0.0], [-1.2, 1.9], [1.2, 1.9], [1.8, 0.0]]
    box = Region.rect(1.0, 1.0)
    assert not occupied_crossing(cfg_from(pts), box)
    # same chain with the detour pulled inside does cross
    pts2 = [[-1.8, 0.0], [-0.6, 0.4], [0.6, 0.4], [1.8, 0.0]]
    assert occupied_crossing(cfg_from(pts2), box)


def test_dense_row_crosses():
    xs = np.arange(-9, 10, 1.0)
    cfg = cfg_from(np.column_stack((xs, np.zeros_like(xs))))
    assert crossing_indicator(cfg, 8) == 1


def test_adjacency_exactness_squared_distance():
    cfg = cfg_from([[0.0, 0.0], [2.0, 0.0], [4.0, 0.0]])
    g = build_disk_graph(cfg, Region.square(6))
    pairs = {tuple(sorted(p)) for p in g.pairs.tolist()}
    assert pairs == {(0, 1), (1, 2)}
    # strictly beyond touching distance: no edge, compared on squared values
    cfg2 = cfg_from([[0.0, 0.0], [2.0 + 1e-9, 0.0]])
    g2 = build_disk_graph(cfg2, Region.square(6))
    assert len(g2.pairs) == 0


def test_monotone_under_addition():
    # adding a point never flips +1 -> -1
    rng = np.random.default_rng(5)
    flips = 0
    for rep in range(300):
        cfg = sample_poisson(PINNED_LAMBDA_C, Region.square(6),
                             SEED.with_(replica=rep))
        before = crossing_indicator(cfg, 4)
        p = MarkedPoint(Point2(*rng.uniform(-5, 5, 2)))
        after = crossing_indicator(add_point(cfg, p), 4)
        if before == 1 and after == -1:
            flips += 1
        if before == -1:
            assert after in (-1, 1)
    assert flips == 0


def test_rsw_band_at_L8():
    hits = 0
    n = 2000
    for rep in range(n):
        cfg = sample_poisson(PINNED_LAMBDA_C, Region.square(10),
                             SEED.with_(replica=rep, purpose="rsw"))
        hits += crossing_indicator(cfg, 8) == 1
    p = hits / n
    assert 0.05 < p < 0.95


def test_pivotal_fast_path_matches_brute_force():
    F = BooleanCrossingFunctional(4, PINNED_LAMBDA_C)
    for rep in range(120):
        cfg = sample_poisson(PINNED_LAMBDA_C, F.sampling_window,
                             SEED.with_(replica=rep, purpose="piv"))
        sc = F.scaffold(cfg)
        fast = set(sc.pivotal_indices().tolist())
        brute = set(pivotal_points(F, cfg).removal.tolist())
        assert fast == brute


def test_add_point_creates_matches_direct_eval():
    F = BooleanCrossingFunctional(4, PINNED_LAMBDA_C)
    rng = np.random.default_rng(9)
    for rep in range(80):
        cfg = sample_poisson(PINNED_LAMBDA_C, F.sampling_window,
                             SEED.with_(replica=rep, purpose="add"))
        sc = F.scaffold(cfg)
        if sc.crosses():
            continue
        for _ in range(5):
            x = rng.uniform(-5, 5, 2)
            direct = occupied_crossing(
                add_point(cfg, MarkedPoint(Point2(*x))), F.box)
            assert sc.add_point_creates(x) == direct


def test_add_pair_creates_matches_direct_eval():
    F = BooleanCrossingFunctional(4, PINNED_LAMBDA_C)
    rng = np.random.default_rng(10)
    checked = 0
    for rep in range(80):
        cfg = sample_poisson(PINNED_LAMBDA_C, F.sampling_window,
                             SEED.with_(replica=rep, purpose="pair"))
        sc = F.scaffold(cfg)
        if sc.crosses():
            continue
        for _ in range(4):
            x = rng.uniform(-4, 4, 2)
            y = rng.uniform(-4, 4, 2)
            two = add_point(add_point(cfg, MarkedPoint(Point2(*x))),
                            MarkedPoint(Point2(*y)))
            direct = occupied_crossing(two, F.box)
            assert sc.add_pair_creates(x, y) == direct
            checked += 1
    assert checked > 100


def test_pivotal_bridge_construction():
    # a single chain of overlapping disks: every link is pivotal
    pts = [[-2.4, 0.0], [-0.8, 0.0], [0.8, 0.0], [2.4, 0.0]]
    cfg = cfg_from(pts, window=Region.square(5))
    sc = CrossingScaffold(cfg, Region.square(3))
    assert sc.crosses()
    assert set(sc.pivotal_indices().tolist()) == {0, 1, 2, 3}
    # a redundant second chain kills all pivotality
    pts2 = pts + [[-2.4, 2.0], [-0.8, 2.0], [0.8, 2.0], [2.4, 2.0]]
    sc2 = CrossingScaffold(cfg_from(pts2, window=Region.square(5)),
                           Region.square(3))
    assert sc2.crosses()
    assert len(sc2.pivotal_indices()) == 0
