import numpy as np
import pytest
from scipy import stats

from percospec.geometry import Point2, Region
from percospec.model import (MarkedPoint, PointConfiguration, add_point,
                             evolve_frozen, evolve_ou, remove_point,
                             sample_poisson)
from percospec.rng import SeedSpec

SEED = SeedSpec(2024, "model-tests")
WINDOW = Region.rect(1.0, 1.0)


def test_zero_intensity_empty():
    cfg = sample_poisson(0.0, WINDOW, SEED)
    assert cfg.n == 0


def test_negative_intensity_rejected():
    with pytest.raises(ValueError):
        sample_poisson(-1.0, WINDOW, SEED)


def test_poisson_mean_count():
    counts = [sample_poisson(2.0, WINDOW, SEED.with_(replica=r)).n
              for r in range(100000)]
    mean = np.mean(counts)
    se = np.std(counts) / np.sqrt(len(counts))
    assert abs(mean - 8.0) < 4 * se + 1e-9


def test_determinism():
    a = sample_poisson(3.0, WINDOW, SEED.with_(replica=5), marked=True)
    b = sample_poisson(3.0, WINDOW, SEED.with_(replica=5), marked=True)
    assert np.array_equal(a.xy, b.xy) and np.array_equal(a.marks, b.marks)


def test_marks_fair():
    cfg = sample_poisson(50.0, Region.square(6), SEED.with_(purpose="marks"),
                         marked=True)
    assert set(np.unique(cfg.marks)) <= {-1, 1}
    assert abs(cfg.marks.mean()) < 4 / np.sqrt(cfg.n)


def test_sampling_in_annulus_window():
    region = Region.annulus(1, 3)
    cfg = sample_poisson(5.0, region, SEED.with_(purpose="ann"))
    assert region.contains(cfg.xy).all()


def test_add_remove_inverse():
    cfg = sample_poisson(2.0, WINDOW, SEED.with_(purpose="ar"))
    p = MarkedPoint(Point2(0.123, -0.456))
    bigger = add_point(cfg, p)
    assert bigger.n == cfg.n + 1
    back = remove_point(bigger, bigger.n - 1)
    assert np.array_equal(back.xy, cfg.xy)


def test_remove_from_empty_errors():
    empty = sample_poisson(0.0, WINDOW, SEED)
    with pytest.raises(IndexError):
        remove_point(empty, 0)


def test_add_duplicate_rejected():
    cfg = add_point(sample_poisson(0.0, WINDOW, SEED), MarkedPoint(Point2(0, 0)))
    with pytest.raises(ValueError):
        add_point(cfg, MarkedPoint(Point2(0, 0)))


def test_add_outside_window_flagged():
    cfg = sample_poisson(1.0, WINDOW, SEED.with_(purpose="out"))
    out = add_point(cfg, MarkedPoint(Point2(5.0, 5.0)))
    assert out.out_of_window == 1
    back = remove_point(out, out.n - 1)
    assert back.out_of_window == 0


def test_ou_identity_at_zero():
    base = sample_poisson(4.0, WINDOW, SEED.with_(purpose="ou0"))
    c = evolve_ou(base, 0.0, 4.0, SEED.with_(purpose="ou0/t"))
    assert np.array_equal(c.evolved.xy, base.xy)
    assert len(c.retained) == base.n


def test_ou_retention_rate():
    kept = 0
    total = 0
    for r in range(4000):
        base = sample_poisson(5.0, WINDOW, SEED.with_(replica=r, purpose="ou"))
        c = evolve_ou(base, np.log(2.0), 5.0, SEED.with_(replica=r, purpose="ou/t"))
        kept += len(c.retained)
        total += base.n
    assert abs(kept / total - 0.5) < 0.01


def test_ou_large_time_independent_resample():
    base = sample_poisson(5.0, WINDOW, SEED.with_(purpose="ou-inf"))
    c = evolve_ou(base, 50.0, 5.0, SEED.with_(purpose="ou-inf/t"))
    assert len(c.retained) == 0
    assert c.evolved.n > 0 or base.n == 0


def test_ou_negative_time_rejected():
    base = sample_poisson(1.0, WINDOW, SEED)
    with pytest.raises(ValueError):
        evolve_ou(base, -0.1, 1.0, SEED)


def test_frozen_identity_and_locations():
    base = sample_poisson(5.0, WINDOW, SEED.with_(purpose="fr"), marked=True)
    c0 = evolve_frozen(base, 0.0, SEED.with_(purpose="fr/t0"))
    assert np.array_equal(c0.evolved.marks, base.marks)
    c1 = evolve_frozen(base, 2.0, SEED.with_(purpose="fr/t1"))
    assert np.array_equal(c1.evolved.xy, base.xy)


def test_frozen_resample_fraction():
    resampled = 0
    total = 0
    for r in range(4000):
        base = sample_poisson(5.0, WINDOW, SEED.with_(replica=r, purpose="frf"),
                              marked=True)
        c = evolve_frozen(base, np.log(2.0), SEED.with_(replica=r, purpose="frf/t"))
        resampled += base.n - len(c.retained)
        total += base.n
    assert abs(resampled / total - 0.5) < 0.01


def test_frozen_needs_marks():
    base = sample_poisson(1.0, WINDOW, SEED)
    with pytest.raises(ValueError):
        evolve_frozen(base, 1.0, SEED)


def test_stationarity_of_both_dynamics():
    # bounded statistic: point count in a subwindow
    sub = Region.rect(0.5, 0.5)
    base_stat, ou_stat, fr_stat = [], [], []
    for r in range(10000):
        rs = SEED.with_(replica=r, purpose="stat")
        base = sample_poisson(4.0, WINDOW, rs, marked=True)
        base_stat.append(sub.contains(base.xy).sum())
        ou = evolve_ou(base, 0.8, 4.0, rs.with_(purpose="stat/ou"))
        ou_stat.append(sub.contains(ou.evolved.xy).sum())
        fr = evolve_frozen(base, 0.8, rs.with_(purpose="stat/fr"))
        fr_stat.append(sub.contains(fr.evolved.xy).sum())
    base_stat, ou_stat, fr_stat = map(np.asarray, (base_stat, ou_stat, fr_stat))
    n = len(base_stat)
    for other in (ou_stat, fr_stat):
        se = np.sqrt(base_stat.var() / n + other.var() / n)
        assert abs(base_stat.mean() - other.mean()) < 4 * se


def test_ou_two_point_function_counts_independent_poisson():
    # disjoint subwindows of the evolved configuration: Poisson counts,
    # independent across windows (chi-square goodness of fit p > 0.001)
    a = Region.rect(0.5, 0.5, Point2(-0.5, 0.0))
    b = Region.rect(0.5, 0.5, Point2(0.5, 0.0))
    ca, cb = [], []
    for r in range(8000):
        rs = SEED.with_(replica=r, purpose="twopoint")
        base = sample_poisson(3.0, WINDOW, rs)
        ev = evolve_ou(base, 0.5, 3.0, rs.with_(purpose="twopoint/ou")).evolved
        ca.append(a.contains(ev.xy).sum())
        cb.append(b.contains(ev.xy).sum())
    ca = np.asarray(ca)
    cb = np.asarray(cb)
    mean = 3.0 * a.area()
    for counts in (ca, cb):
        kmax = int(counts.max())
        observed = np.bincount(counts, minlength=kmax + 1).astype(float)
        expected = stats.poisson.pmf(np.arange(kmax + 1), mean) * len(counts)
        # merge the tail so expected cells stay >= 5
        while len(expected) > 2 and expected[-1] < 5:
            expected[-2] += expected[-1]
            observed[-2] += observed[-1]
            expected, observed = expected[:-1], observed[:-1]
        expected *= observed.sum() / expected.sum()
        p = stats.chisquare(observed, expected).pvalue
        assert p > 0.001
    # independence: counts in disjoint regions are uncorrelated
    r = np.corrcoef(ca, cb)[0, 1]
    assert abs(r) < 4 / np.sqrt(len(ca))


def test_simplicity_enforced():
    xy = np.array([[0.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        PointConfiguration(xy, WINDOW)
