import numpy as np
import pytest

from percospec.arm_events import (PINNED_LAMBDA_C, ArmEventSpec, arm_event,
                                  calibrate_lambda_c, crossing_probability,
                                  estimate_arm_probability, exact_arm_event,
                                  raster_arm_event, sample_near_region,
                                  standard_arm_spec)
from percospec.geometry import Region
from percospec.model import PointConfiguration
from percospec.rng import SeedSpec

SEED = SeedSpec(101, "arm-tests")


def _empty(window=12):
    return PointConfiguration(np.empty((0, 2)), Region.square(window))


def test_spec_validation():
    with pytest.raises(ValueError):
        ArmEventSpec(Region.square(4))                      # not annular
    with pytest.raises(ValueError):
        ArmEventSpec(Region.annulus(1, 4), ())              # empty pattern
    with pytest.raises(ValueError):
        ArmEventSpec(Region.annulus(1, 4), ("O", "X"))      # bad colour
    with pytest.raises(ValueError):
        ArmEventSpec(Region.annulus(1, 4), ("O", "V", "O"))  # odd cyclic


def test_empty_configuration_trivial_events():
    a4 = standard_arm_spec("A4", 1, 4)
    assert not arm_event(_empty(), a4)
    a1v = standard_arm_spec("A1V", 1, 4)
    assert arm_event(_empty(), a1v)
    a1 = standard_arm_spec("A1", 1, 4)
    assert not arm_event(_empty(), a1)


def test_exact_and_raster_agree_statistically():
    # the raster detector at h=0.05 may miss hairline arms; demand high
    # agreement and one-sidedness for the occupied-only event
    for name, min_agree in [("A4", 0.9), ("A3+", 0.8), ("A2++", 0.85), ("A1", 0.98)]:
        spec = standard_arm_spec(name, 2, 6)
        agree = 0
        n = 200
        for rep in range(n):
            cfg = sample_near_region(PINNED_LAMBDA_C, spec.region, 2.0,
                                     SEED.with_(replica=rep, purpose=name))
            e = exact_arm_event(cfg, spec)
            r = raster_arm_event(cfg, spec, h=0.05)
            agree += e == r
            if name == "A1":
                # occupied-only: raster over-connects, so raster >= exact
                assert r or not e
        assert agree / n >= min_agree, name


def test_h_sensitivity_study():
    # record agreement rates at the three standard resolutions; finer rasters
    # should not get substantially worse
    spec = standard_arm_spec("A3+", 2, 6)
    rates = {}
    for h in (0.1, 0.05, 0.025):
        agree = 0
        n = 120
        for rep in range(n):
            cfg = sample_near_region(PINNED_LAMBDA_C, spec.region, 2.0,
                                     SEED.with_(replica=rep, purpose="hs"))
            agree += exact_arm_event(cfg, spec) == raster_arm_event(cfg, spec, h=h)
        rates[h] = agree / n
    assert rates[0.025] >= rates[0.1] - 0.05
    assert min(rates.values()) > 0.7


def test_arm_nesting():
    # an alternating 4-arm event on (r, R) implies it on any sub-annulus
    outer = standard_arm_spec("A4", 1, 8)
    inner = standard_arm_spec("A4", 2, 6)
    hits = 0
    for rep in range(500):
        cfg = sample_near_region(PINNED_LAMBDA_C, outer.region, 2.0,
                                 SEED.with_(replica=rep, purpose="nest"))
        if exact_arm_event(cfg, outer):
            hits += 1
            assert exact_arm_event(cfg, inner)
    assert hits > 10


def test_alpha1_nonincreasing_in_R():
    results = {}
    for R in (4, 8, 16):
        spec = standard_arm_spec("A1", 2, R)
        results[R] = estimate_arm_probability(
            spec, PINNED_LAMBDA_C, 3000,
            SEED.with_(experiment=f"a1-{R}"))
    for r_small, r_big in [(4, 8), (8, 16)]:
        a, b = results[r_small], results[r_big]
        se = np.hypot(a.stderr, b.stderr)
        assert b.estimate <= a.estimate + 3 * se


def test_alpha2pp_below_alpha1():
    a2 = estimate_arm_probability(standard_arm_spec("A2++", 2, 8),
                                  PINNED_LAMBDA_C, 3000,
                                  SEED.with_(experiment="a2pp"))
    a1 = estimate_arm_probability(standard_arm_spec("A1", 2, 8),
                                  PINNED_LAMBDA_C, 3000,
                                  SEED.with_(experiment="a1ref"))
    se = np.hypot(a2.stderr, a1.stderr)
    assert a2.estimate <= a1.estimate + 3 * se


def test_estimator_requires_replicas():
    with pytest.raises(ValueError):
        estimate_arm_probability(standard_arm_spec("A4", 1, 4),
                                 PINNED_LAMBDA_C, 50, SEED)


def test_resolution_error_small_inner_radius():
    spec = ArmEventSpec(Region.annulus(0.05, 4), ("O", "V", "O", "V"))
    cfg = _empty()
    with pytest.raises(ValueError):
        raster_arm_event(cfg, spec, h=0.05)


def test_supercritical_and_subcritical_crossing():
    sup = crossing_probability(16, 2 * PINNED_LAMBDA_C, 400,
                               SEED.with_(experiment="super"))
    sub = crossing_probability(16, PINNED_LAMBDA_C / 2, 400,
                               SEED.with_(experiment="sub"))
    assert sup.estimate > 0.99
    assert sub.estimate < 0.01


def test_calibrate_lambda_brackets_pinned_value():
    lam = calibrate_lambda_c([4, 8, 12], tolerance=0.03,
                             seed=SEED.with_(experiment="calib"),
                             n_per_eval=900)
    assert abs(lam - PINNED_LAMBDA_C) < 0.05


def test_calibrate_validation():
    with pytest.raises(ValueError):
        calibrate_lambda_c([4, 8], 0.01, SEED)
    with pytest.raises(RuntimeError):
        calibrate_lambda_c([4, 8, 12], 0.05, SEED.with_(experiment="badbr"),
                           n_per_eval=400, bracket=(0.55, 0.8))


def test_independence_direction_inequality():
    # crossing both sub-annuli is necessary for crossing the big annulus, and
    # the sub-events at distance >= 2 are driven by disjoint points
    n = 4000
    a_13 = estimate_arm_probability(standard_arm_spec("A4", 1, 16),
                                    PINNED_LAMBDA_C, n,
                                    SEED.with_(experiment="ind13"))
    a_12 = estimate_arm_probability(standard_arm_spec("A4", 1, 7),
                                    PINNED_LAMBDA_C, n,
                                    SEED.with_(experiment="ind12"))
    a_23 = estimate_arm_probability(standard_arm_spec("A4", 8, 16),
                                    PINNED_LAMBDA_C, n,
                                    SEED.with_(experiment="ind23"))
    prod = a_12.estimate * a_23.estimate
    se = prod * np.hypot(a_12.stderr / a_12.estimate,
                         a_23.stderr / a_23.estimate) + a_13.stderr
    assert a_13.estimate <= prod + 3 * se
