import numpy as np
import pytest

from percospec.arm_events import PINNED_LAMBDA_C
from percospec.boolean import BooleanCrossingFunctional
from percospec.geometry import Region
from percospec.model import sample_poisson
from percospec.results import EstimatorResult
from percospec.rng import SeedSpec
from percospec.spectral import (MomentDensityQuery, _second_difference_sq,
                                paley_zygmund_lower_bound,
                                second_difference_scan,
                                second_moment_bound_check,
                                spectral_intensity_integral)

SEED = SeedSpec(7, "spectral-tests")


def test_query_validation():
    with pytest.raises(ValueError):
        MomentDensityQuery("f", 3, ((0, 0),))
    with pytest.raises(ValueError):
        MomentDensityQuery("f", 2, ((0.0, 0.0), (0.0, 0.0)))
    MomentDensityQuery("f", 2, ((0.0, 0.0), (1.0, 0.0)))


def test_paley_zygmund_cases():
    # a constant variable: M2 = M1^2, s = 1/2 gives exactly 1/4
    assert paley_zygmund_lower_bound(2.0, 4.0, 0.5) == 0.25
    assert paley_zygmund_lower_bound(2.0, 8.0, 0.0) == 0.5
    assert paley_zygmund_lower_bound(2.0, 8.0, 1.0 - 1e-12) < 1e-20
    with pytest.raises(ValueError):
        paley_zygmund_lower_bound(1.0, 0.0, 0.5)
    with pytest.raises(ValueError):
        paley_zygmund_lower_bound(1.0, 1.0, 1.0)
    r = EstimatorResult(3.0, 0.1, 10, SEED)
    assert paley_zygmund_lower_bound(r, r.estimate ** 2, 0.5) == 0.25


class _ConstantScaffold:
    def crosses(self):
        return True

    def pivotal_node_positions(self):
        return np.empty(0, dtype=np.int64)

    @property
    def graph(self):
        class G:
            xy = np.empty((0, 2))
        return G()


class _ConstantOne:
    """Functional identically +1: both intensity routes must return zero."""

    name = "const-one"
    sampling_window = Region.square(3)

    def scaffold(self, cfg):
        return _ConstantScaffold()


def test_constant_functional_zero_by_both_routes():
    dual = spectral_intensity_integral(_ConstantOne(), Region.square(2), 1.0,
                                       64, SEED)
    assert dual.configuration_route.estimate == 0.0
    assert dual.added_point_route.estimate == 0.0


def test_dual_routes_agree_f4():
    F = BooleanCrossingFunctional(4, PINNED_LAMBDA_C)
    dual = spectral_intensity_integral(F, F.dependence_region, PINNED_LAMBDA_C,
                                       4000, SEED.with_(experiment="dual4"))
    assert dual.agree(3.0)
    assert dual.configuration_route.estimate > 0
    assert dual.second_moment == 1.0


def test_second_difference_outside_dependence_window_is_zero():
    F = BooleanCrossingFunctional(4, PINNED_LAMBDA_C)
    cfg = sample_poisson(PINNED_LAMBDA_C, F.sampling_window,
                         SEED.with_(purpose="outside"))
    sc = F.scaffold(cfg)
    # both points outside W_{L+1}: no disk reaches the box
    assert _second_difference_sq(sc, np.array([5.5, 0.0]),
                                 np.array([-5.5, 0.0])) == 0.0


def test_second_difference_symmetric_in_xy():
    F = BooleanCrossingFunctional(4, PINNED_LAMBDA_C)
    rng = np.random.default_rng(2)
    for rep in range(40):
        cfg = sample_poisson(PINNED_LAMBDA_C, F.sampling_window,
                             SEED.with_(replica=rep, purpose="sym"))
        sc = F.scaffold(cfg)
        x = rng.uniform(-3, 3, 2)
        y = rng.uniform(-3, 3, 2)
        assert _second_difference_sq(sc, x, y) == _second_difference_sq(sc, y, x)


def test_second_moment_check_runs_and_flags():
    F = BooleanCrossingFunctional(8, PINNED_LAMBDA_C)
    out = second_moment_bound_check(F, PINNED_LAMBDA_C, 0.5, 800,
                                    SEED.with_(experiment="m2"))
    assert out["M1"].estimate > 0
    assert out["M2"].estimate >= out["M1"].estimate
    assert np.isfinite(out["ratio"])
    with pytest.raises(ValueError):
        second_moment_bound_check(F, PINNED_LAMBDA_C, 1.5, 10, SEED)


def test_second_difference_scan_table():
    F = BooleanCrossingFunctional(8, PINNED_LAMBDA_C)

    def fake_alpha4(r, R):
        return EstimatorResult(0.2, 0.01, 100, SEED)

    rows = second_difference_scan(F, [4, 8], 400,
                                  SEED.with_(experiment="scan"),
                                  PINNED_LAMBDA_C, alpha4_fn=fake_alpha4)
    assert [r["distance"] for r in rows] == [4.0, 8.0]
    for r in rows:
        assert r["estimate"] >= 0
        assert np.isfinite(r["ratio"])
    with pytest.raises(ValueError):
        second_difference_scan(F, [2], 100, SEED, PINNED_LAMBDA_C,
                               alpha4_fn=fake_alpha4)
