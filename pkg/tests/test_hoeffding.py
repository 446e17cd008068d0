import numpy as np
import pytest

from percospec.diffops import Functional
from percospec.geometry import Point2, Region
from percospec.hoeffding import (HoeffdingTable, alternating_conditional_gap,
                                 coefficients_from_values, evaluate_mark_cube,
                                 hoeffding_decompose, mark_difference_table,
                                 pivotal_vs_quenched_factor,
                                 projection_identity_gap, psi_phi_integrands,
                                 q_operator, sample_annealed_spectral_sample,
                                 subset_sizes, values_from_coefficients,
                                 walsh_transform, z_variables)
from percospec.model import PointConfiguration, sample_poisson
from percospec.rng import SeedSpec
from percospec.voronoi import VoronoiCrossingFunctional

SEED = SeedSpec(99, "hoeffding-tests")
TOL = 1e-10


def random_values(n, rep=0, boolean=True):
    rng = SEED.with_(replica=rep).generator()
    if boolean:
        return rng.choice([-1.0, 1.0], size=1 << n)
    return rng.normal(size=1 << n)


def grid_cfg(n, marks=None, spread=0.8):
    xy = np.column_stack((np.linspace(-spread, spread, n), np.zeros(n)))
    marks = np.ones(n, dtype=np.int8) if marks is None else marks
    return PointConfiguration(xy, Region.square(4), marks)


def test_dictator_coefficients():
    F = Functional(lambda cfg: float(cfg.marks[0]))
    table = hoeffding_decompose(F, grid_cfg(1))
    assert table.coefficient(()) == 0.0
    assert table.coefficient((0,)) == 1.0


def test_and_coefficients():
    # +-1 AND of two signs: constant -1/2, singletons and pair +1/2
    F = Functional(lambda cfg: 1.0 if np.all(cfg.marks == 1) else -1.0)
    table = hoeffding_decompose(F, grid_cfg(2))
    assert table.coefficient(()) == -0.5
    assert table.coefficient((0,)) == 0.5
    assert table.coefficient((1,)) == 0.5
    assert table.coefficient((0, 1)) == 0.5


def test_parseval_and_reconstruction_random():
    for rep in range(30):
        vals = random_values(10, rep)
        coeffs = coefficients_from_values(vals)
        assert abs(np.mean(vals ** 2) - np.sum(coeffs ** 2)) <= TOL
        assert np.max(np.abs(values_from_coefficients(coeffs) - vals)) <= TOL


def test_orthogonality_full_enumeration():
    n = 6
    chis = np.array([[(-1) ** int(bin(s & b).count("1")) for b in range(1 << n)]
                     for s in range(1 << n)], dtype=float)
    gram = chis @ chis.T / (1 << n)
    assert np.max(np.abs(gram - np.eye(1 << n))) <= TOL


def test_vanishing_coefficients_for_ignored_coordinates():
    # depends only on coordinates {0, 1}: every strict superset coefficient
    # vanishes exactly
    rng = SEED.with_(purpose="quinn").generator()
    lookup = rng.choice([-1.0, 1.0], size=4)

    def feval(signs):
        idx = (signs[0] == -1) + 2 * (signs[1] == -1)
        return lookup[idx]

    vals = evaluate_mark_cube(feval, 5)
    coeffs = coefficients_from_values(vals)
    for mask in range(1 << 5):
        if mask & ~0b11:
            assert abs(coeffs[mask]) <= TOL


def test_q_operator_idempotent_and_complement():
    vals = random_values(6, boolean=False)
    q0 = q_operator(vals, 2)
    assert np.max(np.abs(q_operator(q0, 2) - q0)) <= TOL
    # (I - Q) Q = 0
    assert np.max(np.abs((q0 - q_operator(q0, 2)))) <= TOL


def test_projection_identity_exact():
    for rep in range(20):
        vals = random_values(8, rep)
        rng = SEED.with_(replica=rep, purpose="T").generator()
        subset = [i for i in range(8) if rng.random() < 0.4]
        assert projection_identity_gap(vals, subset) <= TOL


def test_alternating_conditional_identity_exact():
    for rep in range(20):
        for n in (2, 4, 6):
            vals = random_values(n, rep + 100 * n)
            assert alternating_conditional_gap(vals) <= TOL


def test_table_reconstruct_and_gaps():
    F = Functional(lambda cfg: float(np.prod(cfg.marks)))
    table = hoeffding_decompose(F, grid_cfg(4))
    assert table.parseval_gap() <= TOL
    assert table.reconstruction_gap() <= TOL
    signs = np.array([1, -1, 1, -1], dtype=np.int8)
    assert abs(table.reconstruct(signs) - float(np.prod(signs))) <= TOL


def test_cube_cap():
    with pytest.raises(ValueError):
        evaluate_mark_cube(lambda s: 0.0, 21)


# ---------------------------------------------------------------------------
# mark-averaged difference integrands
# ---------------------------------------------------------------------------

def ball_black_indicator(region=None):
    region = region or Region.rect(1.0, 1.0)
    return Functional(lambda cfg: 2.0 * bool(
        cfg.n and np.any(region.contains(cfg.xy) & (cfg.marks == 1))) - 1.0,
        dependence_region=region, increasing=True)


def _small_bg(rep):
    return sample_poisson(0.8, Region.square(1.5),
                          SEED.with_(replica=rep, purpose="bg"), marked=True)


def test_psi_le_phi_per_replica_and_factor_two():
    F = ball_black_indicator()
    x = Point2(0.05, 0.05)
    y = Point2(-0.4, 0.2)
    for rep in range(200):
        cfg = _small_bg(rep)
        t1 = mark_difference_table(F, cfg, [x])
        psi1, phi1 = psi_phi_integrands(t1)
        assert psi1 <= phi1 + TOL
        # increasing functional: the projected density doubles the annealed one
        assert abs(phi1 - 2.0 * psi1) <= TOL
        t2 = mark_difference_table(F, cfg, [x, y])
        psi2, phi2 = psi_phi_integrands(t2)
        assert psi2 <= phi2 + TOL


def test_z_variables_constant_functional():
    F = Functional(lambda cfg: 1.0, increasing=True)
    z = z_variables(F, _small_bg(0), Point2(0.0, 0.0), Point2(0.3, 0.3))
    assert z.z == (0.0, 0.0, 0.0, 0.0)


def test_z_variables_relations_and_case_table():
    F = ball_black_indicator()
    x = Point2(0.1, 0.0)
    y = Point2(-0.3, 0.2)
    nonzero = 0
    special_seen = 0
    for rep in range(300):
        cfg = _small_bg(rep)
        z = z_variables(F, cfg, x, y)
        t = mark_difference_table(F, cfg, [x, y])
        psi2, phi2 = psi_phi_integrands(t)
        # the z-decomposition reproduces both integrands exactly
        assert abs(z.psi2 - psi2) <= TOL
        assert abs(z.phi2 - phi2) <= TOL
        # total square mass dominated by 9 z1^2 + 48 on the special event
        assert z.phi2 <= 9.0 * z.psi2 + 48.0 * z.special + TOL
        assert abs(z.z[0]) in (0.0, 0.5)
        if z.special:
            special_seen += 1
        elif z.z[0] != 0.0:
            nonzero += 1
            for v in z.z[1:]:
                assert abs(v) <= 3.0 * abs(z.z[0]) + TOL
        else:
            assert all(abs(v) <= TOL for v in z.z[1:])
    assert nonzero > 0


def test_z_variables_requires_increasing():
    F = Functional(lambda cfg: 1.0, increasing=False)
    with pytest.raises(ValueError):
        z_variables(F, _small_bg(0), Point2(0, 0), Point2(0.3, 0.3))


# ---------------------------------------------------------------------------
# annealed sample and pivotal factor
# ---------------------------------------------------------------------------

def test_annealed_sample_constant_functional():
    F = Functional(lambda cfg: 1.0)
    out = sample_annealed_spectral_sample(F, 0.8, Region.square(1.5), 60, SEED)
    assert out["histogram"] == {0: 1.0}
    assert out["mean_size_sampled"] == 0.0


def test_annealed_sample_dictator_on_conditioned_point():
    # functional equal to the sign nearest the origin: one-point subsets
    def nearest_sign(cfg):
        if cfg.n == 0:
            return 1.0
        return float(cfg.marks[np.argmin((cfg.xy ** 2).sum(axis=1))])

    F = Functional(nearest_sign)
    out = sample_annealed_spectral_sample(F, 0.8, Region.square(1.5), 200,
                                          SEED.with_(experiment="dict"))
    sizes = set(out["histogram"])
    assert sizes <= {0, 1}
    # empty-configuration replicas contribute size 0; all others size 1
    assert out["histogram"].get(1, 0.0) > 0.9


def test_annealed_mean_sizes_consistent():
    F = ball_black_indicator()
    out = sample_annealed_spectral_sample(F, 0.8, Region.square(1.5), 1500,
                                          SEED.with_(experiment="size"))
    # the sampled-mean subset size agrees with the exact conditional mean
    assert abs(out["mean_size_sampled"] - out["mean_size_exact"]) < 0.12


def test_pivotal_factor_voronoi_small():
    F = VoronoiCrossingFunctional(4)
    res = pivotal_vs_quenched_factor(F, 1, 1500, SEED.with_(experiment="pf"))
    assert abs(res.estimate - 0.5) <= 3 * res.stderr
    assert res.meta["expected"] == 0.5


def test_pivotal_factor_mark_independent_functional():
    # a functional ignoring marks has no mark-flip pivotal points at all
    F = Functional(lambda cfg: 2.0 * (cfg.n % 2) - 1.0,
                   dependence_region=Region.square(2))
    F.intensity = 0.5
    F.sampling_window = Region.square(2)
    with pytest.raises(ZeroDivisionError):
        pivotal_vs_quenched_factor(F, 1, 40, SEED.with_(experiment="mf"))


def test_subset_sizes():
    assert list(subset_sizes(3)) == [0, 1, 1, 2, 1, 2, 2, 3]


def test_walsh_involution():
    v = random_values(7, boolean=False)
    assert np.max(np.abs(walsh_transform(walsh_transform(v)) / (1 << 7) - v)) <= TOL
