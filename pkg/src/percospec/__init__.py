"""Simulation and exact-verification toolkit for spectral and pivotal
structure of planar critical continuum percolation (unit-disk Boolean model
and Voronoi percolation) under birth-death and frozen dynamics."""

__version__ = "0.1.0"

from .arm_events import (ArmEventSpec, PINNED_LAMBDA_C, arm_event,
                         calibrate_lambda_c, crossing_probability,
                         estimate_arm_probability, standard_arm_spec)
from .boolean import (BooleanCrossingFunctional, CrossingScaffold,
                      build_disk_graph, crossing_indicator, occupied_crossing)
from .diffops import (Functional, PivotalSet, add_one_cost,
                      iterated_difference, pivotal_points,
                      quenched_pivotal_points, remove_one_cost)
from .experiments import (NoiseCurve, cached_alpha4,
                          estimate_voronoi_arm_probability,
                          instability_collapse, noise_curve,
                          ou_vs_frozen_covariance, quasimult_table)
from .geometry import Point2, Region
from .hoeffding import (HoeffdingTable, annealed_correlation_psi,
                        hoeffding_decompose, pivotal_vs_quenched_factor,
                        projected_correlation_phi, q_operator,
                        sample_annealed_spectral_sample, z_variables)
from .model import (DynamicsCoupling, MarkedPoint, PointConfiguration,
                    add_point, evolve_frozen, evolve_ou, remove_point,
                    sample_poisson)
from .raster import OccupancyRaster, rasterize, vacant_crossing_raster
from .results import EstimatorResult
from .rng import SeedSpec
from .spectral import (MomentDensityQuery, paley_zygmund_lower_bound,
                       second_difference_scan, second_moment_bound_check,
                       spectral_intensity_integral)
from .voronoi import (DelaunayTriangulation, VoronoiCrossingFunctional,
                      VoronoiCrossingScaffold, VoronoiGeometry, build_delaunay,
                      voronoi_arm_event, voronoi_crossing,
                      voronoi_sample_window)
