"""Renormalization toolkit for interval exchanges, affine exchanges and
piecewise-linear circle maps.

Exact big-integer/rational cocycles over Rauzy-Veech and Zorich induction,
arbitrary-precision affine induction with slope tracking, invariant-measure
and local-dimension estimators, Rohlin-tower certificates and a
generic-condition scanner, plus a reproducible CLI harness.
"""

__version__ = "0.1.0"

from .errors import (AietdimError, ConeNotContracted, NotRenormalizable,
                     PrecisionExhausted, ResourceGuardExceeded, TieUndecidable)
from .perms import (BOTTOM, TOP, Perm, RauzyClass, all_irreducible_perms,
                    bottom_predecessor, canonical_rotation_perm,
                    is_irreducible, is_rotation_type, kernel_basis, monodromy,
                    omega_matrix, rauzy_class, successor)
from .iet import (IET, Interval, ReturnBranch, build_iet, first_return_map,
                  keane_check, translation_vector_by_matrix)
from .renorm import (OrbitRecord, RVStep, ZorichBlock, iet_from_path,
                     is_infinity_complete, orbit, path_winners, rotation_path,
                     rv_step, rv_type, zorich_step)
from .spectral import (IN_E_CS_NOT_E_S, IN_E_S, OUTSIDE_E_CS,
                       InvarianceReport, LyapunovEstimate, Subspace,
                       kernel_projection_invariance_check, log_slope_membership,
                       lyapunov_top, project_kernel, rotation_stable_spaces)
from .circle import (DEFAULT_PRECISION, CFExpansion, CircleArc,
                     DynamicalPartition, PLCircleMap, RenormalizedMap,
                     SmoothBranch, circle_renormalization, continued_fraction,
                     dynamical_partition, map_partial_quotients,
                     mean_nonlinearity, rigid_rotation, rotation_number)
from .affine import (AIET, AIETOrbitRecord, DimensionTrace, MeasureEstimate,
                     SlopeCocycleReport, aiet_evaluate, aiet_from_path,
                     aiet_orbit, build_aiet, giet_rv_step, iet_to_aiet,
                     invariant_measure_weights, local_dimension_estimates,
                     log_slope_cocycle_check, pl_to_aiet)
from .analysis import (AdjacencyReport, CriterionLevelEntry, CriterionReport,
                       GenericConditionReport, RohlinTower, adjacency_structure,
                       check_criterion, default_schedule, generic_condition_scan,
                       hat_A_membership, pi_star_for, rigidity_count, s_content,
                       thinned_floor_lengths, towers_at_level,
                       verify_tower_disjointness)
