"""Calibration certificates for planar Steiner networks.

Three equivalent-problem formulations are implemented and cross-checked:
minimal partitions with paired calibrations, perimeter minimization on an
n-sheeted cover, and mass minimization of currents with coefficients in
Z^{n-1} under two polyhedral norms, together with the local convex envelope
relaxation and a nonexistence certificate for the regular pentagon.
"""

from .geometry import (NotConvexPosition, DegenerateIntersection, PointConfig,
                       PolygonalComplex, Vec2, label_anticlockwise, perp,
                       segment_crossings)
from .norms import (NormKind, comass_flat, comass_natural, dual_norm_flat,
                    dual_norm_natural, natural_ball_vertices, norm_flat,
                    norm_natural, norm_natural_lp)
from .steiner import (SteinerTree, Topology, enumerate_topologies,
                      optimize_junctions, steiner_minimal_tree)
from .currents import (GroupCurrent, boundary, current_from_partition,
                       current_from_tree, mass, merge)
from .covering import (BadParameters, CoverSpec, CutHitsNetwork, GridCover,
                       PolygonalCover, build_cover, from_steiner,
                       pentagon_config, pentagon_half_competitor, perimeter,
                       rasterize)
from .calib import (PCField, VerificationReport, certify_nonexistence,
                    classify_family, convert_covering_to_current,
                    convert_current_to_covering, miracle_bound_check,
                    triangle_paired_example, verify_approx_regular,
                    verify_covering, verify_current, verify_family_calibration,
                    verify_paired)
from .relax import (RelaxState, evaluate_G, extract_calibration_candidate,
                    project_K, project_simplex, psi, solve_relaxed)

__all__ = [n for n in dir() if not n.startswith("_")]
__version__ = "0.1.0"
