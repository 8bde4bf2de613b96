"""Affine diameters, hyperplane-section centers and their coincidences.

Numerical tools for smooth strictly convex bodies given by support
functions: the chord family of affine diameters, points on many diameters
at once, hyperplane sections with a continuous choice of center, and the
integer brackets for the multiplicity function kappa(d).
"""
from .body import (
    SupportBody,
    body_from_descriptor,
    contact_point,
    make_ellipsoid,
    make_perturbed_ball,
    membership_margin,
    strict_convexity_margin,
    translate,
)
from .diameters import (
    Chord,
    DirectionParams,
    PointParams,
    chord_of_normal,
    diameter_in_direction,
    diameters_through_point,
    multiplicity_at,
    oracle_sweep_2d,
)
from .kappa import KappaBound, bound_table, combined_lower_bound, theorem_bound
from .kernels import BACKEND
from .search import (
    CoincidenceCertificate,
    SearchParams,
    max_multiplicity_estimate,
    refine_certificate,
    scan_multiplicity,
    search_concurrent_diameters,
)
from .sections import (
    Hyperplane,
    PlanarSection,
    SelectionParams,
    count_selections_hitting_exterior_point,
    search_coincident_selections,
    section_centroid,
    section_steiner_point,
    selection_map,
    trace_section,
)

__version__ = "0.1.0"
