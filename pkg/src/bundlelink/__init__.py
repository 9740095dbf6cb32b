"""Linking and self-linking numbers of closed curves in R^n relative to rank-3 bundles."""
from __future__ import annotations

from .bundles import (BundleSpec, a_operator, check_sl_conditions, constant_bundle, custom_bundle,
                      detect_k, make_bundle, orthogonal_bundle, osculating_bundle, parallel_transport,
                      trivial_bundle)
from .curves import TrigCurve, arclength_table, circle, from_preset, load_curve_spec, parse_curve_ref
from .errors import (BundleLinkError, CrossValidationError, RankDeficiencyError, RegularityError,
                     ResidualError, RootCountError, SpecError, TransversalityError, UnstableLimitError)
from .frames import frenet, gram_schmidt
from .linking import (InvariantResult, gauss_linking_r3, linking_integrand, linking_number_integral,
                      linking_number_intersection)
from .selflinking import (diagonal_phi, orthogonal_developable_intersections,
                          osculating_developable_intersections, pushoff, sl_integral, sl_limit,
                          sl_orthogonal, sl_osculating)

__version__ = "0.1.0"

__all__ = [
    "BundleLinkError",
    "BundleSpec",
    "CrossValidationError",
    "InvariantResult",
    "RankDeficiencyError",
    "RegularityError",
    "ResidualError",
    "RootCountError",
    "SpecError",
    "TransversalityError",
    "TrigCurve",
    "UnstableLimitError",
    "a_operator",
    "arclength_table",
    "check_sl_conditions",
    "circle",
    "constant_bundle",
    "custom_bundle",
    "detect_k",
    "diagonal_phi",
    "frenet",
    "from_preset",
    "gauss_linking_r3",
    "gram_schmidt",
    "linking_integrand",
    "linking_number_integral",
    "linking_number_intersection",
    "load_curve_spec",
    "make_bundle",
    "orthogonal_bundle",
    "orthogonal_developable_intersections",
    "osculating_bundle",
    "osculating_developable_intersections",
    "parallel_transport",
    "parse_curve_ref",
    "pushoff",
    "sl_integral",
    "sl_limit",
    "sl_orthogonal",
    "sl_osculating",
    "trivial_bundle",
]
