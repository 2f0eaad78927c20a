"""Numerical experiments on singular holomorphic foliations by curves.

Tangent cones at singular points, transversality, the leafwise Poincare
modulus eta, its dependence on the domain, and completeness of the
leafwise metric near the singular set.
"""

from .cone import estimate_foliation_cone, is_transversal_type
from .domain import DomainSpec, convergence_experiment, eta_restricted, hausdorff_rho
from .eta import (
    EtaSample,
    completeness_probe,
    discontinuity_scan,
    eta_at,
    eta_exact,
    eta_lower_flow,
    eta_sequence_limits,
    eta_upper_ambient,
    ex32_bounds_check,
    extremal_radius,
    metric_length,
)
from .field import Polydisc, PolyVectorField, eval_field, jacobian, normal_form
from .leaf import LeafChart, Model, certified_flow_disc_radius, classify_model_leaf, flow
from .scenarios import get_scenario, scenario_ids
from .variety import AnalyticSetModel, ConeSet, singular_locus, tangent_cone_of_set

__version__ = "0.1.0"
