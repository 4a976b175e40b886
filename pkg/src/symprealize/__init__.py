"""Symplectic realizations of Poisson, Poisson-Nijenhuis and holomorphic Poisson
structures built from the flow of a cotangent Poisson spray."""

from .expr import Expression, ExprDomainError, ExprSyntaxError, parse
from .geometry import (
    BivectorField,
    CentralDifference,
    JetScheme,
    OneOneTensorField,
    jacobiator,
    koszul_bracket,
    nijenhuis_torsion,
    omega_can,
)
from .holomorphic import HolomorphicPoissonSpec, HolomorphicRealization, split_holomorphic, verify_holomorphic
from .nijenhuis import PNStructure, complete_lift, pn_compatibility, twisted_bivector, twisted_lie_poisson
from .realization import (
    RealizationOptions,
    RealizedForm,
    Tolerances,
    realization_bivector,
    realized_two_form,
    realized_two_form_twisted,
    verify_realization,
)
from .specfile import SpecError, build_spec, load_spec
from .spray import ConnectionCoefficients, CotangentPoint, PoissonSpray, build_spray, flow, flow_with_jacobian
from .suites import run_suite, sample_points

__version__ = "0.1.0"

__all__ = [
    "BivectorField",
    "CentralDifference",
    "ConnectionCoefficients",
    "CotangentPoint",
    "ExprDomainError",
    "ExprSyntaxError",
    "Expression",
    "HolomorphicPoissonSpec",
    "HolomorphicRealization",
    "JetScheme",
    "OneOneTensorField",
    "PNStructure",
    "PoissonSpray",
    "RealizationOptions",
    "RealizedForm",
    "SpecError",
    "Tolerances",
    "build_spec",
    "build_spray",
    "complete_lift",
    "flow",
    "flow_with_jacobian",
    "jacobiator",
    "koszul_bracket",
    "load_spec",
    "nijenhuis_torsion",
    "omega_can",
    "parse",
    "pn_compatibility",
    "realization_bivector",
    "realized_two_form",
    "realized_two_form_twisted",
    "run_suite",
    "sample_points",
    "split_holomorphic",
    "twisted_bivector",
    "twisted_lie_poisson",
    "verify_holomorphic",
    "verify_realization",
]
