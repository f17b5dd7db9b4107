"""Exact local monomialization of series over the rationals and p-adics.

The package turns a convergent series germ into an atlas of invertible
coordinate changes (affine maps, two-variable blowups, quasitranslations) on
which the series, the Jacobian determinant of each chart, and the original
coordinates all factor as a monomial times a nonvanishing unit.
"""

from .charts import (
    Affine,
    Blowup,
    ChartMap,
    Quasitranslation,
    apply_chart_point,
    compose_chart,
    invert_chart_point,
    jacobian,
    symbolic_components,
    symbolic_jacobian,
)
from .engine import (
    Atlas,
    Chart,
    EngineConfig,
    coefficient_product,
    cover_check,
    graph_function,
    min_order_direction,
    resolve,
    rotate_to_axis,
    unit_radius,
    weierstrass_form,
)
from .errors import (
    BudgetError,
    DimensionError,
    InputZeroError,
    MonoresError,
    NoWitnessError,
    ParseError,
    VerificationError,
)
from .ordering import BlowupTree, Leaf, order_monomials, walk
from .polyhedron import (
    CentralFace,
    Face,
    Polyhedron,
    build_polyhedron,
    central_face,
    compact_faces,
    face_series,
    newton_distance,
)
from .regions import (
    RegionConstants,
    RegionDesc,
    choose_constants,
    classify_point,
    derivative_witness,
    region_descriptions,
    region_monomial_predicate,
)
from .scalars import Norm
from .series import Series, format_series, parse_series

__version__ = "0.1.0"

__all__ = [
    "Affine",
    "Atlas",
    "Blowup",
    "BlowupTree",
    "BudgetError",
    "CentralFace",
    "Chart",
    "ChartMap",
    "DimensionError",
    "EngineConfig",
    "Face",
    "InputZeroError",
    "Leaf",
    "MonoresError",
    "NoWitnessError",
    "Norm",
    "ParseError",
    "Polyhedron",
    "Quasitranslation",
    "RegionConstants",
    "RegionDesc",
    "Series",
    "VerificationError",
    "apply_chart_point",
    "build_polyhedron",
    "central_face",
    "choose_constants",
    "classify_point",
    "coefficient_product",
    "compact_faces",
    "compose_chart",
    "cover_check",
    "derivative_witness",
    "face_series",
    "format_series",
    "graph_function",
    "invert_chart_point",
    "jacobian",
    "min_order_direction",
    "newton_distance",
    "order_monomials",
    "parse_series",
    "region_descriptions",
    "region_monomial_predicate",
    "resolve",
    "rotate_to_axis",
    "symbolic_components",
    "symbolic_jacobian",
    "unit_radius",
    "walk",
    "weierstrass_form",
]
