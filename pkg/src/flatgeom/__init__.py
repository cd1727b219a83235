"""Workbench for flat predimension constructions on finite relational structures."""

from .structures import (
    PointedStructure,
    Signature,
    Structure,
    StructureError,
    Symbol,
    TERNARY,
    find_embeddings_over,
    free_amalgam,
    induced_substructure,
    predimension,
)
from .canon import are_isomorphic, base_delta_of_code, canonical_form, structure_code
from .dimension import (
    DimensionReport,
    SizeCapError,
    d_closure,
    dimension,
    dimension_report,
    is_d_closed,
    is_self_sufficient,
    self_sufficient_closure,
)
from .pregeometry import Geometry, closed_sets, flat_lattice_dot, geometry_isomorphic, geometry_of, independent
from .classes import (
    ClassSpec,
    ExtensionKind,
    MsaInstance,
    MuFunction,
    classify_extension,
    enumerate_msa_within,
    lemma21_check,
    max_disjoint_copies,
    membership,
)
from .amalgamation import (
    Amalgam,
    AmalgamationError,
    GeneratorError,
    GenericChain,
    algebraic_extension_generator,
    amalgamate,
    build_generic_approx,
    enumerate_extensions,
)
from .construction import (
    BafResult,
    ConstructionBug,
    ConstructionTrace,
    ExtensionProblem,
    PreconditionError,
    back_and_forth,
    construct_extension,
    decompose,
    random_problem,
    verify_claims,
)

__version__ = "0.1.0"
