"""
Coxeter Forge

Staged free constructions of geometries of Coxeter type: the construction
over A3-free diagrams, the construction for linear diagrams with a terminal
m-bond over a rational projective substrate, and the amalgamation machinery
for C3, H3 and F4, together with verifiers for every stage invariant.
"""

from .diagram import (
    INFINITY,
    CoxeterDiagram,
    adjacent,
    has_subdiagram_A3,
    is_cn_shape,
    parse_diagram,
    serialize_diagram,
    standard_diagram
)

from .geometry import (
    Geometry,
    Rank2View,
    Verdict,
    distance,
    girth,
    is_generalized_ngon,
    is_geometry_of_type_M,
    is_residually_connected,
    is_thick_corank1,
    rank2_restriction,
    residue
)

from .free_properties import (
    check_D,
    check_F,
    check_P,
    check_all
)

from .free_construction import (
    ConstructionState,
    Task,
    build_free,
    enumerate_tasks,
    is_stage_embedding,
    procedure_a,
    procedure_b,
    procedure_c,
    progress_metrics,
    run_round
)

from .projective import (
    Subspace,
    SubstrateHandle,
    canonicalize,
    hyperplanes_through,
    nested,
    subspaces_within
)

from .cn_construction import (
    CnState,
    Triple,
    check_cn_properties,
    extend,
    init_lambda0,
    materialized_geometry,
    run_cn,
    select_fresh_panel_vertex,
    verify_type_n_residue,
    viable_triples
)

from .fraisse import (
    Embedding,
    LStructure,
    check_amalgamation_property,
    close_into_class,
    eval_f,
    eval_g,
    extend_partial_iso,
    free_amalgam,
    generated_substructure
)

from .fixtures import fixture_neumaier

from .io_tools import (
    export_dot,
    load_diagram,
    load_geometry,
    load_state,
    save_diagram,
    save_geometry,
    save_state
)

from .config import Caps, Settings
from .errors import ForgeError

__all__ = [
    # Diagrams
    "INFINITY",
    "CoxeterDiagram",
    "adjacent",
    "has_subdiagram_A3",
    "is_cn_shape",
    "parse_diagram",
    "serialize_diagram",
    "standard_diagram",

    # Geometry kernel
    "Geometry",
    "Rank2View",
    "Verdict",
    "distance",
    "girth",
    "is_generalized_ngon",
    "is_geometry_of_type_M",
    "is_residually_connected",
    "is_thick_corank1",
    "rank2_restriction",
    "residue",

    # Free construction
    "check_D",
    "check_F",
    "check_P",
    "check_all",
    "ConstructionState",
    "Task",
    "build_free",
    "enumerate_tasks",
    "is_stage_embedding",
    "procedure_a",
    "procedure_b",
    "procedure_c",
    "progress_metrics",
    "run_round",

    # Projective substrate and C_n construction
    "Subspace",
    "SubstrateHandle",
    "canonicalize",
    "hyperplanes_through",
    "nested",
    "subspaces_within",
    "CnState",
    "Triple",
    "check_cn_properties",
    "extend",
    "init_lambda0",
    "materialized_geometry",
    "run_cn",
    "select_fresh_panel_vertex",
    "verify_type_n_residue",
    "viable_triples",

    # Amalgamation
    "Embedding",
    "LStructure",
    "check_amalgamation_property",
    "close_into_class",
    "eval_f",
    "eval_g",
    "extend_partial_iso",
    "free_amalgam",
    "generated_substructure",

    # Files and fixtures
    "fixture_neumaier",
    "export_dot",
    "load_diagram",
    "load_geometry",
    "load_state",
    "save_diagram",
    "save_geometry",
    "save_state",

    # Configuration and errors
    "Caps",
    "Settings",
    "ForgeError",
]
