"""Disassembly sequence planning by blocking reduction.

Parts are closed triangle meshes resting on a floor.  The planner scores
how much each part obstructs the removal space of every other part,
groups parts into subassemblies that come out together, checks each
removal with straight-line sweeps and emits a disassembly tree.  The tree
doubles as a parallel assembly plan whose makespan is simulated for a
workcell of several robots.
"""
from .assembly import Assembly, Part
from .baselines import belhadj_partition, morato_partition
from .blocking import (
    DIG,
    BlockingConfig,
    ShellSet,
    blocking_fraction,
    build_dig,
    construct_shells,
    subassembly_blockage,
    total_blockage,
)
from .contact import (
    FreedomCone,
    InterpenetrationError,
    Liaison,
    LiaisonGraph,
    LockedConeError,
    contact_normals,
    detect_liaisons,
    freedom_cone,
    is_locked,
    representative_directions,
)
from .mesh import (
    DegenerateGeometry,
    GeometryError,
    NotWatertight,
    ParseError,
    Pose,
    TriMesh,
    load_mesh,
    mesh_centroid,
    mesh_volume,
    meshes_intersect,
    point_inside,
    proximity_pairs,
    surface_area,
)
from .planner import (
    DisassemblyTree,
    PlanFailure,
    PlannerConfig,
    linear_sequence,
    plan_disassembly,
    precedence_layers,
    verify_plan,
)
from .subassembly import (
    DegenerateState,
    SubIdConfig,
    fitness_scores,
    grow_subassembly,
    identify_subassemblies,
    nucleus_cutoff,
    select_base,
)
from .validation import (
    UnstablePose,
    check_stability,
    reorient_for_removal,
    sweep_collides,
    validate_removal,
)
from .workcell import makespan, optimal_makespan, simulate, speedup

__all__ = [
    "Assembly",
    "Part",
    "belhadj_partition",
    "morato_partition",
    "DIG",
    "BlockingConfig",
    "ShellSet",
    "blocking_fraction",
    "build_dig",
    "construct_shells",
    "subassembly_blockage",
    "total_blockage",
    "FreedomCone",
    "InterpenetrationError",
    "Liaison",
    "LiaisonGraph",
    "LockedConeError",
    "contact_normals",
    "detect_liaisons",
    "freedom_cone",
    "is_locked",
    "representative_directions",
    "DegenerateGeometry",
    "GeometryError",
    "NotWatertight",
    "ParseError",
    "Pose",
    "TriMesh",
    "load_mesh",
    "mesh_centroid",
    "mesh_volume",
    "meshes_intersect",
    "point_inside",
    "proximity_pairs",
    "surface_area",
    "DisassemblyTree",
    "PlanFailure",
    "PlannerConfig",
    "linear_sequence",
    "plan_disassembly",
    "precedence_layers",
    "verify_plan",
    "DegenerateState",
    "SubIdConfig",
    "fitness_scores",
    "grow_subassembly",
    "identify_subassemblies",
    "nucleus_cutoff",
    "select_base",
    "UnstablePose",
    "check_stability",
    "reorient_for_removal",
    "sweep_collides",
    "validate_removal",
    "makespan",
    "optimal_makespan",
    "simulate",
    "speedup",
]

__version__ = "0.1.0"
