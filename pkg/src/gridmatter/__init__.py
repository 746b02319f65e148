"""Simulation and verification tools for particle systems on infinite grids.

Particles are anonymous, occupy grid cells, label their ports clockwise
in a private frame, and act only on local information.  The package
covers three grids (square, triangular, king), leader election by
candidate elimination, spanning tree construction, port relabeling to a
common frame, identifier assignment that stays locally unique out to a
chosen distance, boundary walks, and the periodic colorings the
identifiers come from.
"""

from .grid import (
    Coord,
    GridKind,
    degree,
    distance,
    neighbors,
    next_occupied_port,
    opposite_port,
    port_direction,
)
from .particles import (
    HoleReport,
    ParticleConfig,
    border,
    extended_neighborhood,
    find_holes,
    is_articulation,
    is_s_contractible,
    is_s_contractible_local,
    make_config,
    mtree,
    radius,
    round_bound,
    validate_config,
)
from .coloring import (
    ColoringPattern,
    color_at,
    color_count,
    color_table_text,
    coord_update_receive,
    min_colors_bruteforce,
    pattern,
    tracking_modulus,
    verify_coloring,
)
from .scheduler import (
    POLICY_EXPLICIT,
    POLICY_RANDOM,
    POLICY_ROUND_ROBIN,
    AlgorithmReport,
    RunResult,
    RunTrace,
    Schedule,
    SimulationError,
    TraceEvent,
    check_exclusion,
    count_rounds,
    run,
)
from .algorithms import (
    ELECT,
    IDS,
    PIPELINE_FULL,
    RENUMBER,
    TREE,
    ParticleState,
    classify_boundary,
    id_histogram,
    initial_states,
    leader_of,
    residual_candidates,
    step_assign_ids,
    step_elect,
    step_renumber,
    step_spanning_tree,
    tree_children,
    tree_edges,
    tree_height,
    tree_parent,
    update_id_after_move,
)

__version__ = "0.1.0"
