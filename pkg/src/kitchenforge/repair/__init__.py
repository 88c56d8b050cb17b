"""Minimum-edit kitchen repair: mixed-integer model, solvers, and oracle."""

from .costs import (
    C_DELETE,
    C_MOVE,
    Edit,
    EditCosts,
    EditSummary,
    grid_edit_cost,
    grid_edit_summary,
    manhattan,
    match_type,
)
from .model import (
    Constraint,
    RepairModel,
    Variable,
    assignment_values,
    build_model,
    evaluate_solution,
    export_model,
    grid_from_values,
    model_size,
    parse_model,
    space_graph_edges,
)
from .solve import (
    RepairResult,
    brute_force_repair,
    canonical_rebuild,
    greedy_repair,
    repair_grid,
    solve,
    solve_milp,
)

__all__ = [
    "C_DELETE",
    "C_MOVE",
    "Edit",
    "EditCosts",
    "EditSummary",
    "grid_edit_cost",
    "grid_edit_summary",
    "manhattan",
    "match_type",
    "Constraint",
    "RepairModel",
    "Variable",
    "assignment_values",
    "build_model",
    "evaluate_solution",
    "export_model",
    "grid_from_values",
    "model_size",
    "parse_model",
    "space_graph_edges",
    "RepairResult",
    "brute_force_repair",
    "canonical_rebuild",
    "greedy_repair",
    "repair_grid",
    "solve",
    "solve_milp",
]
