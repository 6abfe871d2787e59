from .audit import AuditReport, audit_invariance, feasible_input, input_grid_points
from .viability import viability_iterate, viability_sweeps

__all__ = [
    "AuditReport",
    "audit_invariance",
    "feasible_input",
    "input_grid_points",
    "viability_iterate",
    "viability_sweeps",
]
