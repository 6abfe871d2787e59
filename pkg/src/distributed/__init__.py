from .missing import MissingStateTable, estimate_missing
from .passes import SubsystemSolution, decentralized_pass, distributed_pass, global_grid, subsystem_grids

__all__ = [
    "MissingStateTable",
    "SubsystemSolution",
    "decentralized_pass",
    "distributed_pass",
    "estimate_missing",
    "global_grid",
    "subsystem_grids",
]
