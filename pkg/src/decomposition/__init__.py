from ..grid.box import project_box
from .subsystem import Decomposition, OverlapMap, Subsystem, check_cascade, decompose

__all__ = ["Decomposition", "OverlapMap", "Subsystem", "check_cascade", "decompose", "project_box"]
