from .box import Box, project_box
from .cellgrid import CellGrid, CellId, cell_bounds, diameter, expand_divisions, locate, quantize
from .cellset import CellSet
from .occupancy import BoxCounter, member_mask

__all__ = [
    "Box",
    "BoxCounter",
    "CellGrid",
    "CellId",
    "CellSet",
    "cell_bounds",
    "diameter",
    "expand_divisions",
    "locate",
    "member_mask",
    "project_box",
    "quantize",
]
