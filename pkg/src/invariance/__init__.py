from ..grid.cellset import CellSet
from .analysis import i_plus, is_non_leaving, nontrivial_components, reverse_reachable, scc, solve_gis
from .product import cartesian_product, tensor_product

__all__ = [
    "CellSet",
    "cartesian_product",
    "i_plus",
    "is_non_leaving",
    "nontrivial_components",
    "reverse_reachable",
    "scc",
    "solve_gis",
    "tensor_product",
]
