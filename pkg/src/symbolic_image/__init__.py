from .graph import ExogenousRanges, SymbolicImage, build_graph, in_neighbors
from .image import InputStrategy, default_strategy, image_index_ranges, image_overapprox

__all__ = [
    "ExogenousRanges",
    "InputStrategy",
    "SymbolicImage",
    "build_graph",
    "default_strategy",
    "image_index_ranges",
    "image_overapprox",
    "in_neighbors",
]
