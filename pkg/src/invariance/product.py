import logging

import scipy.sparse as sparse

from src.config import SETTINGS
from src.errors import ProductSizeError
from src.symbolic_image.graph import SymbolicImage

logger = logging.getLogger(__name__)


def _check_size(g1: SymbolicImage, g2: SymbolicImage) -> None:
    total = g1.num_vertices * g2.num_vertices
    if total > SETTINGS.max_product_cells:
        raise ProductSizeError(
            f"Product graph would have {total} vertices, above the limit of {SETTINGS.max_product_cells}"
        )


def cartesian_product(g1: SymbolicImage, g2: SymbolicImage) -> SymbolicImage:
    """
    Graph Cartesian product: one factor moves along an edge while the other stays.

    Vertex (a, b) is the flat index a * |V2| + b of the product grid.
    """
    _check_size(g1, g2)
    eye1 = sparse.identity(g1.num_vertices, dtype=g1.adjacency.dtype, format="csr")
    eye2 = sparse.identity(g2.num_vertices, dtype=g2.adjacency.dtype, format="csr")
    adjacency = sparse.kron(g1.adjacency, eye2, format="csr") + sparse.kron(eye1, g2.adjacency, format="csr")
    graph = SymbolicImage(g1.grid.product(g2.grid), adjacency)
    logger.debug(f"Cartesian product: {graph.num_vertices} vertices, {graph.num_edges} edges")
    return graph


def tensor_product(g1: SymbolicImage, g2: SymbolicImage) -> SymbolicImage:
    """Direct (tensor) product: both factors move along an edge at once."""
    _check_size(g1, g2)
    adjacency = sparse.kron(g1.adjacency, g2.adjacency, format="csr")
    graph = SymbolicImage(g1.grid.product(g2.grid), adjacency)
    logger.debug(f"Tensor product: {graph.num_vertices} vertices, {graph.num_edges} edges")
    return graph
