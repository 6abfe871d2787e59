import logging
import time
from typing import Optional

import numpy as np
from scipy.sparse.csgraph import connected_components

from src.dynamics.model import SystemModel
from src.grid.cellgrid import CellGrid
from src.grid.cellset import CellSet
from src.symbolic_image.graph import ExogenousRanges, SymbolicImage, build_graph
from src.symbolic_image.image import InputStrategy

logger = logging.getLogger(__name__)


def scc_labels(g: SymbolicImage) -> tuple[int, np.ndarray]:
    """Component count and per-vertex component label (scipy's iterative strong-components pass)."""
    count, labels = connected_components(g.adjacency, directed=True, connection="strong")
    return int(count), labels.astype(np.int64)


def nontrivial_mask(g: SymbolicImage, labels: np.ndarray) -> np.ndarray:
    """Vertices lying in a component with at least two vertices or a self-loop."""
    sizes = np.bincount(labels)
    return (sizes[labels] >= 2) | g.has_self_loop()


def scc(g: SymbolicImage) -> list[np.ndarray]:
    """Strongly connected components as sorted vertex arrays, ordered by smallest vertex."""
    _, labels = scc_labels(g)
    order = np.argsort(labels, kind="stable")
    bounds = np.flatnonzero(np.diff(labels[order])) + 1
    components = np.split(order, bounds)
    return sorted(components, key=lambda c: int(c[0]))


def nontrivial_components(g: SymbolicImage) -> list[np.ndarray]:
    self_loop = g.has_self_loop()
    return [c for c in scc(g) if c.size >= 2 or self_loop[c[0]]]


def reverse_reachable(g: SymbolicImage, seeds: np.ndarray) -> np.ndarray:
    """Mask of vertices with a directed path into the seed set (seeds included)."""
    reverse = g.reverse
    visited = np.zeros(g.num_vertices, dtype=bool)
    frontier = np.unique(np.asarray(seeds, dtype=np.int64))
    visited[frontier] = True
    while frontier.size:
        rows = reverse[frontier]
        found = np.unique(rows.indices)
        frontier = found[~visited[found]].astype(np.int64)
        visited[frontier] = True
    return visited


def i_plus(g: SymbolicImage) -> CellSet:
    """
    Non-leaving cells: members of nontrivial strongly connected components and
    every cell with a path into one.
    """
    start = time.perf_counter()
    count, labels = scc_labels(g)
    seeds = np.flatnonzero(nontrivial_mask(g, labels))
    result = CellSet.from_mask(g.grid, reverse_reachable(g, seeds))
    logger.info(
        f"I+ over {g.num_vertices} cells: {count} components, {seeds.size} cells in nontrivial ones, "
        f"{len(result)} non-leaving ({time.perf_counter() - start:.2f}s)"
    )
    return result


def is_non_leaving(g: SymbolicImage, cells: CellSet) -> bool:
    """Every cell of the set has a successor inside the set."""
    if cells.is_empty():
        return True
    sub = g.adjacency[cells.indices][:, cells.indices]
    return bool(np.all(np.diff(sub.indptr) > 0))


def solve_gis(
    model: SystemModel,
    grid: CellGrid,
    inputs: Optional[InputStrategy] = None,
    exogenous: Optional[ExogenousRanges] = None,
    sources: Optional[CellSet] = None,
    workers: int = 1,
) -> tuple[SymbolicImage, CellSet]:
    """Build the symbolic image of the model and extract its non-leaving cells."""
    graph = build_graph(model, grid, inputs, exogenous=exogenous, sources=sources, workers=workers)
    return graph, i_plus(graph)
