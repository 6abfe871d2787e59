from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Iterator, Mapping, Optional, Protocol, Sequence

import numpy as np
import scipy.sparse as sparse

from src.config import SETTINGS
from src.dynamics.model import SystemModel
from src.errors import DimensionMismatchError, GridMismatchError
from src.grid.cellgrid import CellGrid
from src.grid.cellset import CellSet
from src.symbolic_image.image import InputStrategy, default_strategy

logger = logging.getLogger(__name__)


class ExogenousRanges(Protocol):
    """Per-cell boxes of exogenous values, e.g. estimated upstream states."""

    def boxes_for(self, cells: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(owner, lo, hi): row k is a box for cells[owner[k]]; cells without boxes get no rows."""
        ...


class SymbolicImage:
    """
    Directed graph over the cells of a grid, stored as a CSR adjacency matrix.

    Row i holds the sorted successors of cell i. The reverse adjacency is
    built on first use and cached.
    """

    def __init__(self, grid: CellGrid, adjacency: sparse.csr_matrix):
        if adjacency.shape != (grid.size, grid.size):
            raise DimensionMismatchError(f"Adjacency of shape {adjacency.shape} for a grid of {grid.size} cells")
        adjacency = sparse.csr_matrix(adjacency, dtype=np.int8, copy=True)
        adjacency.sum_duplicates()
        adjacency.sort_indices()
        adjacency.data[:] = 1
        self.grid = grid
        self.adjacency = adjacency
        self._reverse: Optional[sparse.csr_matrix] = None
        self._lock = threading.Lock()

    @classmethod
    def from_edges(cls, grid: CellGrid, src: np.ndarray, dst: np.ndarray) -> "SymbolicImage":
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        data = np.ones(src.size, dtype=np.int8)
        return cls(grid, sparse.csr_matrix((data, (src, dst)), shape=(grid.size, grid.size)))

    @classmethod
    def from_successors(cls, grid: CellGrid, successors: Mapping[int, Sequence[int]]) -> "SymbolicImage":
        src = [s for s, targets in successors.items() for _ in targets]
        dst = [t for targets in successors.values() for t in targets]
        return cls.from_edges(grid, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64))

    @property
    def num_vertices(self) -> int:
        return self.grid.size

    @property
    def num_edges(self) -> int:
        return int(self.adjacency.nnz)

    @property
    def reverse(self) -> sparse.csr_matrix:
        with self._lock:
            if self._reverse is None:
                reverse = self.adjacency.transpose().tocsr()
                reverse.sort_indices()
                self._reverse = reverse
        return self._reverse

    def successors(self, cell: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[cell]:a.indptr[cell + 1]].astype(np.int64)

    def predecessors(self, cell: int) -> np.ndarray:
        r = self.reverse
        return r.indices[r.indptr[cell]:r.indptr[cell + 1]].astype(np.int64)

    def out_degree(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def has_self_loop(self) -> np.ndarray:
        return self.adjacency.diagonal() > 0

    def sources(self) -> np.ndarray:
        """Cells with at least one successor."""
        return np.flatnonzero(self.out_degree()).astype(np.int64)

    def edge_list(self) -> tuple[np.ndarray, np.ndarray]:
        coo = self.adjacency.tocoo()
        return coo.row.astype(np.int64), coo.col.astype(np.int64)

    def iter_successors(self) -> Iterator[tuple[int, np.ndarray]]:
        """(source, successors) for every cell with outgoing edges, ascending."""
        for cell in self.sources():
            yield int(cell), self.successors(int(cell))

    def in_neighbors(self, targets: CellSet) -> CellSet:
        return in_neighbors(self, targets)

    def __repr__(self) -> str:
        return f"SymbolicImage({self.num_vertices} cells, {self.num_edges} edges)"


def in_neighbors(g: SymbolicImage, targets: CellSet) -> CellSet:
    """Cells with an edge into some target cell."""
    if targets.grid != g.grid:
        raise GridMismatchError("Target cells and graph are on different grids")
    if targets.is_empty():
        return CellSet.empty(g.grid)
    rows = g.reverse[targets.indices]
    return CellSet(g.grid, np.unique(rows.indices).astype(np.int64), canonical=True)


def _chunk_edges(
    model: SystemModel,
    grid: CellGrid,
    cells: np.ndarray,
    ulo: np.ndarray,
    uhi: np.ndarray,
    exogenous: Optional[ExogenousRanges],
) -> tuple[np.ndarray, np.ndarray]:
    xlo, xhi = grid.bounds_of(cells)
    local = np.arange(cells.size, dtype=np.int64)
    wlo = whi = None
    if model.p:
        if exogenous is None:
            wlo = np.repeat(model.exogenous_box.lower[None, :], cells.size, axis=0)
            whi = np.repeat(model.exogenous_box.upper[None, :], cells.size, axis=0)
        else:
            local, wlo, whi = exogenous.boxes_for(cells)
            xlo, xhi = xlo[local], xhi[local]
    k = ulo.shape[0]
    rows = local.size
    # Every (cell, exogenous box) row paired with every input sub-box
    owner = np.repeat(local, k)
    xlo, xhi = np.repeat(xlo, k, axis=0), np.repeat(xhi, k, axis=0)
    u_lo, u_hi = np.tile(ulo, (rows, 1)), np.tile(uhi, (rows, 1))
    if wlo is not None:
        wlo, whi = np.repeat(wlo, k, axis=0), np.repeat(whi, k, axis=0)

    lo, hi = model.image_bounds(xlo, xhi, u_lo, u_hi, wlo, whi)
    ilo, ihi, hit = grid.index_ranges(lo, hi)
    row_owner, dst = grid.cells_in_ranges(ilo[hit], ihi[hit])
    src_local = owner[hit][row_owner]
    key = np.unique(src_local * grid.size + dst)
    return cells[key // grid.size], key % grid.size


def build_graph(
    model: SystemModel,
    grid: CellGrid,
    inputs: Optional[InputStrategy] = None,
    exogenous: Optional[ExogenousRanges] = None,
    sources: Optional[CellSet] = None,
    workers: int = 1,
    chunk_size: Optional[int] = None,
) -> SymbolicImage:
    """
    Symbolic image of the model over the grid.

    Edge (i, j) is present when the enclosure of f(cell i, U) meets cell j.
    Images are clipped to the grid domain, so parts leaving X produce no edges.

    Args:
        inputs: input strategy (default: whole U for affine models, else a partition)
        exogenous: per-cell exogenous ranges; without it a model with exogenous
                   terms uses its static exogenous box
        sources: restrict edge generation to these cells
        workers: thread count for edge generation
        chunk_size: source cells per task
    """
    if grid.dim != model.n:
        raise DimensionMismatchError(f"Grid of dimension {grid.dim} for model {model.name} with n={model.n}")
    inputs = default_strategy(model) if inputs is None else inputs
    chunk_size = chunk_size or SETTINGS.graph_chunk_size
    if sources is None:
        cells = np.arange(grid.size, dtype=np.int64)
    else:
        if sources.grid != grid:
            raise GridMismatchError("Source cells are not on the graph's grid")
        cells = sources.indices
    ulo, uhi = inputs.partition(model.input_box)

    chunks = [cells[i:i + chunk_size] for i in range(0, cells.size, chunk_size)]
    start = time.perf_counter()
    logger.info(
        f"Building symbolic image of {model.name}: {cells.size} source cells, "
        f"{ulo.shape[0]} input boxes, {len(chunks)} chunks, {workers} workers"
    )

    def run(chunk: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _chunk_edges(model, grid, chunk, ulo, uhi, exogenous)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(chunk) for chunk in chunks]

    src = np.concatenate([p[0] for p in parts]) if parts else np.empty(0, dtype=np.int64)
    dst = np.concatenate([p[1] for p in parts]) if parts else np.empty(0, dtype=np.int64)
    graph = SymbolicImage.from_edges(grid, src, dst)
    logger.info(f"Symbolic image of {model.name}: {graph.num_edges} edges in {time.perf_counter() - start:.2f}s")
    return graph
