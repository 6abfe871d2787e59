from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np

from src.decomposition.subsystem import OverlapMap
from src.errors import GridMismatchError
from src.grid.box import Box
from src.grid.cellgrid import CellGrid

if TYPE_CHECKING:
    from src.distributed.passes import SubsystemSolution

logger = logging.getLogger(__name__)


class MissingStateTable:
    """
    Admissible upstream values of the missing states, per target cell.

    Target cells that agree on the overlap coordinates share an entry. An entry
    is a list of disjoint boxes over the missing dimensions whose union is
    exactly the projection of the matching upstream cells; runs of cells are
    merged along the last missing dimension. Target cells without matching
    upstream cells have an empty entry.
    """

    def __init__(
        self,
        target_grid: CellGrid,
        overlap: OverlapMap,
        keys: np.ndarray,
        offsets: np.ndarray,
        lo: np.ndarray,
        hi: np.ndarray,
    ):
        self.target_grid = target_grid
        self.overlap = overlap
        self.keys = keys
        self.offsets = offsets
        self.lo = lo
        self.hi = hi
        self._overlap_grid = target_grid.project(overlap.downstream_positions) if overlap.shared else None

    @property
    def num_boxes(self) -> int:
        return int(self.lo.shape[0])

    @property
    def missing_dim(self) -> int:
        return len(self.overlap.missing)

    def _keys_of(self, cells: np.ndarray) -> np.ndarray:
        if self._overlap_grid is None:
            return np.zeros(cells.size, dtype=np.int64)
        multi = self.target_grid.unravel(cells)[:, list(self.overlap.downstream_positions)]
        return multi @ self._overlap_grid.strides

    def boxes_for(self, cells: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(owner, lo, hi): one row per (cell, box) pair, owner indexes into cells."""
        cells = np.asarray(cells, dtype=np.int64)
        if self.keys.size == 0:
            empty = np.empty((0, self.missing_dim))
            return np.empty(0, dtype=np.int64), empty, empty
        keys = self._keys_of(cells)
        k = np.minimum(np.searchsorted(self.keys, keys), self.keys.size - 1)
        found = self.keys[k] == keys
        start = self.offsets[k]
        counts = np.where(found, self.offsets[k + 1] - start, 0)
        owner = np.repeat(np.arange(cells.size, dtype=np.int64), counts)
        step = np.arange(owner.size, dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
        rows = np.repeat(start, counts) + step
        return owner, self.lo[rows], self.hi[rows]

    def entry(self, cell: int) -> list[Box]:
        """Disjoint boxes of admissible missing-state values for one target cell."""
        _, lo, hi = self.boxes_for(np.array([cell], dtype=np.int64))
        return [Box(lo=tuple(map(float, a)), hi=tuple(map(float, b))) for a, b in zip(lo, hi)]

    def intervals(self, cell: int) -> list[tuple[float, float]]:
        """Entry of a cell with one missing dimension, as (lo, hi) pairs."""
        return [(b.lo[0], b.hi[0]) for b in self.entry(cell)]

    def covered_fraction(self) -> float:
        """Share of target cells with a non-empty entry."""
        if self._overlap_grid is None:
            return 1.0 if self.num_boxes else 0.0
        return float(self.keys.size) / self._overlap_grid.size


def estimate_missing(upstream: "SubsystemSolution", target_grid: CellGrid, overlap: OverlapMap) -> MissingStateTable:
    """
    Missing-state ranges for the downstream subsystem from the upstream solution.

    For each overlap coordinate, the upstream cells of R with that coordinate are
    projected onto the missing dimensions and merged into disjoint boxes.
    """
    up_grid = upstream.grid
    if overlap.shared:
        up_overlap = up_grid.project(overlap.upstream_positions)
        down_overlap = target_grid.project(overlap.downstream_positions)
        if up_overlap != down_overlap:
            raise GridMismatchError(
                f"Overlap grids differ between subsystems {overlap.upstream + 1} and {overlap.downstream + 1}: "
                f"{up_overlap.divisions} over {up_overlap.domain} vs {down_overlap.divisions} over {down_overlap.domain}"
            )
    q = len(overlap.missing)

    cells = upstream.cells.indices
    if cells.size == 0 or q == 0:
        if cells.size == 0:
            logger.warning(
                f"Upstream subsystem {overlap.upstream + 1} has no cells; "
                f"every cell of subsystem {overlap.downstream + 1} gets an empty missing-state entry"
            )
        empty = np.empty((0, q))
        return MissingStateTable(target_grid, overlap, np.empty(0, np.int64), np.zeros(1, np.int64), empty, empty)

    multi = up_grid.unravel(cells)
    if overlap.shared:
        keys = multi[:, list(overlap.upstream_positions)] @ up_overlap.strides
    else:
        keys = np.zeros(cells.size, dtype=np.int64)
    miss = multi[:, list(overlap.missing_positions)]

    # Distinct (key, missing multi-index) rows, sorted by key, leading missing dims, last missing dim
    rows = np.unique(np.column_stack([keys, miss]), axis=0)
    keys, miss = rows[:, 0], rows[:, 1:]
    head = np.column_stack([keys, miss[:, :-1]])
    last = miss[:, -1]
    new_run = np.ones(rows.shape[0], dtype=bool)
    new_run[1:] = np.any(head[1:] != head[:-1], axis=1) | (last[1:] != last[:-1] + 1)
    starts = np.flatnonzero(new_run)
    ends = np.append(starts[1:], rows.shape[0]) - 1

    edges = up_grid.project(overlap.missing_positions).all_edges()
    lo = np.empty((starts.size, q))
    hi = np.empty((starts.size, q))
    for d in range(q - 1):
        lo[:, d] = edges[d][miss[starts, d]]
        hi[:, d] = edges[d][miss[starts, d] + 1]
    lo[:, q - 1] = edges[q - 1][last[starts]]
    hi[:, q - 1] = edges[q - 1][last[ends] + 1]

    box_keys = keys[starts]
    unique_keys, first = np.unique(box_keys, return_index=True)
    offsets = np.append(first, box_keys.size).astype(np.int64)
    table = MissingStateTable(target_grid, overlap, unique_keys.astype(np.int64), offsets, lo, hi)
    logger.info(
        f"Missing-state table for subsystem {overlap.downstream + 1}: {table.num_boxes} boxes over "
        f"{unique_keys.size} overlap coordinates from {cells.size} upstream cells ({starts.size} runs)"
    )
    return table
