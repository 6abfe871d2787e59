from __future__ import annotations

import logging
import time
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from src.decomposition.subsystem import Decomposition
from src.distributed.passes import SubsystemSolution
from src.errors import GridMismatchError
from src.grid.box import Box
from src.grid.cellgrid import CellGrid
from src.grid.cellset import CellSet
from src.symbolic_image.graph import SymbolicImage, in_neighbors

if TYPE_CHECKING:
    from src.reconstruct.validation import ValidationLog

logger = logging.getLogger(__name__)


class FullCover:
    """
    Full-dimension cells rebuilt from subsystem solutions.

    Row k of `provenance` holds, per subsystem, the flat index of the local cell
    that `cells.indices[k]` projects onto.
    """

    def __init__(
        self,
        grid: CellGrid,
        cells: CellSet,
        provenance: np.ndarray,
        subsystem_grids: Sequence[CellGrid],
        log: Optional["ValidationLog"] = None,
    ):
        self.grid = grid
        self.cells = cells
        self.provenance = provenance
        self.subsystem_grids = tuple(subsystem_grids)
        self.log = log

    def __len__(self) -> int:
        return len(self.cells)

    def __repr__(self) -> str:
        return f"FullCover({len(self.cells)} of {self.grid.size} cells, {len(self.subsystem_grids)} subsystems)"

    def is_empty(self) -> bool:
        return self.cells.is_empty()

    def restrict(self, keep: np.ndarray, log: Optional["ValidationLog"] = None) -> "FullCover":
        """Cover with only the rows where keep is True."""
        keep = np.asarray(keep, dtype=bool)
        cells = CellSet(self.grid, self.cells.indices[keep], canonical=True)
        return FullCover(self.grid, cells, self.provenance[keep], self.subsystem_grids, log if log is not None else self.log)

    def local_cells(self, position: int) -> CellSet:
        """Projection of the cover onto one subsystem grid."""
        return CellSet(self.subsystem_grids[position], np.unique(self.provenance[:, position]), canonical=True)


def _assemble_grid(solutions: Sequence[SubsystemSolution], n: int) -> CellGrid:
    lo = np.empty(n)
    hi = np.empty(n)
    divisions = np.zeros(n, dtype=np.int64)
    for sol in solutions:
        for pos, k in enumerate(sol.subsystem.owned):
            if divisions[k]:
                continue
            lo[k] = sol.grid.domain.lo[pos]
            hi[k] = sol.grid.domain.hi[pos]
            divisions[k] = sol.grid.divisions[pos]
    return CellGrid(
        domain=Box(lo=tuple(map(float, lo)), hi=tuple(map(float, hi))),
        divisions=tuple(int(d) for d in divisions),
    )


def reconstruct(solutions: Sequence[SubsystemSolution], decomposition: Decomposition) -> FullCover:
    """
    Full-dimension cells whose projections lie in every subsystem solution.

    Folds along the chain: each partial cell is paired with every cell of the
    next solution that agrees with it on the shared coordinates. The cover is
    the exact union of the paired cells.
    """
    start = time.perf_counter()
    n = decomposition.model.n
    grids = [sol.grid for sol in solutions]
    for overlap in decomposition.overlaps:
        if not overlap.shared:
            continue
        up = grids[overlap.upstream].project(overlap.upstream_positions)
        down = grids[overlap.downstream].project(overlap.downstream_positions)
        if up != down:
            raise GridMismatchError(
                f"Overlap grids differ between subsystems {overlap.upstream + 1} and {overlap.downstream + 1}: "
                f"{up.divisions} over {up.domain} vs {down.divisions} over {down.domain}"
            )
    grid = _assemble_grid(solutions, n)

    if any(sol.cells.is_empty() for sol in solutions):
        empty = [sol.index + 1 for sol in solutions if sol.cells.is_empty()]
        logger.warning(f"Subsystems {empty} have empty solutions; the reconstructed cover is empty")
        return FullCover(grid, CellSet.empty(grid), np.empty((0, len(solutions)), np.int64), grids)

    # Partial cells: global coordinates for `columns`, local cell per solved subsystem
    first = solutions[0]
    columns = list(first.subsystem.owned)
    multi = first.grid.unravel(first.cells.indices)
    provenance = first.cells.indices[:, None]

    for sol, overlap in zip(solutions[1:], decomposition.overlaps):
        sub = sol.subsystem
        local = sol.grid.unravel(sol.cells.indices)
        if overlap.shared:
            key_grid = sol.grid.project(overlap.downstream_positions)
            partial_keys = multi[:, [columns.index(k) for k in overlap.shared]] @ key_grid.strides
            local_keys = local[:, list(overlap.downstream_positions)] @ key_grid.strides
        else:
            partial_keys = np.zeros(multi.shape[0], dtype=np.int64)
            local_keys = np.zeros(local.shape[0], dtype=np.int64)

        order = np.argsort(local_keys, kind="stable")
        sorted_keys = local_keys[order]
        left = np.searchsorted(sorted_keys, partial_keys, side="left")
        right = np.searchsorted(sorted_keys, partial_keys, side="right")
        counts = right - left
        row = np.repeat(np.arange(multi.shape[0], dtype=np.int64), counts)
        step = np.arange(row.size, dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
        match = order[np.repeat(left, counts) + step]

        fresh = [pos for pos, k in enumerate(sub.owned) if k not in columns]
        multi = np.column_stack([multi[row], local[match][:, fresh]])
        provenance = np.column_stack([provenance[row], sol.cells.indices[match]])
        columns += [sub.owned[pos] for pos in fresh]
        logger.info(f"Joined subsystem {sub.index + 1}: {multi.shape[0]} partial cells over {len(columns)} states")

    ordered = multi[:, [columns.index(k) for k in range(n)]]
    flat = grid.ravel(ordered)
    rank = np.argsort(flat)
    cover = FullCover(grid, CellSet(grid, flat[rank], canonical=True), provenance[rank], grids)
    logger.info(
        f"Reconstructed {len(cover)} full cells of {grid.size} from {len(solutions)} subsystems "
        f"({time.perf_counter() - start:.2f}s)"
    )
    return cover


def flag_cells(g2: SymbolicImage, r2: CellSet) -> CellSet:
    """Non-leaving cells with a direct edge into a leaving cell."""
    return in_neighbors(g2, r2.complement()) & r2


def lift_flags(flags: CellSet, cover: FullCover, position: int = -1) -> CellSet:
    """Full cells of the cover whose projection onto subsystem `position` is flagged."""
    if flags.grid != cover.subsystem_grids[position]:
        raise GridMismatchError("Flags are not on the grid of the selected subsystem")
    if cover.is_empty() or flags.is_empty():
        return CellSet.empty(cover.grid)
    hit = flags.contains_many(cover.provenance[:, position])
    return CellSet(cover.grid, cover.cells.indices[hit], canonical=True)


def flag_cover(solutions: Sequence[SubsystemSolution], cover: FullCover) -> CellSet:
    """Full cells flagged by any downstream subsystem; the head subsystem contributes none."""
    flagged = CellSet.empty(cover.grid)
    for sol in solutions[1:]:
        local = flag_cells(sol.graph, sol.cells)
        lifted = lift_flags(local, cover, sol.index)
        logger.info(f"Subsystem {sol.index + 1}: {len(local)} flagged cells, {len(lifted)} full cells")
        flagged = flagged | lifted
    return flagged
