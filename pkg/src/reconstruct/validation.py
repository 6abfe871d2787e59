"""
Validation of a reconstructed cover against the full model.

Only flagged cells are re-tested. A flagged cell is removed when the
over-approximation of its image misses every cell of the current cover; the
sweeps repeat until one removes nothing. Synchronous sweeps test all remaining
candidates against the cover as it stood at the start of the sweep; sequential
sweeps remove in place, in a caller-given order. Both reach the same greatest
fixpoint because the removal test is monotone in the cover.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from src.config import SETTINGS
from src.dynamics.model import SystemModel
from src.errors import ConfigurationError, DimensionMismatchError
from src.grid.cellgrid import CellGrid
from src.grid.cellset import CellSet
from src.grid.occupancy import BoxCounter, member_mask
from src.reconstruct.cover import FullCover
from src.symbolic_image.image import InputStrategy, image_index_ranges

logger = logging.getLogger(__name__)

ValidationMode = Literal["synchronous", "sequential"]


class SweepRecord(BaseModel):
    sweep: int = Field(description="1-based sweep number")
    tested: int = Field(description="Flagged cells tested in this sweep")
    removed: list[int] = Field(default_factory=list, description="Flat indices removed, in removal order")


class ValidationLog(BaseModel):
    mode: ValidationMode = "synchronous"
    initial: int = Field(description="Cells in the cover before validation")
    flagged: int = Field(description="Flagged cells inside the cover")
    sweeps: list[SweepRecord] = Field(default_factory=list)

    @property
    def removed_total(self) -> int:
        return sum(len(s.removed) for s in self.sweeps)

    @property
    def final(self) -> int:
        return self.initial - self.removed_total


class _CandidateRanges:
    """Image index boxes of the candidate cells, computed once and reused by every sweep."""

    def __init__(self, model: SystemModel, grid: CellGrid, cells: np.ndarray, inputs: Optional[InputStrategy], workers: int):
        self.cells = cells
        chunk = SETTINGS.graph_chunk_size
        starts = list(range(0, cells.size, chunk))

        def run(start: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
            owner, ilo, ihi = image_index_ranges(model, grid, cells[start:start + chunk], inputs)
            return owner + start, ilo, ihi

        if workers > 1 and len(starts) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(run, starts))
        else:
            parts = [run(s) for s in starts]
        if parts:
            self.owner = np.concatenate([p[0] for p in parts])
            self.ilo = np.concatenate([p[1] for p in parts])
            self.ihi = np.concatenate([p[2] for p in parts])
        else:
            self.owner = np.empty(0, dtype=np.int64)
            self.ilo = self.ihi = np.empty((0, grid.dim), dtype=np.int64)
        # Rows sorted by owner, so each candidate's rows form a slice
        self.offsets = np.searchsorted(self.owner, np.arange(cells.size + 1))

    def rows_of(self, k: int) -> slice:
        return slice(int(self.offsets[k]), int(self.offsets[k + 1]))


def _synchronous(grid: CellGrid, keep: np.ndarray, covered: np.ndarray, ranges: _CandidateRanges, log: ValidationLog) -> None:
    alive = np.ones(ranges.cells.size, dtype=bool)
    sweep = 0
    while True:
        sweep += 1
        counter = BoxCounter(grid, covered[keep])
        hit = counter.owners_hit(ranges.owner, ranges.ilo, ranges.ihi, ranges.cells.size)
        removed = np.flatnonzero(alive & ~hit)
        log.sweeps.append(SweepRecord(sweep=sweep, tested=int(alive.sum()), removed=ranges.cells[removed].tolist()))
        logger.info(f"Validation sweep {sweep}: tested {int(alive.sum())}, removed {removed.size}")
        if removed.size == 0:
            return
        alive[removed] = False
        keep[np.searchsorted(covered, ranges.cells[removed])] = False


def _sequential(
    grid: CellGrid,
    keep: np.ndarray,
    covered: np.ndarray,
    ranges: _CandidateRanges,
    order: np.ndarray,
    log: ValidationLog,
) -> None:
    occupied = member_mask(grid, covered).reshape(grid.divisions)
    alive = np.ones(ranges.cells.size, dtype=bool)
    sweep = 0
    while True:
        sweep += 1
        tested = 0
        removed: list[int] = []
        for k in order:
            if not alive[k]:
                continue
            tested += 1
            rows = ranges.rows_of(k)
            if any(
                occupied[tuple(slice(a, b + 1) for a, b in zip(lo, hi))].any()
                for lo, hi in zip(ranges.ilo[rows], ranges.ihi[rows])
            ):
                continue
            alive[k] = False
            cell = int(ranges.cells[k])
            occupied[tuple(grid.unravel(np.array([cell]))[0])] = False
            keep[np.searchsorted(covered, cell)] = False
            removed.append(cell)
        log.sweeps.append(SweepRecord(sweep=sweep, tested=tested, removed=removed))
        logger.info(f"Validation sweep {sweep} (sequential): tested {tested}, removed {len(removed)}")
        if not removed:
            return


def validate(
    model: SystemModel,
    cover: FullCover,
    flags: CellSet,
    inputs: Optional[InputStrategy] = None,
    mode: ValidationMode = "synchronous",
    order: Optional[Sequence[int]] = None,
    workers: int = 1,
) -> FullCover:
    """
    Remove flagged cells whose image misses the cover, until nothing changes.

    Args:
        model: the full model the cover lives in
        flags: full cells to re-test; cells outside the cover are ignored
        mode: "synchronous" sweeps or "sequential" in-place sweeps
        order: candidate visiting order for sequential sweeps (default ascending flat index)
        workers: threads for the image computation

    Returns:
        The surviving cover, carrying the sweep log.
    """
    if cover.grid.dim != model.n:
        raise DimensionMismatchError(f"Cover of dimension {cover.grid.dim} for model {model.name} with n={model.n}")
    if mode not in ("synchronous", "sequential"):
        raise ConfigurationError(f"Unknown validation mode '{mode}'")
    start = time.perf_counter()
    candidates = (flags & cover.cells).indices
    if len(flags) != candidates.size:
        logger.warning(f"{len(flags) - candidates.size} flagged cells lie outside the cover and are ignored")
    log = ValidationLog(mode=mode, initial=len(cover), flagged=int(candidates.size))
    keep = np.ones(len(cover), dtype=bool)
    if candidates.size == 0:
        logger.info("No flagged cells; the cover is returned unchanged")
        return cover.restrict(keep, log)

    ranges = _CandidateRanges(model, cover.grid, candidates, inputs, workers)
    covered = cover.cells.indices
    if mode == "synchronous":
        _synchronous(cover.grid, keep, covered, ranges, log)
    else:
        if order is None:
            visit = np.arange(candidates.size)
        else:
            order = np.asarray(order, dtype=np.int64)
            if not np.array_equal(np.sort(order), candidates):
                raise ConfigurationError("Sequential order must list every flagged cell of the cover exactly once")
            visit = np.searchsorted(candidates, order)
        _sequential(cover.grid, keep, covered, ranges, visit, log)

    result = cover.restrict(keep, log)
    if result.is_empty():
        logger.warning(f"Validation removed every cell of the cover ({log.sweeps[-1].sweep} sweeps)")
    logger.info(
        f"Validation ({mode}): {log.initial} -> {len(result)} cells, {log.removed_total} removed in "
        f"{len(log.sweeps)} sweeps ({time.perf_counter() - start:.2f}s)"
    )
    return result


def replay_removals(
    model: SystemModel,
    cover: FullCover,
    log: ValidationLog,
    inputs: Optional[InputStrategy] = None,
) -> list[int]:
    """
    Removed cells whose image does meet the cover that existed when they were
    removed; an empty list means every removal in the log is justified.
    """
    grid = cover.grid
    current = cover.cells.mask()
    violations: list[int] = []
    for record in log.sweeps:
        if not record.removed:
            continue
        cells = np.asarray(record.removed, dtype=np.int64)
        owner, ilo, ihi = image_index_ranges(model, grid, cells, inputs)
        if log.mode == "synchronous":
            counter = BoxCounter(grid, np.flatnonzero(current))
            hit = counter.owners_hit(owner, ilo, ihi, cells.size)
            violations += cells[hit].tolist()
            current[cells] = False
            continue
        occupied = current.reshape(grid.divisions)
        for k, cell in enumerate(cells):
            rows = owner == k
            if any(
                occupied[tuple(slice(a, b + 1) for a, b in zip(lo, hi))].any()
                for lo, hi in zip(ilo[rows], ihi[rows])
            ):
                violations.append(int(cell))
            current[cell] = False
    return violations
