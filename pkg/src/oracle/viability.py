import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Iterator, Optional

import numpy as np

from src.config import SETTINGS
from src.dynamics.model import SystemModel
from src.errors import DimensionMismatchError
from src.grid.cellgrid import CellGrid
from src.grid.cellset import CellSet
from src.grid.occupancy import BoxCounter
from src.symbolic_image.image import InputStrategy, image_index_ranges

logger = logging.getLogger(__name__)


def viability_sweeps(
    model: SystemModel,
    grid: CellGrid,
    inputs: Optional[InputStrategy] = None,
    workers: int = 1,
) -> Iterator[CellSet]:
    """
    Survivors after each sweep of the viability iteration.

    Starts from every cell and removes, per sweep, the cells whose image over U
    misses all current survivors. The last yielded set is the fixpoint; it is
    yielded once more by the sweep that changes nothing.
    """
    if grid.dim != model.n:
        raise DimensionMismatchError(f"Grid of dimension {grid.dim} for model {model.name} with n={model.n}")
    cells = np.arange(grid.size, dtype=np.int64)
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
    owner = np.concatenate([p[0] for p in parts])
    ilo = np.concatenate([p[1] for p in parts])
    ihi = np.concatenate([p[2] for p in parts])

    alive = np.ones(grid.size, dtype=bool)
    while True:
        counter = BoxCounter(grid, np.flatnonzero(alive))
        survivors = alive & counter.owners_hit(owner, ilo, ihi, grid.size)
        yield CellSet.from_mask(grid, survivors)
        if np.array_equal(survivors, alive):
            return
        alive = survivors


def viability_iterate(
    model: SystemModel,
    grid: CellGrid,
    inputs: Optional[InputStrategy] = None,
    workers: int = 1,
) -> CellSet:
    """Greatest set of cells in which every cell has an over-approximate image meeting the set."""
    start = time.perf_counter()
    sweeps = 0
    result = CellSet.full(grid)
    for result in viability_sweeps(model, grid, inputs, workers):
        sweeps += 1
    logger.info(
        f"Viability iteration of {model.name}: {len(result)} of {grid.size} cells after {sweeps} sweeps "
        f"({time.perf_counter() - start:.2f}s)"
    )
    return result
