import itertools
import logging

import numpy as np

from src.config import SETTINGS
from src.errors import GridOverflowError
from src.grid.cellgrid import CellGrid

logger = logging.getLogger(__name__)


def member_mask(grid: CellGrid, flat: np.ndarray) -> np.ndarray:
    """Dense boolean membership array of length grid.size."""
    if grid.size > SETTINGS.max_dense_cells:
        raise GridOverflowError(
            f"Grid has {grid.size} cells; dense membership is limited to {SETTINGS.max_dense_cells} "
            f"(raise CIS_MAX_DENSE_CELLS to allow it)"
        )
    mask = np.zeros(grid.size, dtype=bool)
    mask[np.asarray(flat, dtype=np.int64)] = True
    return mask


class BoxCounter:
    """
    Counts the members of a cell set inside index boxes in O(2^n) per query.

    Holds an n-D inclusive prefix-sum table of the membership array, padded with
    a leading zero slab on every axis.
    """

    def __init__(self, grid: CellGrid, flat: np.ndarray):
        self.grid = grid
        flat = np.asarray(flat, dtype=np.int64)
        self.count_total = int(flat.size)
        dtype = np.int32 if grid.size < 2**31 else np.int64
        occupancy = member_mask(grid, flat).reshape(grid.divisions).astype(dtype)
        table = np.pad(occupancy, [(1, 0)] * grid.dim)
        for axis in range(grid.dim):
            np.cumsum(table, axis=axis, out=table)
        self._table = table
        self._corners = [
            (np.array(bits, dtype=bool), -1 if (grid.dim - sum(bits)) % 2 else 1)
            for bits in itertools.product((0, 1), repeat=grid.dim)
        ]

    def count(self, ilo: np.ndarray, ihi: np.ndarray) -> np.ndarray:
        """Members inside each inclusive index range; ilo/ihi are (N, n)."""
        ilo = np.asarray(ilo, dtype=np.int64)
        ihi = np.asarray(ihi, dtype=np.int64)
        total = np.zeros(ilo.shape[0], dtype=np.int64)
        if self.count_total == 0 or ilo.shape[0] == 0:
            return total
        for bits, sign in self._corners:
            corner = np.where(bits, ihi + 1, ilo)
            total += sign * self._table[tuple(corner.T)]
        return total

    def any(self, ilo: np.ndarray, ihi: np.ndarray) -> np.ndarray:
        return self.count(ilo, ihi) > 0

    def owners_hit(self, owner: np.ndarray, ilo: np.ndarray, ihi: np.ndarray, size: int) -> np.ndarray:
        """Per owner in [0, size): whether any of its index ranges holds a member."""
        hits = np.asarray(owner, dtype=np.int64)[self.any(ilo, ihi)]
        return np.bincount(hits, minlength=size)[:size] > 0
