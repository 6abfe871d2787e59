from __future__ import annotations

from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from src.errors import CellIndexError, GridMismatchError
from src.grid.box import Box
from src.grid.cellgrid import CellGrid


class CellSet:
    """A set of cells of one grid, held as a sorted duplicate-free array of flat indices."""

    __slots__ = ("grid", "indices")

    def __init__(self, grid: CellGrid, indices: Iterable[int] = (), *, canonical: bool = False):
        arr = np.asarray(indices if isinstance(indices, np.ndarray) else list(indices), dtype=np.int64).reshape(-1)
        if not canonical:
            arr = np.unique(arr)
            if arr.size and (arr[0] < 0 or arr[-1] >= grid.size):
                raise CellIndexError(f"Cell indices outside [0, {grid.size}) for grid {grid.divisions}")
        self.grid = grid
        self.indices = arr

    @classmethod
    def empty(cls, grid: CellGrid) -> "CellSet":
        return cls(grid, np.empty(0, dtype=np.int64), canonical=True)

    @classmethod
    def full(cls, grid: CellGrid) -> "CellSet":
        return cls(grid, np.arange(grid.size, dtype=np.int64), canonical=True)

    @classmethod
    def from_mask(cls, grid: CellGrid, mask: np.ndarray) -> "CellSet":
        return cls(grid, np.flatnonzero(mask).astype(np.int64), canonical=True)

    # ---- container protocol -----------------------------------------------

    def __len__(self) -> int:
        return int(self.indices.size)

    def __iter__(self) -> Iterator[int]:
        return (int(i) for i in self.indices)

    def __contains__(self, cell: int) -> bool:
        k = np.searchsorted(self.indices, cell)
        return bool(k < self.indices.size and self.indices[k] == cell)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CellSet):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.indices, other.indices)

    def __repr__(self) -> str:
        return f"CellSet({len(self)} of {self.grid.size} cells, divisions={self.grid.divisions})"

    def is_empty(self) -> bool:
        return self.indices.size == 0

    def contains_many(self, cells: np.ndarray) -> np.ndarray:
        cells = np.asarray(cells, dtype=np.int64)
        if self.indices.size == 0:
            return np.zeros(cells.shape, dtype=bool)
        k = np.minimum(np.searchsorted(self.indices, cells), self.indices.size - 1)
        return self.indices[k] == cells

    def mask(self) -> np.ndarray:
        mask = np.zeros(self.grid.size, dtype=bool)
        mask[self.indices] = True
        return mask

    # ---- set algebra ------------------------------------------------------

    def _check(self, other: "CellSet") -> None:
        if self.grid != other.grid:
            raise GridMismatchError(
                f"Cell sets live on different grids: {self.grid.divisions} over {self.grid.domain} "
                f"vs {other.grid.divisions} over {other.grid.domain}"
            )

    def union(self, other: "CellSet") -> "CellSet":
        self._check(other)
        return CellSet(self.grid, np.union1d(self.indices, other.indices), canonical=True)

    def intersection(self, other: "CellSet") -> "CellSet":
        self._check(other)
        return CellSet(self.grid, np.intersect1d(self.indices, other.indices, assume_unique=True), canonical=True)

    def difference(self, other: "CellSet") -> "CellSet":
        self._check(other)
        return CellSet(self.grid, np.setdiff1d(self.indices, other.indices, assume_unique=True), canonical=True)

    def complement(self) -> "CellSet":
        return CellSet.from_mask(self.grid, ~self.mask())

    def issubset(self, other: "CellSet") -> bool:
        self._check(other)
        return bool(np.all(other.contains_many(self.indices)))

    __or__ = union
    __and__ = intersection
    __sub__ = difference
    __le__ = issubset

    # ---- geometry ---------------------------------------------------------

    def multi_indices(self) -> np.ndarray:
        return self.grid.unravel(self.indices)

    def product(self, other: "CellSet") -> "CellSet":
        """Cells of grid x other.grid whose factors lie in self and other."""
        flat = (self.indices[:, None] * other.grid.size + other.indices[None, :]).reshape(-1)
        return CellSet(self.grid.product(other.grid), flat, canonical=True)

    def project(self, dims: Sequence[int]) -> "CellSet":
        grid = self.grid.project(dims)
        if self.is_empty():
            return CellSet.empty(grid)
        multi = self.multi_indices()[:, list(dims)]
        return CellSet(grid, np.unique(multi @ grid.strides), canonical=True)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.grid.bounds_of(self.indices)

    def hull(self) -> Optional[Box]:
        """Bounding box of the union of cells, None when empty."""
        if self.is_empty():
            return None
        lo, hi = self.bounds()
        return Box(lo=tuple(float(v) for v in lo.min(axis=0)), hi=tuple(float(v) for v in hi.max(axis=0)))
