from __future__ import annotations

import logging
import math
import sys
from typing import Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from src.errors import (
    CellIndexError,
    DimensionMismatchError,
    DomainError,
    GridOverflowError,
    PointOutsideDomainError,
)
from src.grid.box import Box

logger = logging.getLogger(__name__)

Divisions = Union[int, Sequence[int]]


class CellId(BaseModel):
    """Address of one cell: row-major flat index and its multi-index."""

    model_config = ConfigDict(frozen=True)

    flat: int
    multi: tuple[int, ...]


class CellGrid(BaseModel):
    """
    Uniform quantization of a box into cells.

    Cell k along a dimension is the half-open slab [e_k, e_{k+1}), except the last
    one which is closed. Edges are computed from the integer index, with the
    final edge pinned to the domain's upper bound, so the cells tile the domain
    exactly. Flat indices are row-major with dimension 0 slowest.
    """

    model_config = ConfigDict(frozen=True)

    domain: Box
    divisions: tuple[int, ...]

    @model_validator(mode="after")
    def _check_divisions(self) -> "CellGrid":
        _check_quantization(self.domain, self.divisions)
        return self

    @property
    def dim(self) -> int:
        return len(self.divisions)

    @property
    def size(self) -> int:
        return math.prod(self.divisions)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.divisions

    @property
    def widths(self) -> np.ndarray:
        return self.domain.widths / np.asarray(self.divisions, dtype=float)

    @property
    def strides(self) -> np.ndarray:
        strides = np.ones(self.dim, dtype=np.int64)
        for d in range(self.dim - 2, -1, -1):
            strides[d] = strides[d + 1] * self.divisions[d + 1]
        return strides

    def edges(self, d: int) -> np.ndarray:
        """The divisions[d] + 1 cell boundaries along dimension d."""
        lo, hi, div = self.domain.lo[d], self.domain.hi[d], self.divisions[d]
        e = lo + (hi - lo) * (np.arange(div + 1, dtype=float) / div)
        e[0] = lo
        e[-1] = hi
        return e

    def all_edges(self) -> list[np.ndarray]:
        return [self.edges(d) for d in range(self.dim)]

    # ---- addressing -------------------------------------------------------

    def ravel(self, multi: np.ndarray) -> np.ndarray:
        """Row-major flat indices of an (N, n) array of multi-indices."""
        multi = np.asarray(multi, dtype=np.int64)
        if multi.ndim == 1:
            multi = multi[None, :]
        if multi.shape[1] != self.dim:
            raise DimensionMismatchError(f"Multi-index has {multi.shape[1]} entries, grid has {self.dim} dimensions")
        if multi.size and (np.any(multi < 0) or np.any(multi >= np.asarray(self.divisions))):
            raise CellIndexError(f"Multi-index out of range for divisions {self.divisions}")
        return multi @ self.strides

    def unravel(self, flat: np.ndarray) -> np.ndarray:
        """(N, n) multi-indices of flat indices."""
        flat = np.asarray(flat, dtype=np.int64).reshape(-1)
        self._check_flat(flat)
        multi = np.empty((flat.size, self.dim), dtype=np.int64)
        rest = flat.copy()
        for d in range(self.dim - 1, -1, -1):
            multi[:, d] = rest % self.divisions[d]
            rest //= self.divisions[d]
        return multi

    def cell_id(self, index: Union[int, Sequence[int]]) -> CellId:
        if isinstance(index, (int, np.integer)):
            flat = int(index)
            multi = tuple(int(v) for v in self.unravel(np.array([flat]))[0])
        else:
            multi = tuple(int(v) for v in index)
            flat = int(self.ravel(np.array(multi))[0])
        return CellId(flat=flat, multi=multi)

    def _check_flat(self, flat: np.ndarray) -> None:
        if flat.size and (flat.min() < 0 or flat.max() >= self.size):
            bad = flat[(flat < 0) | (flat >= self.size)][0]
            raise CellIndexError(f"Cell index {bad} out of range [0, {self.size})")

    # ---- geometry ---------------------------------------------------------

    def cell_bounds(self, cell: Union[int, Sequence[int], CellId]) -> Box:
        if isinstance(cell, CellId):
            cell = cell.flat
        cid = self.cell_id(cell)
        lo, hi = self.bounds_of(np.array([cid.flat]))
        return Box(lo=tuple(float(v) for v in lo[0]), hi=tuple(float(v) for v in hi[0]))

    def bounds_of(self, flat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper corners, each (N, n), of the given cells."""
        multi = self.unravel(flat)
        lo = np.empty(multi.shape, dtype=float)
        hi = np.empty(multi.shape, dtype=float)
        for d, e in enumerate(self.all_edges()):
            lo[:, d] = e[multi[:, d]]
            hi[:, d] = e[multi[:, d] + 1]
        return lo, hi

    def centers(self, flat: np.ndarray) -> np.ndarray:
        lo, hi = self.bounds_of(flat)
        return 0.5 * (lo + hi)

    def locate(self, point: Sequence[float]) -> CellId:
        """Cell containing the point under the half-open convention."""
        flat = self.locate_many(np.asarray(point, dtype=float)[None, :])
        return self.cell_id(int(flat[0]))

    def locate_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise DimensionMismatchError(f"Points have shape {points.shape}, grid has {self.dim} dimensions")
        outside = np.any((points < self.domain.lower) | (points > self.domain.upper), axis=1)
        if np.any(outside):
            raise PointOutsideDomainError(
                f"Point {points[outside][0].tolist()} lies outside the grid domain {self.domain}"
            )
        multi = np.empty(points.shape, dtype=np.int64)
        for d, e in enumerate(self.all_edges()):
            k = np.searchsorted(e, points[:, d], side="right") - 1
            multi[:, d] = np.clip(k, 0, self.divisions[d] - 1)
        return multi @ self.strides

    def contains_points(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.all((points >= self.domain.lower) & (points <= self.domain.upper), axis=1)

    def index_ranges(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Rasterize closed boxes against the grid.

        Boxes are clipped to the domain; a cell counts as hit when its closed
        bounds meet the box, so zero-measure contact is an intersection.

        Args:
            lo, hi: (N, n) box corners

        Returns:
            (ilo, ihi, hit): inclusive per-dimension index ranges and a mask of
            boxes that meet the domain at all. Ranges of missed boxes are meaningless.
        """
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        ilo = np.empty(lo.shape, dtype=np.int64)
        ihi = np.empty(hi.shape, dtype=np.int64)
        hit = np.ones(lo.shape[0], dtype=bool)
        for d, e in enumerate(self.all_edges()):
            div = self.divisions[d]
            hit &= (hi[:, d] >= e[0]) & (lo[:, d] <= e[-1])
            ilo[:, d] = np.clip(np.searchsorted(e, lo[:, d], side="left") - 1, 0, div - 1)
            ihi[:, d] = np.clip(np.searchsorted(e, hi[:, d], side="right") - 1, 0, div - 1)
        return ilo, ihi, hit

    def cells_in_ranges(self, ilo: np.ndarray, ihi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """
        Enumerate the cells of a batch of index ranges.

        Returns:
            (owner, flat): for every enumerated cell, the row of the range it
            came from and its flat index. Rows appear in order.
        """
        ilo = np.asarray(ilo, dtype=np.int64)
        ihi = np.asarray(ihi, dtype=np.int64)
        counts = ihi - ilo + 1
        per_row = np.prod(counts, axis=1)
        total = int(per_row.sum())
        owner = np.repeat(np.arange(ilo.shape[0], dtype=np.int64), per_row)
        if total == 0:
            return owner, np.empty(0, dtype=np.int64)
        starts = np.cumsum(per_row) - per_row
        rest = np.arange(total, dtype=np.int64) - starts[owner]
        flat = np.zeros(total, dtype=np.int64)
        strides = self.strides
        for d in range(self.dim - 1, -1, -1):
            c = counts[owner, d]
            flat += (ilo[owner, d] + rest % c) * strides[d]
            rest //= c
        return owner, flat

    def diameter(self) -> float:
        return diameter(self)

    # ---- derived grids ----------------------------------------------------

    def project(self, indices: Sequence[int]) -> "CellGrid":
        return CellGrid(
            domain=self.domain.project(indices),
            divisions=tuple(self.divisions[i] for i in indices),
        )

    def product(self, other: "CellGrid") -> "CellGrid":
        return CellGrid(domain=self.domain.product(other.domain), divisions=self.divisions + other.divisions)

    def describe(self) -> dict:
        return {"lo": list(self.domain.lo), "hi": list(self.domain.hi), "divisions": list(self.divisions)}

    @classmethod
    def from_description(cls, desc: dict) -> "CellGrid":
        return quantize(Box(lo=tuple(desc["lo"]), hi=tuple(desc["hi"])), desc["divisions"])


def _check_quantization(domain: Box, divisions: Sequence[int]) -> None:
    if len(divisions) != domain.dim:
        raise DimensionMismatchError(f"{len(divisions)} division counts given for a {domain.dim}-D domain")
    if domain.dim == 0:
        raise DimensionMismatchError("Cannot quantize a zero-dimensional box")
    for d, div in enumerate(divisions):
        if div < 1:
            raise DomainError(f"Division count must be >= 1, got {div} in dimension {d}")
        if domain.hi[d] <= domain.lo[d]:
            raise DomainError(f"Grid domain has zero extent in dimension {d}")
    total = math.prod(divisions)
    if total > sys.maxsize:
        raise GridOverflowError(
            f"Grid with divisions {tuple(divisions)} has {total} cells, beyond the addressable {sys.maxsize}"
        )


def expand_divisions(divisions: Divisions, dim: int) -> tuple[int, ...]:
    if isinstance(divisions, (int, np.integer)):
        return (int(divisions),) * dim
    divisions = tuple(int(v) for v in divisions)
    if len(divisions) == 1 and dim > 1:
        return divisions * dim
    return divisions


def quantize(domain: Box, divisions: Divisions) -> CellGrid:
    """Quantize a box into a uniform grid; an int applies to every dimension."""
    divs = expand_divisions(divisions, domain.dim)
    _check_quantization(domain, divs)
    grid = CellGrid(domain=domain, divisions=divs)
    logger.debug(f"Quantized {domain} into {grid.size} cells")
    return grid


def cell_bounds(grid: CellGrid, cell: Union[int, Sequence[int], CellId]) -> Box:
    return grid.cell_bounds(cell)


def locate(grid: CellGrid, point: Sequence[float]) -> CellId:
    return grid.locate(point)


def diameter(grid: CellGrid) -> float:
    """Euclidean diagonal of a cell; every cell of a uniform grid has the same one."""
    return float(np.linalg.norm(grid.widths))
