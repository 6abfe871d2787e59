import logging
from typing import Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.config import SETTINGS
from src.dynamics.model import SystemModel
from src.errors import ConfigurationError, DimensionMismatchError
from src.grid.box import Box
from src.grid.cellgrid import CellGrid

logger = logging.getLogger(__name__)


class InputStrategy(BaseModel):
    """
    How U enters an image: one interval evaluation over the whole box, or a
    uniform partition of U with one evaluation per sub-box.
    """

    model_config = ConfigDict(frozen=True)

    mode: Literal["whole", "split"] = "whole"
    parts: tuple[int, ...] = Field(default=(), description="Sub-boxes per input dimension (split mode)")

    @classmethod
    def whole(cls) -> "InputStrategy":
        return cls(mode="whole")

    @classmethod
    def split(cls, parts: Union[int, Sequence[int]]) -> "InputStrategy":
        parts = (int(parts),) if isinstance(parts, (int, np.integer)) else tuple(int(p) for p in parts)
        if not parts or any(p < 1 for p in parts):
            raise ConfigurationError(f"Input partition counts must be >= 1, got {parts}")
        return cls(mode="split", parts=parts)

    def partition(self, box: Box) -> tuple[np.ndarray, np.ndarray]:
        """(K, m) lower and upper corners of the input sub-boxes."""
        if box.dim == 0 or self.mode == "whole":
            return box.lower[None, :], box.upper[None, :]
        parts = self.parts * box.dim if len(self.parts) == 1 else self.parts
        if len(parts) != box.dim:
            raise DimensionMismatchError(f"{len(parts)} partition counts for a {box.dim}-D input box")
        axes_lo, axes_hi = [], []
        for d, k in enumerate(parts):
            e = box.lo[d] + (box.hi[d] - box.lo[d]) * (np.arange(k + 1, dtype=float) / k)
            e[-1] = box.hi[d]
            axes_lo.append(e[:-1])
            axes_hi.append(e[1:])
        lo = np.stack(np.meshgrid(*axes_lo, indexing="ij"), axis=-1).reshape(-1, box.dim)
        hi = np.stack(np.meshgrid(*axes_hi, indexing="ij"), axis=-1).reshape(-1, box.dim)
        return lo, hi

    def count(self, m: int) -> int:
        if m == 0 or self.mode == "whole":
            return 1
        parts = self.parts * m if len(self.parts) == 1 else self.parts
        return int(np.prod(parts))


def default_strategy(model: SystemModel) -> InputStrategy:
    """Whole U for models affine in u, otherwise a uniform partition of U."""
    if model.m == 0 or model.is_affine_in_inputs():
        return InputStrategy.whole()
    return InputStrategy.split(SETTINGS.default_input_parts)


def image_overapprox(
    model: SystemModel,
    cell: Box,
    inputs: Optional[InputStrategy] = None,
    exogenous: Optional[Box] = None,
    rounding: Optional[bool] = None,
) -> list[Box]:
    """
    Boxes whose union contains {f(x, u) : x in cell, u in U}.

    One box per input sub-box of the strategy. Models with exogenous terms use
    the given box, or the model's own exogenous box.
    """
    if cell.dim != model.n:
        raise DimensionMismatchError(f"Cell of dimension {cell.dim} for model {model.name} with n={model.n}")
    inputs = default_strategy(model) if inputs is None else inputs
    ulo, uhi = inputs.partition(model.input_box)
    k = ulo.shape[0]
    xlo = np.repeat(cell.lower[None, :], k, axis=0)
    xhi = np.repeat(cell.upper[None, :], k, axis=0)
    wlo = whi = None
    if model.p:
        wbox = model.exogenous_box if exogenous is None else exogenous
        wlo = np.repeat(wbox.lower[None, :], k, axis=0)
        whi = np.repeat(wbox.upper[None, :], k, axis=0)
    lo, hi = model.image_bounds(xlo, xhi, ulo, uhi, wlo, whi, rounding=rounding)
    return [Box(lo=tuple(map(float, a)), hi=tuple(map(float, b))) for a, b in zip(lo, hi)]


def image_index_ranges(
    model: SystemModel,
    grid: CellGrid,
    cells: np.ndarray,
    inputs: Optional[InputStrategy] = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Index boxes of the grid met by the images of the given cells.

    Returns (owner, ilo, ihi) with one row per (cell, input sub-box) pair whose
    image meets the grid domain; owner indexes into cells. Models with
    exogenous terms use their static exogenous box.
    """
    inputs = default_strategy(model) if inputs is None else inputs
    cells = np.asarray(cells, dtype=np.int64)
    ulo, uhi = inputs.partition(model.input_box)
    k = ulo.shape[0]
    xlo, xhi = grid.bounds_of(cells)
    owner = np.repeat(np.arange(cells.size, dtype=np.int64), k)
    xlo, xhi = np.repeat(xlo, k, axis=0), np.repeat(xhi, k, axis=0)
    u_lo, u_hi = np.tile(ulo, (cells.size, 1)), np.tile(uhi, (cells.size, 1))
    wlo = whi = None
    if model.p:
        wlo = np.repeat(model.exogenous_box.lower[None, :], owner.size, axis=0)
        whi = np.repeat(model.exogenous_box.upper[None, :], owner.size, axis=0)
    lo, hi = model.image_bounds(xlo, xhi, u_lo, u_hi, wlo, whi)
    ilo, ihi, hit = grid.index_ranges(lo, hi)
    return owner[hit], ilo[hit], ihi[hit]
