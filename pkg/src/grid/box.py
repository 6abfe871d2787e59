from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from src.errors import DimensionMismatchError, DomainError


class Box(BaseModel):
    """Axis-aligned box [lo, hi] in R^n. A zero-dimensional box is allowed (m = 0 inputs)."""

    model_config = ConfigDict(frozen=True)

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    @model_validator(mode="after")
    def _check_bounds(self) -> "Box":
        if len(self.lo) != len(self.hi):
            raise DimensionMismatchError(
                f"Box bounds have different lengths: {len(self.lo)} vs {len(self.hi)}"
            )
        for k, (a, b) in enumerate(zip(self.lo, self.hi)):
            if not (math.isfinite(a) and math.isfinite(b)):
                raise DomainError(f"Box bound in dimension {k} is not finite: [{a}, {b}]")
            if a > b:
                raise DomainError(f"Box is empty in dimension {k}: lo={a} > hi={b}")
        return self

    @classmethod
    def from_bounds(cls, bounds: Sequence[Sequence[float]]) -> "Box":
        """Build a box from per-dimension (lo, hi) pairs."""
        return cls(lo=tuple(float(b[0]) for b in bounds), hi=tuple(float(b[1]) for b in bounds))

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int) -> "Box":
        return cls(lo=(float(lo),) * dim, hi=(float(hi),) * dim)

    @classmethod
    def point(cls, p: Sequence[float]) -> "Box":
        return cls(lo=tuple(float(v) for v in p), hi=tuple(float(v) for v in p))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.lo, dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.hi, dtype=float)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, point: Sequence[float], tol: float = 0.0) -> bool:
        p = np.asarray(point, dtype=float)
        if p.shape != (self.dim,):
            raise DimensionMismatchError(f"Point has shape {p.shape}, box dimension is {self.dim}")
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))

    def contains_box(self, other: "Box", tol: float = 0.0) -> bool:
        if other.dim != self.dim:
            raise DimensionMismatchError(f"Box dimensions differ: {other.dim} vs {self.dim}")
        return bool(np.all(other.lower >= self.lower - tol) and np.all(other.upper <= self.upper + tol))

    def project(self, indices: Sequence[int]) -> "Box":
        return project_box(self, indices)

    def product(self, other: "Box") -> "Box":
        return Box(lo=self.lo + other.lo, hi=self.hi + other.hi)

    def inflate(self, tol: float) -> "Box":
        return Box(lo=tuple(a - tol for a in self.lo), hi=tuple(b + tol for b in self.hi))

    def __str__(self) -> str:
        return " x ".join(f"[{a:g}, {b:g}]" for a, b in zip(self.lo, self.hi)) or "[]"


def project_box(x: Box, indices: Sequence[int]) -> Box:
    """Coordinate projection of a box onto the given (0-based) dimensions."""
    for i in indices:
        if not 0 <= i < x.dim:
            raise DimensionMismatchError(f"Projection index {i} out of range for a {x.dim}-D box")
    return Box(lo=tuple(x.lo[i] for i in indices), hi=tuple(x.hi[i] for i in indices))
