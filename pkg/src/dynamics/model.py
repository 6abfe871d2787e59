from __future__ import annotations

import logging
from typing import Any, Optional, Sequence

import numpy as np
import sympy as sp
from pydantic import BaseModel, ConfigDict, PrivateAttr, model_validator

from src.config import SETTINGS
from src.dynamics.interval import compile_interval
from src.errors import DimensionMismatchError, DomainError, ModelDefinitionError, NonFiniteResultError
from src.grid.box import Box

logger = logging.getLogger(__name__)

EMPTY_BOX = Box(lo=(), hi=())


class CascadeStructure(BaseModel):
    """
    Ordered state blocks of a cascade x_i+ = f_i(x_i, u_i) + g_i(x_{i-1}).

    Indices are 0-based. couplings[i] lists the indices of block i-1 that block
    i reads; couplings[0] is always empty.
    """

    model_config = ConfigDict(frozen=True)

    blocks: tuple[tuple[int, ...], ...]
    couplings: tuple[tuple[int, ...], ...] = ()

    @model_validator(mode="before")
    @classmethod
    def _default_couplings(cls, data: Any) -> Any:
        # Without explicit couplings every block reads all of its upstream block
        if isinstance(data, dict) and not data.get("couplings") and data.get("blocks"):
            blocks = [tuple(b) for b in data["blocks"]]
            data = {**data, "couplings": [()] + blocks[:-1]}
        return data

    @model_validator(mode="after")
    def _check_blocks(self) -> "CascadeStructure":
        if not self.blocks or any(len(b) == 0 for b in self.blocks):
            raise ModelDefinitionError("Cascade blocks must be non-empty")
        flat = [i for b in self.blocks for i in b]
        if sorted(flat) != list(range(len(flat))):
            raise ModelDefinitionError(f"Cascade blocks {self.blocks} do not partition the state indices")
        if len(self.couplings) != len(self.blocks):
            raise ModelDefinitionError("One coupling entry per block is required")
        if self.couplings[0]:
            raise ModelDefinitionError("The first block cannot read an upstream block")
        for i in range(1, len(self.blocks)):
            if not set(self.couplings[i]) <= set(self.blocks[i - 1]):
                raise ModelDefinitionError(f"Block {i} couples to indices outside block {i - 1}")
        return self

    @classmethod
    def single(cls, n: int) -> "CascadeStructure":
        return cls(blocks=(tuple(range(n)),))

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    def block_of(self, index: int) -> int:
        for k, block in enumerate(self.blocks):
            if index in block:
                return k
        raise DimensionMismatchError(f"State index {index} is not in any block")


class _ExpressionModel(BaseModel):
    """Shared shape of discrete maps and vector fields: equations over states, inputs and exogenous terms."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    states: tuple[sp.Symbol, ...]
    inputs: tuple[sp.Symbol, ...] = ()
    exogenous: tuple[sp.Symbol, ...] = ()
    equations: tuple[sp.Expr, ...]
    state_box: Box
    input_box: Box = EMPTY_BOX
    exogenous_box: Box = EMPTY_BOX
    structure: Optional[CascadeStructure] = None

    _pointwise: Any = PrivateAttr(default=None)
    _interval: Any = PrivateAttr(default=None)
    _interval_rounded: Any = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_shapes(self):
        n = len(self.states)
        if n < 1:
            raise ModelDefinitionError("A model needs at least one state")
        if len(self.equations) != n:
            raise DimensionMismatchError(f"{len(self.equations)} equations for {n} states")
        for label, syms, box in (
            ("state", self.states, self.state_box),
            ("input", self.inputs, self.input_box),
            ("exogenous", self.exogenous, self.exogenous_box),
        ):
            if len(syms) != box.dim:
                raise DimensionMismatchError(f"{len(syms)} {label} symbols but a {box.dim}-D {label} box")
        known = set(self.variables)
        if len(known) != len(self.variables):
            raise ModelDefinitionError("State, input and exogenous symbols must be distinct")
        for k, eq in enumerate(self.equations):
            unknown = eq.free_symbols - known
            if unknown:
                raise ModelDefinitionError(f"Equation {k} uses undeclared symbols {sorted(map(str, unknown))}")
        if self.structure is not None and self.structure.n != n:
            raise ModelDefinitionError(f"Cascade structure covers {self.structure.n} states, model has {n}")
        return self

    def model_post_init(self, __context: Any) -> None:
        variables = self.variables
        self._pointwise = [sp.lambdify(variables, eq, modules="numpy") for eq in self.equations]
        self._interval = [compile_interval(eq, variables) for eq in self.equations]
        self._interval_rounded = [compile_interval(eq, variables, rounding=True) for eq in self.equations]

    @property
    def variables(self) -> tuple[sp.Symbol, ...]:
        return self.states + self.inputs + self.exogenous

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def m(self) -> int:
        return len(self.inputs)

    @property
    def p(self) -> int:
        return len(self.exogenous)

    def _columns(self, x: np.ndarray, u: np.ndarray, w: np.ndarray) -> list[np.ndarray]:
        return [x[:, k] for k in range(self.n)] + [u[:, k] for k in range(self.m)] + [w[:, k] for k in range(self.p)]

    def _batch(self, x, u=None, w=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        rows = x.shape[0]
        u = _as_rows(u, rows)
        w = _as_rows(w, rows)
        if x.shape[1] != self.n:
            raise DimensionMismatchError(f"State has {x.shape[1]} entries, model {self.name} has n={self.n}")
        if u.shape[1] != self.m or w.shape[1] != self.p:
            raise DimensionMismatchError(
                f"Model {self.name} takes m={self.m} inputs and p={self.p} exogenous values, "
                f"got {u.shape[1]} and {w.shape[1]}"
            )
        if u.shape[0] == 1 and rows > 1:
            u = np.repeat(u, rows, axis=0)
        if w.shape[0] == 1 and rows > 1:
            w = np.repeat(w, rows, axis=0)
        if u.shape[0] != rows or w.shape[0] != rows:
            raise DimensionMismatchError(f"Batch sizes differ: {rows} states, {u.shape[0]} inputs, {w.shape[0]} exogenous")
        return x, u, w

    def rhs(self, x, u=None, w=None) -> np.ndarray:
        """Evaluate the equations on a batch; rows of x, u and w are paired."""
        x, u, w = self._batch(x, u, w)
        cols = self._columns(x, u, w)
        out = np.empty(x.shape, dtype=float)
        for k, fn in enumerate(self._pointwise):
            out[:, k] = np.broadcast_to(fn(*cols), (x.shape[0],))
        return out

    def rhs_bounds(
        self,
        xlo: np.ndarray,
        xhi: np.ndarray,
        ulo: Optional[np.ndarray] = None,
        uhi: Optional[np.ndarray] = None,
        wlo: Optional[np.ndarray] = None,
        whi: Optional[np.ndarray] = None,
        rounding: bool = False,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Natural interval extension of the equations over batches of boxes, rounded outward at every node on request."""
        xlo, ulo, wlo = self._batch(xlo, ulo, wlo)
        xhi, uhi, whi = self._batch(xhi, uhi, whi)
        lo = np.concatenate([xlo, ulo, wlo], axis=1)
        hi = np.concatenate([xhi, uhi, whi], axis=1)
        out_lo = np.empty(xlo.shape, dtype=float)
        out_hi = np.empty(xlo.shape, dtype=float)
        for k, fn in enumerate(self._interval_rounded if rounding else self._interval):
            out_lo[:, k], out_hi[:, k] = fn(lo, hi)
        return out_lo, out_hi

    def check_state(self, x: np.ndarray, tol: Optional[float] = None) -> None:
        tol = SETTINGS.state_tolerance if tol is None else tol
        x = np.atleast_2d(x)
        bad = np.any((x < self.state_box.lower - tol) | (x > self.state_box.upper + tol), axis=1)
        if np.any(bad):
            raise DomainError(f"State {x[bad][0].tolist()} lies outside X = {self.state_box} (tolerance {tol})")

    def check_input(self, u: np.ndarray, tol: Optional[float] = None) -> None:
        if self.m == 0:
            return
        tol = SETTINGS.state_tolerance if tol is None else tol
        u = np.atleast_2d(u)
        bad = np.any((u < self.input_box.lower - tol) | (u > self.input_box.upper + tol), axis=1)
        if np.any(bad):
            raise DomainError(f"Input {u[bad][0].tolist()} lies outside U = {self.input_box}")


class SystemModel(_ExpressionModel):
    """Discrete-time controlled map x+ = f(x, u) with box constraints X and U."""

    def step(self, x, u=None, w=None) -> np.ndarray:
        return self.rhs(x, u, w)

    def image_bounds(self, xlo, xhi, ulo=None, uhi=None, wlo=None, whi=None, rounding: Optional[bool] = None):
        """
        Enclosure of f over batches of (state box, input box, exogenous box).

        Every returned box contains f(x, u, w) for all points of its row's boxes.
        With rounding every arithmetic step is rounded outward, so the
        enclosure also holds for the floating-point evaluation.
        """
        rounding = SETTINGS.outward_rounding if rounding is None else rounding
        return self.rhs_bounds(xlo, xhi, ulo, uhi, wlo, whi, rounding=rounding)

    def is_affine_in_inputs(self) -> bool:
        """True when no equation has a nonzero second derivative in the inputs."""
        for eq in self.equations:
            for u in self.inputs:
                d = sp.diff(eq, u)
                if any(s in d.free_symbols for s in self.inputs):
                    return False
        return True


class OdeModel(_ExpressionModel):
    """Continuous-time vector field dx/dt = f(x, u) with the same constraint shape as SystemModel."""

    def vector_field(self, x, u=None, w=None) -> np.ndarray:
        return self.rhs(x, u, w)


def _as_rows(values, rows: int) -> np.ndarray:
    if values is None:
        return np.zeros((rows, 0))
    arr = np.asarray(values, dtype=float)
    if arr.ndim < 2:
        arr = arr.reshape(1, -1)
    return arr


def evaluate(model: SystemModel, x: Sequence[float], u: Sequence[float] = (), w: Optional[Sequence[float]] = None) -> np.ndarray:
    """
    Evaluate f(x, u) at a single point.

    Raises:
        DimensionMismatchError: wrong vector lengths
        DomainError: x or u outside the constraint boxes (beyond the tolerance)
        NonFiniteResultError: the map returned inf or nan
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if x.size != model.n:
        raise DimensionMismatchError(f"State has {x.size} entries, model {model.name} has n={model.n}")
    if u.size != model.m:
        raise DimensionMismatchError(f"Input has {u.size} entries, model {model.name} has m={model.m}")
    model.check_state(x)
    model.check_input(u)
    if model.p and w is None:
        raise DimensionMismatchError(f"Model {model.name} needs {model.p} exogenous values")
    w_arr = None if w is None else np.asarray(w, dtype=float).reshape(1, -1)
    with np.errstate(all="ignore"):
        result = model.step(x[None, :], u[None, :], w_arr)[0]
    if not np.all(np.isfinite(result)):
        raise NonFiniteResultError(f"Model {model.name} returned {result.tolist()} at x={x.tolist()}, u={u.tolist()}")
    return result


def evaluate_interval(model: SystemModel, xbox: Box, ubox: Optional[Box] = None, wbox: Optional[Box] = None) -> Box:
    """Natural interval enclosure of f(xbox, ubox) (no outward rounding)."""
    ubox = model.input_box if ubox is None else ubox
    if xbox.dim != model.n or ubox.dim != model.m:
        raise DimensionMismatchError(
            f"Boxes of dimension ({xbox.dim}, {ubox.dim}) do not match model {model.name} (n={model.n}, m={model.m})"
        )
    if model.p:
        wbox = model.exogenous_box if wbox is None else wbox
        wlo, whi = wbox.lower[None, :], wbox.upper[None, :]
    else:
        wlo = whi = None
    lo, hi = model.image_bounds(
        xbox.lower[None, :], xbox.upper[None, :], ubox.lower[None, :], ubox.upper[None, :], wlo, whi, rounding=False
    )
    return Box(lo=tuple(float(v) for v in lo[0]), hi=tuple(float(v) for v in hi[0]))
