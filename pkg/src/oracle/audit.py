import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, computed_field

from src.config import SETTINGS
from src.dynamics.model import SystemModel
from src.errors import ConfigurationError, DimensionMismatchError
from src.grid.box import Box
from src.grid.cellset import CellSet
from src.grid.occupancy import BoxCounter

logger = logging.getLogger(__name__)


class AuditReport(BaseModel):
    """Pointwise invariance check of a cover: sampled states without a keeping input."""

    samples: int = Field(description="States tested")
    failures: int = Field(description="States where no grid input keeps the successor in the cover")
    failure_points: list[tuple[float, ...]] = Field(default_factory=list, description="Exact failing states")
    near_boundary: list[bool] = Field(
        default_factory=list, description="Per failure: an in-domain neighbour of the state's cell lies outside the cover"
    )
    input_grid: int = Field(description="Grid points per input dimension")
    input_points: list[tuple[float, ...]] = Field(default_factory=list, description="The sampled input grid")
    seed: int = 0

    @computed_field
    @property
    def failure_rate(self) -> float:
        return self.failures / self.samples if self.samples else 0.0

    @computed_field
    @property
    def interior_failures(self) -> int:
        return sum(1 for near in self.near_boundary if not near)


def input_grid_points(model: SystemModel, points: int) -> np.ndarray:
    """(G, m) uniform grid over U with `points` values per input dimension; one empty row when m = 0."""
    if model.m == 0:
        return np.zeros((1, 0))
    if points < 1:
        raise ConfigurationError(f"Audit input grid needs at least one point per dimension, got {points}")
    box = model.input_box
    axes = [np.linspace(box.lo[d], box.hi[d], points) if points > 1 else np.array([0.5 * (box.lo[d] + box.hi[d])])
            for d in range(model.m)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, model.m)


def _kept(model: SystemModel, cover: CellSet, x: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    """(N, G) mask: successor of x[i] under inputs[j] lies in the cover."""
    n, g = x.shape[0], inputs.shape[0]
    with np.errstate(all="ignore"):
        fx = model.step(np.repeat(x, g, axis=0), np.tile(inputs, (n, 1)))
    grid = cover.grid
    inside = np.all(np.isfinite(fx), axis=1)
    inside[inside] = grid.contains_points(fx[inside])
    kept = np.zeros(n * g, dtype=bool)
    if inside.any():
        kept[inside] = cover.contains_many(grid.locate_many(fx[inside]))
    return kept.reshape(n, g)


def feasible_input(model: SystemModel, cover: CellSet, x, input_grid: Optional[int] = None) -> Optional[np.ndarray]:
    """First grid input keeping f(x, u) inside the cover, or None."""
    inputs = input_grid_points(model, input_grid or SETTINGS.audit_input_grid)
    kept = _kept(model, cover, np.atleast_2d(np.asarray(x, dtype=float)), inputs)[0]
    hits = np.flatnonzero(kept)
    return inputs[hits[0]] if hits.size else None


def _sample_states(cover: CellSet, samples: int, rng: np.random.Generator, sample_box: Optional[Box]) -> np.ndarray:
    lo, hi = cover.bounds()
    if sample_box is not None:
        lo = np.maximum(lo, sample_box.lower)
        hi = np.minimum(hi, sample_box.upper)
        usable = np.all(lo <= hi, axis=1)
        lo, hi = lo[usable], hi[usable]
        if lo.shape[0] == 0:
            raise ConfigurationError(f"Sample box {sample_box} does not meet the cover")
    picks = rng.integers(0, lo.shape[0], size=samples)
    return rng.uniform(lo[picks], hi[picks])


def audit_invariance(
    model: SystemModel,
    cover: CellSet,
    samples: Optional[int] = None,
    input_grid: Optional[int] = None,
    seed: int = 0,
    sample_box: Optional[Box] = None,
    workers: int = 1,
) -> AuditReport:
    """
    Sample states of the cover and search a uniform input grid for an input
    keeping the successor inside the cover.

    States are drawn by picking cells uniformly, then a uniform point in the
    cell (intersected with `sample_box` when given). Systems without inputs are
    checked for forward invariance.
    """
    if cover.grid.dim != model.n:
        raise DimensionMismatchError(f"Cover of dimension {cover.grid.dim} for model {model.name} with n={model.n}")
    if model.p:
        raise ConfigurationError(f"Model {model.name} has exogenous terms; audit the full model instead")
    if cover.is_empty():
        raise ConfigurationError("Cannot audit an empty cover")
    samples = samples or SETTINGS.audit_samples
    input_grid = input_grid or SETTINGS.audit_input_grid
    start = time.perf_counter()

    rng = np.random.default_rng(seed)
    x = _sample_states(cover, samples, rng, sample_box)
    inputs = input_grid_points(model, input_grid)
    chunk = max(1, SETTINGS.graph_chunk_size // max(1, inputs.shape[0]))
    starts = list(range(0, samples, chunk))

    def run(s: int) -> np.ndarray:
        return _kept(model, cover, x[s:s + chunk], inputs).any(axis=1)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ok = np.concatenate(list(pool.map(run, starts)))
    else:
        ok = np.concatenate([run(s) for s in starts])

    failed = x[~ok]
    near = np.zeros(failed.shape[0], dtype=bool)
    if failed.shape[0]:
        grid = cover.grid
        idx = grid.unravel(grid.locate_many(failed))
        ilo = np.maximum(idx - 1, 0)
        ihi = np.minimum(idx + 1, np.asarray(grid.divisions) - 1)
        counts = BoxCounter(grid, cover.indices).count(ilo, ihi)
        # Neighbours outside the domain do not count
        near = counts < np.prod(ihi - ilo + 1, axis=1)

    report = AuditReport(
        samples=samples,
        failures=int(failed.shape[0]),
        failure_points=[tuple(map(float, p)) for p in failed],
        near_boundary=near.tolist(),
        input_grid=input_grid,
        input_points=[tuple(map(float, u)) for u in inputs],
        seed=seed,
    )
    logger.info(
        f"Audit of {model.name}: {report.failures} of {samples} states failed "
        f"({report.interior_failures} away from the boundary, {time.perf_counter() - start:.2f}s)"
    )
    return report
