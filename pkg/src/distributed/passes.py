import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

from src.decomposition.subsystem import Decomposition, Subsystem
from src.distributed.missing import MissingStateTable, estimate_missing
from src.grid.cellgrid import CellGrid, Divisions, expand_divisions, quantize
from src.grid.cellset import CellSet
from src.invariance.analysis import solve_gis
from src.symbolic_image.graph import SymbolicImage
from src.symbolic_image.image import InputStrategy

logger = logging.getLogger(__name__)


class SubsystemSolution:
    """Graph and non-leaving cells R_i of one subsystem."""

    def __init__(
        self,
        subsystem: Subsystem,
        grid: CellGrid,
        graph: SymbolicImage,
        cells: CellSet,
        pass_name: str,
        missing: Optional[MissingStateTable] = None,
        seconds: float = 0.0,
    ):
        self.subsystem = subsystem
        self.grid = grid
        self.graph = graph
        self.cells = cells
        self.pass_name = pass_name
        self.missing = missing
        self.seconds = seconds

    @property
    def index(self) -> int:
        return self.subsystem.index

    def __repr__(self) -> str:
        return (
            f"SubsystemSolution(S{self.index + 1}, {self.pass_name}, {len(self.cells)} of {self.grid.size} cells)"
        )


def global_grid(decomposition: Decomposition, divisions: Divisions) -> CellGrid:
    return quantize(decomposition.model.state_box, expand_divisions(divisions, decomposition.model.n))


def subsystem_grids(decomposition: Decomposition, divisions: Divisions) -> list[CellGrid]:
    """Subsystem grids are projections of one global quantization, so overlaps match by construction."""
    full = global_grid(decomposition, divisions)
    return [full.project(s.owned) for s in decomposition.subsystems]


def _solve(
    subsystem: Subsystem,
    grid: CellGrid,
    pass_name: str,
    inputs: Optional[InputStrategy],
    missing: Optional[MissingStateTable] = None,
    sources: Optional[CellSet] = None,
    workers: int = 1,
) -> SubsystemSolution:
    start = time.perf_counter()
    graph, cells = solve_gis(subsystem.model, grid, inputs, exogenous=missing, sources=sources, workers=workers)
    seconds = time.perf_counter() - start
    if cells.is_empty():
        logger.warning(f"{pass_name} pass: subsystem {subsystem.index + 1} ({subsystem.model.name}) has an empty R")
    else:
        logger.info(
            f"{pass_name} pass: subsystem {subsystem.index + 1} keeps {len(cells)} of {grid.size} cells "
            f"({seconds:.2f}s)"
        )
    return SubsystemSolution(subsystem, grid, graph, cells, pass_name, missing, seconds)


def decentralized_pass(
    decomposition: Decomposition,
    divisions: Divisions,
    inputs: Optional[InputStrategy] = None,
    workers: int = 1,
) -> list[SubsystemSolution]:
    """
    Solve every subsystem with its missing states fixed to the projection of X.

    The subsystems are independent of each other and run concurrently.
    """
    grids = subsystem_grids(decomposition, divisions)
    subsystems = decomposition.subsystems
    outer = max(1, min(workers, len(subsystems)))
    inner = max(1, workers // outer)
    logger.info(f"Decentralized pass over {len(subsystems)} subsystems ({outer} parallel, {inner} workers each)")

    def run(k: int) -> SubsystemSolution:
        return _solve(subsystems[k], grids[k], "decentralized", inputs, workers=inner)

    if outer > 1:
        with ThreadPoolExecutor(max_workers=outer) as pool:
            return list(pool.map(run, range(len(subsystems))))
    return [run(k) for k in range(len(subsystems))]


def distributed_pass(
    decomposition: Decomposition,
    divisions: Divisions,
    seed: Optional[Sequence[SubsystemSolution]] = None,
    inputs: Optional[InputStrategy] = None,
    workers: int = 1,
) -> list[SubsystemSolution]:
    """
    Solve the subsystems in chain order, each with per-cell missing-state ranges
    estimated from the solution of its upstream neighbour.

    With a seed (typically the decentralized solutions) graph construction is
    restricted to the seed's cells.
    """
    grids = subsystem_grids(decomposition, divisions)
    solutions: list[SubsystemSolution] = []
    for subsystem, grid in zip(decomposition.subsystems, grids):
        sources = None
        if seed is not None:
            sources = seed[subsystem.index].cells
        missing = None
        if subsystem.missing:
            overlap = decomposition.overlap_into(subsystem.index)
            missing = estimate_missing(solutions[-1], grid, overlap)
        solutions.append(_solve(subsystem, grid, "distributed", inputs, missing, sources, workers))
    return solutions
