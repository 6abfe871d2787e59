import logging
import time
from typing import Callable, Optional, Sequence, TypeVar

import numpy as np
from pydantic import BaseModel, Field

from src.cli.config import RunConfig
from src.decomposition.subsystem import Decomposition, decompose
from src.distributed.passes import SubsystemSolution, decentralized_pass, distributed_pass, subsystem_grids
from src.dynamics.loader import load_model
from src.dynamics.model import SystemModel
from src.errors import ConfigurationError, GridMismatchError
from src.grid.cellgrid import expand_divisions, quantize
from src.grid.cellset import CellSet
from src.invariance.analysis import solve_gis
from src.reconstruct.cover import FullCover, flag_cover, reconstruct
from src.reconstruct.validation import validate
from src.services.artifact_store import ArtifactStore

logger = logging.getLogger(__name__)

T = TypeVar("T")


class StageSummary(BaseModel):
    stage: str = Field(description="Pipeline stage name")
    cells: int = Field(description="Cells produced by the stage")
    seconds: float = Field(description="Wall-clock time of the stage")
    subsystem: Optional[int] = Field(default=None, description="1-based subsystem index for per-subsystem stages")


class RunSummary(BaseModel):
    model: str
    mode: str
    divisions: list[int]
    grouping: Optional[list[list[int]]] = None
    workers: int = 1
    stages: list[StageSummary] = Field(default_factory=list)
    partial: bool = False
    empty: bool = False
    error: Optional[str] = None

    def cells(self, stage: str) -> Optional[int]:
        for s in self.stages:
            if s.stage == stage and s.subsystem is None:
                return s.cells
        return None

    @property
    def exit_code(self) -> int:
        if self.error:
            return 1
        return 2 if self.empty else 0


class BenchRecord(BaseModel):
    divisions: int
    centralized_seconds: float
    distributed_seconds: float
    centralized_cells: int
    validated_cells: int


class BenchReport(BaseModel):
    model: str
    records: list[BenchRecord] = Field(default_factory=list)
    slope: Optional[float] = Field(default=None, description="Fitted log-log slope of distributed time against divisions")
    centralized_slope: Optional[float] = Field(
        default=None, description="Fitted log-log slope of centralized time against divisions"
    )
    reference_exponent: int = Field(description="Largest subsystem dimension")
    speedup: Optional[float] = Field(default=None, description="Centralized over distributed time at the finest grid")


class PipelineService:
    """Runs one configured pipeline, stage by stage, writing artifacts as it goes."""

    def __init__(self, config: RunConfig, store: Optional[ArtifactStore] = None):
        self.config = config
        self.store = store
        self.summary = RunSummary(
            model=config.model,
            mode=config.mode,
            divisions=list(config.divisions),
            grouping=config.grouping,
            workers=config.workers,
        )
        self._model: Optional[SystemModel] = None

    @property
    def model(self) -> SystemModel:
        if self._model is None:
            self._model = load_model(self.config.model, **self.config.model_options())
        return self._model

    def _timed(self, stage: str, fn: Callable[[], T], count: Callable[[T], int], subsystem: Optional[int] = None) -> T:
        start = time.perf_counter()
        result = fn()
        seconds = time.perf_counter() - start
        self.summary.stages.append(StageSummary(stage=stage, cells=count(result), seconds=seconds, subsystem=subsystem))
        logger.info(f"Stage {stage}: {count(result)} cells in {seconds:.2f}s")
        return result

    def _record_solutions(self, stage: str, solutions: Sequence[SubsystemSolution]) -> None:
        for sol in solutions:
            self.summary.stages.append(
                StageSummary(stage=stage, cells=len(sol.cells), seconds=sol.seconds, subsystem=sol.index + 1)
            )
            if self.store:
                graph = sol.graph if self.config.export_graphs else None
                self.store.write_bundle(f"S{sol.index + 1}-{stage}", sol.cells, graph)

    def decomposition(self) -> Decomposition:
        return decompose(self.model, grouping=self.config.grouping)

    def load_solutions(self, d: Decomposition, stage: str) -> list[SubsystemSolution]:
        """Read back the subsystem bundles `S<i>-<stage>` written by an earlier run."""
        if self.store is None:
            raise ConfigurationError("Loading subsystem solutions needs an artifact store")
        solutions = []
        for subsystem, grid in zip(d.subsystems, subsystem_grids(d, self.config.divisions)):
            name = f"S{subsystem.index + 1}-{stage}"
            cells, graph = self.store.read_bundle(name)
            if cells.grid != grid:
                raise GridMismatchError(f"Bundle {name} is on {cells.grid.describe()}, expected {grid.describe()}")
            solutions.append(SubsystemSolution(subsystem, cells.grid, graph, cells, stage))
        logger.info(f"Loaded {len(solutions)} {stage} solutions from {self.store.root}")
        return solutions

    # ---- stages -------------------------------------------------------------

    def centralized(self) -> CellSet:
        grid = quantize(self.model.state_box, expand_divisions(self.config.divisions, self.model.n))

        def solve():
            graph, cells = solve_gis(self.model, grid, self.config.input_strategy(), workers=self.config.workers)
            if self.store and self.config.export_graphs:
                self.store.write_graph("centralized.graph", graph)
            return cells

        cells = self._timed("centralized", solve, len)
        if self.store:
            self.store.write_cellset("centralized.cells", cells)
        return cells

    def decentralized(self, d: Decomposition) -> list[SubsystemSolution]:
        solutions = self._timed(
            "decentralized",
            lambda: decentralized_pass(d, self.config.divisions, self.config.input_strategy(), self.config.workers),
            lambda sols: sum(len(s.cells) for s in sols),
        )
        self._record_solutions("decentralized", solutions)
        return solutions

    def distributed(self, d: Decomposition, seed: Optional[Sequence[SubsystemSolution]]) -> list[SubsystemSolution]:
        solutions = self._timed(
            "distributed",
            lambda: distributed_pass(d, self.config.divisions, seed, self.config.input_strategy(), self.config.workers),
            lambda sols: sum(len(s.cells) for s in sols),
        )
        self._record_solutions("distributed", solutions)
        return solutions

    def reconstructed(self, solutions: Sequence[SubsystemSolution], d: Decomposition) -> FullCover:
        cover = self._timed("reconstructed", lambda: reconstruct(solutions, d), len)
        if self.store:
            self.store.write_cellset("reconstructed.cells", cover.cells)
        return cover

    def validated(self, solutions: Sequence[SubsystemSolution], cover: FullCover) -> FullCover:
        flags = self._timed("flagged", lambda: flag_cover(solutions, cover), len)
        result = self._timed(
            "validated",
            lambda: validate(
                self.model,
                cover,
                flags,
                self.config.input_strategy(),
                mode=self.config.validation_mode,
                workers=self.config.workers,
            ),
            len,
        )
        if self.store:
            self.store.write_cellset("flagged.cells", flags)
            self.store.write_cellset("validated.cells", result.cells)
            self.store.write_model("validation-log.json", result.log)
        return result

    # ---- orchestration ------------------------------------------------------

    def run(self) -> RunSummary:
        """Execute the configured mode; the summary is appended to the store even when a stage fails."""
        mode = self.config.mode
        logger.info(f"Running {mode} pipeline for {self.config.model} at divisions {self.config.divisions}")
        try:
            if mode == "centralized":
                self.summary.empty = self.centralized().is_empty()
            else:
                d = self.decomposition()
                self.summary.grouping = [list(g) for g in d.grouping]
                seed = None
                if mode == "decentralized" or self.config.seeded:
                    seed = self.decentralized(d)
                solutions = seed
                if mode in ("distributed", "full"):
                    solutions = self.distributed(d, seed if self.config.seeded else None)
                cover = self.reconstructed(solutions, d)
                self.summary.empty = cover.is_empty()
                if mode == "full":
                    self.summary.empty = self.validated(solutions, cover).is_empty()
        except Exception as e:
            self.summary.partial = True
            self.summary.error = str(e)
            logger.error(f"Pipeline failed during {mode} run of {self.config.model}: {str(e)}")
            if self.store:
                self.store.partial = True
                self.store.append_summary(self.summary)
            raise
        if self.summary.empty:
            logger.warning(f"The {mode} run of {self.config.model} produced an empty set")
        if self.store:
            self.store.append_summary(self.summary)
        return self.summary


def _loglog_slope(records: Sequence[BenchRecord], seconds: Sequence[float]) -> float:
    x = np.log([r.divisions for r in records])
    y = np.log([max(s, 1e-9) for s in seconds])
    return float(np.polyfit(x, y, 1)[0])


def run_bench(base: RunConfig, divisions: Sequence[int], store: Optional[ArtifactStore] = None) -> BenchReport:
    """Time the centralized and the full distributed pipeline over a range of grid resolutions."""
    records: list[BenchRecord] = []
    reference = 0
    for div in divisions:
        centralized = PipelineService(base.model_copy(update={"mode": "centralized", "divisions": (div,)}))
        central_cells = centralized.centralized()
        full = PipelineService(base.model_copy(update={"mode": "full", "divisions": (div,)}))
        summary = full.run()
        reference = max(s.n for s in full.decomposition().subsystems)
        stages = ("decentralized", "distributed", "reconstructed", "flagged", "validated")
        records.append(
            BenchRecord(
                divisions=div,
                centralized_seconds=centralized.summary.stages[0].seconds,
                distributed_seconds=sum(s.seconds for s in summary.stages if s.stage in stages and s.subsystem is None),
                centralized_cells=len(central_cells),
                validated_cells=summary.cells("validated") or 0,
            )
        )
        logger.info(
            f"Bench {base.model} at {div}: centralized {records[-1].centralized_seconds:.2f}s, "
            f"distributed {records[-1].distributed_seconds:.2f}s"
        )

    report = BenchReport(model=base.model, records=records, reference_exponent=reference)
    if len(records) >= 2:
        report.slope = _loglog_slope(records, [r.distributed_seconds for r in records])
        report.centralized_slope = _loglog_slope(records, [r.centralized_seconds for r in records])
    if records and records[-1].distributed_seconds > 0:
        report.speedup = records[-1].centralized_seconds / records[-1].distributed_seconds
    if store:
        for record in records:
            store.append_summary(record)
        store.write_model("bench.json", report)
    return report
