import json
import logging
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field

from src.grid.cellgrid import CellGrid
from src.grid.cellset import CellSet
from src.symbolic_image.graph import SymbolicImage

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class ArtifactHeader(BaseModel):
    """First line of every cell-set and graph file."""

    kind: Literal["cellset", "graph"]
    grid: dict = Field(description="Grid descriptor: lo, hi, divisions")
    count: Optional[int] = Field(default=None, description="Cells in a cell-set file")
    edge_count: Optional[int] = Field(default=None, description="Edges in a graph file")
    partial: bool = Field(default=False, description="Written by a run that did not finish")


def _read_header(path: Path, kind: str) -> tuple[ArtifactHeader, list[str]]:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"Artifact {path} is empty")
    header = ArtifactHeader.model_validate_json(lines[0])
    if header.kind != kind:
        raise ValueError(f"Artifact {path} holds a {header.kind}, expected a {kind}")
    return header, lines[1:]


def read_cellset(path: PathLike) -> CellSet:
    """Load a cell-set file written by ArtifactStore.write_cellset."""
    path = Path(path)
    try:
        header, body = _read_header(path, "cellset")
        grid = CellGrid.from_description(header.grid)
        cells = CellSet(grid, np.array([int(line) for line in body if line.strip()], dtype=np.int64))
        if header.count is not None and len(cells) != header.count:
            raise ValueError(f"Cell-set {path} declares {header.count} cells but lists {len(cells)}")
        if header.partial:
            logger.warning(f"Cell-set {path} comes from an unfinished run")
        return cells
    except Exception as e:
        logger.error(f"Failed to read cell set {path}: {str(e)}")
        raise


def read_graph(path: PathLike) -> SymbolicImage:
    """Load a graph file written by ArtifactStore.write_graph."""
    path = Path(path)
    try:
        header, body = _read_header(path, "graph")
        grid = CellGrid.from_description(header.grid)
        src: list[int] = []
        dst: list[int] = []
        for line in body:
            if not line.strip():
                continue
            source, _, targets = line.partition(":")
            successors = [int(t) for t in targets.split()]
            src += [int(source)] * len(successors)
            dst += successors
        graph = SymbolicImage.from_edges(grid, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64))
        if header.edge_count is not None and graph.num_edges != header.edge_count:
            raise ValueError(f"Graph {path} declares {header.edge_count} edges but lists {graph.num_edges}")
        return graph
    except Exception as e:
        logger.error(f"Failed to read graph {path}: {str(e)}")
        raise


class ArtifactStore:
    """Reads and writes run artifacts under one output directory."""

    SUMMARY_FILE = "summary.jsonl"

    def __init__(self, root: PathLike, partial: bool = False):
        self.root = Path(root)
        self.partial = partial
        self.root.mkdir(parents=True, exist_ok=True)
        logger.info(f"Writing artifacts to {self.root}")

    def path(self, name: str) -> Path:
        return self.root / name

    def write_cellset(self, name: str, cells: CellSet) -> Path:
        path = self.path(name)
        try:
            header = ArtifactHeader(kind="cellset", grid=cells.grid.describe(), count=len(cells), partial=self.partial)
            lines = [header.model_dump_json(exclude_none=True)] + [str(int(i)) for i in cells.indices]
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            logger.info(f"Wrote {len(cells)} cells to {path}")
            return path
        except Exception as e:
            logger.error(f"Failed to write cell set {path}: {str(e)}")
            raise

    def write_graph(self, name: str, graph: SymbolicImage) -> Path:
        path = self.path(name)
        try:
            header = ArtifactHeader(
                kind="graph", grid=graph.grid.describe(), edge_count=graph.num_edges, partial=self.partial
            )
            with path.open("w", encoding="utf-8", newline="\n") as fh:
                fh.write(header.model_dump_json(exclude_none=True) + "\n")
                for source, successors in graph.iter_successors():
                    fh.write(f"{source}: {' '.join(str(int(s)) for s in successors)}\n")
            logger.info(f"Wrote graph with {graph.num_edges} edges to {path}")
            return path
        except Exception as e:
            logger.error(f"Failed to write graph {path}: {str(e)}")
            raise

    def write_bundle(self, name: str, cells: CellSet, graph: Optional[SymbolicImage] = None) -> Path:
        """Subsystem solution bundle: a directory with the grid descriptor, the cell set and optionally the graph."""
        bundle = self.path(name)
        bundle.mkdir(parents=True, exist_ok=True)
        (bundle / "grid.json").write_text(json.dumps(cells.grid.describe()) + "\n", encoding="utf-8")
        ArtifactStore(bundle, self.partial).write_cellset("cells.txt", cells)
        if graph is not None:
            ArtifactStore(bundle, self.partial).write_graph("graph.txt", graph)
        return bundle

    def read_bundle(self, name: str) -> tuple[CellSet, Optional[SymbolicImage]]:
        bundle = self.path(name)
        cells = read_cellset(bundle / "cells.txt")
        graph_path = bundle / "graph.txt"
        graph = read_graph(graph_path) if graph_path.exists() else None
        return cells, graph

    def write_model(self, name: str, record: BaseModel) -> Path:
        """Any pydantic record (validation log, audit report, comparison) as indented JSON."""
        path = self.path(name)
        path.write_text(record.model_dump_json(indent=2) + "\n", encoding="utf-8")
        logger.info(f"Wrote {type(record).__name__} to {path}")
        return path

    def append_summary(self, record: BaseModel) -> Path:
        """Append one record to the line-oriented run summary."""
        path = self.path(self.SUMMARY_FILE)
        with path.open("a", encoding="utf-8", newline="\n") as fh:
            fh.write(record.model_dump_json() + "\n")
        return path

    def read_summaries(self) -> list[dict]:
        path = self.path(self.SUMMARY_FILE)
        if not path.exists():
            return []
        return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]

    def list_artifacts(self) -> list[str]:
        return sorted(str(p.relative_to(self.root)) for p in self.root.rglob("*") if p.is_file())
