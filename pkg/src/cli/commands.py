import json
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy.spatial import cKDTree

from src.cli.config import RunConfig, parse_grouping
from src.cli.pipeline_service import PipelineService, run_bench
from src.cli.plotting import plot_sets
from src.dynamics import available_models, default_grouping, load_model
from src.errors import ConfigurationError, GridMismatchError, UnknownModelError
from src.grid.cellset import CellSet
from src.oracle import audit_invariance
from src.services.artifact_store import ArtifactStore, read_cellset

logger = logging.getLogger(__name__)


class ComparisonReport(BaseModel):
    size_a: int
    size_b: int
    common: int = Field(description="|A ∩ B|")
    only_a: int = Field(description="|A \\ B|")
    only_b: int = Field(description="|B \\ A|")
    distance_a_to_b: Optional[int] = Field(
        default=None, description="Largest Chebyshev index distance from a cell of A \\ B to B"
    )
    distance_b_to_a: Optional[int] = Field(
        default=None, description="Largest Chebyshev index distance from a cell of B \\ A to A"
    )


def _one_sided_distance(extra: CellSet, target: CellSet) -> Optional[int]:
    if extra.is_empty():
        return 0
    if target.is_empty():
        return None
    tree = cKDTree(target.multi_indices())
    distances, _ = tree.query(extra.multi_indices(), k=1, p=np.inf)
    return int(np.max(distances))


def compare_sets(a: CellSet, b: CellSet) -> ComparisonReport:
    """Set sizes and the one-sided boundary discrepancy of two cell sets on one grid."""
    if a.grid != b.grid:
        raise GridMismatchError(f"Cannot compare sets on different grids: {a.grid.describe()} vs {b.grid.describe()}")
    only_a = a - b
    only_b = b - a
    return ComparisonReport(
        size_a=len(a),
        size_b=len(b),
        common=len(a & b),
        only_a=len(only_a),
        only_b=len(only_b),
        distance_a_to_b=_one_sided_distance(only_a, b),
        distance_b_to_a=_one_sided_distance(only_b, a),
    )


def resolve_grouping(model: str, text: Optional[str], options: Optional[dict] = None) -> list[list[int]]:
    """
    Grouping from the command line: "1,2:2,3" (1-based blocks), a named registry
    grouping such as "per-reactor", or the model's default when empty.
    """
    if text and any(c.isdigit() for c in text):
        return parse_grouping(text)
    if text:
        if model not in available_models():
            raise ConfigurationError(f"Named grouping '{text}' needs a registry model, got '{model}'")
        return default_grouping(model, text)
    if model in available_models():
        try:
            return default_grouping(model)
        except UnknownModelError:
            logger.info(f"No named grouping for {model}; grouping its cascade blocks")
    structure = load_model(model, **(options or {})).structure
    if structure is None or len(structure.blocks) < 2:
        return [[0]]
    blocks = len(structure.blocks)
    if blocks == 2:
        return [[0], [1]]
    return [[k, k + 1] for k in range(blocks - 1)]


def run_command(config: RunConfig) -> int:
    """Execute one pipeline run and write its artifacts."""
    try:
        store = ArtifactStore(config.out)
        summary = PipelineService(config, store).run()
        print(summary.model_dump_json(indent=2))
        return summary.exit_code
    except ValueError as e:
        logger.error(f"Run failed: {str(e)}")
        return 1
    except Exception as e:
        logger.error(f"Unexpected error during run: {str(e)}", exc_info=True)
        return 1


def compare_command(path_a: str, path_b: str, out: Optional[str] = None) -> int:
    try:
        report = compare_sets(read_cellset(path_a), read_cellset(path_b))
        logger.info(f"Compared {path_a} and {path_b}: {report.only_a} only in A, {report.only_b} only in B")
        if out:
            ArtifactStore(Path(out).parent).write_model(Path(out).name, report)
        print(report.model_dump_json(indent=2))
        return 0
    except ValueError as e:
        logger.error(f"Comparison failed: {str(e)}")
        return 1
    except Exception as e:
        logger.error(f"Unexpected error during comparison: {str(e)}", exc_info=True)
        return 1


def plot_command(paths: Sequence[str], dims: Sequence[int], output: str, labels: Optional[Sequence[str]] = None) -> int:
    """Plot cell-set files; `dims` are 1-based state dimensions."""
    try:
        labels = list(labels) if labels else [Path(p).stem for p in paths]
        if len(labels) != len(paths):
            raise ValueError(f"Got {len(labels)} labels for {len(paths)} sets")
        sets = [(label, read_cellset(p)) for label, p in zip(labels, paths)]
        plot_sets(sets, [d - 1 for d in dims], output)
        return 0
    except ValueError as e:
        logger.error(f"Plot failed: {str(e)}")
        return 1
    except Exception as e:
        logger.error(f"Unexpected error while plotting: {str(e)}", exc_info=True)
        return 1


def bench_command(config: RunConfig) -> int:
    """Benchmark over every value of `config.divisions`, each applied to all dimensions."""
    try:
        report = run_bench(config, list(config.divisions), ArtifactStore(config.out))
        for r in report.records:
            print(
                f"{r.divisions:>6}  centralized {r.centralized_seconds:10.3f}s  "
                f"distributed {r.distributed_seconds:10.3f}s  cells {r.centralized_cells}/{r.validated_cells}"
            )
        if report.slope is not None:
            print(
                f"log-log slope {report.slope:.2f}, centralized {report.centralized_slope:.2f} "
                f"(largest subsystem dimension {report.reference_exponent})"
            )
        return 0
    except ValueError as e:
        logger.error(f"Bench failed: {str(e)}")
        return 1
    except Exception as e:
        logger.error(f"Unexpected error during bench: {str(e)}", exc_info=True)
        return 1


def audit_command(
    config: RunConfig,
    cover_path: str,
    samples: Optional[int] = None,
    input_grid: Optional[int] = None,
) -> int:
    """Sample the cover stored at `cover_path` and write audit.json to the output directory."""
    try:
        model = load_model(config.model, **config.model_options())
        report = audit_invariance(
            model,
            read_cellset(cover_path),
            samples=samples,
            input_grid=input_grid,
            seed=config.seed,
            workers=config.workers,
        )
        ArtifactStore(config.out).write_model("audit.json", report)
        print(json.dumps(report.model_dump(exclude={"failure_points", "near_boundary"}), indent=2))
        return 0
    except ValueError as e:
        logger.error(f"Audit failed: {str(e)}")
        return 1
    except Exception as e:
        logger.error(f"Unexpected error during audit: {str(e)}", exc_info=True)
        return 1
