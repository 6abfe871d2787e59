from .commands import (
    ComparisonReport,
    audit_command,
    bench_command,
    compare_command,
    compare_sets,
    plot_command,
    resolve_grouping,
    run_command,
)
from .config import RUN_SETTINGS, RunConfig, RunSettings, parse_grouping
from .pipeline_service import BenchRecord, BenchReport, PipelineService, RunSummary, StageSummary, run_bench
from .plotting import plot_sets

__all__ = [
    "BenchRecord",
    "BenchReport",
    "ComparisonReport",
    "PipelineService",
    "RUN_SETTINGS",
    "RunConfig",
    "RunSettings",
    "RunSummary",
    "StageSummary",
    "audit_command",
    "bench_command",
    "compare_command",
    "compare_sets",
    "parse_grouping",
    "plot_command",
    "plot_sets",
    "resolve_grouping",
    "run_bench",
    "run_command",
]
