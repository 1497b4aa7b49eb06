from .report import (
    FORMATS, BenchRow, SparsityReport, aat_lower, export, load_report, matrix_report, render,
    sparsity_report, spy_export, spy_lines,
)
from .run import BenchConfig, load_prepared, run_benchmark, run_outer_sweep

__all__ = [
    "FORMATS", "BenchConfig", "BenchRow", "SparsityReport", "aat_lower", "export", "load_prepared",
    "load_report", "matrix_report", "render", "run_benchmark", "run_outer_sweep", "sparsity_report",
    "spy_export", "spy_lines",
]
