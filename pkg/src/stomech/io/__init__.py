"""Spec-driven experiment I/O: parsing, running, provenance."""

from .catalog import list_catalog
from .columnar import ColumnarData, read_columnar, write_columnar
from .runner import RunError, RunResult, output_root, run_experiment
from .spec import (EXPERIMENT_KINDS, PROCESS_KINDS, ExperimentSpec, SpecError,
                   apply_overrides, parse_spec, spec_hash)
from .trace import TraceEntry, TraceReport, trace_tree

__all__ = [
    "ColumnarData",
    "EXPERIMENT_KINDS",
    "ExperimentSpec",
    "PROCESS_KINDS",
    "RunError",
    "RunResult",
    "SpecError",
    "TraceEntry",
    "TraceReport",
    "apply_overrides",
    "list_catalog",
    "output_root",
    "parse_spec",
    "read_columnar",
    "run_experiment",
    "spec_hash",
    "trace_tree",
    "write_columnar",
]
