"""Experiment engine: attacker-scenario cases, the cell matrix, evaluation and analyses."""
from .analysis import (
    aggregate_by_case,
    arch_transfer,
    asr_by_class,
    compare_families,
    ks_statistic,
    ks_test,
    mismatch_distributions,
    overall_by_case,
)
from .cases import CASES, DumbCase, classify_case
from .evalset import correct_mask, select_eval_set
from .matrix import ExperimentCell, build_matrix, case_census, dataset_id
from .results import ProgressLog, UnitResult, read_cells, write_cells

__all__ = [
    "CASES",
    "DumbCase",
    "ExperimentCell",
    "ProgressLog",
    "UnitResult",
    "aggregate_by_case",
    "arch_transfer",
    "asr_by_class",
    "build_matrix",
    "case_census",
    "classify_case",
    "compare_families",
    "correct_mask",
    "dataset_id",
    "ks_statistic",
    "ks_test",
    "mismatch_distributions",
    "overall_by_case",
    "read_cells",
    "select_eval_set",
    "write_cells",
]
