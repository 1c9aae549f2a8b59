"""Two-source procedural datasets, folder ingestion, splitting and class rebalancing."""
from .generate import SOURCES, TASKS, ImageSet, SourceSpec, TaskSpec, generate_dataset, get_task
from .ingest import ingest_folder
from .splits import (
    BALANCE_LEVELS,
    BalanceLevel,
    DatasetSplit,
    content_hash,
    deduplicate,
    largest_remainder,
    minority_target,
    rebalance,
    split,
)
from .store import load_split, save_split

__all__ = [
    "TASKS",
    "SOURCES",
    "TaskSpec",
    "SourceSpec",
    "ImageSet",
    "generate_dataset",
    "get_task",
    "ingest_folder",
    "BALANCE_LEVELS",
    "BalanceLevel",
    "DatasetSplit",
    "content_hash",
    "deduplicate",
    "largest_remainder",
    "minority_target",
    "rebalance",
    "split",
    "save_split",
    "load_split",
]
