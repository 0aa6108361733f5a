from .cache import AugmentationCache, CacheKey, MemoryCache, canonical_json, stable_hash
from .datasets import DatasetFile, default_label_map, load_dataset
from .runlog import (
    SCHEMA_VERSION,
    RunLog,
    RunLogWriter,
    TruncatedLogWarning,
    load_calibration,
    load_run_log,
    read_run_log,
    save_calibration,
    write_run_log,
)

__all__ = [
    "SCHEMA_VERSION",
    "AugmentationCache",
    "CacheKey",
    "DatasetFile",
    "MemoryCache",
    "RunLog",
    "RunLogWriter",
    "TruncatedLogWarning",
    "canonical_json",
    "default_label_map",
    "load_calibration",
    "load_dataset",
    "load_run_log",
    "read_run_log",
    "save_calibration",
    "stable_hash",
    "write_run_log",
]
