"""Sponsored-product CTR training-pipeline toolkit.

Position de-biasing via instance weights and bucket history features,
click/conversion multi-task label transforms, price-squashed ranking,
plus a ground-truth simulator and evaluation kit that make each
technique verifiable at desk scale.
"""

from .errors import ConfigError, ValidationError
from .records import (
    BucketLayout,
    Dataset,
    ImpressionRecord,
    read_logs,
    split_by_day,
    write_logs,
)

__all__ = [
    "BucketLayout",
    "ConfigError",
    "Dataset",
    "ImpressionRecord",
    "ValidationError",
    "read_logs",
    "split_by_day",
    "write_logs",
]

__version__ = "0.1.0"
