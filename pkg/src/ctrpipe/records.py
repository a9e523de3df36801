"""Domain types and JSONL log I/O.

An ImpressionRecord is one viewed ad slot: ids, display position, the
base feature vector, cost-per-click, and the click/conversion labels.
A Dataset is an ordered sequence of records plus the BucketLayout that
describes how display positions group into coarse buckets.

The canonical on-disk format is JSONL, one record per line with a fixed
key order, so that write -> read -> write is byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import ValidationError

MODULE_KINDS = ("in_grid", "below_grid")

_RECORD_KEYS = (
    "query_id",
    "item_id",
    "seller_id",
    "day",
    "module_kind",
    "position",
    "features",
    "cpc",
    "click",
    "conversion",
)


@dataclass(frozen=True, slots=True)
class BucketLayout:
    """Display geometry of one ad module.

    group_size is the number of adjacent positions that form one bucket
    (items per grid row for in_grid, items per carousel batch for
    below_grid); max_position is the deepest slot that can be filled.
    """

    module_kind: str
    group_size: int
    max_position: int

    def __post_init__(self) -> None:
        if self.module_kind not in MODULE_KINDS:
            raise ValidationError(
                f"module_kind must be one of {MODULE_KINDS}, got {self.module_kind!r}"
            )
        if self.group_size < 1:
            raise ValidationError(f"group_size must be >= 1, got {self.group_size}")
        if self.max_position < 1:
            raise ValidationError(f"max_position must be >= 1, got {self.max_position}")


@dataclass(frozen=True, slots=True)
class ImpressionRecord:
    """One impressed ad slot with its labels.

    Invariants: conversion implies click, position >= 1, day >= 0,
    cpc > 0, and every base feature is finite.
    """

    query_id: str
    item_id: str
    seller_id: str
    day: int
    module_kind: str
    position: int
    base_features: tuple[float, ...]
    cpc: float
    click: int
    conversion: int

    def __post_init__(self) -> None:
        if self.module_kind not in MODULE_KINDS:
            raise ValidationError(
                f"module_kind must be one of {MODULE_KINDS}, got {self.module_kind!r}"
            )
        if self.day < 0:
            raise ValidationError(f"day must be >= 0, got {self.day}")
        if self.position < 1:
            raise ValidationError(f"position must be >= 1, got {self.position}")
        if not self.cpc > 0:
            raise ValidationError(f"cpc must be > 0, got {self.cpc}")
        if self.click not in (0, 1):
            raise ValidationError(f"click must be 0 or 1, got {self.click}")
        if self.conversion not in (0, 1):
            raise ValidationError(f"conversion must be 0 or 1, got {self.conversion}")
        if self.conversion > self.click:
            raise ValidationError("conversion without click")
        if not all(map(math.isfinite, self.base_features)):
            raise ValidationError("base_features must all be finite")


@dataclass(frozen=True)
class Dataset:
    """Ordered impression records sharing one bucket layout."""

    records: tuple[ImpressionRecord, ...]
    layout: BucketLayout

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ImpressionRecord]:
        return iter(self.records)

    @property
    def feature_dim(self) -> int:
        """Base feature dimension D, 0 for an empty dataset."""
        return len(self.records[0].base_features) if self.records else 0


def _record_from_obj(obj: dict, line_no: int, expect_dim: int | None) -> ImpressionRecord:
    if not isinstance(obj, dict):
        raise ValidationError(f"line {line_no}: expected a JSON object")
    missing = [k for k in _RECORD_KEYS if k not in obj]
    if missing:
        raise ValidationError(f"line {line_no}: missing field {missing[0]!r}")
    extra = [k for k in obj if k not in _RECORD_KEYS]
    if extra:
        raise ValidationError(f"line {line_no}: unknown field {extra[0]!r}")

    def _str(key: str) -> str:
        v = obj[key]
        if not isinstance(v, str):
            raise ValidationError(f"line {line_no}: field {key!r} must be a string")
        return v

    def _int(key: str) -> int:
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValidationError(f"line {line_no}: field {key!r} must be an integer")
        return v

    feats = obj["features"]
    if not isinstance(feats, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in feats
    ):
        raise ValidationError(f"line {line_no}: field 'features' must be a numeric array")
    if expect_dim is not None and len(feats) != expect_dim:
        raise ValidationError(
            f"line {line_no}: field 'features' has {len(feats)} entries, expected {expect_dim}"
        )
    cpc = obj["cpc"]
    if isinstance(cpc, bool) or not isinstance(cpc, (int, float)):
        raise ValidationError(f"line {line_no}: field 'cpc' must be a number")
    try:
        return ImpressionRecord(
            query_id=_str("query_id"),
            item_id=_str("item_id"),
            seller_id=_str("seller_id"),
            day=_int("day"),
            module_kind=_str("module_kind"),
            position=_int("position"),
            base_features=tuple(float(x) for x in feats),
            cpc=float(cpc),
            click=_int("click"),
            conversion=_int("conversion"),
        )
    except ValidationError as exc:
        raise ValidationError(f"line {line_no}: {exc}") from None


def read_logs(path, layout: BucketLayout) -> Dataset:
    """Read a JSONL log file, validating every record.

    Raises ValidationError naming the line number and offending field on
    any malformed line or invariant violation.
    """
    records: list[ImpressionRecord] = []
    expect_dim: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"line {line_no}: invalid JSON ({exc.msg})") from None
            rec = _record_from_obj(obj, line_no, expect_dim)
            if expect_dim is None:
                expect_dim = len(rec.base_features)
            records.append(rec)
    return Dataset(records=tuple(records), layout=layout)


def _record_to_line(rec: ImpressionRecord) -> str:
    if not all(map(math.isfinite, rec.base_features)):
        raise ValidationError("refusing to write record with non-finite feature")
    if not math.isfinite(rec.cpc):
        raise ValidationError("refusing to write record with non-finite cpc")
    obj = {
        "query_id": rec.query_id,
        "item_id": rec.item_id,
        "seller_id": rec.seller_id,
        "day": rec.day,
        "module_kind": rec.module_kind,
        "position": rec.position,
        "features": [float(x) for x in rec.base_features],
        "cpc": float(rec.cpc),
        "click": int(rec.click),
        "conversion": int(rec.conversion),
    }
    return json.dumps(obj, separators=(",", ":"))


def write_logs(dataset: Dataset, path) -> None:
    """Write a dataset as canonical JSONL; read_logs(write_logs(d)) == d."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in dataset.records:
            fh.write(_record_to_line(rec))
            fh.write("\n")


def split_by_day(dataset: Dataset, train_days: int) -> tuple[Dataset, Dataset]:
    """Partition into (day < train_days, day >= train_days), order preserved."""
    if train_days <= 0:
        raise ValidationError(f"train_days must be > 0, got {train_days}")
    train = [r for r in dataset.records if r.day < train_days]
    test = [r for r in dataset.records if r.day >= train_days]
    return (
        Dataset(records=tuple(train), layout=dataset.layout),
        Dataset(records=tuple(test), layout=dataset.layout),
    )


def dataset_from_records(records: Iterable[ImpressionRecord], layout: BucketLayout) -> Dataset:
    return Dataset(records=tuple(records), layout=layout)
