"""Leakage-safe historical views/clicks/CTR features.

Counters are kept per ad item at three granularities: page (all
traffic), module (in_grid / below_grid), and bucket (a grid row or
carousel batch inside a module). A table built as of day d only ever
sees records from days [d - window_days, d), so mutating day >= d
records cannot change it.

Counts are Laplace-smoothed: smoothed_ctr = (clicks + alpha * prior) /
(views + alpha), which keeps cold-start bucket-level entries usable
instead of sparse zeros. Raw counts enter feature vectors as log(1+x).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ValidationError
from .records import BucketLayout, Dataset, ImpressionRecord

PAGE = "page"
MODULE = "module"
BUCKET = "bucket"
LEVELS = (PAGE, MODULE, BUCKET)

# prior used when the window holds no traffic at all
_EMPTY_WINDOW_PRIOR = 0.01
_PRIOR_EPS = 1e-6


class HistoryKey(NamedTuple):
    item_id: str
    level: str
    level_key: str


class HistoryStats(NamedTuple):
    views: int
    clicks: int
    smoothed_ctr: float


def assign_bucket(position: int, layout: BucketLayout) -> int:
    """Bucket index ceil(position / group_size), 1-based."""
    if not 1 <= position <= layout.max_position:
        raise ValidationError(
            f"position {position} outside layout range 1..{layout.max_position}"
        )
    return (position + layout.group_size - 1) // layout.group_size


def record_keys(rec: ImpressionRecord, layout: BucketLayout) -> tuple[HistoryKey, HistoryKey, HistoryKey]:
    """The (page, module, bucket) keys an impression contributes to."""
    bucket = assign_bucket(rec.position, layout)
    return (
        HistoryKey(rec.item_id, PAGE, ""),
        HistoryKey(rec.item_id, MODULE, rec.module_kind),
        HistoryKey(rec.item_id, BUCKET, f"{rec.module_kind}:{bucket}"),
    )


@dataclass(frozen=True)
class HistoryFeatureTable:
    as_of_day: int
    window_days: int
    alpha: float
    prior: float
    layout: BucketLayout
    stats: dict[HistoryKey, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.as_of_day < 0:
            raise ValidationError(f"as_of_day must be >= 0, got {self.as_of_day}")
        if self.window_days < 1:
            raise ValidationError(f"window_days must be >= 1, got {self.window_days}")
        if not self.alpha > 0:
            raise ValidationError(f"alpha must be > 0, got {self.alpha}")
        if not 0.0 < self.prior < 1.0:
            raise ValidationError(f"prior must lie in (0, 1), got {self.prior}")

    def lookup(self, key: HistoryKey) -> HistoryStats:
        views, clicks = self.stats.get(key, (0, 0))
        smoothed = (clicks + self.alpha * self.prior) / (views + self.alpha)
        return HistoryStats(views=views, clicks=clicks, smoothed_ctr=smoothed)

    def to_json_obj(self) -> dict:
        entries = [
            {
                "item_id": k.item_id,
                "level": k.level,
                "level_key": k.level_key,
                "views": int(v),
                "clicks": int(c),
            }
            for k, (v, c) in sorted(self.stats.items())
        ]
        return {
            "as_of_day": self.as_of_day,
            "window_days": self.window_days,
            "alpha": self.alpha,
            "prior": self.prior,
            "layout": {
                "module_kind": self.layout.module_kind,
                "group_size": self.layout.group_size,
                "max_position": self.layout.max_position,
            },
            "entries": entries,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "HistoryFeatureTable":
        stats = {
            HistoryKey(e["item_id"], e["level"], e["level_key"]): (int(e["views"]), int(e["clicks"]))
            for e in obj["entries"]
        }
        lay = obj["layout"]
        return cls(
            as_of_day=int(obj["as_of_day"]),
            window_days=int(obj["window_days"]),
            alpha=float(obj["alpha"]),
            prior=float(obj["prior"]),
            layout=BucketLayout(
                module_kind=lay["module_kind"],
                group_size=int(lay["group_size"]),
                max_position=int(lay["max_position"]),
            ),
            stats=stats,
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_obj(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "HistoryFeatureTable":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_obj(json.load(fh))


def build_history_table(
    train: Dataset,
    as_of_day: int,
    window_days: int,
    alpha: float = 10.0,
    prior: float | None = None,
) -> HistoryFeatureTable:
    """Aggregate per-item counters from days [as_of_day - window_days, as_of_day)."""
    if as_of_day < 0:
        raise ValidationError(f"as_of_day must be >= 0, got {as_of_day}")
    if window_days < 1:
        raise ValidationError(f"window_days must be >= 1, got {window_days}")
    lo = as_of_day - window_days
    stats: dict[HistoryKey, list[int]] = {}
    total_views = 0
    total_clicks = 0
    for rec in train.records:
        if not lo <= rec.day < as_of_day:
            continue
        total_views += 1
        total_clicks += rec.click
        for key in record_keys(rec, train.layout):
            entry = stats.get(key)
            if entry is None:
                stats[key] = [1, rec.click]
            else:
                entry[0] += 1
                entry[1] += rec.click
    if prior is None:
        if total_views:
            prior = total_clicks / total_views
        else:
            prior = _EMPTY_WINDOW_PRIOR
    prior = min(max(float(prior), _PRIOR_EPS), 1.0 - _PRIOR_EPS)
    return HistoryFeatureTable(
        as_of_day=as_of_day,
        window_days=window_days,
        alpha=float(alpha),
        prior=prior,
        layout=train.layout,
        stats={k: (v[0], v[1]) for k, v in stats.items()},
    )


HISTORY_FEATURE_COUNT = 3 * len(LEVELS)


def extract_features(rec: ImpressionRecord, table: HistoryFeatureTable) -> np.ndarray:
    """Base features plus [log1p(views), log1p(clicks), smoothed_ctr] per level."""
    if rec.day < table.as_of_day:
        raise ValidationError(
            f"leakage: record at day {rec.day} scored with table as of day {table.as_of_day}"
        )
    out = np.empty(len(rec.base_features) + HISTORY_FEATURE_COUNT, dtype=np.float64)
    out[: len(rec.base_features)] = rec.base_features
    offset = len(rec.base_features)
    for key in record_keys(rec, table.layout):
        views, clicks, smoothed = table.lookup(key)
        out[offset] = math.log1p(views)
        out[offset + 1] = math.log1p(clicks)
        out[offset + 2] = smoothed
        offset += 3
    return out
