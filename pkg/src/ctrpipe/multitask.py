"""Click/conversion multi-task signal via label transforms.

Two structure-agnostic ways to blend the conversion signal into a
single binary training target:

 * stochastic_aggregation - a clicked-but-unconverted instance keeps
   label 1 with probability (1 - a) and is zeroed with probability a;
   unclicked stays 0, converted stays 1.
 * instance_weighting - labels stay plain clicks, but clicked-but-
   unconverted instances are down-weighted to a.

Both collapse to the pure click task at a=0 and (for aggregation) to
the pure view-conversion task at a=1. Stochastic draws are keyed by
(seed, record index) so output is reproducible and order-stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ValidationError
from .records import Dataset
from .seeds import hash_uniform

STOCHASTIC_AGGREGATION = "stochastic_aggregation"
INSTANCE_WEIGHTING = "instance_weighting"
OFF = "off"
MODES = (STOCHASTIC_AGGREGATION, INSTANCE_WEIGHTING, OFF)


@dataclass(frozen=True)
class MultiTaskConfig:
    mode: str = OFF
    a: float = 0.4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 <= self.a <= 1.0:
            raise ConfigError(f"a must lie in [0, 1], got {self.a}")

    def to_json_obj(self) -> dict:
        return {"mode": self.mode, "a": float(self.a), "seed": int(self.seed)}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "MultiTaskConfig":
        return cls(
            mode=obj.get("mode", OFF),
            a=float(obj.get("a", 0.4)),
            seed=int(obj.get("seed", 0)),
        )


def aggregate_label_stochastic(click: int, conversion: int, a: float, draw: float) -> int:
    """Blend click and view-conversion labels via one uniform draw."""
    if conversion > click:
        raise ValidationError("conversion without click")
    if not 0.0 <= a <= 1.0:
        raise ConfigError(f"a must lie in [0, 1], got {a}")
    if not 0.0 <= draw < 1.0:
        raise ValidationError(f"draw must lie in [0, 1), got {draw}")
    if click == 0:
        return 0
    if conversion == 1:
        return 1
    return 0 if draw < a else 1


def multitask_weight(click: int, conversion: int, a: float) -> float:
    """Weight 'a' for clicked-but-unconverted instances, 1 otherwise."""
    if conversion > click:
        raise ValidationError("conversion without click")
    if not 0.0 < a <= 1.0:
        raise ConfigError(
            "instance-weighting 'a' must lie in (0, 1]; a=0 would delete "
            "clicked-unconverted instances entirely"
        )
    if click == 1 and conversion == 0:
        return a
    return 1.0


def apply_multitask(train: Dataset, config: MultiTaskConfig) -> tuple[np.ndarray, np.ndarray]:
    """Effective (labels, weights) for the whole training set."""
    n = len(train.records)
    clicks = np.fromiter((r.click for r in train.records), dtype=np.int64, count=n)
    convs = np.fromiter((r.conversion for r in train.records), dtype=np.int64, count=n)
    if np.any(convs > clicks):
        raise ValidationError("conversion without click")
    if config.mode == OFF:
        return clicks, np.ones(n, dtype=np.float64)
    if config.mode == STOCHASTIC_AGGREGATION:
        draws = hash_uniform(config.seed, np.arange(n, dtype=np.uint64))
        labels = clicks.copy()
        zeroed = (clicks == 1) & (convs == 0) & (draws < config.a)
        labels[zeroed] = 0
        return labels, np.ones(n, dtype=np.float64)
    # instance weighting
    if config.a == 0.0:
        raise ConfigError(
            "instance-weighting 'a' must lie in (0, 1]; a=0 would delete "
            "clicked-unconverted instances entirely"
        )
    weights = np.ones(n, dtype=np.float64)
    weights[(clicks == 1) & (convs == 0)] = config.a
    return clicks, weights
