"""Position de-biasing via per-instance training weights.

Training instances are weighted by a linear combination of monotone
functions of display position: polynomial pos**alpha, logarithmic
1 + beta*ln(pos), or inverse view propensity 1/p(pos). Every term is
non-decreasing in position, so clicks earned at deep positions (which
carry less position privilege) count for more. Prediction-path code
simply never applies these weights: unbiased pCTR uses unit weights.

View propensities are estimated from randomized or near-randomized
traffic as the position-CTR ratio CTR(pos)/CTR(1), clipped to
[epsilon, 1] and monotonized with a pool-adjacent-violators pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ValidationError
from .records import Dataset

POLYNOMIAL = "polynomial"
LOGARITHMIC = "logarithmic"
INVERSE_PROPENSITY = "inverse_propensity"
FUNCTION_KINDS = (POLYNOMIAL, LOGARITHMIC, INVERSE_PROPENSITY)


@dataclass(frozen=True)
class DebiasFunction:
    """One monotone position-weight function.

    param is the exponent for polynomial, the slope for logarithmic,
    and unused for inverse_propensity.
    """

    kind: str
    param: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in FUNCTION_KINDS:
            raise ConfigError(f"unknown de-bias function kind {self.kind!r}")
        if self.kind == POLYNOMIAL and self.param < 0:
            raise ConfigError(f"polynomial exponent must be >= 0, got {self.param}")
        if self.kind == LOGARITHMIC and self.param < 0:
            raise ConfigError(f"logarithmic slope must be >= 0, got {self.param}")


@dataclass(frozen=True)
class DebiasTerm:
    function: DebiasFunction
    coefficient: float

    def __post_init__(self) -> None:
        if self.coefficient < 0:
            raise ConfigError(f"term coefficient must be >= 0, got {self.coefficient}")


@dataclass(frozen=True)
class DebiasConfig:
    terms: tuple[DebiasTerm, ...]
    normalize_mean_one: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ConfigError("de-bias config needs at least one term")
        if not sum(t.coefficient for t in self.terms) > 0:
            raise ConfigError("term coefficients must sum to a positive value")

    def needs_propensity(self) -> bool:
        return any(t.function.kind == INVERSE_PROPENSITY for t in self.terms)

    def to_json_obj(self) -> dict:
        return {
            "terms": [
                {
                    "kind": t.function.kind,
                    "param": float(t.function.param),
                    "lambda": float(t.coefficient),
                }
                for t in self.terms
            ],
            "normalize_mean_one": self.normalize_mean_one,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "DebiasConfig":
        try:
            terms = tuple(
                DebiasTerm(
                    function=DebiasFunction(kind=t["kind"], param=float(t.get("param", 0.0))),
                    coefficient=float(t["lambda"]),
                )
                for t in obj["terms"]
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed de-bias config: {exc}") from None
        return cls(terms=terms, normalize_mean_one=bool(obj.get("normalize_mean_one", True)))


@dataclass(frozen=True)
class PropensityTable:
    """Estimated P(view | position) for positions 1..len(p_view)."""

    p_view: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_view", tuple(float(p) for p in self.p_view))
        if not self.p_view:
            raise ValidationError("propensity table must cover at least position 1")
        if abs(self.p_view[0] - 1.0) > 1e-12:
            raise ValidationError(f"p_view(1) must be 1 after normalization, got {self.p_view[0]}")
        for pos, p in enumerate(self.p_view, start=1):
            if not 0.0 < p <= 1.0:
                raise ValidationError(f"p_view({pos}) must lie in (0, 1], got {p}")
        for k in range(1, len(self.p_view)):
            if self.p_view[k] > self.p_view[k - 1] + 1e-12:
                raise ValidationError("p_view must be non-increasing in position")

    def propensity(self, position: int) -> float:
        if not 1 <= position <= len(self.p_view):
            raise ValidationError(
                f"position {position} outside propensity table (1..{len(self.p_view)})"
            )
        return self.p_view[position - 1]

    def to_json_obj(self) -> list[float]:
        return list(self.p_view)

    @classmethod
    def from_json_obj(cls, obj: list) -> "PropensityTable":
        return cls(p_view=tuple(float(x) for x in obj))


def fit_propensity(
    train: Dataset, min_views: int = 100, epsilon: float = 0.01
) -> PropensityTable:
    """Estimate view propensities from position-level click rates.

    p(pos) = clamp(CTR(pos) / CTR(1), epsilon, 1), then monotonized
    non-increasing. Exact under the simulator's generative law when
    placement is randomized.
    """
    max_pos = train.layout.max_position
    views = np.zeros(max_pos, dtype=np.int64)
    clicks = np.zeros(max_pos, dtype=np.int64)
    for rec in train.records:
        if rec.position <= max_pos:
            views[rec.position - 1] += 1
            clicks[rec.position - 1] += rec.click
    for pos in range(1, max_pos + 1):
        if views[pos - 1] < min_views:
            raise ValidationError(
                f"position {pos} has {views[pos - 1]} views, need at least {min_views}"
            )
    ctr = clicks / views
    if ctr[0] == 0:
        raise ValidationError("no clicks at position 1; cannot normalize propensities")
    ratio = np.clip(ctr / ctr[0], epsilon, 1.0)
    # pool adjacent violators in the non-increasing direction, view-weighted
    vals: list[float] = [float(ratio[0])]
    wts: list[float] = [float(views[0])]
    counts: list[int] = [1]
    for k in range(1, max_pos):
        vals.append(float(ratio[k]))
        wts.append(float(views[k]))
        counts.append(1)
        while len(vals) > 1 and vals[-1] > vals[-2]:
            v2, w2, c2 = vals.pop(), wts.pop(), counts.pop()
            v1, w1, c1 = vals.pop(), wts.pop(), counts.pop()
            vals.append((v1 * w1 + v2 * w2) / (w1 + w2))
            wts.append(w1 + w2)
            counts.append(c1 + c2)
    monotone: list[float] = []
    for v, c in zip(vals, counts):
        monotone.extend([min(1.0, max(epsilon, v))] * c)
    monotone[0] = 1.0
    return PropensityTable(p_view=tuple(monotone))


def debias_weight(
    position: int, config: DebiasConfig, propensity: PropensityTable | None = None
) -> float:
    """Instance weight for one position: sum_k lambda_k * f_k(pos)."""
    if position < 1:
        raise ValidationError(f"position must be >= 1, got {position}")
    total = 0.0
    for term in config.terms:
        fn = term.function
        if fn.kind == POLYNOMIAL:
            value = float(position) ** fn.param
        elif fn.kind == LOGARITHMIC:
            value = 1.0 + fn.param * math.log(position)
        else:
            if propensity is None:
                raise ConfigError(
                    "inverse_propensity term requires a fitted PropensityTable"
                )
            value = 1.0 / propensity.propensity(position)
        total += term.coefficient * value
    return total


def apply_debias_weights(
    train: Dataset, config: DebiasConfig, propensity: PropensityTable | None = None
) -> np.ndarray:
    """Per-record training weights; mean rescaled to exactly 1 if configured."""
    if not train.records:
        return np.zeros(0, dtype=np.float64)
    by_position: dict[int, float] = {}
    weights = np.empty(len(train.records), dtype=np.float64)
    for i, rec in enumerate(train.records):
        w = by_position.get(rec.position)
        if w is None:
            w = debias_weight(rec.position, config, propensity)
            by_position[rec.position] = w
        weights[i] = w
    if config.normalize_mean_one:
        weights /= weights.mean()
    return weights
