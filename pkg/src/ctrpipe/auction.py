"""Price-squashed ranking and simulated slate metrics.

Ads are ranked by pctr**c * cpc. At c=1 this is the classic
pCTR x CPC criterion; c=0 ranks by price alone; large c ranks by
predicted engagement alone. Because c only enters the scoring
function, changing it takes effect immediately - no retraining.

Slate quality is reported as closed-form expectations under known
ground truth (view propensity per slot, true CTR/CVR per item), so
eCTR / eCPMV / ROAS are exact and seed-free rather than Monte-Carlo.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import ValidationError
from .records import BucketLayout
from .simulate import GroundTruth


@dataclass(frozen=True)
class Candidate:
    item_id: str
    pctr: float
    cpc: float
    expected_order_value: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.pctr < 1.0:
            raise ValidationError(f"pctr must lie in (0, 1), got {self.pctr}")
        if not self.cpc > 0:
            raise ValidationError(f"cpc must be > 0, got {self.cpc}")
        if self.expected_order_value < 0:
            raise ValidationError(
                f"expected_order_value must be >= 0, got {self.expected_order_value}"
            )


@dataclass(frozen=True)
class SquashConfig:
    c: float = 1.0

    def __post_init__(self) -> None:
        if self.c < 0:
            raise ValidationError(f"squash exponent c must be >= 0, got {self.c}")

    def to_json_obj(self) -> dict:
        return {"c": float(self.c)}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SquashConfig":
        return cls(c=float(obj.get("c", 1.0)))


def squash_score(candidate: Candidate, config: SquashConfig) -> float:
    """Final ranking score pctr**c * cpc."""
    return candidate.pctr**config.c * candidate.cpc


def rank_slate(
    candidates: Sequence[Candidate], config: SquashConfig, slate_size: int
) -> tuple[Candidate, ...]:
    """Top slate_size candidates by squash score, deterministic order.

    Ties break by higher pctr, then lexicographic item_id.
    """
    if not candidates:
        raise ValidationError("cannot rank an empty candidate set")
    if not 1 <= slate_size <= len(candidates):
        raise ValidationError(
            f"slate_size must lie in 1..{len(candidates)}, got {slate_size}"
        )
    ordered = sorted(
        candidates, key=lambda cand: (-squash_score(cand, config), -cand.pctr, cand.item_id)
    )
    return tuple(ordered[:slate_size])


def simulate_slate_metrics(
    slate: Sequence[Candidate],
    truth: GroundTruth,
    query_id: str,
    layout: BucketLayout,
) -> dict:
    """Expected eCTR / eCPMV / ROAS of one displayed slate.

    Slot k contributes propensity(k) * true_ctr expected clicks; spend
    prices each expected click at the candidate's cpc, revenue values
    each expected conversion at its expected order value. ROAS is None
    when expected spend is zero.
    """
    if not slate:
        raise ValidationError("cannot score an empty slate")
    if len(slate) > layout.max_position:
        raise ValidationError(
            f"slate length {len(slate)} exceeds layout max_position {layout.max_position}"
        )
    expected_clicks = 0.0
    spend = 0.0
    revenue = 0.0
    for k, cand in enumerate(slate, start=1):
        pair = (query_id, cand.item_id)
        if pair not in truth.true_ctr:
            raise ValidationError(f"pair {pair} missing from ground truth")
        p_k = truth.propensity(k)
        t = truth.true_ctr[pair]
        v = truth.true_cvr[pair]
        clicks = p_k * t
        expected_clicks += clicks
        spend += clicks * cand.cpc
        revenue += clicks * v * cand.expected_order_value
    n = len(slate)
    return {
        "eCTR": expected_clicks / n,
        "eCPMV": 1000.0 * spend / n,
        "ROAS": (revenue / spend) if spend > 0 else None,
        "expected_clicks": expected_clicks,
        "spend": spend,
        "revenue": revenue,
    }


def summarize_slates(
    slates: Mapping[str, Sequence[Candidate]],
    truth: GroundTruth,
    layout: BucketLayout,
    item_sellers: Mapping[str, str] | None = None,
) -> dict:
    """Aggregate slate report over queries: totals-based ratios plus
    distinct item/seller counts across everything displayed."""
    if not slates:
        raise ValidationError("no slates to summarize")
    total_clicks = 0.0
    total_spend = 0.0
    total_revenue = 0.0
    total_slots = 0
    items: set[str] = set()
    for query_id, slate in slates.items():
        per = simulate_slate_metrics(slate, truth, query_id, layout)
        total_clicks += per["expected_clicks"]
        total_spend += per["spend"]
        total_revenue += per["revenue"]
        total_slots += len(slate)
        items.update(cand.item_id for cand in slate)
    sellers: set[str] = set()
    if item_sellers is not None:
        sellers = {item_sellers[i] for i in items if i in item_sellers}
    return {
        "eCTR": total_clicks / total_slots,
        "eCPMV": 1000.0 * total_spend / total_slots,
        "ROAS": (total_revenue / total_spend) if total_spend > 0 else None,
        "distinct_items": len(items),
        "distinct_sellers": len(sellers),
    }
