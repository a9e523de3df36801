"""Synthetic position-biased traffic with known ground truth.

The generative model factors a logged click into view-then-click:

    view       ~ Bernoulli(decay ** (position - 1))
    click|view ~ Bernoulli(true_ctr(query, item))
    conv|click ~ Bernoulli(true_cvr(query, item))

so every record satisfies conversion <= click and the empirical CTR at
a position converges to propensity * mean CTR. Records are emitted for
every impressed slot, click=0 when the slot was never viewed.

Relevance is latent: each (query, item) pair draws a latent vector z,
and true CTR / true CVR are logistic links of different (correlated)
directions through z. Logged base features are z plus Gaussian noise,
frozen per pair, so a model can learn relevance but never read it off
exactly. Placement is either uniformly random (randomize_placement) or
score-correlated: slates are ordered by a legacy-ranker score that is
only partially aligned with the true CTR direction, which reproduces
the production regime where position, relevance, and history features
are all confounded - the regime de-biasing is for.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import ConfigError, ValidationError
from .metrics import ScoredLabels, auroc, fractional_ranks
from .records import BucketLayout, Dataset, ImpressionRecord
from .seeds import hash_uniform

_CTR_LOGIT_BIAS = -1.0
_CVR_LOGIT_BIAS = -1.0
_SLATE_CHUNK = 4096


@dataclass(frozen=True)
class SimConfig:
    seed: int
    num_queries: int
    num_items: int
    impressions: int
    layout: BucketLayout
    propensity_decay: float = 0.7
    base_ctr_scale: float = 0.35
    base_cvr_scale: float = 0.3
    feature_dim: int = 21
    randomize_placement: bool = False
    # --- generative knobs beyond the core contract ---
    num_days: int = 30
    feature_noise_std: float = 0.1
    ctr_logit_scale: float = 1.5
    cvr_logit_scale: float = 1.2
    cvr_alignment: float = 0.6
    placement_alignment: float = 0.7
    placement_noise_std: float = 0.25
    cpc_base: float = 1.0
    cpc_sigma: float = 0.4
    order_value: float = 60.0
    num_sellers: int = 20

    def __post_init__(self) -> None:
        checks = [
            ("num_queries", self.num_queries >= 1),
            ("num_items", self.num_items >= 1),
            ("impressions", self.impressions >= 1),
            ("feature_dim", self.feature_dim >= 1),
            ("num_days", self.num_days >= 1),
            ("num_sellers", self.num_sellers >= 1),
            ("propensity_decay", 0.0 < self.propensity_decay <= 1.0),
            ("base_ctr_scale", 0.0 < self.base_ctr_scale <= 1.0),
            ("base_cvr_scale", 0.0 < self.base_cvr_scale <= 1.0),
            ("feature_noise_std", self.feature_noise_std >= 0.0),
            ("ctr_logit_scale", self.ctr_logit_scale > 0.0),
            ("cvr_logit_scale", self.cvr_logit_scale > 0.0),
            ("cvr_alignment", 0.0 <= self.cvr_alignment <= 1.0),
            ("placement_alignment", 0.0 <= self.placement_alignment <= 1.0),
            ("placement_noise_std", self.placement_noise_std >= 0.0),
            ("cpc_base", self.cpc_base > 0.0),
            ("cpc_sigma", self.cpc_sigma >= 0.0),
            ("order_value", self.order_value >= 0.0),
        ]
        for name, ok in checks:
            if not ok:
                raise ConfigError(f"invalid sim config field {name!r}: {getattr(self, name)}")
        if self.num_items < self.layout.max_position:
            raise ConfigError(
                "num_items must be >= layout.max_position so a full slate can be sampled"
            )

    def to_json_obj(self) -> dict:
        return {
            "seed": self.seed,
            "num_queries": self.num_queries,
            "num_items": self.num_items,
            "impressions": self.impressions,
            "layout": {
                "module_kind": self.layout.module_kind,
                "group_size": self.layout.group_size,
                "max_position": self.layout.max_position,
            },
            "propensity_decay": self.propensity_decay,
            "base_ctr_scale": self.base_ctr_scale,
            "base_cvr_scale": self.base_cvr_scale,
            "feature_dim": self.feature_dim,
            "randomize_placement": self.randomize_placement,
            "num_days": self.num_days,
            "feature_noise_std": self.feature_noise_std,
            "ctr_logit_scale": self.ctr_logit_scale,
            "cvr_logit_scale": self.cvr_logit_scale,
            "cvr_alignment": self.cvr_alignment,
            "placement_alignment": self.placement_alignment,
            "placement_noise_std": self.placement_noise_std,
            "cpc_base": self.cpc_base,
            "cpc_sigma": self.cpc_sigma,
            "order_value": self.order_value,
            "num_sellers": self.num_sellers,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SimConfig":
        obj = dict(obj)
        lay = obj.pop("layout", None)
        if lay is None:
            raise ConfigError("sim config missing field 'layout'")
        layout = BucketLayout(
            module_kind=lay["module_kind"],
            group_size=int(lay["group_size"]),
            max_position=int(lay["max_position"]),
        )
        known = {f for f in cls.__dataclass_fields__ if f != "layout"}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown sim config field {sorted(unknown)[0]!r}")
        try:
            return cls(layout=layout, **obj)
        except TypeError as exc:
            raise ConfigError(f"malformed sim config: {exc}") from None


@dataclass(frozen=True)
class GroundTruth:
    true_ctr: dict[tuple[str, str], float]
    true_cvr: dict[tuple[str, str], float]
    true_propensity: dict[int, float]

    def __post_init__(self) -> None:
        if not self.true_propensity.get(1) == 1.0:
            raise ValidationError("true_propensity(1) must be 1")

    def propensity(self, position: int) -> float:
        p = self.true_propensity.get(position)
        if p is None:
            raise ValidationError(f"position {position} missing from true_propensity")
        return p

    def to_json_obj(self) -> dict:
        max_pos = max(self.true_propensity)
        return {
            "true_ctr": {f"{q}|{i}": v for (q, i), v in sorted(self.true_ctr.items())},
            "true_cvr": {f"{q}|{i}": v for (q, i), v in sorted(self.true_cvr.items())},
            "true_propensity": [self.true_propensity[k] for k in range(1, max_pos + 1)],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "GroundTruth":
        def _unkey(s: str) -> tuple[str, str]:
            q, _, i = s.partition("|")
            return q, i

        return cls(
            true_ctr={_unkey(k): float(v) for k, v in obj["true_ctr"].items()},
            true_cvr={_unkey(k): float(v) for k, v in obj["true_cvr"].items()},
            true_propensity={
                k + 1: float(p) for k, p in enumerate(obj["true_propensity"])
            },
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_obj(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "GroundTruth":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_obj(json.load(fh))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _orthonormal_directions(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Three unit vectors in R^dim, mutually orthogonal when dim allows."""
    raw = rng.standard_normal((3, dim))
    basis: list[np.ndarray] = []
    for row in raw:
        v = row.copy()
        for b in basis:
            v -= (v @ b) * b
        norm = np.linalg.norm(v)
        if norm < 1e-9:
            v = basis[0].copy() if basis else np.ones(dim)
            norm = np.linalg.norm(v)
        basis.append(v / norm)
    return np.stack(basis)


def generate_logs(config: SimConfig) -> tuple[Dataset, GroundTruth]:
    """Deterministically generate a traffic log plus its ground truth."""
    rng = np.random.default_rng(config.seed)
    Q, N, D = config.num_queries, config.num_items, config.feature_dim
    P = config.layout.max_position

    e = _orthonormal_directions(rng, D)
    u_ctr = e[0]
    ca, pa = config.cvr_alignment, config.placement_alignment
    u_cvr = ca * e[0] + math.sqrt(1.0 - ca * ca) * e[1]
    u_leg = pa * e[0] + math.sqrt(1.0 - pa * pa) * e[2]

    latents = rng.standard_normal((Q, N, D))
    true_ctr = np.clip(
        config.base_ctr_scale
        * _sigmoid(config.ctr_logit_scale * (latents @ u_ctr) + _CTR_LOGIT_BIAS),
        1e-12,
        1.0 - 1e-12,
    )
    true_cvr = np.clip(
        config.base_cvr_scale
        * _sigmoid(config.cvr_logit_scale * (latents @ u_cvr) + _CVR_LOGIT_BIAS),
        1e-12,
        1.0 - 1e-12,
    )
    legacy_score = latents @ u_leg
    features = latents + config.feature_noise_std * rng.standard_normal((Q, N, D))
    cpc = config.cpc_base * np.exp(config.cpc_sigma * rng.standard_normal(N))
    seller_of_item = rng.integers(0, config.num_sellers, size=N)

    propensity = np.array([config.propensity_decay ** k for k in range(P)])
    query_ids = [f"q{qi:05d}" for qi in range(Q)]
    item_ids = [f"i{ii:05d}" for ii in range(N)]
    seller_ids = [f"s{int(seller_of_item[ii]):04d}" for ii in range(N)]

    n_slates = -(-config.impressions // P)
    slate_query = rng.integers(0, Q, size=n_slates)
    module_kind = config.layout.module_kind

    feature_cache: dict[tuple[int, int], tuple[float, ...]] = {}
    records: list[ImpressionRecord] = []
    for start in range(0, n_slates, _SLATE_CHUNK):
        stop = min(start + _SLATE_CHUNK, n_slates)
        block = stop - start
        # uniformly random candidate subsets in uniformly random order
        perm_keys = rng.random((block, N))
        chosen = np.argpartition(perm_keys, P - 1, axis=1)[:, :P]
        order_keys = np.take_along_axis(perm_keys, chosen, axis=1)
        chosen = np.take_along_axis(chosen, np.argsort(order_keys, axis=1), axis=1)
        qs = slate_query[start:stop]
        if not config.randomize_placement:
            scores = legacy_score[qs[:, None], chosen]
            if config.placement_noise_std > 0:
                scores = scores + config.placement_noise_std * rng.standard_normal(
                    (block, P)
                )
            chosen = np.take_along_axis(chosen, np.argsort(-scores, axis=1), axis=1)
        u_view = rng.random((block, P))
        u_click = rng.random((block, P))
        u_conv = rng.random((block, P))
        pair_ctr = true_ctr[qs[:, None], chosen]
        pair_cvr = true_cvr[qs[:, None], chosen]
        viewed = u_view < propensity[None, :]
        clicked = viewed & (u_click < pair_ctr)
        converted = clicked & (u_conv < pair_cvr)
        for b in range(block):
            slate_idx = start + b
            day = slate_idx * config.num_days // n_slates
            q = int(qs[b])
            qid = query_ids[q]
            for k in range(P):
                i = int(chosen[b, k])
                feats = feature_cache.get((q, i))
                if feats is None:
                    feats = tuple(float(x) for x in features[q, i])
                    feature_cache[(q, i)] = feats
                records.append(
                    ImpressionRecord(
                        query_id=qid,
                        item_id=item_ids[i],
                        seller_id=seller_ids[i],
                        day=day,
                        module_kind=module_kind,
                        position=k + 1,
                        base_features=feats,
                        cpc=float(cpc[i]),
                        click=int(clicked[b, k]),
                        conversion=int(converted[b, k]),
                    )
                )

    truth = GroundTruth(
        true_ctr={
            (query_ids[q], item_ids[i]): float(true_ctr[q, i])
            for q in range(Q)
            for i in range(N)
        },
        true_cvr={
            (query_ids[q], item_ids[i]): float(true_cvr[q, i])
            for q in range(Q)
            for i in range(N)
        },
        true_propensity={k + 1: float(propensity[k]) for k in range(P)},
    )
    return Dataset(records=tuple(records), layout=config.layout), truth


def item_seller_map(dataset: Dataset) -> dict[str, str]:
    """item_id -> seller_id as observed in the logs."""
    out: dict[str, str] = {}
    for rec in dataset.records:
        out.setdefault(rec.item_id, rec.seller_id)
    return out


def oracle_eval(
    model_scores: Mapping[tuple[str, str], float], truth: GroundTruth, seed: int = 0
) -> dict:
    """Rank-quality report of scores against simulator ground truth.

    Reports Spearman correlation with true CTR and the AUROC the scores
    achieve against click labels resampled with uniform view propensity
    (every slot viewed), i.e. free of position bias.
    """
    pairs = sorted(truth.true_ctr)
    missing = [p for p in pairs if p not in model_scores]
    if missing:
        shown = ", ".join(f"{q}|{i}" for q, i in missing[:5])
        raise ValidationError(
            f"{len(missing)} truth pairs missing from model scores (first: {shown})"
        )
    scores = np.array([model_scores[p] for p in pairs], dtype=np.float64)
    ctrs = np.array([truth.true_ctr[p] for p in pairs], dtype=np.float64)
    rs = fractional_ranks(scores)
    rt = fractional_ranks(ctrs)
    rs_c = rs - rs.mean()
    rt_c = rt - rt.mean()
    denom = math.sqrt(float(rs_c @ rs_c) * float(rt_c @ rt_c))
    if denom == 0:
        raise ValidationError("spearman undefined: constant scores or constant truth")
    spearman = float(rs_c @ rt_c) / denom
    draws = hash_uniform(seed, np.arange(len(pairs), dtype=np.uint64), salt=101)
    labels = (draws < ctrs).astype(np.int64)
    unbiased_auroc = auroc(ScoredLabels(scores=scores, labels=labels))
    return {"spearman": spearman, "auroc_unbiased": unbiased_auroc, "n_pairs": len(pairs)}


def with_seed(config: SimConfig, seed: int) -> SimConfig:
    return replace(config, seed=seed)
