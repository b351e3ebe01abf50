"""Budget-aware, preference-matching food recommendation.

Items are compared in a min-max normalized feature space built from the
catalog. Classes of nutritionally similar items (k-means) are ranked by
cosine similarity against a combined vector that carries the patient's
remaining daily allowances on mandatory features and their historical
preferences everywhere else. Within the top classes, an item is eligible only
if its satisfaction score clears 1.0, which by construction happens exactly
when every mandatory nutrient amount fits the remaining daily budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date as Date, timedelta

import numpy as np

from .catalog import Catalog, FoodItemVector, per_serving_amounts
from .errors import BadC, DimensionMismatch, EmptyCatalog, NoFeasibleItem
from .optimizer import OptimizedRequirements
from .patient import PatientRecord, day_totals
from .reference import BUDGET_UNIT_SCALE

EPSILON = 1e-9
DEFAULT_CLASSES = 8
DEFAULT_SPAN_DAYS = 30


@dataclass
class ClassWeightVector:
    """One item class: centroid and per-feature value ranges of its members.

    Both centroid and ranges live in the normalized feature space, so the
    centroid always sits inside the ranges.
    """

    class_id: int
    centroid: np.ndarray
    member_ids: list[str]
    feature_ranges: list[tuple[float, float]]


@dataclass
class PreferenceVector:
    """Frequency-weighted summary of what the patient actually eats and likes."""

    weights: np.ndarray
    span_days: int


@dataclass
class CombinedVector:
    """Preference weights overridden by requirement weights on mandatory features."""

    weights: np.ndarray
    mandatory_mask: np.ndarray                       # bool per feature
    remaining: dict[str, tuple[float, float | None]]  # feature -> (lo, hi); hi None = no cap
    preference_nonzero: int

    def feature_count(self) -> int:
        return len(self.weights)


@dataclass
class RecommendedItem:
    item_id: str
    name: str
    similarity: float
    satisfaction: float
    serving_size: float
    fit: list[dict] = field(default_factory=list)


@dataclass
class Recommendation:
    meal_index: int
    items: list[RecommendedItem]

    def to_dict(self) -> dict:
        return {"meal_index": self.meal_index,
                "items": [{"item_id": i.item_id, "name": i.name,
                           "similarity": i.similarity, "satisfaction": i.satisfaction,
                           "serving_size": i.serving_size, "fit": i.fit}
                          for i in self.items]}


def normalized_matrix(catalog: Catalog) -> tuple[np.ndarray, np.ndarray]:
    """Min-max normalize item vectors per feature; missing entries stay 0.

    Returns (matrix, missing mask). Normalization statistics only use values
    actually reported, so silent zeros for absent data never stretch a scale.
    """
    raw = np.array([it.values for it in catalog.items], dtype=np.float64)
    missing = np.array([it.missing for it in catalog.items], dtype=bool)
    norm = np.zeros_like(raw)
    for j in range(raw.shape[1]):
        present = ~missing[:, j]
        if not present.any():
            continue
        lo, hi = raw[present, j].min(), raw[present, j].max()
        span = hi - lo
        if span <= 0:
            norm[present, j] = 0.0 if hi == 0 else 1.0
        else:
            norm[present, j] = (raw[present, j] - lo) / span
    return norm, missing


def _normalized_item(catalog: Catalog, item: FoodItemVector,
                     mins: np.ndarray, spans: np.ndarray) -> np.ndarray:
    raw = np.asarray(item.values, dtype=np.float64)
    miss = np.asarray(item.missing, dtype=bool)
    out = np.zeros_like(raw)
    ok = (~miss) & (spans > 0)
    out[ok] = (raw[ok] - mins[ok]) / spans[ok]
    flat = (~miss) & (spans <= 0)
    out[flat] = np.where(raw[flat] == 0, 0.0, 1.0)
    return np.clip(out, 0.0, 1.0)


def feature_scaling(catalog: Catalog) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature (min, span) over reported values, for normalizing new vectors."""
    raw = np.array([it.values for it in catalog.items], dtype=np.float64)
    missing = np.array([it.missing for it in catalog.items], dtype=bool)
    mins = np.zeros(raw.shape[1])
    spans = np.zeros(raw.shape[1])
    for j in range(raw.shape[1]):
        present = ~missing[:, j]
        if present.any():
            mins[j] = raw[present, j].min()
            spans[j] = raw[present, j].max() - mins[j]
    return mins, spans


def cosine(a, b) -> float:
    """Cosine similarity; zero-norm vectors score 0 by convention."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if len(a) != len(b):
        raise DimensionMismatch(f"vectors of length {len(a)} and {len(b)}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def class_similarity(cwv: ClassWeightVector | np.ndarray, uwv: CombinedVector | np.ndarray) -> float:
    a = cwv.centroid if isinstance(cwv, ClassWeightVector) else cwv
    b = uwv.weights if isinstance(uwv, CombinedVector) else uwv
    return cosine(a, b)


def item_similarity(item, pwv) -> float:
    """Cosine between an item and the preference vector.

    When given a FoodItemVector (with its catalog scaling attached via
    ``_normalized_item``) callers should pass the normalized array; raw arrays
    are compared as-is. Missing-flagged features must already be zeroed.
    """
    a = item.values if isinstance(item, FoodItemVector) else item
    b = pwv.weights if isinstance(pwv, PreferenceVector) else pwv
    return cosine(a, b)


def cluster_items(catalog: Catalog, n_classes: int, seed: int = 0) -> list[ClassWeightVector]:
    """Deterministic k-means over normalized item vectors.

    Greedy farthest-point initialization from a seeded first pick, Lloyd
    iterations until centroids move less than 1e-9 or 100 rounds. An emptied
    class is reseeded at the point farthest from its assigned centroid.
    """
    n = len(catalog.items)
    if n == 0:
        raise EmptyCatalog("cannot cluster an empty catalog")
    if n_classes < 1 or n_classes > n:
        raise BadC(f"need 1 <= classes <= {n}, got {n_classes}")
    M, _ = normalized_matrix(catalog)

    rng = np.random.default_rng(seed)
    first = int(rng.integers(n))
    chosen = [first]
    d2 = ((M - M[first]) ** 2).sum(axis=1)
    while len(chosen) < n_classes:
        nxt = int(np.argmax(d2))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((M - M[nxt]) ** 2).sum(axis=1))
    centroids = M[chosen].copy()

    assign = np.zeros(n, dtype=np.int64)
    for _ in range(100):
        dists = ((M[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = np.argmin(dists, axis=1)
        new_centroids = centroids.copy()
        for c in range(n_classes):
            members = M[assign == c]
            if len(members):
                new_centroids[c] = members.mean(axis=0)
            else:
                far = int(np.argmax(dists[np.arange(n), assign]))
                new_centroids[c] = M[far]
        move = float(np.abs(new_centroids - centroids).max())
        centroids = new_centroids
        if move < 1e-9:
            break

    out = []
    for c in range(n_classes):
        member_idx = np.flatnonzero(assign == c)
        members = M[member_idx]
        if len(members):
            ranges = [(float(members[:, j].min()), float(members[:, j].max()))
                      for j in range(M.shape[1])]
        else:
            ranges = [(0.0, 0.0)] * M.shape[1]
        out.append(ClassWeightVector(
            class_id=c,
            centroid=centroids[c],
            member_ids=sorted(catalog.items[i].item_id for i in member_idx),
            feature_ranges=ranges,
        ))
    return out


def preference_vector(
    record: PatientRecord,
    catalog: Catalog,
    span_days: int = DEFAULT_SPAN_DAYS,
    as_of: Date | None = None,
) -> PreferenceVector:
    """Frequency-weighted mean of the normalized vectors of eaten and liked items.

    Each intake entry inside the window counts once, each liked item counts
    once more; the weighted mean is then length-normalized. With no history
    at all the vector is uniform, so cold-start scoring stays well defined.
    """
    M, _ = normalized_matrix(catalog)
    index = {it.item_id: i for i, it in enumerate(catalog.items)}
    counts: dict[str, float] = {}
    if as_of is None:
        as_of = max((e.date for e in record.intake_log), default=Date.today())
    cutoff = as_of - timedelta(days=span_days - 1)
    for entry in record.intake_log:
        if entry.item_id is not None and cutoff <= entry.date <= as_of:
            counts[entry.item_id] = counts.get(entry.item_id, 0.0) + 1.0
    for item_id in record.liked_items:
        counts[item_id] = counts.get(item_id, 0.0) + 1.0

    m = M.shape[1]
    acc = np.zeros(m)
    total = 0.0
    for item_id, c in counts.items():
        i = index.get(item_id)
        if i is None:
            continue
        acc += c * M[i]
        total += c
    if total == 0.0:
        weights = np.full(m, 1.0 / np.sqrt(m))
    else:
        weights = acc / total
        norm = np.linalg.norm(weights)
        if norm > 0:
            weights = weights / norm
    return PreferenceVector(weights=weights, span_days=span_days)


def remaining_allowance(
    om: OptimizedRequirements,
    consumed: dict[str, float],
) -> dict[str, tuple[float, float | None]]:
    """Per-nutrient remaining budget (lo, hi) for the rest of the day.

    lo is the unmet adequate intake (floored at 0); hi is what is left under
    the maximum intake, or None when no cap applies. hi <= 0 means the cap is
    spent and the nutrient excludes any item still carrying it.
    """
    out = {}
    for nut in om.nutrients:
        if not nut.is_mandatory:
            continue
        eaten = consumed.get(nut.nutrient, 0.0)
        lo = max(0.0, nut.ai - eaten) if nut.ai is not None else 0.0
        hi = (nut.mi - eaten) if nut.mi is not None else None
        out[nut.nutrient] = (lo, hi)
    return out


def combined_vector(
    pwv: PreferenceVector,
    om: OptimizedRequirements,
    consumed: dict[str, float],
    catalog: Catalog,
) -> CombinedVector:
    """Overlay remaining-requirement weights on top of preference weights.

    A mandatory feature's weight is the midpoint of its remaining allowance
    mapped into the normalized feature space (an exhausted cap weighs 0);
    every other feature keeps its preference weight.
    """
    names = catalog.feature_names()
    idx = {n: i for i, n in enumerate(names)}
    mins, spans = feature_scaling(catalog)
    weights = pwv.weights.copy()
    mask = np.zeros(len(names), dtype=bool)
    remaining = remaining_allowance(om, consumed)

    for nutrient, (lo, hi) in remaining.items():
        i = idx.get(nutrient)
        if i is None:
            continue  # constraints outside the catalog feature set cannot be scored
        mask[i] = True
        if hi is not None and hi <= 0:
            weights[i] = 0.0
            continue
        mid = lo if hi is None else (lo + hi) / 2.0
        raw_mid = mid / BUDGET_UNIT_SCALE.get(nutrient, 1.0)
        if spans[i] > 0:
            weights[i] = float(np.clip((raw_mid - mins[i]) / spans[i], 0.0, 1.0))
        else:
            weights[i] = 0.0
    return CombinedVector(
        weights=weights,
        mandatory_mask=mask,
        remaining=remaining,
        preference_nonzero=int(np.count_nonzero(pwv.weights)),
    )


def _amount_fits(amount: float, lo: float, hi: float | None) -> bool:
    if hi is not None and hi <= 0:
        return amount <= 0  # exhausted cap: any positive amount fails
    if amount < lo:
        return False
    return hi is None or amount <= hi


def satisfies_budget(catalog: Catalog, item: FoodItemVector, uwv: CombinedVector) -> bool:
    """True when one serving of the item fits every remaining mandatory allowance."""
    amounts = per_serving_amounts(catalog, item)
    for nutrient, (lo, hi) in uwv.remaining.items():
        if nutrient not in amounts:
            continue
        if not _amount_fits(amounts[nutrient], lo, hi):
            return False
    return True


def rq_score(item: FoodItemVector, uwv: CombinedVector, catalog: Catalog) -> float:
    """Requirement satisfaction score.

    The base term is the dot product of the length-normalized item and
    combined vectors, divided by the count of nonzero preference features
    (plus epsilon) and clamped strictly below 1. The +1 bonus is granted
    exactly when every mandatory amount fits the remaining budget, so a score
    of at least 1 certifies full constraint satisfaction.
    """
    if len(item.values) != uwv.feature_count():
        raise DimensionMismatch(
            f"item has {len(item.values)} features, combined vector "
            f"{uwv.feature_count()}")
    mins, spans = feature_scaling(catalog)
    v = _normalized_item(catalog, item, mins, spans)
    nv = np.linalg.norm(v)
    w = uwv.weights
    nw = np.linalg.norm(w)
    if nv == 0.0 or nw == 0.0:
        base = 0.0
    else:
        base = float(np.dot(v / nv, w / nw)) / (uwv.preference_nonzero + EPSILON)
    base = float(np.clip(base, 0.0, 1.0 - EPSILON))
    if satisfies_budget(catalog, item, uwv):
        base += 1.0
    return base


def fit_report(catalog: Catalog, item: FoodItemVector, uwv: CombinedVector,
               consumed: dict[str, float]) -> list[dict]:
    amounts = per_serving_amounts(catalog, item)
    rows = []
    for nutrient, (lo, hi) in sorted(uwv.remaining.items()):
        amount = amounts.get(nutrient)
        if amount is None:
            continue
        rows.append({
            "nutrient": nutrient,
            "consumed": consumed.get(nutrient, 0.0),
            "remaining_lo": lo,
            "remaining_hi": hi,
            "amount": amount,
            "ok": _amount_fits(amount, lo, hi),
        })
    return rows


def recommend(
    record: PatientRecord,
    catalog: Catalog,
    om: OptimizedRequirements,
    meal_index: int,
    k: int = 5,
    top_classes: int = 3,
    n_classes: int = DEFAULT_CLASSES,
    seed: int = 0,
    clusters: list[ClassWeightVector] | None = None,
    as_of: Date | None = None,
    span_days: int = DEFAULT_SPAN_DAYS,
) -> Recommendation:
    """Top-k feasible items from the most preference-similar classes.

    Classes are ranked by cosine against the combined vector; within the top
    classes only items whose satisfaction score reaches 1 survive, ranked by
    preference similarity (ties by item id). Raises NoFeasibleItem when the
    remaining budget admits nothing, rather than returning an empty list.
    """
    if as_of is None:
        as_of = max((e.date for e in record.intake_log), default=Date.today())
    consumed = day_totals(record, as_of, catalog)
    pwv = preference_vector(record, catalog, span_days=span_days, as_of=as_of)
    uwv = combined_vector(pwv, om, consumed, catalog)
    if clusters is None:
        clusters = cluster_items(catalog, min(n_classes, len(catalog)), seed=seed)

    ranked_classes = sorted(
        clusters, key=lambda c: (-class_similarity(c, uwv), c.class_id))
    candidate_ids: list[str] = []
    seen = set()
    for cls in ranked_classes[:top_classes]:
        for item_id in cls.member_ids:
            if item_id not in seen:
                seen.add(item_id)
                candidate_ids.append(item_id)

    mins, spans = feature_scaling(catalog)
    scored = []
    for item_id in candidate_ids:
        item = catalog.item_vector(item_id)
        score = rq_score(item, uwv, catalog)
        if score < 1.0:
            continue
        sim = item_similarity(_normalized_item(catalog, item, mins, spans), pwv)
        scored.append((item, sim, score))
    if not scored:
        raise NoFeasibleItem(
            f"no candidate item fits the remaining budget for meal {meal_index}")

    scored.sort(key=lambda t: (-t[1], t[0].item_id))
    items = [
        RecommendedItem(
            item_id=item.item_id, name=item.name, similarity=sim, satisfaction=score,
            serving_size=item.serving_size,
            fit=fit_report(catalog, item, uwv, consumed),
        )
        for item, sim, score in scored[:k]
    ]
    return Recommendation(meal_index=meal_index, items=items)
