"""Food catalog built from USDA FoodData Central style CSV exports.

Every food item becomes a per-100g nutrient vector over one fixed, ordered
feature set, so items are directly comparable and safe to feed into both the
intake accounting and the recommender. A nutrient the source data does not
report for an item is stored as 0.0 with a "missing" flag so downstream
similarity code can tell true zeros from absent data.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import SCHEMA_VERSION
from .errors import EmptyCatalog, MissingColumn, UnitMismatch, UnknownItem
from .reference import BUDGET_UNIT_SCALE, DEFAULT_FEATURE_WHITELIST, FEATURE_UNITS

# (source unit, catalog unit) -> multiplicative factor
_UNIT_FACTORS = {
    ("g", "g"): 1.0,
    ("mg", "mg"): 1.0,
    ("g", "mg"): 1000.0,
    ("mg", "g"): 0.001,
    ("ug", "mg"): 0.001,
    ("µg", "mg"): 0.001,
    ("ug", "g"): 1e-6,
    ("kcal", "kcal"): 1.0,
    ("l", "l"): 1.0,
    ("ml", "l"): 0.001,
}

# FoodData Central spells some whitelist features differently.
_NAME_ALIASES = {
    "calories": ("energy",),
    "carbohydrate": ("carbohydrate, by difference",),
    "protein": ("protein",),
}


@dataclass(frozen=True)
class NutrientDef:
    """One catalog feature: identity, display name, and storage unit."""

    id: str
    name: str
    unit: str
    per_basis: str = "per 100 g"


@dataclass
class FoodItemVector:
    """A food item's per-100g amounts over the catalog feature set.

    ``missing[i]`` is True when the source data had no row for feature i;
    the stored value is then 0.0 but must not be read as a true zero.
    """

    item_id: str
    name: str
    values: list[float]
    missing: list[bool]
    serving_size: float = 100.0

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "name": self.name,
            "values": self.values,
            "missing": self.missing,
            "serving_size": self.serving_size,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FoodItemVector":
        return cls(
            item_id=d["item_id"],
            name=d["name"],
            values=[float(v) for v in d["values"]],
            missing=[bool(m) for m in d["missing"]],
            serving_size=float(d.get("serving_size", 100.0)),
        )


@dataclass
class Catalog:
    """Immutable-after-build collection of food item vectors.

    All item vectors share ``nutrients`` ordering; reads are safe from any
    number of threads once construction finishes.
    """

    nutrients: list[NutrientDef]
    items: list[FoodItemVector]
    _by_id: dict[str, FoodItemVector] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._by_id = {it.item_id: it for it in self.items}

    def feature_names(self) -> list[str]:
        return [n.name for n in self.nutrients]

    def feature_index(self) -> dict[str, int]:
        return {n.name: i for i, n in enumerate(self.nutrients)}

    def item_vector(self, item_id: str) -> FoodItemVector:
        """Look up one item by id. Pure read; raises UnknownItem when absent."""
        try:
            return self._by_id[item_id]
        except KeyError:
            raise UnknownItem(f"item {item_id!r} is not in the catalog") from None

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._by_id

    def __len__(self) -> int:
        return len(self.items)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "nutrients": [
                {"id": n.id, "name": n.name, "unit": n.unit, "per_basis": n.per_basis}
                for n in self.nutrients
            ],
            "items": [it.to_dict() for it in self.items],
        }

    def to_json(self) -> str:
        # Canonical form: same catalog always serializes byte-identically.
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "Catalog":
        nutrients = [
            NutrientDef(id=n["id"], name=n["name"], unit=n["unit"],
                        per_basis=n.get("per_basis", "per 100 g"))
            for n in d["nutrients"]
        ]
        items = [FoodItemVector.from_dict(it) for it in d["items"]]
        return cls(nutrients=nutrients, items=items)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "Catalog":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _normalize(name: str) -> str:
    return " ".join(name.strip().lower().split())


def _matches_feature(csv_name: str, feature: str) -> bool:
    """True when a source nutrient row names the whitelist feature."""
    cand = _normalize(csv_name)
    for probe in (feature, *_NAME_ALIASES.get(feature, ())):
        p = _normalize(probe)
        if cand == p:
            return True
        # "Sodium, Na" or "Potassium, K" style qualified names
        if cand.startswith(p) and len(cand) > len(p) and not cand[len(p)].isalnum():
            return True
    return False


def _read_csv(path: str | Path, required: tuple[str, ...]) -> list[dict]:
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        for col in required:
            if col not in cols:
                raise MissingColumn(f"{Path(path).name} is missing column {col!r}")
        return list(reader)


def ingest_fdc(
    food_file: str | Path,
    nutrient_file: str | Path,
    food_nutrient_file: str | Path,
    feature_whitelist: list[str] | None = None,
) -> Catalog:
    """Build a Catalog from the three FoodData Central export tables.

    ``food.csv`` needs ``fdc_id, description`` and may carry optional
    ``serving_size_g`` and ``amount_basis`` ("per_100g", the FDC default, or
    "per_serving") columns; per-serving amounts are rescaled to per 100 g.
    Items reporting none of the whitelisted nutrients are dropped. A
    whitelisted nutrient absent from ``nutrient.csv`` stays in the feature
    set with all-zero, missing-flagged values.
    """
    whitelist = list(feature_whitelist or DEFAULT_FEATURE_WHITELIST)
    nutrient_rows = _read_csv(nutrient_file, ("id", "name", "unit_name"))
    food_rows = _read_csv(food_file, ("fdc_id", "description"))
    fn_rows = _read_csv(food_nutrient_file, ("fdc_id", "nutrient_id", "amount"))

    # Map source nutrient id -> (feature index, unit factor).
    nutrient_map: dict[str, tuple[int, float]] = {}
    for fi, feature in enumerate(whitelist):
        target_unit = FEATURE_UNITS.get(feature)
        matched_any = False
        unconvertible: list[str] = []
        for row in nutrient_rows:
            if not _matches_feature(row["name"], feature):
                continue
            src_unit = row["unit_name"].strip().lower()
            unit = target_unit or src_unit
            factor = _UNIT_FACTORS.get((src_unit, unit))
            if factor is None:
                unconvertible.append(f"{row['name']} [{row['unit_name']}]")
                continue
            nutrient_map[str(row["id"])] = (fi, factor)
            matched_any = True
        if not matched_any and unconvertible:
            raise UnitMismatch(
                f"no convertible unit for {feature!r}: found {', '.join(unconvertible)}"
            )

    n_feat = len(whitelist)
    values: dict[str, list[float]] = {}
    present: dict[str, list[bool]] = {}
    meta: dict[str, dict] = {}
    for row in food_rows:
        fid = str(row["fdc_id"]).strip()
        if not fid:
            continue
        values[fid] = [0.0] * n_feat
        present[fid] = [False] * n_feat
        meta[fid] = {
            "name": row["description"].strip(),
            "serving_size": float(row.get("serving_size_g") or 100.0),
            "basis": (row.get("amount_basis") or "per_100g").strip().lower(),
        }

    for row in fn_rows:
        fid = str(row["fdc_id"]).strip()
        if fid not in values:
            continue
        hit = nutrient_map.get(str(row["nutrient_id"]).strip())
        if hit is None:
            continue
        fi, factor = hit
        amount = float(row["amount"] or 0.0)
        values[fid][fi] = amount * factor
        present[fid][fi] = True

    nutrients = [
        NutrientDef(id=f"f{idx}", name=name, unit=FEATURE_UNITS.get(name, ""))
        for idx, name in enumerate(whitelist)
    ]
    items = []
    for fid in sorted(values):
        if not any(present[fid]):
            continue
        m = meta[fid]
        vec = values[fid]
        if m["basis"] == "per_serving":
            scale = 100.0 / m["serving_size"]
            vec = [v * scale for v in vec]
        items.append(FoodItemVector(
            item_id=fid,
            name=m["name"],
            values=[float(v) for v in vec],
            missing=[not p for p in present[fid]],
            serving_size=m["serving_size"],
        ))
    if not items:
        raise EmptyCatalog("no food item reports any whitelisted nutrient")
    return Catalog(nutrients=nutrients, items=items)


def item_vector(catalog: Catalog, item_id: str) -> FoodItemVector:
    return catalog.item_vector(item_id)


def amounts_for_grams(catalog: Catalog, item: FoodItemVector, grams: float) -> dict[str, float]:
    """Nutrient amounts, in daily-budget units, for eating ``grams`` of an item."""
    out = {}
    for idx, ndef in enumerate(catalog.nutrients):
        scale = BUDGET_UNIT_SCALE.get(ndef.name, 1.0)
        out[ndef.name] = item.values[idx] * (grams / 100.0) * scale
    return out


def per_serving_amounts(catalog: Catalog, item: FoodItemVector) -> dict[str, float]:
    """Nutrient amounts, in daily-budget units, for one serving of an item."""
    return amounts_for_grams(catalog, item, item.serving_size)
