"""Per-patient state: constraint sets, lab history, and the daily intake log.

A patient record is append-mostly: labs insert in date order, intake entries
append per day, and cumulative day totals are recomputed from the log on
demand so they always equal the sum over entries. Writes to one record must
be serialized by the caller; reads of a snapshot are free.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path

from . import SCHEMA_VERSION
from .catalog import Catalog
from .errors import DuplicateDate, NegativeAmount, UnknownAgeBand, UnknownItem
from .reference import (
    BUDGET_UNIT_SCALE,
    DIETARY_REFERENCE_INTAKES,
    NUTRIENT_UNITS,
    PREDICTED_ANALYTES,
    SERUM_RANGES,
    SUPPLEMENT_EFFECTS,
    canonical_analyte,
)


@dataclass
class MandatoryElectrolyte:
    """Safe serum range for one analyte. ``min`` < ``max`` always."""

    analyte: str
    min: float
    max: float
    unit: str = ""

    def to_dict(self) -> dict:
        return {"analyte": self.analyte, "min": self.min, "max": self.max, "unit": self.unit}

    @classmethod
    def from_dict(cls, d: dict) -> "MandatoryElectrolyte":
        return cls(analyte=d["analyte"], min=float(d["min"]), max=float(d["max"]),
                   unit=d.get("unit", ""))


@dataclass
class MandatoryNutrient:
    """Daily intake bounds for one nutrient.

    ``ai`` (adequate intake) and ``mi`` (maximum intake) may each be None,
    meaning not mandatory on that side. A nutrient with both None is kept
    for display but never filters recommendations.
    """

    nutrient: str
    ai: float | None
    mi: float | None
    unit: str = ""

    @property
    def is_mandatory(self) -> bool:
        return self.ai is not None or self.mi is not None

    def to_dict(self) -> dict:
        return {"nutrient": self.nutrient, "ai": self.ai, "mi": self.mi, "unit": self.unit}

    @classmethod
    def from_dict(cls, d: dict) -> "MandatoryNutrient":
        ai = d.get("ai")
        mi = d.get("mi")
        return cls(nutrient=d["nutrient"],
                   ai=None if ai is None else float(ai),
                   mi=None if mi is None else float(mi),
                   unit=d.get("unit", ""))


@dataclass
class LabReport:
    """One dated panel of serum results, keyed by canonical analyte name."""

    date: Date
    results: dict[str, float]
    source: str = "outpatient"

    def to_dict(self) -> dict:
        return {"date": self.date.isoformat(), "results": self.results, "source": self.source}

    @classmethod
    def from_dict(cls, d: dict) -> "LabReport":
        return cls(date=Date.fromisoformat(d["date"]),
                   results={canonical_analyte(k): float(v) for k, v in d["results"].items()},
                   source=d.get("source", "outpatient"))


@dataclass
class IntakeLogEntry:
    """One logged meal component.

    Either a catalog item (``item_id`` + ``grams``) or ``direct`` amounts.
    ``direct`` keys may be nutrient names (amount in budget units), supplement
    names (dose in grams), or "water" (liters). ``water_liters`` is a shortcut
    for plain water.
    """

    date: Date
    meal_index: int
    item_id: str | None = None
    grams: float = 0.0
    direct: dict[str, float] = field(default_factory=dict)
    water_liters: float = 0.0

    def to_dict(self) -> dict:
        return {
            "date": self.date.isoformat(),
            "meal_index": self.meal_index,
            "item_id": self.item_id,
            "grams": self.grams,
            "direct": self.direct,
            "water_liters": self.water_liters,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IntakeLogEntry":
        return cls(
            date=Date.fromisoformat(d["date"]),
            meal_index=int(d["meal_index"]),
            item_id=d.get("item_id"),
            grams=float(d.get("grams", 0.0)),
            direct={k: float(v) for k, v in (d.get("direct") or {}).items()},
            water_liters=float(d.get("water_liters", 0.0)),
        )


@dataclass
class PatientRecord:
    patient_id: str
    age_band: str
    mandatory_electrolytes: list[MandatoryElectrolyte] = field(default_factory=list)
    mandatory_nutrients: list[MandatoryNutrient] = field(default_factory=list)
    labs: list[LabReport] = field(default_factory=list)
    intake_log: list[IntakeLogEntry] = field(default_factory=list)
    liked_items: set[str] = field(default_factory=set)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "patient_id": self.patient_id,
            "age_band": self.age_band,
            "mandatory_electrolytes": [e.to_dict() for e in self.mandatory_electrolytes],
            "mandatory_nutrients": [n.to_dict() for n in self.mandatory_nutrients],
            "labs": [l.to_dict() for l in self.labs],
            "intake_log": [e.to_dict() for e in self.intake_log],
            "liked_items": sorted(self.liked_items),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PatientRecord":
        return cls(
            patient_id=d["patient_id"],
            age_band=d["age_band"],
            mandatory_electrolytes=[MandatoryElectrolyte.from_dict(x)
                                    for x in d.get("mandatory_electrolytes", [])],
            mandatory_nutrients=[MandatoryNutrient.from_dict(x)
                                 for x in d.get("mandatory_nutrients", [])],
            labs=sorted((LabReport.from_dict(x) for x in d.get("labs", [])),
                        key=lambda l: l.date),
            intake_log=[IntakeLogEntry.from_dict(x) for x in d.get("intake_log", [])],
            liked_items=set(d.get("liked_items", [])),
        )


def default_mandatory_electrolytes(
    overrides: dict[str, dict] | None = None,
) -> list[MandatoryElectrolyte]:
    """Standard serum ranges for the predicted analytes, with per-patient overrides.

    An override is a partial dict per analyte, e.g. ``{"potassium": {"max": 5.5}}``;
    analytes not in the standard panel may be added by giving both bounds.
    """
    overrides = {canonical_analyte(k): v for k, v in (overrides or {}).items()}
    out = []
    for analyte in PREDICTED_ANALYTES:
        base = SERUM_RANGES[analyte]
        ov = overrides.pop(analyte, {})
        out.append(MandatoryElectrolyte(
            analyte=analyte,
            min=float(ov.get("min", base["min"])),
            max=float(ov.get("max", base["max"])),
            unit=ov.get("unit", base["unit"]),
        ))
    for analyte, ov in sorted(overrides.items()):
        out.append(MandatoryElectrolyte(
            analyte=analyte, min=float(ov["min"]), max=float(ov["max"]),
            unit=ov.get("unit", SERUM_RANGES.get(analyte, {}).get("unit", "")),
        ))
    return out


def default_mandatory_nutrients(
    age_band: str,
    overrides: list[MandatoryNutrient] | None = None,
) -> list[MandatoryNutrient]:
    """Age-band intake defaults with per-patient overrides applied.

    An override replaces the whole row for its nutrient (a prescribed value
    supersedes the population default on both sides); overrides for nutrients
    outside the default table are appended. Deterministic and override-
    monotone: nutrients without an override come out identical.
    """
    band = age_band.strip().lower().replace(" ", "").replace("–", "-")
    if band not in DIETARY_REFERENCE_INTAKES:
        raise UnknownAgeBand(
            f"unknown age band {age_band!r}; expected one of "
            f"{sorted(DIETARY_REFERENCE_INTAKES)}")
    by_name = {o.nutrient: o for o in (overrides or [])}
    out = []
    for nutrient, (ai, mi) in DIETARY_REFERENCE_INTAKES[band].items():
        if nutrient in by_name:
            out.append(by_name.pop(nutrient))
        else:
            out.append(MandatoryNutrient(nutrient=nutrient, ai=ai, mi=mi,
                                         unit=NUTRIENT_UNITS.get(nutrient, "")))
    for nutrient in sorted(by_name):
        out.append(by_name[nutrient])
    return out


def record_lab(record: PatientRecord, report: LabReport) -> PatientRecord:
    """Insert a lab report keeping the list date-sorted.

    Re-submitting the identical report is a no-op; a different panel for an
    existing date raises DuplicateDate.
    """
    for existing in record.labs:
        if existing.date == report.date:
            if existing.results == report.results and existing.source == report.source:
                return record
            raise DuplicateDate(
                f"conflicting lab report for {record.patient_id} on {report.date}")
    record.labs.append(report)
    record.labs.sort(key=lambda l: l.date)
    return record


def latest_lab_on_or_before(record: PatientRecord, day: Date) -> LabReport | None:
    hit = None
    for report in record.labs:  # labs are kept sorted ascending
        if report.date > day:
            break
        hit = report
    return hit


def day_totals(record: PatientRecord, day: Date, catalog: Catalog) -> dict[str, float]:
    """Cumulative intake for one day, in budget units.

    Keys are every catalog nutrient, every known supplement (dose grams), and
    "water" (liters). Food items contribute grams/100 of their per-100g
    vector; supplement doses add their signed nutrient deltas; order of
    logging never changes the result.
    """
    totals = {name: 0.0 for name in catalog.feature_names()}
    for supp in SUPPLEMENT_EFFECTS:
        totals.setdefault(supp, 0.0)
    totals.setdefault("water", 0.0)

    for entry in record.intake_log:
        if entry.date != day:
            continue
        if entry.item_id is not None:
            item = catalog.item_vector(entry.item_id)
            for idx, ndef in enumerate(catalog.nutrients):
                scale = BUDGET_UNIT_SCALE.get(ndef.name, 1.0)
                totals[ndef.name] += item.values[idx] * (entry.grams / 100.0) * scale
        for name, amount in entry.direct.items():
            if name in SUPPLEMENT_EFFECTS:
                totals[name] += amount
                for nutrient, per_gram in SUPPLEMENT_EFFECTS[name].items():
                    totals[nutrient] = totals.get(nutrient, 0.0) + amount * per_gram
            elif name == "water" or name in totals:
                totals[name] += amount
            else:
                raise UnknownItem(f"{name!r} is neither a catalog nutrient, a known "
                                  f"supplement, nor water")
        totals["water"] += entry.water_liters
    return totals


def log_meal(
    record: PatientRecord,
    entry: IntakeLogEntry,
    catalog: Catalog,
    today: Date | None = None,
) -> dict[str, float]:
    """Append one intake entry and return the day's running totals row."""
    if today is not None and entry.date > today:
        raise ValueError(f"meal date {entry.date} is in the future")
    if entry.grams < 0 or entry.water_liters < 0 or any(v < 0 for v in entry.direct.values()):
        raise NegativeAmount("logged amounts must be >= 0")
    if entry.meal_index < 1:
        raise ValueError("meal_index starts at 1")
    if entry.item_id is not None and entry.item_id not in catalog:
        raise UnknownItem(f"item {entry.item_id!r} is not in the catalog")
    for name in entry.direct:
        if name not in SUPPLEMENT_EFFECTS and name != "water" \
                and name not in catalog.feature_names():
            raise UnknownItem(f"{name!r} is neither a catalog nutrient, a known "
                              f"supplement, nor water")
    record.intake_log.append(entry)
    return day_totals(record, entry.date, catalog)


# --- file formats ---------------------------------------------------------
# Lab CSV:    date,analyte,value,source     (one analyte per row)
# Intake CSV: date,meal_index,ref,amount,unit
#   ref is a catalog item_id (amount = grams), a supplement name (grams),
#   a nutrient name (budget units), or "water" (liters).


def load_labs_csv(path: str | Path) -> list[LabReport]:
    rows = list(csv.DictReader(open(path, newline="", encoding="utf-8")))
    by_date: dict[str, LabReport] = {}
    for row in rows:
        d = row["date"]
        rep = by_date.setdefault(d, LabReport(date=Date.fromisoformat(d), results={},
                                              source=row.get("source", "outpatient")))
        rep.results[canonical_analyte(row["analyte"])] = float(row["value"])
    return [by_date[d] for d in sorted(by_date)]


def save_labs_csv(path: str | Path, labs: list[LabReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "analyte", "value", "source"])
        for rep in sorted(labs, key=lambda l: l.date):
            for analyte in sorted(rep.results):
                w.writerow([rep.date.isoformat(), analyte, repr(rep.results[analyte]),
                            rep.source])


def load_intake_csv(path: str | Path, catalog: Catalog) -> list[IntakeLogEntry]:
    entries: list[IntakeLogEntry] = []
    for row in csv.DictReader(open(path, newline="", encoding="utf-8")):
        day = Date.fromisoformat(row["date"])
        meal = int(row["meal_index"])
        ref = row["ref"].strip()
        amount = float(row["amount"])
        if ref in catalog:
            entries.append(IntakeLogEntry(date=day, meal_index=meal,
                                          item_id=ref, grams=amount))
        elif ref == "water":
            entries.append(IntakeLogEntry(date=day, meal_index=meal, water_liters=amount))
        else:
            entries.append(IntakeLogEntry(date=day, meal_index=meal, direct={ref: amount}))
    return entries


def save_intake_csv(path: str | Path, entries: list[IntakeLogEntry],
                    catalog: Catalog) -> None:
    unit_by_name = {n.name: n.unit for n in catalog.nutrients}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "meal_index", "ref", "amount", "unit"])
        for e in entries:
            day = e.date.isoformat()
            if e.item_id is not None:
                w.writerow([day, e.meal_index, e.item_id, repr(e.grams), "g"])
            for name, amount in e.direct.items():
                unit = "g" if name in SUPPLEMENT_EFFECTS else \
                    ("L" if name == "water" else unit_by_name.get(name, ""))
                w.writerow([day, e.meal_index, name, repr(amount), unit])
            if e.water_liters:
                w.writerow([day, e.meal_index, "water", repr(e.water_liters), "L"])


def load_profile_json(path: str | Path) -> PatientRecord:
    """Profile file: ids, age band, overrides, liked items; no history."""
    d = json.loads(Path(path).read_text())
    nutrient_overrides = [MandatoryNutrient.from_dict(x)
                          for x in d.get("nutrient_overrides", [])]
    return PatientRecord(
        patient_id=d["patient_id"],
        age_band=d["age_band"],
        mandatory_electrolytes=default_mandatory_electrolytes(d.get("electrolyte_overrides")),
        mandatory_nutrients=default_mandatory_nutrients(d["age_band"], nutrient_overrides),
        liked_items=set(d.get("liked_items", [])),
    )
