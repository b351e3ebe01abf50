"""Deterministic synthetic patient cohorts for development and evaluation.

Real dialysis lab histories are private, so the evaluation harness runs on
generated patients whose next-day serum levels follow a linear recurrence:

    serum[t+1] = eq + carryover * (serum[t] - eq)
                    + intake_gain * (intake[t] - intake_reference) + noise

clipped to the physiologic bounds per analyte. Intake is sampled meal by meal
from a fixture catalog, so the generated files exercise the same ingestion,
accounting, and windowing paths as real data would.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date as Date, timedelta
from pathlib import Path

import numpy as np

from . import SCHEMA_VERSION
from .catalog import Catalog, FoodItemVector, NutrientDef
from .errors import InvalidConfig
from .patient import (
    IntakeLogEntry,
    LabReport,
    PatientRecord,
    day_totals,
    save_intake_csv,
    save_labs_csv,
)
from .reference import (
    DEFAULT_FEATURE_WHITELIST,
    FEATURE_UNITS,
    PHYSIOLOGIC_BOUNDS,
    PREDICTED_ANALYTES,
)

COHORT_START = Date(2025, 1, 1)

# Background serum levels for the non-predicted panel analytes: (mean, sd).
_PANEL_NOISE = {
    "a_gap": (10.0, 0.8),
    "calcium": (9.4, 0.25),
    "chloride": (101.0, 1.5),
    "co2": (25.0, 1.2),
    "creatinine": (0.8, 0.08),
    "phosphorus": (3.6, 0.3),
}

# Per-100g sampling ranges for the fixture catalog.
_ITEM_RANGES = {
    "chloride": (10.0, 600.0),
    "iron": (0.0, 5.0),
    "phosphorus": (20.0, 300.0),
    "potassium": (30.0, 600.0),
    "sodium": (5.0, 800.0),
    "protein": (1.0, 30.0),
    "water": (5.0, 95.0),
    "calories": (40.0, 500.0),
    "carbohydrate": (2.0, 70.0),
}


@dataclass(frozen=True)
class AnalyteDynamics:
    """Coefficients for one analyte's next-day recurrence."""

    equilibrium: float
    carryover: float          # fraction of today's deviation kept tomorrow
    intake_gain: float        # serum units per driver unit above reference
    intake_reference: float   # daily driver intake at which serum holds steady
    noise_sigma: float
    driver: str               # day-total key that drives the analyte


def default_dynamics(noise_scale: float = 0.05) -> dict[str, AnalyteDynamics]:
    """Dynamics tuned so swings stay inside physiologic bounds.

    ``noise_scale`` sets each sigma as a fraction of the analyte's full
    hypo-to-hyper range.
    """
    def sigma(analyte: str) -> float:
        lo, _, hi = PHYSIOLOGIC_BOUNDS[analyte]
        return noise_scale * (hi - lo)

    return {
        "sodium": AnalyteDynamics(equilibrium=136.12, carryover=0.78, intake_gain=0.0032,
                                  intake_reference=1800.0, noise_sigma=sigma("sodium"),
                                  driver="sodium"),
        "potassium": AnalyteDynamics(equilibrium=3.86, carryover=0.78, intake_gain=0.00085,
                                     intake_reference=1400.0, noise_sigma=sigma("potassium"),
                                     driver="potassium"),
        "bun": AnalyteDynamics(equilibrium=79.89, carryover=0.82, intake_gain=0.32,
                               intake_reference=70.0, noise_sigma=sigma("bun"),
                               driver="protein"),
    }


@dataclass
class SynthCohortConfig:
    n_patients: int = 5
    n_days: int = 120
    seed: int = 7
    noise_scale: float = 0.05
    lab_cadence_days: int = 1
    meals_per_day: int = 3
    age_band: str = "4-8y"
    catalog_items: int = 24
    dynamics: dict[str, AnalyteDynamics] = field(default_factory=dict)

    def __post_init__(self):
        if not self.dynamics:
            self.dynamics = default_dynamics(self.noise_scale)
        if self.n_patients < 1 or self.n_days < 2:
            raise InvalidConfig("need at least 1 patient and 2 days")
        if self.lab_cadence_days < 1:
            raise InvalidConfig("lab cadence must be >= 1 day")
        if self.noise_scale < 0:
            raise InvalidConfig("noise scale must be >= 0")
        for analyte, dyn in self.dynamics.items():
            if not 0.0 < dyn.carryover < 1.0:
                raise InvalidConfig(f"{analyte}: carryover must be in (0, 1)")
            if dyn.noise_sigma < 0:
                raise InvalidConfig(f"{analyte}: noise sigma must be >= 0")


def serum_step(dyn: AnalyteDynamics, serum_today: float, intake_today: float,
               noise: float = 0.0) -> float:
    """One step of the serum recurrence (before clipping).

    With intake held at the reference and no noise, repeated application
    converges geometrically to the equilibrium.
    """
    return (dyn.equilibrium
            + dyn.carryover * (serum_today - dyn.equilibrium)
            + dyn.intake_gain * (intake_today - dyn.intake_reference)
            + noise)


def fixture_catalog(n_items: int = 24, seed: int = 0) -> Catalog:
    """A deterministic catalog with wide nutrient variety across items."""
    rng = np.random.default_rng([seed, 9301])
    nutrients = [NutrientDef(id=f"f{i}", name=name, unit=FEATURE_UNITS[name])
                 for i, name in enumerate(DEFAULT_FEATURE_WHITELIST)]
    items = []
    for i in range(n_items):
        values = [round(float(rng.uniform(*_ITEM_RANGES[name])), 2)
                  for name in DEFAULT_FEATURE_WHITELIST]
        items.append(FoodItemVector(
            item_id=f"syn{i + 1:03d}",
            name=f"synthetic food {i + 1:03d}",
            values=values,
            missing=[False] * len(values),
            serving_size=round(float(rng.uniform(60.0, 250.0)), 0),
        ))
    return Catalog(nutrients=nutrients, items=items)


def _sample_intake(rng: np.random.Generator, catalog: Catalog, day: Date,
                   meals_per_day: int) -> list[IntakeLogEntry]:
    entries = []
    n = len(catalog.items)
    for meal in range(1, meals_per_day + 1):
        item = catalog.items[int(rng.integers(n))]
        grams = round(float(rng.uniform(80.0, 220.0)), 1)
        entries.append(IntakeLogEntry(date=day, meal_index=meal,
                                      item_id=item.item_id, grams=grams))
    if rng.random() < 0.3:
        entries.append(IntakeLogEntry(
            date=day, meal_index=2,
            direct={"beneprotein": round(float(rng.uniform(3.0, 12.0)), 1)}))
    if rng.random() < 0.2:
        entries.append(IntakeLogEntry(
            date=day, meal_index=3,
            direct={"sodium_polystyrene_sulfonate": round(float(rng.uniform(1.0, 5.0)), 1)}))
    entries.append(IntakeLogEntry(date=day, meal_index=meals_per_day + 1,
                                  water_liters=round(float(rng.uniform(0.8, 2.0)), 2)))
    return entries


def generate_cohort(config: SynthCohortConfig, out_dir: str | Path) -> dict:
    """Write a complete cohort tree and return its manifest.

    Layout: catalog.json, manifest.json, and per patient a directory with
    profile.json, labs.csv, and intake.csv in the standard file formats.
    Same config and seed always produce identical bytes.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    catalog = fixture_catalog(config.catalog_items, seed=config.seed)
    catalog.save(out_dir / "catalog.json")

    patients = []
    for pidx in range(config.n_patients):
        rng = np.random.default_rng([config.seed, pidx])
        patient_id = f"p{pidx + 1}"
        pdir = out_dir / patient_id
        pdir.mkdir(exist_ok=True)

        liked = sorted(it.item_id for it in
                       (catalog.items[int(rng.integers(len(catalog.items)))]
                        for _ in range(3)))
        # Charted constraints, the way a renal prescription reads: caps on the
        # restricted nutrients, a protein floor in g/day, everything else not
        # mandatory. Population AI defaults stay out of the mandatory set so a
        # single food item is never asked to close a whole day's adequacy gap.
        profile = {
            "schema_version": SCHEMA_VERSION,
            "patient_id": patient_id,
            "age_band": config.age_band,
            "nutrient_overrides": [
                {"nutrient": "chloride", "ai": None, "mi": None, "unit": "mg/d"},
                {"nutrient": "iron", "ai": None, "mi": None, "unit": "mg/d"},
                {"nutrient": "phosphorus", "ai": None, "mi": 3000.0, "unit": "mg/d"},
                {"nutrient": "potassium", "ai": None, "mi": 2500.0, "unit": "mg/d"},
                {"nutrient": "sodium", "ai": None, "mi": 2300.0, "unit": "mg/d"},
                {"nutrient": "protein", "ai": 15.0, "mi": 110.0, "unit": "g/d"},
                {"nutrient": "water", "ai": None, "mi": None, "unit": "L/d"},
            ],
            "liked_items": liked,
        }
        (pdir / "profile.json").write_text(json.dumps(profile, indent=2, sort_keys=True))

        record = PatientRecord(patient_id=patient_id, age_band=config.age_band)
        days = [COHORT_START + timedelta(days=i) for i in range(config.n_days)]
        for day in days:
            record.intake_log.extend(
                _sample_intake(rng, catalog, day, config.meals_per_day))
        totals_by_day = [day_totals(record, day, catalog) for day in days]
        driver_totals = {
            analyte: np.array([t[dyn.driver] for t in totals_by_day])
            for analyte, dyn in config.dynamics.items()
        }

        serum = {}
        for analyte, dyn in config.dynamics.items():
            lo, _, hi = PHYSIOLOGIC_BOUNDS[analyte]
            s = np.empty(config.n_days)
            s[0] = np.clip(dyn.equilibrium + rng.normal(0.0, dyn.noise_sigma), lo, hi)
            for t in range(config.n_days - 1):
                s[t + 1] = np.clip(
                    serum_step(dyn, s[t], driver_totals[analyte][t],
                               rng.normal(0.0, dyn.noise_sigma)),
                    lo, hi)
            serum[analyte] = s

        panel = {}
        for analyte, (mean, sd) in _PANEL_NOISE.items():
            series = np.empty(config.n_days)
            series[0] = mean
            for t in range(config.n_days - 1):
                series[t + 1] = mean + 0.8 * (series[t] - mean) + rng.normal(0.0, sd * 0.6)
            panel[analyte] = series

        labs = []
        for t, day in enumerate(days):
            if t % config.lab_cadence_days != 0:
                continue
            results = {a: round(float(serum[a][t]), 4) for a in PREDICTED_ANALYTES}
            results.update({a: round(float(panel[a][t]), 4) for a in panel})
            labs.append(LabReport(date=day, results=results, source="outpatient"))

        save_labs_csv(pdir / "labs.csv", labs)
        save_intake_csv(pdir / "intake.csv", record.intake_log, catalog)
        patients.append({"patient_id": patient_id, "dir": patient_id})

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "seed": config.seed,
        "n_patients": config.n_patients,
        "n_days": config.n_days,
        "noise_scale": config.noise_scale,
        "lab_cadence_days": config.lab_cadence_days,
        "catalog": "catalog.json",
        "patients": patients,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest
