from datetime import date, timedelta

import pytest

from nutricast.catalog import Catalog, ingest_fdc
from nutricast.cohort import SynthCohortConfig, fixture_catalog, generate_cohort
from nutricast.evaluation import load_cohort_record
from nutricast.patient import (
    IntakeLogEntry,
    LabReport,
    PatientRecord,
    default_mandatory_electrolytes,
    default_mandatory_nutrients,
    record_lab,
)

DAY1 = date(2025, 3, 1)


def write_fdc_fixture(dirpath, items=None, nutrients=None, amounts=None,
                      extra_food_cols=False):
    """Write the three FoodData Central style CSVs used by ingestion tests."""
    items = items if items is not None else [
        ("1001", "white rice, cooked"),
        ("1002", "banana, raw"),
        ("1003", "chicken broth"),
    ]
    nutrients = nutrients if nutrients is not None else [
        ("301", "Sodium, Na", "MG"),
        ("302", "Potassium, K", "MG"),
        ("303", "Protein", "G"),
    ]
    amounts = amounts if amounts is not None else [
        ("1001", "301", "1.0"), ("1001", "302", "35.0"), ("1001", "303", "2.7"),
        ("1002", "301", "1.0"), ("1002", "302", "358.0"), ("1002", "303", "1.1"),
        ("1003", "301", "371.0"), ("1003", "302", "86.0"), ("1003", "303", "1.4"),
    ]
    def write(path, header, rows):
        import csv
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)

    food = dirpath / "food.csv"
    if extra_food_cols:
        write(food, ["fdc_id", "description", "serving_size_g", "amount_basis"], items)
    else:
        write(food, ["fdc_id", "description"], items)
    write(dirpath / "nutrient.csv", ["id", "name", "unit_name"], nutrients)
    write(dirpath / "food_nutrient.csv", ["fdc_id", "nutrient_id", "amount"], amounts)
    return (food, dirpath / "nutrient.csv", dirpath / "food_nutrient.csv")


@pytest.fixture
def tiny_catalog(tmp_path) -> Catalog:
    files = write_fdc_fixture(tmp_path)
    return ingest_fdc(*files, feature_whitelist=["sodium", "potassium", "protein"])


@pytest.fixture
def synth_catalog() -> Catalog:
    return fixture_catalog(n_items=12, seed=1)


def make_patient(patient_id="p1", age_band="4-8y", overrides=None) -> PatientRecord:
    return PatientRecord(
        patient_id=patient_id,
        age_band=age_band,
        mandatory_electrolytes=default_mandatory_electrolytes(),
        mandatory_nutrients=default_mandatory_nutrients(age_band, overrides or []),
    )


def seed_history(record, catalog, n_days=12, start=DAY1):
    """Daily labs and one simple meal per day, enough to window and train."""
    for i in range(n_days):
        day = start + timedelta(days=i)
        record_lab(record, LabReport(date=day, results={
            "sodium": 136.0 + (i % 5) * 0.8,
            "potassium": 3.8 + (i % 4) * 0.1,
            "bun": 60.0 + (i % 6) * 2.0,
            "a_gap": 10.0, "calcium": 9.4, "chloride": 101.0,
            "co2": 25.0, "creatinine": 0.8, "phosphorus": 3.6,
        }))
        record.intake_log.append(IntakeLogEntry(
            date=day, meal_index=1,
            item_id=catalog.items[i % len(catalog.items)].item_id,
            grams=100.0 + 10.0 * (i % 3)))
        record.intake_log.append(IntakeLogEntry(
            date=day, meal_index=2, water_liters=1.0 + 0.1 * (i % 4)))
    return record


@pytest.fixture
def small_cohort(tmp_path):
    """One-patient, 60-day cohort on disk plus its loaded record and catalog."""
    out = tmp_path / "cohort"
    config = SynthCohortConfig(n_patients=1, n_days=60, seed=11, noise_scale=0.03)
    manifest = generate_cohort(config, out)
    catalog = Catalog.load(out / manifest["catalog"])
    record = load_cohort_record(out / manifest["patients"][0]["dir"], catalog)
    return {"dir": out, "manifest": manifest, "catalog": catalog, "record": record}
