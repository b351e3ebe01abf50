"""Command-line surface. Every verb is a thin wrapper over one service call.

Errors leave with a nonzero exit code and a machine-readable JSON object on
stderr: {"error": <exception class>, "message": <text>}.
"""

from __future__ import annotations

import functools
import json
import sys
from datetime import date as Date

import click

from .catalog import ingest_fdc
from .cohort import SynthCohortConfig, generate_cohort
from .errors import NutricastError
from .evaluation import evaluate_pipeline
from .forest import FAST_GRID
from .patient import (
    IntakeLogEntry,
    LabReport,
    MandatoryNutrient,
    PatientRecord,
    default_mandatory_electrolytes,
    default_mandatory_nutrients,
)
from .reference import PREDICTED_ANALYTES, canonical_analyte
from .workspace import Workspace
from . import service


def _fail(err: Exception) -> None:
    payload = {"error": type(err).__name__, "message": str(err)}
    click.echo(json.dumps(payload), err=True)
    sys.exit(1)


def handles_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NutricastError as err:
            _fail(err)
        except (ValueError, FileNotFoundError) as err:
            _fail(err)
    return wrapper


def _emit(doc) -> None:
    click.echo(json.dumps(doc, indent=2, sort_keys=True, default=str))


@click.group()
@click.option("--workspace", "workspace_dir", envvar="NUTRICAST_WORKSPACE",
              default="workspace", show_default=True,
              help="Directory holding catalog, patients, models, and cycles.")
@click.pass_context
def main(ctx, workspace_dir):
    """Forecast next-day serum analytes and recommend foods that fit the budget."""
    ctx.obj = Workspace(workspace_dir)


@main.command()
@click.option("--food", "food_file", required=True, type=click.Path(exists=True))
@click.option("--nutrient", "nutrient_file", required=True, type=click.Path(exists=True))
@click.option("--food-nutrient", "food_nutrient_file", required=True,
              type=click.Path(exists=True))
@click.option("--whitelist", default=None,
              help="Comma-separated nutrient names; defaults to the standard set.")
@click.pass_obj
@handles_errors
def ingest(ws, food_file, nutrient_file, food_nutrient_file, whitelist):
    """Build the food catalog from FoodData Central style CSVs."""
    names = [w.strip() for w in whitelist.split(",")] if whitelist else None
    catalog = ingest_fdc(food_file, nutrient_file, food_nutrient_file, names)
    ws.save_catalog(catalog)
    _emit({"items": len(catalog), "features": catalog.feature_names(),
           "path": str(ws.catalog_path)})


@main.group()
def patient():
    """Create and inspect patient records."""


@patient.command("add")
@click.option("--id", "patient_id", required=True)
@click.option("--age-band", required=True)
@click.option("--nutrient-override", "nutrient_overrides", multiple=True,
              help='JSON like {"nutrient": "protein", "ai": 38, "mi": null, "unit": "g/d"}')
@click.option("--electrolyte-override", "electrolyte_overrides", default=None,
              help='JSON like {"potassium": {"max": 5.5}}')
@click.option("--liked", default="", help="Comma-separated liked item ids.")
@click.pass_obj
@handles_errors
def patient_add(ws, patient_id, age_band, nutrient_overrides, electrolyte_overrides, liked):
    overrides = [MandatoryNutrient.from_dict(json.loads(o)) for o in nutrient_overrides]
    record = PatientRecord(
        patient_id=patient_id,
        age_band=age_band,
        mandatory_electrolytes=default_mandatory_electrolytes(
            json.loads(electrolyte_overrides) if electrolyte_overrides else None),
        mandatory_nutrients=default_mandatory_nutrients(age_band, overrides),
        liked_items={s.strip() for s in liked.split(",") if s.strip()},
    )
    service.add_patient(ws, record)
    _emit({"patient_id": patient_id, "path": str(ws.patient_path(patient_id))})


@patient.command("show")
@click.option("--id", "patient_id", required=True)
@click.pass_obj
@handles_errors
def patient_show(ws, patient_id):
    _emit(ws.load_patient(patient_id).to_dict())


@main.group()
def lab():
    """Record laboratory panels."""


@lab.command("add")
@click.option("--patient", "patient_id", required=True)
@click.option("--date", "day", required=True)
@click.option("--results", required=True, help='JSON map, e.g. {"sodium": 138, "bun": 15}')
@click.option("--source", default="outpatient", type=click.Choice(["inpatient", "outpatient"]))
@click.pass_obj
@handles_errors
def lab_add(ws, patient_id, day, results, source):
    report = LabReport(date=Date.fromisoformat(day),
                       results={canonical_analyte(k): float(v)
                                for k, v in json.loads(results).items()},
                       source=source)
    record = service.add_lab(ws, patient_id, report)
    _emit({"patient_id": patient_id, "labs": len(record.labs)})


@main.group()
def meal():
    """Log meals and supplements."""


@meal.command("log")
@click.option("--patient", "patient_id", required=True)
@click.option("--date", "day", required=True)
@click.option("--meal", "meal_index", required=True, type=int)
@click.option("--item", "item_id", default=None, help="Catalog item id.")
@click.option("--grams", type=float, default=0.0)
@click.option("--direct", default=None,
              help='JSON map of nutrient/supplement amounts, e.g. {"beneprotein": 7}')
@click.option("--water", "water_liters", type=float, default=0.0)
@click.pass_obj
@handles_errors
def meal_log(ws, patient_id, day, meal_index, item_id, grams, direct, water_liters):
    entry = IntakeLogEntry(
        date=Date.fromisoformat(day),
        meal_index=meal_index,
        item_id=item_id,
        grams=grams,
        direct=json.loads(direct) if direct else {},
        water_liters=water_liters,
    )
    totals = service.log_meal_entry(ws, patient_id, entry)
    _emit({"date": day, "totals": totals})


@main.group()
def synth():
    """Synthetic cohort generation."""


@synth.command("gen")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--patients", type=int, default=5, show_default=True)
@click.option("--days", type=int, default=120, show_default=True)
@click.option("--noise-scale", type=float, default=0.05, show_default=True)
@click.option("--lab-cadence", type=int, default=1, show_default=True)
@handles_errors
def synth_gen(out_dir, seed, patients, days, noise_scale, lab_cadence):
    config = SynthCohortConfig(n_patients=patients, n_days=days, seed=seed,
                               noise_scale=noise_scale, lab_cadence_days=lab_cadence)
    manifest = generate_cohort(config, out_dir)
    _emit(manifest)


@main.command()
@click.option("--patient", "patient_id", required=True)
@click.option("--analyte", "analytes", multiple=True,
              help="Repeatable; defaults to sodium, potassium, and bun.")
@click.option("--fast/--full", default=False,
              help="Small CV grid instead of the full default grid.")
@click.pass_obj
@handles_errors
def train(ws, patient_id, analytes, fast):
    """Fit one forecasting model per analyte from the patient's history."""
    summary = service.train_patient(ws, patient_id,
                                    list(analytes) or list(PREDICTED_ANALYTES),
                                    fast=fast)
    _emit(summary)


@main.command()
@click.option("--patient", "patient_id", required=True)
@click.option("--as-of", "as_of", default=None, help="Defaults to today.")
@click.pass_obj
@handles_errors
def predict(ws, patient_id, as_of):
    """Forecast next-day analytes (runs the daily cycle; cached per day)."""
    day = Date.fromisoformat(as_of) if as_of else Date.today()
    cycle = service.run_prediction_cycle(ws, patient_id, day)
    _emit({"cached": cycle["cached"], **cycle["predictions"]})


@main.command()
@click.option("--patient", "patient_id", required=True)
@click.option("--as-of", "as_of", default=None, help="Defaults to today.")
@click.pass_obj
@handles_errors
def optimize(ws, patient_id, as_of):
    """Show the adjusted daily allowances from the day's prediction cycle."""
    day = Date.fromisoformat(as_of) if as_of else Date.today()
    cycle = service.run_prediction_cycle(ws, patient_id, day)
    _emit(cycle["optimized"])


@main.command()
@click.option("--patient", "patient_id", required=True)
@click.option("--meal", "meal_index", required=True, type=int)
@click.option("--k", type=int, default=None)
@click.option("--date", "day", default=None)
@click.pass_obj
@handles_errors
def recommend(ws, patient_id, meal_index, k, day):
    """Top-k items that fit every mandatory constraint in the remaining budget."""
    rec = service.recommendations_for(
        ws, patient_id, meal_index, k=k,
        day=Date.fromisoformat(day) if day else None)
    _emit(rec.to_dict())


@main.command()
@click.option("--cohort", "cohort_dir", required=True, type=click.Path(exists=True))
@click.option("--analyte", "analytes", multiple=True)
@click.option("--fast/--full", default=True, show_default=True)
@click.option("--out", "out_dir", default=None, type=click.Path())
@handles_errors
def evaluate(cohort_dir, analytes, fast, out_dir):
    """Run the full pipeline over a cohort and report holdout metrics."""
    results = evaluate_pipeline(cohort_dir,
                                analytes=list(analytes) or None,
                                grid=FAST_GRID if fast else None,
                                out_dir=out_dir)
    _emit({a: {"metrics": r["metrics"].to_dict(),
               "best_params": r["best_params"].to_dict(),
               "n_holdout": r["n_holdout"]}
           for a, r in results.items()})


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8470, show_default=True)
@click.pass_obj
def serve(ws, host, port):
    """Serve the HTTP API and, when built, the browser companion."""
    import uvicorn

    from .api import create_app

    uvicorn.run(create_app(ws), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
