"""Daily-loop orchestration shared by the CLI and the HTTP API.

Both surfaces call these functions so behavior can never drift between them.
"""

from __future__ import annotations

from datetime import date as Date

from .forest import PredictionSet, grid_search_cv, predict_all
from .optimizer import OptimizedRequirements, optimize
from .patient import IntakeLogEntry, LabReport, PatientRecord, day_totals, log_meal, record_lab
from .pipeline import build_input_rows, window
from .recommender import Recommendation, recommend, remaining_allowance
from .reference import PREDICTED_ANALYTES, SERUM_RANGES
from .workspace import Workspace


def add_patient(ws: Workspace, record: PatientRecord) -> PatientRecord:
    with ws.patient_lock(record.patient_id):
        ws.save_patient(record)
    return record


def add_lab(ws: Workspace, patient_id: str, report: LabReport) -> PatientRecord:
    with ws.patient_lock(patient_id):
        record = ws.load_patient(patient_id)
        record_lab(record, report)
        ws.save_patient(record)
    return record


def log_meal_entry(ws: Workspace, patient_id: str, entry: IntakeLogEntry,
                   today: Date | None = None) -> dict[str, float]:
    """Append one intake entry and return the day's cumulative totals row."""
    catalog = ws.load_catalog()
    with ws.patient_lock(patient_id):
        record = ws.load_patient(patient_id)
        totals = log_meal(record, entry, catalog, today=today)
        ws.save_patient(record)
    return totals


def train_patient(
    ws: Workspace,
    patient_id: str,
    analytes: list[str] | None = None,
    grid: dict | list | None = None,
    fast: bool = False,
) -> dict:
    """Grid-search, fit, and store one model per analyte; returns CV summaries."""
    cfg = ws.config()
    catalog = ws.load_catalog()
    record = ws.load_patient(patient_id)
    out = {}
    for analyte in analytes or PREDICTED_ANALYTES:
        row_set = build_input_rows(record, catalog, analyte)
        ds = window(row_set, analyte, w=cfg["window"])
        search = grid_search_cv(ds, grid=grid if grid is not None else ws.grid(fast),
                                k=cfg["cv_folds"], train_fraction=cfg["train_fraction"])
        ws.save_model(patient_id, search.model)
        out[analyte] = {
            "n_samples": len(ds),
            "n_development": search.n_development,
            "best_params": search.best_params.to_dict(),
            "mean_rmse": min(r["mean_rmse"] for r in search.cv_table),
        }
    return out


def run_prediction_cycle(ws: Workspace, patient_id: str, as_of: Date) -> dict:
    """Predict next-day analytes and adjust allowances, at most once per day.

    A cycle already stored for (patient, day) is returned as-is with
    ``cached`` set, which keeps the allowance adjustment single-application.
    """
    cached = ws.load_cycle(patient_id, as_of)
    if cached is not None:
        return {**cached, "cached": True}

    cfg = ws.config()
    catalog = ws.load_catalog()
    with ws.patient_lock(patient_id):
        record = ws.load_patient(patient_id)
        models = ws.load_models(patient_id, list(PREDICTED_ANALYTES))
        pset: PredictionSet = predict_all(record, catalog, models,
                                          list(PREDICTED_ANALYTES), as_of)
        om = optimize(record.mandatory_nutrients, pset.values,
                      record.mandatory_electrolytes, rho=cfg["rho"])
        predictions = {
            analyte: {
                "value": value,
                "min": _range_for(record, analyte)["min"],
                "max": _range_for(record, analyte)["max"],
                "unit": _range_for(record, analyte)["unit"],
                "in_range": _range_for(record, analyte)["min"] <= value
                            <= _range_for(record, analyte)["max"],
            }
            for analyte, value in pset.values.items()
        }
        doc = ws.save_cycle(patient_id, as_of, {
            "as_of": pset.as_of.isoformat(),
            "target_date": pset.target_date.isoformat(),
            "values": predictions,
        }, om)
    return {**doc, "cached": False}


def _range_for(record: PatientRecord, analyte: str) -> dict:
    for e in record.mandatory_electrolytes:
        if e.analyte == analyte:
            return {"min": e.min, "max": e.max, "unit": e.unit}
    base = SERUM_RANGES[analyte]
    return {"min": base["min"], "max": base["max"], "unit": base["unit"]}


def current_requirements(ws: Workspace, patient_id: str, day: Date) -> dict:
    """Allowances (optimized if today's cycle ran, stock otherwise) plus consumption."""
    catalog = ws.load_catalog()
    record = ws.load_patient(patient_id)
    cycle = ws.load_cycle(patient_id, day)
    if cycle is not None:
        om = OptimizedRequirements.from_dict(cycle["optimized"])
        adjusted = {a["nutrient"] for a in cycle["optimized"]["provenance"]
                    if a.get("new") is not None}
    else:
        om = OptimizedRequirements(nutrients=record.mandatory_nutrients, provenance=[])
        adjusted = set()
    consumed = day_totals(record, day, catalog)
    remaining = remaining_allowance(om, consumed)
    rows = []
    for nut in om.nutrients:
        lo, hi = remaining.get(nut.nutrient, (0.0, None))
        rows.append({
            "nutrient": nut.nutrient,
            "unit": nut.unit,
            "ai": nut.ai,
            "mi": nut.mi,
            "consumed": consumed.get(nut.nutrient, 0.0),
            "remaining_lo": lo,
            "remaining_hi": hi,
            "mandatory": nut.is_mandatory,
            "adjusted": nut.nutrient in adjusted,
        })
    return {"date": day.isoformat(), "nutrients": rows,
            "optimized": cycle is not None}


def recommendations_for(ws: Workspace, patient_id: str, meal_index: int,
                        k: int | None = None, day: Date | None = None) -> Recommendation:
    cfg = ws.config()
    catalog = ws.load_catalog()
    record = ws.load_patient(patient_id)
    if day is None:
        day = max((e.date for e in record.intake_log), default=Date.today())
    cycle = ws.load_cycle(patient_id, day)
    if cycle is not None:
        om = OptimizedRequirements.from_dict(cycle["optimized"])
    else:
        om = OptimizedRequirements(nutrients=record.mandatory_nutrients, provenance=[])
    return recommend(
        record, catalog, om,
        meal_index=meal_index,
        k=k if k is not None else cfg["k"],
        top_classes=cfg["top_classes"],
        n_classes=cfg["n_classes"],
        seed=cfg["cluster_seed"],
        as_of=day,
        span_days=cfg["preference_span_days"],
    )


def search_catalog(ws: Workspace, query: str, limit: int = 20) -> list[dict]:
    catalog = ws.load_catalog()
    q = query.strip().lower()
    names = catalog.feature_names()
    hits = []
    for item in catalog.items:
        if q and q not in item.name.lower() and q != item.item_id.lower():
            continue
        hits.append({
            "item_id": item.item_id,
            "name": item.name,
            "serving_size": item.serving_size,
            "nutrients": {n: v for n, v, m in zip(names, item.values, item.missing)
                          if not m},
        })
        if len(hits) >= limit:
            break
    return hits
