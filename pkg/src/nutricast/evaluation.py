"""Regression metrics and end-to-end evaluation over a synthetic cohort.

Accuracy is reported as 100 * (1 - MAPE), with MAPE kept as a fraction; this
is the convention the rest of the package and its fixtures rely on.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import Catalog
from .errors import ConstantActuals, LengthMismatch, ZeroActual
from .forest import GridSearchResult, grid_search_cv
from .patient import PatientRecord, load_intake_csv, load_labs_csv, load_profile_json, record_lab
from .pipeline import DEFAULT_WINDOW, WindowedDataset, build_input_rows, window
from .reference import PREDICTED_ANALYTES


@dataclass
class MetricsReport:
    n: int
    mae: float
    mape: float       # fraction, not percent
    mse: float
    rmse: float
    r2: float
    accuracy: float   # percent, 100 * (1 - mape)

    def to_dict(self) -> dict:
        return {"n": self.n, "mae": self.mae, "mape": self.mape, "mse": self.mse,
                "rmse": self.rmse, "r2": self.r2, "accuracy": self.accuracy}


def metrics(y_actual, y_predicted) -> MetricsReport:
    """Standard regression metrics over two equal-length series.

    Raises ZeroActual when any actual value is 0 (MAPE undefined) and
    ConstantActuals when the actual series has no variance (R^2 undefined).
    """
    y = np.asarray(y_actual, dtype=np.float64).ravel()
    yhat = np.asarray(y_predicted, dtype=np.float64).ravel()
    if len(y) != len(yhat) or len(y) == 0:
        raise LengthMismatch(f"series of length {len(y)} and {len(yhat)}")
    if np.any(y == 0.0):
        raise ZeroActual("MAPE is undefined: an actual value is 0")
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        raise ConstantActuals("R^2 is undefined: actual series is constant")
    err = yhat - y
    mae = float(np.mean(np.abs(err)))
    mape = float(np.mean(np.abs(err) / np.abs(y)))
    mse = float(np.mean(err ** 2))
    rmse = float(np.sqrt(mse))
    r2 = 1.0 - float(np.sum(err ** 2)) / sst
    return MetricsReport(n=len(y), mae=mae, mape=mape, mse=mse, rmse=rmse, r2=r2,
                         accuracy=100.0 * (1.0 - mape))


def load_cohort_record(patient_dir: str | Path, catalog: Catalog) -> PatientRecord:
    """Rebuild one patient record from profile.json, labs.csv, and intake.csv."""
    patient_dir = Path(patient_dir)
    record = load_profile_json(patient_dir / "profile.json")
    for report in load_labs_csv(patient_dir / "labs.csv"):
        record_lab(record, report)
    record.intake_log = load_intake_csv(patient_dir / "intake.csv", catalog)
    return record


def _merge_datasets(parts: list[tuple[str, WindowedDataset]]) -> WindowedDataset:
    """Pool per-patient windows, globally ordered by target date (then patient).

    The chronological 60/40 split downstream then never trains on samples
    whose target postdates any holdout target.
    """
    rows = []
    for patient_id, ds in parts:
        for i in range(len(ds)):
            rows.append((ds.target_dates[i], patient_id, ds.X[i], ds.y[i],
                         ds.feature_dates[i]))
    rows.sort(key=lambda r: (r[0], r[1]))
    first = parts[0][1]
    return WindowedDataset(
        target_analyte=first.target_analyte,
        window=first.window,
        feature_names=first.feature_names,
        X=np.array([r[2] for r in rows]),
        y=np.array([r[3] for r in rows]),
        feature_dates=[r[4] for r in rows],
        target_dates=[r[0] for r in rows],
    )


def evaluate_pipeline(
    cohort_dir: str | Path,
    analytes: list[str] | None = None,
    grid: dict | list | None = None,
    window_size: int = DEFAULT_WINDOW,
    k: int = 5,
    train_fraction: float = 0.6,
    out_dir: str | Path | None = None,
) -> dict:
    """Full run per analyte: features -> grid-search CV -> holdout metrics.

    Returns {analyte: {"metrics": MetricsReport, "best_params": ..., "cv_table": ...,
    "series": [(date, actual, predicted), ...]}} and, when ``out_dir`` is
    given, writes one actual-vs-predicted CSV per analyte plus a summary JSON.
    """
    cohort_dir = Path(cohort_dir)
    manifest = json.loads((cohort_dir / "manifest.json").read_text())
    catalog = Catalog.load(cohort_dir / manifest["catalog"])
    records = [load_cohort_record(cohort_dir / p["dir"], catalog)
               for p in manifest["patients"]]
    analytes = list(analytes or PREDICTED_ANALYTES)

    results: dict[str, dict] = {}
    for analyte in analytes:
        parts = []
        for record in records:
            row_set = build_input_rows(record, catalog, analyte)
            parts.append((record.patient_id, window(row_set, analyte, w=window_size)))
        merged = _merge_datasets(parts)
        search: GridSearchResult = grid_search_cv(
            merged, grid=grid, k=k, train_fraction=train_fraction)
        n_dev = search.n_development
        X_hold, y_hold = merged.X[n_dev:], merged.y[n_dev:]
        dates_hold = merged.target_dates[n_dev:]
        y_pred = search.model.predict_batch(X_hold)
        report = metrics(y_hold, y_pred)
        series = [(d.isoformat(), float(a), float(p))
                  for d, a, p in zip(dates_hold, y_hold, y_pred)]
        results[analyte] = {
            "metrics": report,
            "best_params": search.best_params,
            "cv_table": search.cv_table,
            "n_holdout": len(y_hold),
            "series": series,
        }

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for analyte, res in results.items():
            with open(out_dir / f"{analyte}_actual_vs_predicted.csv", "w",
                      newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["date", "actual", "predicted"])
                w.writerows(res["series"])
        summary = {
            analyte: {
                "metrics": res["metrics"].to_dict(),
                "best_params": res["best_params"].to_dict(),
                "n_holdout": res["n_holdout"],
            }
            for analyte, res in results.items()
        }
        (out_dir / "report.json").write_text(json.dumps(summary, indent=2))
        with open(out_dir / "report.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["analyte", "n", "mae", "mape", "mse", "rmse", "r2", "accuracy"])
            for analyte, res in results.items():
                m = res["metrics"]
                w.writerow([analyte, m.n, m.mae, m.mape, m.mse, m.rmse, m.r2, m.accuracy])
    return results
