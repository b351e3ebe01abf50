"""Daily feature rows and sliding-window supervision.

Each predicted analyte gets its own input feature set: the intake features
known to influence it plus the full lab panel. Lab values are forward-filled
(a monthly panel stays in effect until the next draw); intake features are
that day's cumulative totals. Windows of ``w`` consecutive daily rows are
paired with the analyte's serum value one day after the window, so every
feature strictly predates its target.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date as Date, timedelta
from pathlib import Path

import numpy as np

from .catalog import Catalog
from .errors import InsufficientHistory, NoLabHistory, UnsupportedAnalyte
from .patient import PatientRecord, day_totals, latest_lab_on_or_before
from .reference import INTAKE_FEATURES, LAB_FEATURES, canonical_analyte

DEFAULT_WINDOW = 3

# Extra analytes registered at runtime: analyte -> (food features, lab features)
_REGISTERED: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {}


@dataclass(frozen=True)
class InfluenceSets:
    """The intake and lab features that drive one analyte's forecast."""

    analyte: str
    food_features: tuple[str, ...]
    lab_features: tuple[str, ...]

    def feature_names(self) -> list[str]:
        # Lab features get a prefix so an analyte can appear both as intake
        # ("food_sodium") and as a serum input ("lab_sodium").
        return list(self.food_features) + [f"lab_{a}" for a in self.lab_features]


@dataclass
class InputRow:
    """One day's combined feature vector.

    ``lab_date`` records which draw the lab values came from; a row whose
    lab_date equals its own date carries a fresh measurement.
    """

    date: Date
    values: list[float]
    lab_date: Date


@dataclass
class InputRowSet:
    analyte: str
    feature_names: list[str]
    rows: list[InputRow]


@dataclass
class WindowedDataset:
    """Supervised samples: ``window`` consecutive daily rows -> next-day serum value."""

    target_analyte: str
    window: int
    feature_names: list[str]
    X: np.ndarray
    y: np.ndarray
    feature_dates: list[list[Date]] = field(default_factory=list)
    target_dates: list[Date] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.y)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(self.feature_names + ["target"])
            for row, target in zip(self.X, self.y):
                w.writerow([repr(float(v)) for v in row] + [repr(float(target))])


def register_analyte(analyte: str, food_features: list[str],
                     lab_features: list[str] | None = None) -> None:
    """Register influence sets for an analyte beyond the built-in three."""
    _REGISTERED[canonical_analyte(analyte)] = (
        tuple(food_features),
        tuple(lab_features) if lab_features is not None else LAB_FEATURES,
    )


def influence_sets(analyte: str) -> InfluenceSets:
    key = canonical_analyte(analyte)
    if key in INTAKE_FEATURES:
        return InfluenceSets(analyte=key, food_features=INTAKE_FEATURES[key],
                             lab_features=LAB_FEATURES)
    if key in _REGISTERED:
        food, labs = _REGISTERED[key]
        return InfluenceSets(analyte=key, food_features=food, lab_features=labs)
    raise UnsupportedAnalyte(
        f"no influence sets for {analyte!r}; register_analyte() can add them")


def _intake_feature_value(name: str, totals: dict[str, float]) -> float:
    if name.startswith("food_"):
        return totals.get(name[len("food_"):], 0.0)
    return totals.get(name, 0.0)


def build_input_rows(
    record: PatientRecord,
    catalog: Catalog,
    analyte: str,
    start: Date | None = None,
    end: Date | None = None,
) -> InputRowSet:
    """One combined feature row per day of the range.

    The range defaults to [first lab date, last logged date]. An explicit
    start before the first lab raises NoLabHistory, since those days would
    have no lab values to carry forward.
    """
    sets = influence_sets(analyte)
    if not record.labs:
        raise NoLabHistory(f"{record.patient_id} has no lab reports")
    first_lab = record.labs[0].date
    if start is None:
        start = first_lab
    elif start < first_lab:
        raise NoLabHistory(
            f"range starts {start}, before the first lab report ({first_lab})")
    if end is None:
        last_intake = max((e.date for e in record.intake_log), default=first_lab)
        end = max(last_intake, record.labs[-1].date)

    rows = []
    day = start
    while day <= end:
        lab = latest_lab_on_or_before(record, day)
        totals = day_totals(record, day, catalog)
        values = [_intake_feature_value(f, totals) for f in sets.food_features]
        values += [float(lab.results.get(a, 0.0)) for a in sets.lab_features]
        rows.append(InputRow(date=day, values=values, lab_date=lab.date))
        day += timedelta(days=1)
    return InputRowSet(analyte=sets.analyte, feature_names=sets.feature_names(), rows=rows)


def window(
    row_set: InputRowSet,
    analyte: str | None = None,
    w: int = DEFAULT_WINDOW,
    target_offset: int = 1,
    require_fresh_target: bool = True,
) -> WindowedDataset:
    """Restructure daily rows into supervised sliding-window samples.

    Sample i concatenates rows i..i+w-1 and targets the analyte's serum value
    ``target_offset`` days after the window (default: the next day). With
    ``require_fresh_target`` the target day must carry an actual lab draw, so
    forward-filled values are never trained against.
    """
    analyte = canonical_analyte(analyte or row_set.analyte)
    rows = row_set.rows
    lab_col = row_set.feature_names.index(f"lab_{analyte}")
    feature_names = []
    for j in range(w):
        back = w - 1 - j
        suffix = "t" if back == 0 else f"t-{back}"
        feature_names += [f"{name}@{suffix}" for name in row_set.feature_names]

    X_rows, y_vals, fdates, tdates = [], [], [], []
    for i in range(len(rows)):
        t_idx = i + w - 1 + target_offset
        if t_idx >= len(rows):
            break
        target_row = rows[t_idx]
        if require_fresh_target and target_row.lab_date != target_row.date:
            continue
        feats = []
        for j in range(i, i + w):
            feats.extend(rows[j].values)
        X_rows.append(feats)
        y_vals.append(target_row.values[lab_col])
        fdates.append([rows[j].date for j in range(i, i + w)])
        tdates.append(target_row.date)

    if not X_rows:
        raise InsufficientHistory(
            f"{len(rows)} daily rows yield no window of {w} days with a "
            f"measured next-day target")
    return WindowedDataset(
        target_analyte=analyte,
        window=w,
        feature_names=feature_names,
        X=np.asarray(X_rows, dtype=np.float64),
        y=np.asarray(y_vals, dtype=np.float64),
        feature_dates=fdates,
        target_dates=tdates,
    )


def latest_window_features(
    record: PatientRecord,
    catalog: Catalog,
    analyte: str,
    as_of: Date,
    w: int = DEFAULT_WINDOW,
) -> np.ndarray:
    """Feature vector for the window ending at ``as_of`` (predicts the next day)."""
    row_set = build_input_rows(record, catalog, analyte, end=as_of)
    rows = [r for r in row_set.rows if r.date <= as_of]
    if len(rows) < w:
        raise InsufficientHistory(
            f"need {w} daily rows ending {as_of}, have {len(rows)}")
    feats = []
    for row in rows[-w:]:
        feats.extend(row.values)
    return np.asarray(feats, dtype=np.float64)
