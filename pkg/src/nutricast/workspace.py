"""File-backed stores for catalogs, patients, models, and daily cycles.

One JSON file per object, written atomically (temp file in the same directory,
then rename), each stamped with the schema version. A crash between the temp
write and the rename leaves the previous file intact; stray temp files are
ignored on read.
"""

from __future__ import annotations

import json
import os
import threading
from datetime import date as Date
from pathlib import Path

from . import SCHEMA_VERSION
from .catalog import Catalog
from .errors import UnknownPatient, UntrainedAnalyte
from .forest import FAST_GRID, DEFAULT_GRID, ForestModel
from .optimizer import DEFAULT_RHO, OptimizedRequirements
from .patient import PatientRecord
from .pipeline import DEFAULT_WINDOW
from .recommender import DEFAULT_CLASSES, DEFAULT_SPAN_DAYS

DEFAULT_CONFIG = {
    "schema_version": SCHEMA_VERSION,
    "rho": DEFAULT_RHO,
    "window": DEFAULT_WINDOW,
    "preference_span_days": DEFAULT_SPAN_DAYS,
    "n_classes": DEFAULT_CLASSES,
    "top_classes": 3,
    "k": 5,
    "cv_folds": 5,
    "train_fraction": 0.6,
    "cluster_seed": 0,
}


def atomic_write_json(path: str | Path, doc: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc, indent=2, sort_keys=True))
    os.replace(tmp, path)


class Workspace:
    """All on-disk state for one deployment, rooted at one directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "patients").mkdir(exist_ok=True)
        (self.root / "models").mkdir(exist_ok=True)
        (self.root / "cycles").mkdir(exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # -- per-patient write serialization -----------------------------------

    def patient_lock(self, patient_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(patient_id, threading.Lock())

    # -- config -------------------------------------------------------------

    @property
    def config_path(self) -> Path:
        return self.root / "config.json"

    def config(self) -> dict:
        if self.config_path.exists():
            return {**DEFAULT_CONFIG, **json.loads(self.config_path.read_text())}
        return dict(DEFAULT_CONFIG)

    def save_config(self, cfg: dict) -> None:
        atomic_write_json(self.config_path, {**self.config(), **cfg,
                                             "schema_version": SCHEMA_VERSION})

    def grid(self, fast: bool = False) -> dict:
        return FAST_GRID if fast else DEFAULT_GRID

    # -- catalog ------------------------------------------------------------

    @property
    def catalog_path(self) -> Path:
        return self.root / "catalog.json"

    def save_catalog(self, catalog: Catalog) -> None:
        tmp = self.catalog_path.with_suffix(".json.tmp")
        tmp.write_text(catalog.to_json())
        os.replace(tmp, self.catalog_path)

    def load_catalog(self) -> Catalog:
        return Catalog.load(self.catalog_path)

    def has_catalog(self) -> bool:
        return self.catalog_path.exists()

    # -- patients -----------------------------------------------------------

    def patient_path(self, patient_id: str) -> Path:
        return self.root / "patients" / f"{patient_id}.json"

    def save_patient(self, record: PatientRecord) -> None:
        atomic_write_json(self.patient_path(record.patient_id), record.to_dict())

    def load_patient(self, patient_id: str) -> PatientRecord:
        path = self.patient_path(patient_id)
        if not path.exists():
            raise UnknownPatient(f"no patient {patient_id!r} in this workspace")
        return PatientRecord.from_dict(json.loads(path.read_text()))

    def list_patients(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "patients").glob("*.json"))

    # -- models -------------------------------------------------------------

    def model_path(self, patient_id: str, analyte: str) -> Path:
        return self.root / "models" / f"{patient_id}__{analyte}.json"

    def save_model(self, patient_id: str, model: ForestModel) -> None:
        atomic_write_json(self.model_path(patient_id, model.target_analyte),
                          model.to_dict())

    def load_model(self, patient_id: str, analyte: str) -> ForestModel:
        path = self.model_path(patient_id, analyte)
        if not path.exists():
            raise UntrainedAnalyte(
                f"no trained {analyte!r} model for patient {patient_id!r}")
        return ForestModel.from_dict(json.loads(path.read_text()))

    def load_models(self, patient_id: str, analytes: list[str]) -> dict[str, ForestModel]:
        return {a: self.load_model(patient_id, a) for a in analytes}

    # -- daily prediction cycles ---------------------------------------------
    # predict + optimize run at most once per patient per day; the stored
    # cycle is the guard and the cache.

    def cycle_path(self, patient_id: str, day: Date) -> Path:
        return self.root / "cycles" / f"{patient_id}__{day.isoformat()}.json"

    def load_cycle(self, patient_id: str, day: Date) -> dict | None:
        path = self.cycle_path(patient_id, day)
        if not path.exists():
            return None
        return json.loads(path.read_text())

    def save_cycle(self, patient_id: str, day: Date, predictions: dict,
                   optimized: OptimizedRequirements) -> dict:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "patient_id": patient_id,
            "as_of": day.isoformat(),
            "predictions": predictions,
            "optimized": optimized.to_dict(),
        }
        atomic_write_json(self.cycle_path(patient_id, day), doc)
        return doc

    def latest_cycle(self, patient_id: str) -> dict | None:
        paths = sorted((self.root / "cycles").glob(f"{patient_id}__*.json"))
        if not paths:
            return None
        return json.loads(paths[-1].read_text())
