"""HTTP/JSON API consumed by the browser companion.

Thin request/response mapping over the same service functions the CLI uses.
Every response carries the schema version; errors map to 400 (validation),
404 (unknown id), 409 (conflicts such as a duplicate lab date), and 422 when
no feasible item remains in the day's budget.
"""

from __future__ import annotations

import os
from datetime import date as Date
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import SCHEMA_VERSION, service
from .errors import (
    DuplicateDate,
    NoFeasibleItem,
    NutricastError,
    UnknownPatient,
)
from .patient import IntakeLogEntry, LabReport
from .reference import canonical_analyte
from .workspace import Workspace

_STATUS = {
    UnknownPatient: 404,
    DuplicateDate: 409,
    NoFeasibleItem: 422,
}


class MealBody(BaseModel):
    date: str
    meal_index: int
    item_id: str | None = None
    grams: float = 0.0
    direct: dict[str, float] | None = None
    water_liters: float = 0.0


class LabBody(BaseModel):
    date: str
    results: dict[str, float]
    source: str = "outpatient"


class PredictBody(BaseModel):
    as_of: str | None = None


def _ok(payload: dict, status_code: int = 200) -> JSONResponse:
    return JSONResponse({"schema_version": SCHEMA_VERSION, **payload},
                        status_code=status_code)


def create_app(ws: Workspace, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="nutricast", version="0.1.0")

    @app.exception_handler(NutricastError)
    async def nutricast_error(request: Request, err: NutricastError):
        status = 400
        for cls, code in _STATUS.items():
            if isinstance(err, cls):
                status = code
                break
        return JSONResponse({"schema_version": SCHEMA_VERSION,
                             "error": type(err).__name__, "message": str(err)},
                            status_code=status)

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, err: RequestValidationError):
        return JSONResponse({"schema_version": SCHEMA_VERSION,
                             "error": "ValidationError", "message": str(err)},
                            status_code=400)

    @app.exception_handler(ValueError)
    async def value_error(request: Request, err: ValueError):
        return JSONResponse({"schema_version": SCHEMA_VERSION,
                             "error": "ValueError", "message": str(err)},
                            status_code=400)

    @app.get("/api/patients/{patient_id}")
    def get_patient(patient_id: str):
        record = ws.load_patient(patient_id)
        return _ok({"patient": record.to_dict(),
                    "latest_cycle": ws.latest_cycle(patient_id)})

    @app.post("/api/patients/{patient_id}/meals")
    def post_meal(patient_id: str, body: MealBody):
        entry = IntakeLogEntry(
            date=Date.fromisoformat(body.date),
            meal_index=body.meal_index,
            item_id=body.item_id,
            grams=body.grams,
            direct=body.direct or {},
            water_liters=body.water_liters,
        )
        totals = service.log_meal_entry(ws, patient_id, entry)
        return _ok({"date": body.date, "totals": totals})

    @app.post("/api/patients/{patient_id}/labs")
    def post_lab(patient_id: str, body: LabBody):
        report = LabReport(
            date=Date.fromisoformat(body.date),
            results={canonical_analyte(k): float(v) for k, v in body.results.items()},
            source=body.source,
        )
        record = service.add_lab(ws, patient_id, report)
        return _ok({"patient_id": patient_id, "labs": len(record.labs)}, 201)

    @app.post("/api/patients/{patient_id}/predict")
    def post_predict(patient_id: str, body: PredictBody | None = None):
        as_of = Date.fromisoformat(body.as_of) if body and body.as_of else Date.today()
        cycle = service.run_prediction_cycle(ws, patient_id, as_of)
        return _ok({"cached": cycle["cached"], "predictions": cycle["predictions"],
                    "optimized": cycle["optimized"]})

    @app.get("/api/patients/{patient_id}/predictions")
    def get_predictions(patient_id: str, date: str | None = Query(default=None)):
        ws.load_patient(patient_id)  # 404 on unknown id
        cycle = (ws.load_cycle(patient_id, Date.fromisoformat(date)) if date
                 else ws.latest_cycle(patient_id))
        if cycle is None:
            return _ok({"predictions": None})
        return _ok({"predictions": cycle["predictions"],
                    "as_of": cycle["as_of"]})

    @app.get("/api/patients/{patient_id}/requirements")
    def get_requirements(patient_id: str, date: str | None = Query(default=None)):
        day = Date.fromisoformat(date) if date else Date.today()
        return _ok(service.current_requirements(ws, patient_id, day))

    @app.get("/api/patients/{patient_id}/recommendations")
    def get_recommendations(patient_id: str,
                            meal: int = Query(default=1),
                            k: int | None = Query(default=None),
                            date: str | None = Query(default=None)):
        rec = service.recommendations_for(
            ws, patient_id, meal, k=k,
            day=Date.fromisoformat(date) if date else None)
        return _ok(rec.to_dict())

    @app.get("/api/catalog/search")
    def catalog_search(q: str = Query(default=""), limit: int = Query(default=20)):
        return _ok({"items": service.search_catalog(ws, q, limit=limit)})

    ui_dir = static_dir or os.environ.get("NUTRICAST_UI") or Path("frontend/dist")
    ui_dir = Path(ui_dir)
    if ui_dir.is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def main() -> None:
    """Run the API directly: python -m nutricast.api --workspace DIR --port N."""
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser()
    parser.add_argument("--workspace", default=os.environ.get("NUTRICAST_WORKSPACE",
                                                              "workspace"))
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8470)
    args = parser.parse_args()
    uvicorn.run(create_app(Workspace(args.workspace)), host=args.host, port=args.port,
                log_level="warning")


if __name__ == "__main__":
    main()
