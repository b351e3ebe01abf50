"""Build the workspace the UI integration test runs against.

Usage: python3 tests/fixture_workspace.py <workspace-dir>
"""

import sys

from nutricast.cohort import fixture_catalog
from nutricast.patient import (
    MandatoryNutrient,
    PatientRecord,
    default_mandatory_electrolytes,
    default_mandatory_nutrients,
)
from nutricast.workspace import Workspace

CHARTED = [
    MandatoryNutrient("chloride", None, None, "mg/d"),
    MandatoryNutrient("iron", None, None, "mg/d"),
    MandatoryNutrient("phosphorus", None, 3000.0, "mg/d"),
    MandatoryNutrient("potassium", None, 2500.0, "mg/d"),
    MandatoryNutrient("sodium", None, 2300.0, "mg/d"),
    MandatoryNutrient("protein", 15.0, 110.0, "g/d"),
    MandatoryNutrient("water", None, None, "L/d"),
]


def main(root: str) -> None:
    ws = Workspace(root)
    ws.save_catalog(fixture_catalog(n_items=24, seed=1))
    ws.save_patient(PatientRecord(
        patient_id="p1",
        age_band="4-8y",
        mandatory_electrolytes=default_mandatory_electrolytes(),
        mandatory_nutrients=default_mandatory_nutrients("4-8y", CHARTED),
    ))
    print(root)


if __name__ == "__main__":
    main(sys.argv[1])
