"""Clinical reference data and canonical feature naming.

Serum ranges follow standard adult reference panels used in nephrology; the
dietary intake defaults follow the Health Canada DRI tables for children and
adolescents. ``None`` in an (AI, MI) pair means the bound is not determined
and is treated as not mandatory.
"""

from __future__ import annotations

# Standard serum reference ranges. Values are the routine panel ranges used
# when no per-patient override is on file.
SERUM_RANGES: dict[str, dict] = {
    "sodium":     {"min": 135.0, "max": 145.0, "unit": "mEq/L"},
    "potassium":  {"min": 3.5,   "max": 5.0,   "unit": "mEq/L"},
    "chloride":   {"min": 95.0,  "max": 107.0, "unit": "mEq/L"},
    "phosphate":  {"min": 2.5,   "max": 4.5,   "unit": "mg/dL"},
    "magnesium":  {"min": 1.5,   "max": 2.9,   "unit": "mg/dL"},
    "calcium":    {"min": 8.5,   "max": 10.5,  "unit": "mg/dL"},
    "co2":        {"min": 22.0,  "max": 29.0,  "unit": "mEq/L"},
    "bun":        {"min": 10.0,  "max": 20.0,  "unit": "mg/dL"},
    "creatinine": {"min": 0.5,   "max": 1.0,   "unit": "mg/dL"},
}

# Analytes the forecaster predicts by default.
PREDICTED_ANALYTES: tuple[str, ...] = ("sodium", "potassium", "bun")

# Dietary reference intakes per age band: nutrient -> (AI, MI).
# Protein defaults are g per kg body weight per day and are normally replaced
# by a per-patient g/day override before any budget arithmetic uses them.
DIETARY_REFERENCE_INTAKES: dict[str, dict[str, tuple]] = {
    "0-6mo":        {"chloride": (180.0, None), "iron": (0.27, 40.0), "phosphorus": (100.0, None),
                     "potassium": (400.0, None), "sodium": (120.0, None), "protein": (1.52, None),
                     "water": (0.7, None)},
    "7-12mo":       {"chloride": (570.0, None), "iron": (11.0, 40.0), "phosphorus": (275.0, None),
                     "potassium": (700.0, None), "sodium": (370.0, None), "protein": (1.2, None),
                     "water": (0.8, None)},
    "1-3y":         {"chloride": (1500.0, 2300.0), "iron": (7.0, 40.0), "phosphorus": (460.0, 3000.0),
                     "potassium": (3000.0, None), "sodium": (1000.0, 1500.0), "protein": (1.05, None),
                     "water": (1.3, None)},
    "4-8y":         {"chloride": (1900.0, 2900.0), "iron": (10.0, 40.0), "phosphorus": (500.0, 3000.0),
                     "potassium": (3800.0, None), "sodium": (1200.0, 1900.0), "protein": (0.95, None),
                     "water": (1.7, None)},
    "9-13y-male":   {"chloride": (2300.0, 3400.0), "iron": (8.0, 40.0), "phosphorus": (1250.0, 4000.0),
                     "potassium": (4500.0, None), "sodium": (1500.0, 2200.0), "protein": (0.95, None),
                     "water": (2.4, None)},
    "14-18y-male":  {"chloride": (2300.0, 3600.0), "iron": (11.0, 45.0), "phosphorus": (1250.0, 4000.0),
                     "potassium": (4700.0, None), "sodium": (1500.0, 2300.0), "protein": (0.85, None),
                     "water": (3.3, None)},
    "9-13y-female": {"chloride": (2300.0, 3400.0), "iron": (8.0, 40.0), "phosphorus": (1250.0, 4000.0),
                     "potassium": (4500.0, None), "sodium": (1500.0, 2200.0), "protein": (0.95, None),
                     "water": (2.1, None)},
    "14-18y-female": {"chloride": (2300.0, 3600.0), "iron": (15.0, 45.0), "phosphorus": (1250.0, 4000.0),
                      "potassium": (4700.0, None), "sodium": (1500.0, 2300.0), "protein": (0.85, None),
                      "water": (2.3, None)},
}

NUTRIENT_UNITS: dict[str, str] = {
    "chloride": "mg/d",
    "iron": "mg/d",
    "phosphorus": "mg/d",
    "potassium": "mg/d",
    "sodium": "mg/d",
    "protein": "g/kg/d",
    "water": "L/d",
    "calories": "kcal/d",
    "carbohydrate": "g/d",
}

# Default catalog feature set: the constrained nutrients plus calories and
# carbohydrate for display. Order here fixes vector order everywhere.
DEFAULT_FEATURE_WHITELIST: tuple[str, ...] = (
    "chloride", "iron", "phosphorus", "potassium", "sodium",
    "protein", "water", "calories", "carbohydrate",
)

# Catalog storage unit per canonical feature (amounts per 100 g of food).
FEATURE_UNITS: dict[str, str] = {
    "chloride": "mg", "iron": "mg", "phosphorus": "mg", "potassium": "mg",
    "sodium": "mg", "protein": "g", "water": "g", "calories": "kcal",
    "carbohydrate": "g",
}

# Scale from catalog units into daily-budget units. Water is logged and
# budgeted in liters while food composition reports it in grams.
BUDGET_UNIT_SCALE: dict[str, float] = {"water": 0.001}

# Supplements and binders are logged as direct gram (dose) amounts. Each dose
# contributes a signed nutrient delta in budget units per gram: a binder is a
# negative effective intake of the nutrient it binds.
SUPPLEMENT_EFFECTS: dict[str, dict[str, float]] = {
    "beneprotein": {"protein": 0.86},                       # g protein per g powder
    "potassium_chloride": {"potassium": 524.0},             # mg K per g KCl
    "sodium_polystyrene_sulfonate": {"potassium": -39.0,    # binds ~1 mEq K per g
                                     "sodium": 94.0},       # releases ~4.1 mEq Na per g
    "renvela": {"phosphorus": -32.0},                       # mg P bound per g sevelamer
}

# Lab analytes carried as model inputs for every predicted analyte.
LAB_FEATURES: tuple[str, ...] = (
    "a_gap", "calcium", "chloride", "co2", "creatinine",
    "potassium", "sodium", "phosphorus", "bun",
)

# Daily-intake features that influence each predicted analyte. "food_x" means
# the day's cumulative x from logged food; bare supplement names mean the
# day's dose of that supplement; "water" is the day's liters.
INTAKE_FEATURES: dict[str, tuple[str, ...]] = {
    "sodium": ("sodium_polystyrene_sulfonate", "potassium_chloride", "food_sodium", "water"),
    "potassium": ("sodium_polystyrene_sulfonate", "potassium_chloride", "food_potassium", "water"),
    "bun": ("beneprotein", "food_protein", "water"),
}

# Which daily nutrient allowance each predicted analyte steers.
ANALYTE_NUTRIENT_LINKS: dict[str, tuple[str, ...]] = {
    "sodium": ("sodium",),
    "potassium": ("potassium",),
    "bun": ("protein",),
}

# Observed physiologic bounds for the predicted analytes: (hypo, mean, hyper).
# Synthetic cohorts are clipped to these and forecasts should stay inside.
PHYSIOLOGIC_BOUNDS: dict[str, tuple[float, float, float]] = {
    "sodium": (127.0, 136.12, 145.0),
    "potassium": (2.3, 3.86, 6.2),
    "bun": (28.0, 79.89, 110.0),
}


def canonical_analyte(name: str) -> str:
    """Map loose analyte spellings onto the canonical lowercase token."""
    key = name.strip().lower().replace(" ", "_").replace("-", "_")
    return {"anion_gap": "a_gap", "agap": "a_gap", "co_2": "co2", "bun": "bun"}.get(key, key)
