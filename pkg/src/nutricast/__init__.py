"""Nutricast: next-day serum analyte forecasting and budget-aware food recommendation.

The package covers the full daily loop for a diet-managed patient:

* ingest a public food-nutrient database into comparable per-100g item vectors,
* keep per-patient state (labs, constraint sets, meal-by-meal intake log),
* turn that history into supervised sliding-window samples,
* forecast next-day sodium / potassium / BUN with a from-scratch random forest,
* adjust daily nutrient allowances when a forecast leaves its safe range,
* recommend food items that fit every mandatory constraint within the remaining
  daily budget while matching past preferences.
"""

__version__ = "0.1.0"

SCHEMA_VERSION = 1
