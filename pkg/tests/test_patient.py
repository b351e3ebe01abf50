from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nutricast.errors import DuplicateDate, NegativeAmount, UnknownAgeBand, UnknownItem
from nutricast.patient import (
    IntakeLogEntry,
    LabReport,
    MandatoryNutrient,
    PatientRecord,
    day_totals,
    default_mandatory_electrolytes,
    default_mandatory_nutrients,
    latest_lab_on_or_before,
    log_meal,
    record_lab,
)

from conftest import DAY1, make_patient


class TestMandatoryElectrolytes:
    def test_defaults_for_predicted_analytes(self):
        ranges = {e.analyte: e for e in default_mandatory_electrolytes()}
        assert set(ranges) == {"sodium", "potassium", "bun"}
        assert (ranges["sodium"].min, ranges["sodium"].max) == (135.0, 145.0)
        assert ranges["sodium"].unit == "mEq/L"
        assert (ranges["potassium"].min, ranges["potassium"].max) == (3.5, 5.0)
        assert (ranges["bun"].min, ranges["bun"].max) == (10.0, 20.0)
        assert ranges["bun"].unit == "mg/dL"

    def test_override_precedence(self):
        ranges = {e.analyte: e
                  for e in default_mandatory_electrolytes({"potassium": {"max": 5.5}})}
        assert (ranges["potassium"].min, ranges["potassium"].max) == (3.5, 5.5)
        assert (ranges["sodium"].min, ranges["sodium"].max) == (135.0, 145.0)

    def test_empty_overrides_yield_exactly_three(self):
        assert len(default_mandatory_electrolytes({})) == 3


class TestMandatoryNutrients:
    def test_age_band_defaults(self):
        by_name = {n.nutrient: n for n in default_mandatory_nutrients("4-8y")}
        assert by_name["potassium"].ai == 3800.0
        assert by_name["potassium"].mi is None
        assert by_name["sodium"].ai == 1200.0
        assert by_name["sodium"].mi == 1900.0

    def test_chart_overrides_replace_rows(self):
        overrides = [
            MandatoryNutrient("chloride", None, None, "mg/d"),
            MandatoryNutrient("iron", 8.0, None, "mg/d"),
            MandatoryNutrient("phosphorus", None, 368.0, "mg/d"),
            MandatoryNutrient("potassium", None, 700.0, "mg/d"),
            MandatoryNutrient("sodium", None, None, "mg/d"),
            MandatoryNutrient("protein", 38.0, None, "g/d"),
            MandatoryNutrient("water", 1.3, 1.5, "L/d"),
        ]
        by_name = {n.nutrient: n
                   for n in default_mandatory_nutrients("4-8y", overrides)}
        assert by_name["iron"].ai == 8.0 and by_name["iron"].mi is None
        assert by_name["phosphorus"].mi == 368.0
        assert by_name["potassium"].mi == 700.0
        assert by_name["protein"].ai == 38.0 and by_name["protein"].unit == "g/d"
        assert (by_name["water"].ai, by_name["water"].mi) == (1.3, 1.5)
        assert not by_name["chloride"].is_mandatory

    def test_override_for_unknown_nutrient_appended(self):
        extra = MandatoryNutrient("magnesium", 120.0, 350.0, "mg/d")
        out = default_mandatory_nutrients("4-8y", [extra])
        assert out[-1] is extra
        assert len(out) == len(default_mandatory_nutrients("4-8y")) + 1

    def test_unknown_age_band(self):
        with pytest.raises(UnknownAgeBand):
            default_mandatory_nutrients("40-50y")

    def test_override_monotone(self):
        base = {n.nutrient: n.to_dict() for n in default_mandatory_nutrients("1-3y")}
        over = [MandatoryNutrient("iron", 9.0, None, "mg/d")]
        after = {n.nutrient: n.to_dict()
                 for n in default_mandatory_nutrients("1-3y", over)}
        for name, row in base.items():
            if name != "iron":
                assert after[name] == row


# Daily consumption fixture rows: (iron mg, phosphorus mg, potassium mg,
# sodium mg, protein g, water L) per meal of one charted day.
CONSUMPTION_ROWS = [
    (2.31, 187.0, 188.0, 522.0, 10.81, 0.0),
    (0.0, 101.0, 150.0, 38.0, 3.28, 0.088),
    (2.66, 100.0, 215.0, 398.0, 9.51, 0.0),
    (0.0, 0.0, 0.0, 0.0, 0.0, 0.5),
]


def log_consumption_rows(record, catalog, upto_meal):
    totals = {}
    for meal_idx, (iron, phos, pot, sod, prot, water) in enumerate(
            CONSUMPTION_ROWS[:upto_meal], start=1):
        direct = {"iron": iron, "phosphorus": phos, "potassium": pot,
                  "sodium": sod, "protein": prot}
        direct = {k: v for k, v in direct.items() if v}
        totals = log_meal(record, IntakeLogEntry(
            date=DAY1, meal_index=meal_idx, direct=direct, water_liters=water),
            catalog)
    return totals


class TestMealLog:
    def test_consumption_replay_matches_hand_sums(self, synth_catalog):
        # hand-summed over meals 1-3: sodium 522+38+398, protein 10.81+3.28+9.51,
        # potassium 188+150+215
        record = make_patient()
        totals = log_consumption_rows(record, synth_catalog, upto_meal=3)
        assert totals["sodium"] == pytest.approx(958.0)
        assert totals["protein"] == pytest.approx(23.60)
        assert totals["potassium"] == pytest.approx(553.0)

    def test_water_only_meal_changes_only_water(self, synth_catalog):
        record = make_patient()
        before = log_consumption_rows(record, synth_catalog, upto_meal=3)
        after = log_meal(record, IntakeLogEntry(date=DAY1, meal_index=4,
                                                water_liters=0.5), synth_catalog)
        assert after["water"] == pytest.approx(before["water"] + 0.5)
        for key in before:
            if key != "water":
                assert after[key] == pytest.approx(before[key])

    def test_empty_day_all_zero(self, synth_catalog):
        record = make_patient()
        totals = day_totals(record, DAY1, synth_catalog)
        assert all(v == 0.0 for v in totals.values())

    def test_item_meal_uses_per_100g_scaling(self, synth_catalog):
        record = make_patient()
        item = synth_catalog.items[0]
        totals = log_meal(record, IntakeLogEntry(date=DAY1, meal_index=1,
                                                 item_id=item.item_id, grams=150.0),
                          synth_catalog)
        idx = synth_catalog.feature_index()
        assert totals["sodium"] == pytest.approx(item.values[idx["sodium"]] * 1.5)
        assert totals["water"] == pytest.approx(item.values[idx["water"]] * 1.5 / 1000)

    def test_binder_supplement_contributes_negative_potassium(self, synth_catalog):
        record = make_patient()
        totals = log_meal(record, IntakeLogEntry(
            date=DAY1, meal_index=1,
            direct={"sodium_polystyrene_sulfonate": 2.0}), synth_catalog)
        assert totals["sodium_polystyrene_sulfonate"] == 2.0
        assert totals["potassium"] == pytest.approx(-78.0)

    def test_unknown_item_and_negative_amounts(self, synth_catalog):
        record = make_patient()
        with pytest.raises(UnknownItem):
            log_meal(record, IntakeLogEntry(date=DAY1, meal_index=1,
                                            item_id="ghost", grams=10), synth_catalog)
        with pytest.raises(UnknownItem):
            log_meal(record, IntakeLogEntry(date=DAY1, meal_index=1,
                                            direct={"unobtainium": 5}), synth_catalog)
        with pytest.raises(NegativeAmount):
            log_meal(record, IntakeLogEntry(date=DAY1, meal_index=1,
                                            item_id=synth_catalog.items[0].item_id,
                                            grams=-1), synth_catalog)

    def test_future_date_rejected(self, synth_catalog):
        record = make_patient()
        with pytest.raises(ValueError):
            log_meal(record, IntakeLogEntry(date=date(2030, 1, 1), meal_index=1,
                                            water_liters=1.0),
                     synth_catalog, today=DAY1)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(
        st.tuples(st.integers(0, 3), st.floats(0, 300, allow_nan=False),
                  st.floats(0, 2, allow_nan=False)),
        min_size=0, max_size=12))
    def test_totals_equal_brute_force_sum(self, entries):
        catalog = __import__("nutricast.cohort", fromlist=["fixture_catalog"]) \
            .fixture_catalog(n_items=4, seed=2)
        record = make_patient()
        for item_idx, grams, water in entries:
            record.intake_log.append(IntakeLogEntry(
                date=DAY1, meal_index=1,
                item_id=catalog.items[item_idx].item_id, grams=grams,
                water_liters=water))
        totals = day_totals(record, DAY1, catalog)
        idx = catalog.feature_index()
        for name, i in idx.items():
            expected = sum(catalog.items[e[0]].values[i] * e[1] / 100.0
                           for e in entries)
            if name == "water":
                expected = expected / 1000.0 + sum(e[2] for e in entries)
            assert totals[name] == pytest.approx(expected, abs=1e-9)

    def test_insertion_order_independence(self, synth_catalog):
        entries = [
            IntakeLogEntry(date=DAY1, meal_index=1,
                           item_id=synth_catalog.items[0].item_id, grams=120),
            IntakeLogEntry(date=DAY1, meal_index=2,
                           item_id=synth_catalog.items[3].item_id, grams=85),
            IntakeLogEntry(date=DAY1, meal_index=3, water_liters=0.7),
        ]
        a, b = make_patient(), make_patient()
        a.intake_log.extend(entries)
        b.intake_log.extend(reversed(entries))
        assert day_totals(a, DAY1, synth_catalog) == day_totals(b, DAY1, synth_catalog)


class TestLabReports:
    def test_sorted_insert(self):
        record = make_patient()
        record_lab(record, LabReport(date=date(2025, 3, 10), results={"sodium": 138}))
        record_lab(record, LabReport(date=date(2025, 3, 2), results={"sodium": 140}))
        assert [l.date.day for l in record.labs] == [2, 10]

    def test_duplicate_identical_is_noop(self):
        record = make_patient()
        rep = LabReport(date=DAY1, results={"sodium": 138.0})
        record_lab(record, rep)
        record_lab(record, LabReport(date=DAY1, results={"sodium": 138.0}))
        assert len(record.labs) == 1

    def test_duplicate_conflicting_raises(self):
        record = make_patient()
        record_lab(record, LabReport(date=DAY1, results={"sodium": 138.0}))
        with pytest.raises(DuplicateDate):
            record_lab(record, LabReport(date=DAY1, results={"sodium": 139.0}))

    def test_latest_lab_on_or_before(self):
        record = make_patient()
        for day, value in [(1, 140.0), (6, 137.0), (20, 141.0)]:
            record_lab(record, LabReport(date=date(2025, 3, day),
                                         results={"sodium": value}))
        assert latest_lab_on_or_before(record, date(2025, 3, 7)).results["sodium"] == 137.0
        assert latest_lab_on_or_before(record, date(2025, 3, 6)).results["sodium"] == 137.0
        assert latest_lab_on_or_before(record, date(2025, 2, 1)) is None


def test_record_round_trip(synth_catalog):
    record = make_patient()
    record_lab(record, LabReport(date=DAY1, results={"sodium": 138.0}))
    log_meal(record, IntakeLogEntry(date=DAY1, meal_index=1,
                                    item_id=synth_catalog.items[0].item_id,
                                    grams=100.0), synth_catalog)
    clone = PatientRecord.from_dict(record.to_dict())
    assert clone.to_dict() == record.to_dict()
