import numpy as np
import pytest

from nutricast.catalog import Catalog, FoodItemVector, NutrientDef, per_serving_amounts
from nutricast.cohort import fixture_catalog
from nutricast.errors import BadC, DimensionMismatch, EmptyCatalog, NoFeasibleItem
from nutricast.optimizer import OptimizedRequirements
from nutricast.patient import IntakeLogEntry, MandatoryNutrient
from nutricast.recommender import (
    class_similarity,
    cluster_items,
    combined_vector,
    cosine,
    item_similarity,
    normalized_matrix,
    preference_vector,
    recommend,
    rq_score,
)

from conftest import DAY1, make_patient


def brute_force_feasible(catalog, om, consumed):
    """Independent oracle: range-test one serving of every item, no clustering."""
    ok = []
    for item in catalog.items:
        amounts = per_serving_amounts(catalog, item)
        good = True
        for nut in om.nutrients:
            if not nut.is_mandatory or nut.nutrient not in amounts:
                continue
            eaten = consumed.get(nut.nutrient, 0.0)
            lo = max(0.0, nut.ai - eaten) if nut.ai is not None else 0.0
            hi = (nut.mi - eaten) if nut.mi is not None else None
            amount = amounts[nut.nutrient]
            if hi is not None and hi <= 0:
                good = amount <= 0
            else:
                good = amount >= lo and (hi is None or amount <= hi)
            if not good:
                break
        if good:
            ok.append(item.item_id)
    return set(ok)


def blob_catalog():
    """Two tight nutrient blobs ten blob-widths apart."""
    nutrients = [NutrientDef(id=f"f{i}", name=n, unit="mg")
                 for i, n in enumerate(["sodium", "potassium", "protein"])]
    items = []
    rng = np.random.default_rng(4)
    for b, base in enumerate([10.0, 900.0]):
        for i in range(5):
            vals = [float(base + rng.uniform(-5, 5)) for _ in range(3)]
            items.append(FoodItemVector(item_id=f"b{b}i{i}", name=f"blob{b} item{i}",
                                        values=vals, missing=[False] * 3))
    return Catalog(nutrients=nutrients, items=items)


class TestClustering:
    def test_single_class_centroid_is_global_mean(self, synth_catalog):
        classes = cluster_items(synth_catalog, 1, seed=0)
        assert len(classes) == 1
        M, _ = normalized_matrix(synth_catalog)
        assert np.allclose(classes[0].centroid, M.mean(axis=0))
        assert sorted(classes[0].member_ids) == sorted(
            it.item_id for it in synth_catalog.items)

    def test_two_blobs_exact_partition(self):
        catalog = blob_catalog()
        classes = cluster_items(catalog, 2, seed=0)
        groups = [set(c.member_ids) for c in classes]
        expected = [{f"b0i{i}" for i in range(5)}, {f"b1i{i}" for i in range(5)}]
        assert groups == expected or groups == expected[::-1]

    def test_singleton_classes_when_c_equals_n(self, synth_catalog):
        classes = cluster_items(synth_catalog, len(synth_catalog.items), seed=1)
        M, _ = normalized_matrix(synth_catalog)
        ids = {it.item_id: i for i, it in enumerate(synth_catalog.items)}
        for cls in classes:
            assert len(cls.member_ids) == 1
            assert np.allclose(cls.centroid, M[ids[cls.member_ids[0]]])

    def test_centroid_inside_member_ranges(self, synth_catalog):
        for cls in cluster_items(synth_catalog, 3, seed=2):
            for j, (lo, hi) in enumerate(cls.feature_ranges):
                assert lo - 1e-12 <= cls.centroid[j] <= hi + 1e-12

    def test_deterministic_given_seed(self, synth_catalog):
        a = cluster_items(synth_catalog, 4, seed=9)
        b = cluster_items(synth_catalog, 4, seed=9)
        assert [c.member_ids for c in a] == [c.member_ids for c in b]

    def test_bad_c_and_empty_catalog(self, synth_catalog):
        with pytest.raises(BadC):
            cluster_items(synth_catalog, 0)
        with pytest.raises(BadC):
            cluster_items(synth_catalog, len(synth_catalog.items) + 1)
        empty = Catalog(nutrients=synth_catalog.nutrients, items=[])
        with pytest.raises(EmptyCatalog):
            cluster_items(empty, 1)


class TestCosine:
    def test_identity(self):
        assert cosine([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_scale_invariance(self):
        assert cosine([1.0, 2.0, 3.0], [2.0, 4.0, 6.0]) == pytest.approx(1.0, abs=1e-12)
        rng = np.random.default_rng(5)
        for _ in range(20):
            a = rng.uniform(0.1, 5.0, size=6)
            b = rng.uniform(0.1, 5.0, size=6)
            lam = float(rng.uniform(0.01, 100.0))
            assert cosine(a * lam, b) == pytest.approx(cosine(a, b), abs=1e-12)
            assert cosine(a, b * lam) == pytest.approx(cosine(a, b), abs=1e-12)

    def test_zero_norm_convention(self):
        assert cosine([0.0, 0.0], [1.0, 1.0]) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cosine([1.0], [1.0, 2.0])


class TestPreferenceVector:
    def test_single_daily_item_parallel_to_its_vector(self, synth_catalog):
        record = make_patient()
        item = synth_catalog.items[2]
        from datetime import timedelta
        for i in range(6):
            record.intake_log.append(IntakeLogEntry(
                date=DAY1 + timedelta(days=i), meal_index=1,
                item_id=item.item_id, grams=100.0))
        pwv = preference_vector(record, synth_catalog, span_days=30,
                                as_of=DAY1 + timedelta(days=5))
        M, _ = normalized_matrix(synth_catalog)
        v = M[2] / np.linalg.norm(M[2])
        assert np.allclose(pwv.weights, v, atol=1e-12)

    def test_empty_history_uniform(self, synth_catalog):
        pwv = preference_vector(make_patient(), synth_catalog, as_of=DAY1)
        m = len(synth_catalog.feature_names())
        assert np.allclose(pwv.weights, np.full(m, 1.0 / np.sqrt(m)))

    def test_frequency_weighted_mean(self, synth_catalog):
        # 3 servings of item A and 1 of item B: (3 vA + vB) / 4, then normalized
        record = make_patient()
        a, b = synth_catalog.items[0], synth_catalog.items[1]
        for _ in range(3):
            record.intake_log.append(IntakeLogEntry(date=DAY1, meal_index=1,
                                                    item_id=a.item_id, grams=50.0))
        record.intake_log.append(IntakeLogEntry(date=DAY1, meal_index=2,
                                                item_id=b.item_id, grams=50.0))
        pwv = preference_vector(record, synth_catalog, as_of=DAY1)
        M, _ = normalized_matrix(synth_catalog)
        expected = (3.0 * M[0] + 1.0 * M[1]) / 4.0
        expected = expected / np.linalg.norm(expected)
        assert np.allclose(pwv.weights, expected, atol=1e-12)

    def test_liked_items_count_once(self, synth_catalog):
        record = make_patient()
        record.liked_items = {synth_catalog.items[4].item_id}
        pwv = preference_vector(record, synth_catalog, as_of=DAY1)
        M, _ = normalized_matrix(synth_catalog)
        expected = M[4] / np.linalg.norm(M[4])
        assert np.allclose(pwv.weights, expected, atol=1e-12)

    def test_entries_outside_span_ignored(self, synth_catalog):
        from datetime import timedelta
        record = make_patient()
        record.intake_log.append(IntakeLogEntry(
            date=DAY1 - timedelta(days=60), meal_index=1,
            item_id=synth_catalog.items[0].item_id, grams=10.0))
        pwv = preference_vector(record, synth_catalog, span_days=30, as_of=DAY1)
        m = len(synth_catalog.feature_names())
        assert np.allclose(pwv.weights, np.full(m, 1.0 / np.sqrt(m)))


def om_with(*nutrients):
    return OptimizedRequirements(nutrients=list(nutrients))


class TestCombinedAndScore:
    def test_mandatory_mask_and_remaining(self, synth_catalog):
        pwv = preference_vector(make_patient(), synth_catalog, as_of=DAY1)
        om = om_with(MandatoryNutrient("sodium", 500.0, 1900.0, "mg/d"),
                     MandatoryNutrient("chloride", None, None, "mg/d"))
        uwv = combined_vector(pwv, om, {"sodium": 400.0}, synth_catalog)
        idx = synth_catalog.feature_index()
        assert uwv.mandatory_mask[idx["sodium"]]
        assert not uwv.mandatory_mask[idx["chloride"]]  # both bounds undefined
        assert uwv.remaining["sodium"] == (100.0, 1500.0)

    def test_exhausted_cap_weights_zero(self, synth_catalog):
        pwv = preference_vector(make_patient(), synth_catalog, as_of=DAY1)
        om = om_with(MandatoryNutrient("sodium", None, 300.0, "mg/d"))
        uwv = combined_vector(pwv, om, {"sodium": 400.0}, synth_catalog)
        idx = synth_catalog.feature_index()
        assert uwv.weights[idx["sodium"]] == 0.0
        lo, hi = uwv.remaining["sodium"]
        assert hi == -100.0

    def test_score_at_least_one_iff_inside_every_range(self, synth_catalog):
        pwv = preference_vector(make_patient(), synth_catalog, as_of=DAY1)
        item = synth_catalog.items[0]
        amounts = per_serving_amounts(synth_catalog, item)
        fitting = om_with(MandatoryNutrient("sodium", 0.0, amounts["sodium"] + 1, "mg/d"))
        uwv = combined_vector(pwv, fitting, {}, synth_catalog)
        assert rq_score(item, uwv, synth_catalog) >= 1.0
        blocking = om_with(
            MandatoryNutrient("potassium", None, amounts["potassium"] / 2, "mg/d"))
        uwv2 = combined_vector(pwv, blocking, {}, synth_catalog)
        assert rq_score(item, uwv2, synth_catalog) < 1.0

    def test_exceeding_remaining_budget_blocks_bonus(self, synth_catalog):
        pwv = preference_vector(make_patient(), synth_catalog, as_of=DAY1)
        item = synth_catalog.items[3]
        amounts = per_serving_amounts(synth_catalog, item)
        om = om_with(MandatoryNutrient("potassium", None, amounts["potassium"] + 50, "mg/d"))
        # after eating 100 mg, the serving no longer fits
        uwv = combined_vector(pwv, om, {"potassium": 100.0}, synth_catalog)
        assert rq_score(item, uwv, synth_catalog) < 1.0

    def test_empty_mandatory_set_gives_bonus_to_all(self, synth_catalog):
        pwv = preference_vector(make_patient(), synth_catalog, as_of=DAY1)
        uwv = combined_vector(pwv, om_with(), {}, synth_catalog)
        for item in synth_catalog.items:
            assert rq_score(item, uwv, synth_catalog) >= 1.0

    def test_base_strictly_below_one(self, synth_catalog):
        pwv = preference_vector(make_patient(), synth_catalog, as_of=DAY1)
        uwv = combined_vector(pwv, om_with(), {}, synth_catalog)
        for item in synth_catalog.items:
            score = rq_score(item, uwv, synth_catalog)
            assert 1.0 <= score < 2.0  # base in [0, 1) plus the bonus

    def test_class_and_item_similarity_wrappers(self, synth_catalog):
        classes = cluster_items(synth_catalog, 2, seed=0)
        pwv = preference_vector(make_patient(), synth_catalog, as_of=DAY1)
        uwv = combined_vector(pwv, om_with(), {}, synth_catalog)
        s = class_similarity(classes[0], uwv)
        assert -1.0 <= s <= 1.0
        assert item_similarity(classes[0].centroid, pwv) == pytest.approx(
            cosine(classes[0].centroid, pwv.weights))


class TestRecommend:
    def budget_for_exactly_one_item(self, catalog):
        """A cap tight enough that the brute-force oracle admits one item."""
        sodium_idx = catalog.feature_index()["sodium"]
        servings = sorted(
            (it.values[sodium_idx] * it.serving_size / 100.0, it.item_id)
            for it in catalog.items)
        cap = (servings[0][0] + servings[1][0]) / 2.0
        om = om_with(MandatoryNutrient("sodium", None, cap, "mg/d"))
        return om, servings[0][1]

    def test_single_feasible_item_always_returned(self, synth_catalog):
        om, only_id = self.budget_for_exactly_one_item(synth_catalog)
        record = make_patient()
        assert brute_force_feasible(synth_catalog, om, {}) == {only_id}
        rec = recommend(record, synth_catalog, om, meal_index=1, k=5,
                        top_classes=len(synth_catalog.items), n_classes=4,
                        as_of=DAY1)
        assert [i.item_id for i in rec.items] == [only_id]

    def test_k_larger_than_feasible_set(self, synth_catalog):
        om = om_with()  # nothing mandatory: everything is feasible
        rec = recommend(make_patient(), synth_catalog, om, meal_index=2, k=100,
                        top_classes=4, n_classes=4, as_of=DAY1)
        assert len(rec.items) == len(synth_catalog.items)

    def test_all_infeasible_raises(self, synth_catalog):
        om = om_with(MandatoryNutrient("sodium", None, -5.0, "mg/d"))
        with pytest.raises(NoFeasibleItem):
            recommend(make_patient(), synth_catalog, om, meal_index=1, k=3,
                      top_classes=4, n_classes=4, as_of=DAY1)

    def test_soundness_against_brute_force(self):
        catalog = fixture_catalog(n_items=40, seed=3)
        rng = np.random.default_rng(17)
        for _ in range(15):
            cap_k = float(rng.uniform(200, 1500))
            cap_na = float(rng.uniform(200, 1500))
            record = make_patient()
            record.intake_log.append(IntakeLogEntry(
                date=DAY1, meal_index=1,
                direct={"potassium": float(rng.uniform(0, 600)),
                        "sodium": float(rng.uniform(0, 600))}))
            from nutricast.patient import day_totals
            consumed = day_totals(record, DAY1, catalog)
            om = om_with(MandatoryNutrient("potassium", None, cap_k, "mg/d"),
                         MandatoryNutrient("sodium", None, cap_na, "mg/d"))
            oracle = brute_force_feasible(catalog, om, consumed)
            try:
                rec = recommend(record, catalog, om, meal_index=1, k=40,
                                top_classes=2, n_classes=6, as_of=DAY1,
                                clusters=None)
            except NoFeasibleItem:
                continue
            for item in rec.items:
                assert item.item_id in oracle  # zero false positives

    def test_completeness_with_all_classes(self):
        catalog = fixture_catalog(n_items=30, seed=5)
        record = make_patient()
        om = om_with(MandatoryNutrient("sodium", None, 900.0, "mg/d"))
        oracle = brute_force_feasible(catalog, om, {})
        rec = recommend(record, catalog, om, meal_index=1, k=len(catalog.items),
                        top_classes=6, n_classes=6, as_of=DAY1)
        assert {i.item_id for i in rec.items} == oracle

    def test_ranking_deterministic_and_tie_broken_by_id(self, synth_catalog):
        om = om_with()
        a = recommend(make_patient(), synth_catalog, om, meal_index=1, k=6,
                      top_classes=4, n_classes=4, seed=3, as_of=DAY1)
        b = recommend(make_patient(), synth_catalog, om, meal_index=1, k=6,
                      top_classes=4, n_classes=4, seed=3, as_of=DAY1)
        assert [i.item_id for i in a.items] == [i.item_id for i in b.items]
        sims = [i.similarity for i in a.items]
        assert sims == sorted(sims, reverse=True)

    def test_fit_report_rows(self, synth_catalog):
        om = om_with(MandatoryNutrient("sodium", 0.0, 5000.0, "mg/d"))
        rec = recommend(make_patient(), synth_catalog, om, meal_index=3, k=1,
                        top_classes=4, n_classes=4, as_of=DAY1)
        row = rec.items[0].fit[0]
        assert row["nutrient"] == "sodium"
        assert row["ok"] is True
        assert set(row) == {"nutrient", "consumed", "remaining_lo", "remaining_hi",
                            "amount", "ok"}
